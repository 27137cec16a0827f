//! Relaxation finite difference time stepping and its mollified variant.
//!
//! One run proceeds as
//!
//! 1. `W⁰ = R_h[u₀]`, then a Crank–Nicolson half step to `W^{1/2}` with the
//!    frozen coefficient `g(|I_h u₀|²)`;
//! 2. `Φ^{1/2}` from `W^{1/2}` (second-order seed) or from `u₀` (first-order
//!    seed), then the first full step;
//! 3. for `n ≥ 1`, `Φ^{n+1/2} = 2 g(|W^n|²) - Φ^{n-1/2}` followed by one linear
//!    Crank–Nicolson-type solve for `W^{n+1}`.
//!
//! Every solve is a tridiagonal system `ν_h[ε, φ] X = rhs`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    norm_0h, otimes_real, real_sum, seminorm_1h, GridFunction, RealGridFunction, SpaceMesh,
    TimeMesh,
};
use crate::mollifier::Mollifier;
use crate::ops::{apply_laplacian, solve_nu_h};
use crate::projection::{elliptic_project, interpolate, SmoothFunction};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// The real nonlinearity `g(ρ)`, `ρ = |u|²`, with an optional primitive
/// `G(ρ) = ∫₀^ρ g` for energy diagnostics.
#[derive(Clone)]
pub struct Nonlinearity {
    g: RealFn,
    primitive: Option<RealFn>,
    linear_coefficient: Option<f64>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("linear_coefficient", &self.linear_coefficient)
            .field("has_primitive", &self.primitive.is_some())
            .finish()
    }
}

impl Nonlinearity {
    /// `g(ρ) = c ρ`: the cubic Schrödinger nonlinearity.
    pub fn cubic(c: f64) -> Self {
        Self {
            g: Arc::new(move |rho| c * rho),
            primitive: Some(Arc::new(move |rho| 0.5 * c * rho * rho)),
            linear_coefficient: Some(c),
        }
    }

    pub fn zero() -> Self {
        Self::cubic(0.0)
    }

    pub fn custom(g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            g: Arc::new(g),
            primitive: None,
            linear_coefficient: None,
        }
    }

    pub fn with_primitive(mut self, primitive: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.primitive = Some(Arc::new(primitive));
        self
    }

    pub fn eval(&self, rho: f64) -> f64 {
        (self.g)(rho)
    }

    pub fn primitive(&self, rho: f64) -> Option<f64> {
        self.primitive.as_ref().map(|p| p(rho))
    }

    /// `c` when `g(ρ) = c ρ`.
    pub fn linear_coefficient(&self) -> Option<f64> {
        self.linear_coefficient
    }

    /// `g(|v|²)` at every node.
    pub fn of_modulus(&self, v: &GridFunction) -> RealGridFunction {
        RealGridFunction::new(v.values().iter().map(|z| self.eval(z.norm_sqr())).collect())
    }
}

/// Source term `f(t, x)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Field(SpaceTimeFn),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Forcing::Zero"),
            Forcing::Field(_) => write!(f, "Forcing::Field(..)"),
        }
    }
}

impl Forcing {
    pub fn eval(&self, t: f64, x: f64) -> Complex64 {
        match self {
            Forcing::Zero => Complex64::new(0.0, 0.0),
            Forcing::Field(f) => f(t, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    /// `I_h°[(f(t1, ·) + f(t0, ·)) / 2]`.
    pub fn average(&self, t0: f64, t1: f64, mesh: &SpaceMesh) -> GridFunction {
        match self {
            Forcing::Zero => GridFunction::zeros(mesh),
            Forcing::Field(f) => GridFunction::from_fn_interior(mesh, |x| 0.5 * (f(t1, x) + f(t0, x))),
        }
    }
}

/// Exact solution `u` with the derivatives needed by residual oracles.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: SpaceTimeFn,
    pub u_t: SpaceTimeFn,
    pub u_xx: SpaceTimeFn,
    pub label: String,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution").field("label", &self.label).finish()
    }
}

impl ExactSolution {
    /// `I_h u(t, ·)`.
    pub fn sample(&self, t: f64, mesh: &SpaceMesh) -> GridFunction {
        GridFunction::from_fn(mesh, |x| (self.u)(t, x))
    }

    /// `I_h u(t, ·)` with the (vanishing) boundary values set to exactly zero.
    pub fn sample_interior(&self, t: f64, mesh: &SpaceMesh) -> GridFunction {
        GridFunction::from_fn_interior(mesh, |x| (self.u)(t, x))
    }
}

/// Initial-boundary value problem `u_t = i u_xx + i g(|u|²) u + f` on
/// `[x_a, x_b]` with homogeneous Dirichlet conditions.
#[derive(Debug, Clone)]
pub struct Problem {
    pub label: String,
    pub x_a: f64,
    pub x_b: f64,
    pub g: Nonlinearity,
    pub forcing: Forcing,
    pub u0: SmoothFunction,
    pub exact: Option<ExactSolution>,
    /// Accepted `|u₀|` at the end points (truncated domains need more than rounding).
    pub boundary_tolerance: f64,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        let tol = self.boundary_tolerance;
        for x in [self.x_a, self.x_b] {
            let v = self.u0.value_at(x).norm();
            if !(v <= tol) {
                return Err(Error::InvalidParameter(format!(
                    "initial data does not vanish at x = {x}: |u0| = {v:e}"
                )));
            }
        }
        if let Some(exact) = &self.exact {
            let l = self.x_b - self.x_a;
            for i in 0..10 {
                let x = self.x_a + l * (i as f64 + 0.5) / 10.0;
                let d = ((exact.u)(0.0, x) - self.u0.value_at(x)).norm();
                if !(d <= 1e-12 * (1.0 + self.u0.value_at(x).norm())) {
                    return Err(Error::InvalidParameter(format!(
                        "exact solution at t = 0 differs from u0 by {d:e} at x = {x}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn space_mesh(&self, interior: usize) -> Result<SpaceMesh> {
        SpaceMesh::new(self.x_a, self.x_b, interior)
    }
}

/// How the relaxation variable is seeded and whether the mollified update is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeVariant {
    /// `Φ^{1/2} = g(|W^{1/2}|²)`.
    SecondOrderInit,
    /// `Φ^{1/2} = g(|I_h u₀|²)`.
    FirstOrderInit,
    /// Mollified scheme with cutoff `delta_star`; the nonlinear update is
    /// solved by fixed-point iteration.
    Mollified {
        delta_star: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default = "default_max_iterations")]
        max_iterations: usize,
    },
}

fn default_tolerance() -> f64 {
    1e-12
}

fn default_max_iterations() -> usize {
    50
}

impl SchemeVariant {
    pub fn mollified(delta_star: f64) -> Self {
        SchemeVariant::Mollified {
            delta_star,
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SchemeVariant::Mollified {
            delta_star,
            tolerance,
            max_iterations,
        } = *self
        {
            if !(delta_star > 0.0 && delta_star.is_finite()) {
                return Err(Error::InvalidParameter(format!("delta_star = {delta_star}")));
            }
            if !(tolerance > 0.0) {
                return Err(Error::InvalidParameter(format!("tolerance = {tolerance}")));
            }
            if max_iterations == 0 {
                return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// The relaxation variable carried between steps.
///
/// At step index `n` the state stores `Φ^{n-1/2}`; before the first full
/// step (`n = 0`) it stores the seed `Φ^{1/2}` instead.
#[derive(Debug, Clone, PartialEq)]
pub enum Relaxation {
    Seed(RealGridFunction),
    Previous(RealGridFunction),
}

impl Relaxation {
    pub fn values(&self) -> &RealGridFunction {
        match self {
            Relaxation::Seed(p) | Relaxation::Previous(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub n: usize,
    pub w: GridFunction,
    pub phi: Relaxation,
}

impl SolverState {
    /// `Φ^{n-1/2}` once at least one full step has been taken.
    pub fn phi_previous(&self) -> Option<&RealGridFunction> {
        match &self.phi {
            Relaxation::Previous(p) => Some(p),
            Relaxation::Seed(_) => None,
        }
    }
}

/// Outcome of the initial stage.
#[derive(Debug, Clone)]
pub struct Start {
    pub state: SolverState,
    pub w_half: GridFunction,
    /// `false` when `W⁰` fell back to `I_h° u₀` for lack of `u₀''`.
    pub conforming: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedPointStats {
    pub iterations: usize,
    pub last_update: f64,
}

/// A configured stepper for one problem on one pair of meshes.
#[derive(Debug, Clone)]
pub struct Solver {
    problem: Problem,
    space: SpaceMesh,
    time: TimeMesh,
    variant: SchemeVariant,
    mollifier: Option<Mollifier>,
}

impl Solver {
    pub fn new(problem: Problem, space: SpaceMesh, time: TimeMesh, variant: SchemeVariant) -> Result<Self> {
        variant.validate()?;
        let mollifier = match variant {
            SchemeVariant::Mollified { delta_star, .. } => Some(Mollifier::new(delta_star)?),
            _ => None,
        };
        Ok(Self {
            problem,
            space,
            time,
            variant,
            mollifier,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn space(&self) -> &SpaceMesh {
        &self.space
    }

    pub fn time(&self) -> &TimeMesh {
        &self.time
    }

    pub fn variant(&self) -> SchemeVariant {
        self.variant
    }

    pub fn mollifier(&self) -> Option<&Mollifier> {
        self.mollifier.as_ref()
    }

    /// `W⁰ = R_h[u₀]`; falls back to `I_h° u₀` (non-conforming) without `u₀''`.
    pub fn init_w0(&self) -> Result<(GridFunction, bool)> {
        match elliptic_project(&self.problem.u0, &self.space) {
            Ok(w0) => Ok((w0, true)),
            Err(Error::MissingSecondDerivative) => {
                log::warn!(
                    "{}: no second derivative of u0, initializing with I_h° u0 (non-conforming)",
                    self.problem.label
                );
                Ok((interpolate(&self.problem.u0, &self.space, true), false))
            }
            Err(e) => Err(e),
        }
    }

    /// `g(|I_h u₀|²)`, the coefficient frozen over the first half step.
    pub fn frozen_coefficient(&self) -> RealGridFunction {
        self.problem
            .g
            .of_modulus(&interpolate(&self.problem.u0, &self.space, false))
    }

    /// Right-hand side `W + iετ Δ_h W + iετ φ ⊗ W + 2ετ F`.
    fn explicit_part(
        &self,
        w: &GridFunction,
        eps: f64,
        phi: &RealGridFunction,
        forcing_avg: &GridFunction,
    ) -> Result<GridFunction> {
        let tau = self.time.tau();
        let lap = apply_laplacian(w, &self.space)?;
        let pw = otimes_real(phi, w)?;
        let coeff = I * (eps * tau);
        let values = w
            .values()
            .iter()
            .zip(lap.values())
            .zip(pw.values())
            .zip(forcing_avg.values())
            .map(|(((&w, &l), &p), &f)| w + coeff * (l + p) + (2.0 * eps * tau) * f)
            .collect();
        GridFunction::with_zero_boundary(values)
    }

    /// The half step from `W⁰` to `W^{1/2}`.
    pub fn step_half(&self, w0: &GridFunction) -> Result<GridFunction> {
        w0.require_boundary_zero(&self.space)?;
        let phi0 = self.frozen_coefficient();
        let f = self
            .problem
            .forcing
            .average(self.time.t(0), self.time.t_half(0), &self.space);
        let rhs = self.explicit_part(w0, 0.25, &phi0, &f)?;
        solve_nu_h(0.25, &phi0, &rhs, self.time.tau(), &self.space)
    }

    /// `Φ^{1/2}` for the configured variant.
    pub fn phi_init(&self, w_half: &GridFunction) -> RealGridFunction {
        match self.variant {
            SchemeVariant::SecondOrderInit => self.problem.g.of_modulus(w_half),
            SchemeVariant::FirstOrderInit => self.frozen_coefficient(),
            SchemeVariant::Mollified { .. } => {
                let m = self.mollifier.as_ref().expect("mollifier built with the variant");
                self.problem.g.of_modulus(&m.gamma_grid(w_half))
            }
        }
    }

    /// Computes `W⁰`, `W^{1/2}` and `Φ^{1/2}`.
    pub fn start(&self) -> Result<Start> {
        let (w0, conforming) = self.init_w0()?;
        let w_half = self.step_half(&w0)?;
        let seed = self.phi_init(&w_half);
        Ok(Start {
            state: SolverState {
                n: 0,
                w: w0,
                phi: Relaxation::Seed(seed),
            },
            w_half,
            conforming,
        })
    }

    fn check_step(&self, state: &SolverState) -> Result<()> {
        if state.n >= self.time.steps() {
            return Err(Error::IndexOutOfRange {
                index: state.n,
                min: 0,
                max: self.time.steps() - 1,
            });
        }
        state.w.require_boundary_zero(&self.space)
    }

    /// One relaxation step `W^n → W^{n+1}`.
    pub fn advance(&self, state: &SolverState) -> Result<SolverState> {
        self.check_step(state)?;
        let phi = match &state.phi {
            Relaxation::Seed(seed) => seed.clone(),
            Relaxation::Previous(prev) => relax(&self.problem.g.of_modulus(&state.w), prev)?,
        };
        let n = state.n;
        let f = self
            .problem
            .forcing
            .average(self.time.t(n), self.time.t(n + 1), &self.space);
        let rhs = self.explicit_part(&state.w, 0.5, &phi, &f)?;
        let w = solve_nu_h(0.5, &phi, &rhs, self.time.tau(), &self.space)?;
        Ok(SolverState {
            n: n + 1,
            w,
            phi: Relaxation::Previous(phi),
        })
    }

    /// One mollified step. The update
    /// `V^{n+1} - V^n = iτΔ_h m + iτ n_δ(Φ) ⊗ γ_δ(m) + τF`, `m = (V^{n+1} + V^n)/2`,
    /// is solved by iterating
    /// `ν_h[½, n_δ(Φ)] χ^{k+1} = rhs + iτ n_δ(Φ) ⊗ (γ_δ(m^k) - m^k)`
    /// from `χ⁰ = V^n`. Inside the identity region of `γ_δ` the correction
    /// vanishes and one iteration reproduces the unmollified step.
    pub fn mrfd_advance(&self, state: &SolverState) -> Result<(SolverState, FixedPointStats)> {
        self.check_step(state)?;
        let (m, tol, max_iterations) = match (self.variant, &self.mollifier) {
            (
                SchemeVariant::Mollified {
                    tolerance,
                    max_iterations,
                    ..
                },
                Some(m),
            ) => (m, tolerance, max_iterations),
            _ => {
                return Err(Error::InvalidParameter(
                    "mollified step requires the mollified variant".into(),
                ))
            }
        };
        let g = &self.problem.g;
        let phi = match &state.phi {
            Relaxation::Seed(seed) => seed.clone(),
            Relaxation::Previous(prev) => relax(&g.of_modulus(&m.gamma_grid(&state.w)), prev)?,
        };
        let n_phi = m.n_grid(&phi);
        let n = state.n;
        let tau = self.time.tau();
        let f = self
            .problem
            .forcing
            .average(self.time.t(n), self.time.t(n + 1), &self.space);
        let base = self.explicit_part(&state.w, 0.5, &n_phi, &f)?;

        let mut chi = state.w.clone();
        let mut trace = Vec::new();
        for iteration in 1..=max_iterations {
            let mid = chi.add(&state.w)?.scale(Complex64::new(0.5, 0.0));
            let correction = m.gamma_grid(&mid).sub(&mid)?;
            let corrected = otimes_real(&n_phi, &correction)?;
            let rhs = base.combine(Complex64::new(1.0, 0.0), &corrected, I * tau)?;
            let next = solve_nu_h(0.5, &n_phi, &rhs, tau, &self.space)?;
            let update = norm_0h(&next.sub(&chi)?, &self.space);
            let threshold = tol * (1.0 + norm_0h(&chi, &self.space));
            trace.push(update);
            chi = next;
            if update <= threshold {
                return Ok((
                    SolverState {
                        n: n + 1,
                        w: chi,
                        phi: Relaxation::Previous(phi),
                    },
                    FixedPointStats {
                        iterations: iteration,
                        last_update: update,
                    },
                ));
            }
        }
        Err(Error::FixedPointDiverged {
            step: n,
            iterations: max_iterations,
            trace,
        })
    }

    /// Advances with the configured variant.
    pub fn step(&self, state: &SolverState) -> Result<(SolverState, Option<FixedPointStats>)> {
        let out = match self.variant {
            SchemeVariant::Mollified { .. } => self.mrfd_advance(state).map(|(s, st)| (s, Some(st))),
            _ => self.advance(state).map(|s| (s, None)),
        };
        out.map_err(|e| Error::AtStep {
            step: state.n,
            source: Box::new(e),
        })
    }

    /// Runs all `N` steps and returns the final state.
    pub fn run(&self) -> Result<SolverState> {
        let mut state = self.start()?.state;
        while state.n < self.time.steps() {
            state = self.step(&state)?.0;
        }
        Ok(state)
    }
}

/// `Φ^{n+1/2} = 2 g(|W^n|²) - Φ^{n-1/2}`.
pub fn relax(g_of_w: &RealGridFunction, previous: &RealGridFunction) -> Result<RealGridFunction> {
    crate::grid::check_len(g_of_w.len(), previous.len())?;
    Ok(RealGridFunction::new(
        g_of_w
            .values()
            .iter()
            .zip(previous.values())
            .map(|(g, p)| 2.0 * g - p)
            .collect(),
    ))
}

/// Charge `‖W‖²_{0,h}`.
pub fn charge(w: &GridFunction, mesh: &SpaceMesh) -> f64 {
    let n = norm_0h(w, mesh);
    n * n
}

/// `E(W) = |W|²_{1,h} - h Σ_j G(|W_j|²)`; `None` without a primitive of `g`.
pub fn energy(w: &GridFunction, g: &Nonlinearity, mesh: &SpaceMesh) -> Option<f64> {
    g.primitive.as_ref()?;
    let s = seminorm_1h(w, mesh);
    let pot = real_sum(w.values().iter().map(|z| g.primitive(z.norm_sqr()).unwrap()));
    Some(s * s - mesh.h() * pot)
}

/// `(E(W^n) - E(W⁰)) / |E(W⁰)|` along a trajectory (absolute drift when `E(W⁰) = 0`).
pub fn energy_drift(trajectory: &[GridFunction], g: &Nonlinearity, mesh: &SpaceMesh) -> Option<Vec<f64>> {
    let energies: Option<Vec<f64>> = trajectory.iter().map(|w| energy(w, g, mesh)).collect();
    let energies = energies?;
    let e0 = *energies.first()?;
    let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
    Some(energies.iter().map(|e| (e - e0) / scale).collect())
}

/// Discrete energy of the relaxation scheme for `g(ρ) = cρ`:
/// `|W^n|²_{1,h} - h/(2c) Σ_j Φ^{n-1/2}_j Φ^{n+1/2}_j` (for `c = 0`, `|W^n|²_{1,h}`).
///
/// It is exactly conserved for `f ≡ 0` and `n ≥ 1`.
pub fn relaxation_energy(
    w: &GridFunction,
    phi_before: &RealGridFunction,
    phi_after: &RealGridFunction,
    c: f64,
    mesh: &SpaceMesh,
) -> f64 {
    let s = seminorm_1h(w, mesh);
    if c == 0.0 {
        return s * s;
    }
    let cross = real_sum(
        phi_before
            .values()
            .iter()
            .zip(phi_after.values())
            .map(|(a, b)| a * b),
    );
    s * s - mesh.h() / (2.0 * c) * cross
}
