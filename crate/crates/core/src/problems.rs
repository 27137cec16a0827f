//! Test problems with known solutions and the consistency-residual oracles.
//!
//! A residual is what is left over when the exact solution is substituted
//! into one of the discrete relations of the scheme. Spatial second
//! derivatives are taken from the exact `u_xx`, so residuals measure the
//! temporal truncation alone.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, RealGridFunction, SpaceMesh, TimeMesh};
use crate::projection::SmoothFunction;
use crate::scheme::{ExactSolution, Forcing, Nonlinearity, Problem};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `f = u_t - i u_xx - i g(|u|²) u`.
pub fn manufactured_forcing(exact: &ExactSolution, g: &Nonlinearity, t: f64, x: f64) -> Complex64 {
    let u = (exact.u)(t, x);
    (exact.u_t)(t, x) - I * (exact.u_xx)(t, x) - I * g.eval(u.norm_sqr()) * u
}

/// Parameters of a travelling `sech` soliton of `u_t = i u_xx + 2i|u|²u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub amplitude: f64,
    pub velocity: f64,
    pub offset: f64,
}

impl Default for SolitonParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            velocity: 2.0,
            offset: 0.0,
        }
    }
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

impl SolitonParams {
    fn xi(&self, t: f64, x: f64) -> f64 {
        self.amplitude * (x - self.offset - self.velocity * t)
    }

    fn phase(&self, t: f64, x: f64) -> Complex64 {
        let (k, v) = (self.amplitude, self.velocity);
        Complex64::from_polar(1.0, 0.5 * v * x + (k * k - 0.25 * v * v) * t)
    }

    pub fn u(&self, t: f64, x: f64) -> Complex64 {
        self.amplitude * sech(self.xi(t, x)) * self.phase(t, x)
    }

    pub fn u_t(&self, t: f64, x: f64) -> Complex64 {
        let (k, v) = (self.amplitude, self.velocity);
        let xi = self.xi(t, x);
        let s = sech(xi);
        let ds = -s * xi.tanh();
        (Complex64::new(-k * k * v * ds, 0.0) + I * (k * (k * k - 0.25 * v * v) * s)) * self.phase(t, x)
    }

    pub fn u_x(&self, t: f64, x: f64) -> Complex64 {
        let (k, v) = (self.amplitude, self.velocity);
        let xi = self.xi(t, x);
        let s = sech(xi);
        let ds = -s * xi.tanh();
        (Complex64::new(k * k * ds, 0.0) + I * (0.5 * v * k * s)) * self.phase(t, x)
    }

    pub fn u_xx(&self, t: f64, x: f64) -> Complex64 {
        let (k, v) = (self.amplitude, self.velocity);
        let xi = self.xi(t, x);
        let s = sech(xi);
        let ds = -s * xi.tanh();
        let dds = s - 2.0 * s * s * s;
        (Complex64::new(k * k * k * dds - 0.25 * v * v * k * s, 0.0) + I * (v * k * k * ds))
            * self.phase(t, x)
    }

    pub fn exact(&self) -> ExactSolution {
        let (a, b, c) = (*self, *self, *self);
        ExactSolution {
            u: Arc::new(move |t, x| a.u(t, x)),
            u_t: Arc::new(move |t, x| b.u_t(t, x)),
            u_xx: Arc::new(move |t, x| c.u_xx(t, x)),
            label: "soliton".into(),
        }
    }
}

/// `u(t, x) = k sech(k(x - x₀ - vt)) exp(i(vx/2 + (k² - v²/4)t))`.
pub fn soliton(t: f64, x: f64, params: &SolitonParams) -> Complex64 {
    params.u(t, x)
}

/// Identifiers of the built-in problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    Zero,
    LinearMode,
    CubicSine,
    DefocusingSine,
    Soliton,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [
        ProblemId::Zero,
        ProblemId::LinearMode,
        ProblemId::CubicSine,
        ProblemId::DefocusingSine,
        ProblemId::Soliton,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProblemId::Zero => "zero",
            ProblemId::LinearMode => "linear-mode",
            ProblemId::CubicSine => "cubic-sine",
            ProblemId::DefocusingSine => "defocusing-sine",
            ProblemId::Soliton => "soliton",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown problem id `{s}`")))
    }

    pub fn build(&self) -> Problem {
        match self {
            ProblemId::Zero => zero_problem(),
            ProblemId::LinearMode => linear_mode(1),
            ProblemId::CubicSine => sine_problem(1.0),
            ProblemId::DefocusingSine => sine_problem(-1.0),
            ProblemId::Soliton => soliton_problem(&SOLITON_BENCHMARK),
        }
    }

    /// Final time used when a run does not specify one.
    pub fn default_final_time(&self) -> f64 {
        match self {
            ProblemId::Soliton => SOLITON_FINAL_TIME,
            _ => 1.0,
        }
    }
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Soliton benchmark: starts left of the centre so the pulse stays well
/// inside `[-20, 20]` up to the final time.
pub const SOLITON_BENCHMARK: SolitonParams = SolitonParams {
    amplitude: 1.0,
    velocity: 2.0,
    offset: -0.5,
};
pub const SOLITON_FINAL_TIME: f64 = 0.5;
pub const SOLITON_HALF_WIDTH: f64 = 20.0;
/// Accepted `|u|` at `x = ±20` for the truncated soliton.
pub const SOLITON_BOUNDARY_TOLERANCE: f64 = 1e-8;

pub fn zero_problem() -> Problem {
    let zero = |_: f64, _: f64| Complex64::new(0.0, 0.0);
    Problem {
        label: "zero".into(),
        x_a: 0.0,
        x_b: 1.0,
        g: Nonlinearity::cubic(1.0),
        forcing: Forcing::Zero,
        u0: SmoothFunction::zero(),
        exact: Some(ExactSolution {
            u: Arc::new(zero),
            u_t: Arc::new(zero),
            u_xx: Arc::new(zero),
            label: "zero".into(),
        }),
        boundary_tolerance: 1e-12,
    }
}

/// `u = exp(-i(mπ/L)² t) sin(mπx/L)` on `[0, 1]` with `g ≡ 0`, `f ≡ 0`.
pub fn linear_mode(m: usize) -> Problem {
    let k = m as f64 * PI;
    let mu = k * k;
    let exact = ExactSolution {
        u: Arc::new(move |t, x| Complex64::from_polar((k * x).sin(), -mu * t)),
        u_t: Arc::new(move |t, x| -I * mu * Complex64::from_polar((k * x).sin(), -mu * t)),
        u_xx: Arc::new(move |t, x| -mu * Complex64::from_polar((k * x).sin(), -mu * t)),
        label: format!("linear-mode-{m}"),
    };
    Problem {
        label: format!("linear-mode-{m}"),
        x_a: 0.0,
        x_b: 1.0,
        g: Nonlinearity::zero(),
        forcing: Forcing::Zero,
        u0: SmoothFunction::new(move |x| Complex64::new((k * x).sin(), 0.0))
            .with_second_derivative(move |x| Complex64::new(-mu * (k * x).sin(), 0.0))
            .with_fourth_derivative_bound(mu * mu),
        exact: Some(exact),
        boundary_tolerance: 1e-12,
    }
}

/// Two-mode manufactured solution on `[0, 1]`:
/// `u = (1 + ½ sin 2t) e^{it} sin(πx) + ¼ e^{-2it} sin(2πx)`.
///
/// `|u|²` changes in time, so the relaxation residuals do not vanish
/// identically. Both `u` and `u_xx` vanish at the end points, hence so does
/// `f`.
pub fn sine_exact() -> ExactSolution {
    let k = PI;
    let a = |t: f64| (1.0 + 0.5 * (2.0 * t).sin()) * Complex64::from_polar(1.0, t);
    let da = |t: f64| {
        ((2.0 * t).cos() + I * (1.0 + 0.5 * (2.0 * t).sin())) * Complex64::from_polar(1.0, t)
    };
    let b = |t: f64| 0.25 * Complex64::from_polar(1.0, -2.0 * t);
    let db = |t: f64| -0.5 * I * Complex64::from_polar(1.0, -2.0 * t);
    let s1 = move |x: f64| (k * x).sin();
    let s2 = move |x: f64| (2.0 * k * x).sin();
    ExactSolution {
        u: Arc::new(move |t, x| a(t) * s1(x) + b(t) * s2(x)),
        u_t: Arc::new(move |t, x| da(t) * s1(x) + db(t) * s2(x)),
        u_xx: Arc::new(move |t, x| -k * k * (a(t) * s1(x) + 4.0 * b(t) * s2(x))),
        label: "two-mode-sine".into(),
    }
}

/// Upper bound of `|u|` for [`sine_exact`].
pub const SINE_AMPLITUDE_BOUND: f64 = 1.75;

fn sine_problem(c: f64) -> Problem {
    let exact = sine_exact();
    let g = Nonlinearity::cubic(c);
    let (ex, gg) = (exact.clone(), g.clone());
    let (e0, e2) = (exact.clone(), exact.clone());
    let k4 = PI.powi(4);
    Problem {
        label: if c > 0.0 { "cubic-sine" } else { "defocusing-sine" }.into(),
        x_a: 0.0,
        x_b: 1.0,
        g,
        forcing: Forcing::Field(Arc::new(move |t, x| manufactured_forcing(&ex, &gg, t, x))),
        u0: SmoothFunction::new(move |x| (e0.u)(0.0, x))
            .with_second_derivative(move |x| (e2.u_xx)(0.0, x))
            // |a(0)| k⁴ + 16 |b(0)| k⁴
            .with_fourth_derivative_bound(5.0 * k4),
        exact: Some(exact),
        boundary_tolerance: 1e-12,
    }
}

/// Soliton of `g(ρ) = 2ρ` (for unit amplitude) truncated to `[-20, 20]`, `f ≡ 0`.
pub fn soliton_problem(params: &SolitonParams) -> Problem {
    let exact = params.exact();
    let (p0, p2) = (*params, *params);
    Problem {
        label: "soliton".into(),
        x_a: -SOLITON_HALF_WIDTH,
        x_b: SOLITON_HALF_WIDTH,
        g: Nonlinearity::cubic(2.0),
        forcing: Forcing::Zero,
        u0: SmoothFunction::new(move |x| p0.u(0.0, x)).with_second_derivative(move |x| p2.u_xx(0.0, x)),
        exact: Some(exact),
        boundary_tolerance: SOLITON_BOUNDARY_TOLERANCE,
    }
}

fn require_exact(p: &Problem) -> Result<&ExactSolution> {
    p.exact.as_ref().ok_or(Error::MissingExactSolution("residual oracle"))
}

fn interior_from(mesh: &SpaceMesh, f: impl Fn(f64) -> Complex64) -> GridFunction {
    GridFunction::from_fn_interior(mesh, f)
}

/// `r^{n+1/2}`, from substituting `u` into the full step:
/// `[u^{n+1} - u^n - iτ avg(u_xx) - iτ g(|u^{n+1/2}|²) avg(u) - τ avg(f)] / τ`.
pub fn residual_mid(p: &Problem, n: usize, time: &TimeMesh, mesh: &SpaceMesh) -> Result<GridFunction> {
    let ex = require_exact(p)?;
    if n >= time.steps() {
        return Err(Error::IndexOutOfRange {
            index: n,
            min: 0,
            max: time.steps() - 1,
        });
    }
    let (t0, t1, tm) = (time.t(n), time.t(n + 1), time.t_half(n));
    let tau = time.tau();
    Ok(interior_from(mesh, |x| {
        let (u0, u1, um) = ((ex.u)(t0, x), (ex.u)(t1, x), (ex.u)(tm, x));
        let lap = 0.5 * ((ex.u_xx)(t1, x) + (ex.u_xx)(t0, x));
        let f = 0.5 * (p.forcing.eval(t1, x) + p.forcing.eval(t0, x));
        let nl = p.g.eval(um.norm_sqr()) * 0.5 * (u1 + u0);
        (u1 - u0 - I * tau * lap - I * tau * nl - tau * f) / tau
    }))
}

/// `r^n = ½[g(|u^{n+1/2}|²) + g(|u^{n-1/2}|²)] - g(|u^n|²)` for `1 ≤ n ≤ N-1`.
pub fn residual_node(p: &Problem, n: usize, time: &TimeMesh, mesh: &SpaceMesh) -> Result<RealGridFunction> {
    let ex = require_exact(p)?;
    if n < 1 || n + 1 > time.steps() {
        return Err(Error::IndexOutOfRange {
            index: n,
            min: 1,
            max: time.steps().saturating_sub(1),
        });
    }
    let (tp, tm, tn) = (time.t_half(n), time.t_half(n - 1), time.t(n));
    let last = mesh.len() - 1;
    Ok(RealGridFunction::new(
        (0..mesh.len())
            .map(|j| {
                if j == 0 || j == last {
                    return 0.0;
                }
                let x = mesh.node(j);
                let g = |t: f64| p.g.eval((ex.u)(t, x).norm_sqr());
                0.5 * (g(tp) + g(tm)) - g(tn)
            })
            .collect(),
    ))
}

/// `r^{1/4}`, from substituting `u` into the half step with the frozen
/// coefficient `g(|u⁰|²)`, divided by `τ/2`.
pub fn residual_quarter(p: &Problem, time: &TimeMesh, mesh: &SpaceMesh) -> Result<GridFunction> {
    let ex = require_exact(p)?;
    let (t0, th) = (time.t(0), time.t_half(0));
    let ht = 0.5 * time.tau();
    Ok(interior_from(mesh, |x| {
        let (u0, uh) = ((ex.u)(t0, x), (ex.u)(th, x));
        let lap = 0.5 * ((ex.u_xx)(th, x) + (ex.u_xx)(t0, x));
        let f = 0.5 * (p.forcing.eval(th, x) + p.forcing.eval(t0, x));
        let nl = p.g.eval(u0.norm_sqr()) * 0.5 * (uh + u0);
        (uh - u0 - I * ht * lap - I * ht * nl - ht * f) / ht
    }))
}

/// `max_x |u(t, x)|` over a uniform sample, and `max |g|` over `[0, u_max²]`.
pub fn sampled_bounds(p: &Problem, final_time: f64, samples: usize) -> Result<(f64, f64)> {
    let ex = require_exact(p)?;
    let mut u_max: f64 = 0.0;
    for it in 0..=samples {
        let t = final_time * it as f64 / samples as f64;
        for ix in 0..=samples {
            let x = p.x_a + (p.x_b - p.x_a) * ix as f64 / samples as f64;
            u_max = u_max.max((ex.u)(t, x).norm());
        }
    }
    let mut g_max: f64 = 0.0;
    for i in 0..=samples {
        let rho = u_max * u_max * i as f64 / samples as f64;
        g_max = g_max.max(p.g.eval(rho).abs());
    }
    Ok((u_max, g_max))
}

/// Mollifier cutoff `δ⋆ = 2 max(u_max, g_max)` for a problem with a known solution.
pub fn default_delta_star(p: &Problem, final_time: f64) -> Result<f64> {
    let (u, g) = sampled_bounds(p, final_time, 400)?;
    Ok(2.0 * u.max(g))
}
