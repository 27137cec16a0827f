//! Discrete Laplacian, the per-step operators `ν_h[ε, φ]`, `A_h`, `T_h`,
//! `B_h = A_h⁻¹ T_h`, and the complex tridiagonal solver behind them.
//!
//! All operators act on boundary-zero node functions and reduce to a
//! `J × J` system on the interior unknowns.
//!
//! Eigenvalue convention: for the sine mode `v_j = sin(kπ(x_j - x_a)/L)`,
//! `Δ_h v = -λ_k v` with `λ_k = (4/h²) sin²(kπh/(2L)) > 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{check_len, GridFunction, RealGridFunction, SpaceMesh};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tridiagonal `J × J` matrix in diagonal storage.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    sub: Vec<Complex64>,
    diag: Vec<Complex64>,
    sup: Vec<Complex64>,
}

impl TridiagonalSystem {
    /// `sub` and `sup` have length `n - 1` where `n = diag.len()`.
    pub fn new(sub: Vec<Complex64>, diag: Vec<Complex64>, sup: Vec<Complex64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::LengthMismatch {
                expected: 1,
                found: 0,
            });
        }
        check_len(diag.len() - 1, sub.len())?;
        check_len(diag.len() - 1, sup.len())?;
        Ok(Self { sub, diag, sup })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn sub(&self) -> &[Complex64] {
        &self.sub
    }

    pub fn sup(&self) -> &[Complex64] {
        &self.sup
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        check_len(n, x.len())?;
        Ok((0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect())
    }

    /// Thomas elimination without pivoting.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        check_len(n, rhs.len())?;
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut x = vec![Complex64::new(0.0, 0.0); n];

        let mut pivot = self.diag[0];
        self.check_pivot(0, pivot)?;
        if n > 1 {
            c_prime[0] = self.sup[0] / pivot;
        }
        x[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i - 1] * c_prime[i - 1];
            self.check_pivot(i, pivot)?;
            if i + 1 < n {
                c_prime[i] = self.sup[i] / pivot;
            }
            x[i] = (rhs[i] - self.sub[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c_prime[i] * next;
        }
        Ok(x)
    }

    fn check_pivot(&self, row: usize, pivot: Complex64) -> Result<()> {
        let mut scale = self.diag[row].norm();
        if row > 0 {
            scale = scale.max(self.sub[row - 1].norm());
        }
        if row + 1 < self.dim() {
            scale = scale.max(self.sup[row].norm());
        }
        let modulus = pivot.norm();
        if !modulus.is_finite() || modulus < 1e-14 * scale || modulus == 0.0 {
            Err(Error::SingularPivot { row, modulus })
        } else {
            Ok(())
        }
    }
}

/// Solves a tridiagonal system.
pub fn tridiagonal_solve(sys: &TridiagonalSystem, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    sys.solve(rhs)
}

/// `Δ_h v` on interior nodes, zero on the boundary.
pub fn apply_laplacian(v: &GridFunction, mesh: &SpaceMesh) -> Result<GridFunction> {
    v.require_boundary_zero(mesh)?;
    let inv_h2 = 1.0 / (mesh.h() * mesh.h());
    let vals = v.values();
    let interior: Vec<_> = vals
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]) * inv_h2)
        .collect();
    Ok(GridFunction::from_interior(&interior))
}

/// `λ_k = (4/h²) sin²(kπh/(2L))`, so that `Δ_h` maps the k-th sine mode to `-λ_k` times itself.
pub fn laplacian_eigenvalue(k: usize, mesh: &SpaceMesh) -> f64 {
    let h = mesh.h();
    let s = (k as f64 * std::f64::consts::PI * h / (2.0 * mesh.length())).sin();
    4.0 / (h * h) * s * s
}

/// Matrix of `ν_h[ε, φ] χ = χ - iετ Δ_h χ - iετ φ ⊗ χ` on the interior unknowns.
pub fn nu_h_system(
    eps: f64,
    phi: &RealGridFunction,
    tau: f64,
    mesh: &SpaceMesh,
) -> Result<TridiagonalSystem> {
    check_len(mesh.len(), phi.len())?;
    let j = mesh.interior();
    let a = eps * tau / (mesh.h() * mesh.h());
    let off = Complex64::new(0.0, -a);
    let diag = phi.values()[1..=j]
        .iter()
        .map(|&p| Complex64::new(1.0, 2.0 * a - eps * tau * p))
        .collect();
    TridiagonalSystem::new(vec![off; j - 1], diag, vec![off; j - 1])
}

/// Forward application of `ν_h[ε, φ]`.
pub fn apply_nu_h(
    eps: f64,
    phi: &RealGridFunction,
    chi: &GridFunction,
    tau: f64,
    mesh: &SpaceMesh,
) -> Result<GridFunction> {
    chi.require_boundary_zero(mesh)?;
    let sys = nu_h_system(eps, phi, tau, mesh)?;
    Ok(GridFunction::from_interior(&sys.apply(chi.interior())?))
}

/// Solves `ν_h[ε, φ] χ = rhs` for `χ` in the boundary-zero space.
///
/// The operator satisfies `Re(ν_h χ, χ) = ‖χ‖²`, so it is invertible for
/// every real `φ` and `ε > 0`; every Thomas pivot has real part at least one.
pub fn solve_nu_h(
    eps: f64,
    phi: &RealGridFunction,
    rhs: &GridFunction,
    tau: f64,
    mesh: &SpaceMesh,
) -> Result<GridFunction> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    rhs.require_boundary_zero(mesh)?;
    let sys = nu_h_system(eps, phi, tau, mesh)?;
    Ok(GridFunction::from_interior(&sys.solve(rhs.interior())?))
}

/// Sign selecting `T_h = I + i(τ/2)Δ_h` (`Plus`) or `A_h = I - i(τ/2)Δ_h` (`Minus`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSign {
    Plus,
    Minus,
}

impl ShiftSign {
    fn value(self) -> f64 {
        match self {
            ShiftSign::Plus => 1.0,
            ShiftSign::Minus => -1.0,
        }
    }
}

/// The half-step operators `A_h`, `T_h` and `B_h` for a fixed `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfStepOperators {
    tau: f64,
    mesh: SpaceMesh,
}

impl HalfStepOperators {
    pub fn new(tau: f64, mesh: SpaceMesh) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must be non-negative")));
        }
        Ok(Self { tau, mesh })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mesh(&self) -> &SpaceMesh {
        &self.mesh
    }

    fn system(&self, sign: ShiftSign) -> TridiagonalSystem {
        let j = self.mesh.interior();
        let a = sign.value() * 0.5 * self.tau / (self.mesh.h() * self.mesh.h());
        let off = Complex64::new(0.0, a);
        let diag = Complex64::new(1.0, -2.0 * a);
        TridiagonalSystem::new(vec![off; j - 1], vec![diag; j], vec![off; j - 1])
            .expect("consistent lengths")
    }

    /// `(I + sign · i(τ/2)Δ_h) v`.
    pub fn apply_half_shift(&self, v: &GridFunction, sign: ShiftSign) -> Result<GridFunction> {
        v.require_boundary_zero(&self.mesh)?;
        let lap = apply_laplacian(v, &self.mesh)?;
        v.combine(
            Complex64::new(1.0, 0.0),
            &lap,
            I * (sign.value() * 0.5 * self.tau),
        )
    }

    /// `A_h⁻¹ v`.
    pub fn apply_a_inverse(&self, v: &GridFunction) -> Result<GridFunction> {
        v.require_boundary_zero(&self.mesh)?;
        let x = self.system(ShiftSign::Minus).solve(v.interior())?;
        Ok(GridFunction::from_interior(&x))
    }

    /// `B_h v = A_h⁻¹ T_h v`.
    pub fn apply_b_h(&self, v: &GridFunction) -> Result<GridFunction> {
        let tv = self.apply_half_shift(v, ShiftSign::Plus)?;
        self.apply_a_inverse(&tv)
    }

    /// Solves `(I + B_h) y = rhs`.
    ///
    /// Multiplying through by `A_h` gives `(A_h + T_h) y = A_h rhs`, and
    /// `A_h + T_h = 2I`.
    pub fn solve_one_plus_b(&self, rhs: &GridFunction) -> Result<GridFunction> {
        let (a, t) = (self.system(ShiftSign::Minus), self.system(ShiftSign::Plus));
        let sum = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
            x.iter().zip(y).map(|(p, q)| p + q).collect()
        };
        let sys = TridiagonalSystem::new(
            sum(a.sub(), t.sub()),
            sum(a.diag(), t.diag()),
            sum(a.sup(), t.sup()),
        )?;
        let a_rhs = self.apply_half_shift(rhs, ShiftSign::Minus)?;
        Ok(GridFunction::from_interior(&sys.solve(a_rhs.interior())?))
    }
}

/// `B_h v` for the given operators.
pub fn apply_b_h(v: &GridFunction, ops: &HalfStepOperators) -> Result<GridFunction> {
    ops.apply_b_h(v)
}

/// `(I + sign · i(τ/2)Δ_h) v`.
pub fn apply_half_shift(v: &GridFunction, sign: ShiftSign, ops: &HalfStepOperators) -> Result<GridFunction> {
    ops.apply_half_shift(v, sign)
}
