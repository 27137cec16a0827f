//! Pointwise interpolation and the discrete elliptic projection `R_h`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceMesh};
use crate::ops::TridiagonalSystem;

pub type SpaceFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A smooth function on `[x_a, x_b]` given by callbacks.
#[derive(Clone)]
pub struct SmoothFunction {
    value: SpaceFn,
    second_derivative: Option<SpaceFn>,
    fourth_derivative_bound: Option<f64>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFunction")
            .field("has_second_derivative", &self.second_derivative.is_some())
            .field("fourth_derivative_bound", &self.fourth_derivative_bound)
            .finish()
    }
}

impl SmoothFunction {
    pub fn new(value: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            second_derivative: None,
            fourth_derivative_bound: None,
        }
    }

    pub fn with_second_derivative(
        mut self,
        d2: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.second_derivative = Some(Arc::new(d2));
        self
    }

    /// Bound on `max |v''''|` over the interval.
    pub fn with_fourth_derivative_bound(mut self, bound: f64) -> Self {
        self.fourth_derivative_bound = Some(bound);
        self
    }

    pub fn zero() -> Self {
        Self::new(|_| Complex64::new(0.0, 0.0))
            .with_second_derivative(|_| Complex64::new(0.0, 0.0))
            .with_fourth_derivative_bound(0.0)
    }

    pub fn value_at(&self, x: f64) -> Complex64 {
        (self.value)(x)
    }

    pub fn second_derivative_at(&self, x: f64) -> Option<Complex64> {
        self.second_derivative.as_ref().map(|d2| d2(x))
    }

    pub fn has_second_derivative(&self) -> bool {
        self.second_derivative.is_some()
    }

    pub fn fourth_derivative_bound(&self) -> Option<f64> {
        self.fourth_derivative_bound
    }
}

/// `I_h f` (all nodes) or, with `interior_only`, `I_h° f` (zero boundary entries).
pub fn interpolate(f: &SmoothFunction, mesh: &SpaceMesh, interior_only: bool) -> GridFunction {
    if interior_only {
        GridFunction::from_fn_interior(mesh, |x| f.value_at(x))
    } else {
        GridFunction::from_fn(mesh, |x| f.value_at(x))
    }
}

/// The Dirichlet Laplacian on the interior unknowns, scaled by `-h²`
/// (diagonal 2, off-diagonals -1).
fn scaled_dirichlet_laplacian(j: usize) -> TridiagonalSystem {
    let one = Complex64::new(-1.0, 0.0);
    TridiagonalSystem::new(vec![one; j - 1], vec![Complex64::new(2.0, 0.0); j], vec![one; j - 1])
        .expect("consistent lengths")
}

/// `R_h[v]`: the boundary-zero solution of `Δ_h X = I_h°(v'')`.
pub fn elliptic_project(f: &SmoothFunction, mesh: &SpaceMesh) -> Result<GridFunction> {
    let d2 = f
        .second_derivative
        .as_ref()
        .ok_or(Error::MissingSecondDerivative)?;
    let h2 = mesh.h() * mesh.h();
    let rhs: Vec<_> = (1..=mesh.interior())
        .map(|j| -h2 * d2(mesh.node(j)))
        .collect();
    let x = scaled_dirichlet_laplacian(mesh.interior()).solve(&rhs)?;
    Ok(GridFunction::from_interior(&x))
}

/// Right-hand side of the elliptic H¹ error bound:
/// `sqrt(1 + L²) L^{3/2} / 24 · h² · max |v''''|`.
pub fn projection_error_bound(mesh: &SpaceMesh, fourth_derivative_bound: f64) -> f64 {
    let l = mesh.length();
    (1.0 + l * l).sqrt() * l.powf(1.5) / 24.0 * mesh.h() * mesh.h() * fourth_derivative_bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm_0h, norm_1h};
    use crate::ops::apply_laplacian;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sine(l: f64) -> SmoothFunction {
        let k = PI / l;
        SmoothFunction::new(move |x| c((k * x).sin()))
            .with_second_derivative(move |x| c(-k * k * (k * x).sin()))
            .with_fourth_derivative_bound(k.powi(4))
    }

    #[test]
    fn interpolation_cases() {
        let m = SpaceMesh::new(0.0, 2.0, 9).unwrap();
        let z = interpolate(&SmoothFunction::zero(), &m, false);
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
        let id = interpolate(&SmoothFunction::new(c), &m, false);
        for (j, v) in id.values().iter().enumerate() {
            assert_eq!(v.re, m.node(j));
        }
        let s = interpolate(&sine(2.0), &m, true);
        assert!(s.is_boundary_zero());
        assert_eq!(s.values()[0], c(0.0));
        assert_eq!(s.values()[m.len() - 1], c(0.0));
    }

    #[test]
    fn projection_of_zero_and_quadratic() {
        let m = SpaceMesh::new(0.0, 1.5, 30).unwrap();
        let z = elliptic_project(&SmoothFunction::zero(), &m).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));

        let l = m.length();
        let q = SmoothFunction::new(move |x| Complex64::new(x * (l - x), 0.5 * x * (l - x)))
            .with_second_derivative(|_| Complex64::new(-2.0, -1.0));
        let r = elliptic_project(&q, &m).unwrap();
        let i = interpolate(&q, &m, true);
        assert!(norm_1h(&r.sub(&i).unwrap(), &m) <= 1e-12);
    }

    #[test]
    fn defining_equation_holds() {
        let m = SpaceMesh::new(-1.0, 3.0, 100).unwrap();
        let f = SmoothFunction::new(|x| Complex64::new((x + 1.0).sin() * (3.0 - x), x.cos()))
            .with_second_derivative(|x| {
                // d²/dx² [sin(x+1)(3-x)] = -sin(x+1)(3-x) - 2cos(x+1)
                Complex64::new(-(x + 1.0).sin() * (3.0 - x) - 2.0 * (x + 1.0).cos(), -x.cos())
            });
        let r = elliptic_project(&f, &m).unwrap();
        let lap = apply_laplacian(&r, &m).unwrap();
        let target = GridFunction::from_fn_interior(&m, |x| f.second_derivative_at(x).unwrap());
        assert!(norm_0h(&lap.sub(&target).unwrap(), &m) <= 1e-12 * norm_0h(&target, &m));
    }

    #[test]
    fn missing_second_derivative_is_an_error() {
        let m = SpaceMesh::new(0.0, 1.0, 5).unwrap();
        let f = SmoothFunction::new(c);
        assert_eq!(elliptic_project(&f, &m), Err(Error::MissingSecondDerivative));
    }

    #[test]
    fn sine_projection_error_is_second_order_and_bounded() {
        let l = 1.0;
        let f = sine(l);
        let mut prev = None;
        for j in [31, 63, 127] {
            let m = SpaceMesh::new(0.0, l, j).unwrap();
            let err = norm_1h(&elliptic_project(&f, &m).unwrap().sub(&interpolate(&f, &m, true)).unwrap(), &m);
            assert!(err <= projection_error_bound(&m, f.fourth_derivative_bound().unwrap()));
            if let Some(p) = prev {
                let ratio: f64 = p / err;
                assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(err);
        }
    }
}
