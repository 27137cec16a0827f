//! The `C³` cutoff `n_δ` and the complex mollifier `γ_δ`.
//!
//! `n_δ` is odd, equal to the identity on `[0, δ]`, equal to the degree-7
//! Hermite polynomial `p_δ` on `(δ, 2δ]` and constant `2δ` beyond. The
//! polynomial is stored in the variable `s = (x - δ)/δ ∈ [0, 1]`, where
//! `p_δ(x) = δ q(s)` and `q` does not depend on `δ`.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, RealGridFunction};

const SAMPLES: usize = 10_000;

/// Cutoff `δ` with the coefficients of `q(s) = Σ c_k s^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier {
    delta: f64,
    coeffs: [f64; 8],
    sup_derivatives: [f64; 3],
}

/// `d^order/ds^order` of `Σ c_k s^k`.
fn poly_derivative(coeffs: &[f64; 8], order: usize, s: f64) -> f64 {
    let mut acc = 0.0;
    for k in (order..8).rev() {
        acc = acc * s + falling_factorial(k, order) * coeffs[k];
    }
    acc
}

fn falling_factorial(k: usize, order: usize) -> f64 {
    (0..order).map(|i| k as f64 - i as f64).product()
}

impl Mollifier {
    /// Solves the 8×8 Hermite interpolation system and checks all eight conditions.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidCutoff(delta));
        }
        // Rows: q^(d)(s0) for d = 0..3 at s0 = 0 and s0 = 1.
        let mut a = SMatrix::<f64, 8, 8>::zeros();
        for (row, (s0, d)) in [(0.0, 0), (0.0, 1), (0.0, 2), (0.0, 3), (1.0, 0), (1.0, 1), (1.0, 2), (1.0, 3)]
            .into_iter()
            .enumerate()
        {
            for k in d..8 {
                a[(row, k)] = falling_factorial(k, d) * f64::powi(s0, (k - d) as i32);
            }
        }
        let b = SVector::<f64, 8>::from_column_slice(&[1.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        let sol = a.lu().solve(&b).ok_or(Error::IllConditioned {
            condition: "Hermite system is singular",
            defect: f64::INFINITY,
        })?;
        let mut coeffs = [0.0; 8];
        coeffs.copy_from_slice(sol.as_slice());

        let mut m = Self {
            delta,
            coeffs,
            sup_derivatives: [0.0; 3],
        };
        m.verify_conditions()?;
        m.sup_derivatives = m.sample_sup_derivatives();
        Ok(m)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Coefficients of `q(s)`, lowest degree first.
    pub fn coefficients(&self) -> &[f64; 8] {
        &self.coeffs
    }

    /// `p_δ^{(order)}(x)` for `order ≤ 3`, evaluated by the polynomial formula.
    pub fn p(&self, x: f64, order: usize) -> f64 {
        let s = (x - self.delta) / self.delta;
        self.delta.powi(1 - order as i32) * poly_derivative(&self.coeffs, order, s)
    }

    /// The eight interpolation conditions as `(name, defect)` pairs.
    pub fn condition_defects(&self) -> [(&'static str, f64); 8] {
        let d = self.delta;
        [
            ("p(δ) = δ", (self.p(d, 0) - d).abs()),
            ("p'(δ) = 1", (self.p(d, 1) - 1.0).abs()),
            ("p''(δ) = 0", self.p(d, 2).abs()),
            ("p'''(δ) = 0", self.p(d, 3).abs()),
            ("p(2δ) = 2δ", (self.p(2.0 * d, 0) - 2.0 * d).abs()),
            ("p'(2δ) = 0", self.p(2.0 * d, 1).abs()),
            ("p''(2δ) = 0", self.p(2.0 * d, 2).abs()),
            ("p'''(2δ) = 0", self.p(2.0 * d, 3).abs()),
        ]
    }

    fn verify_conditions(&self) -> Result<()> {
        let tol = 1e-10 * self.delta.max(1.0);
        for (condition, defect) in self.condition_defects() {
            if !(defect <= tol) {
                return Err(Error::IllConditioned { condition, defect });
            }
        }
        Ok(())
    }

    fn sample_sup_derivatives(&self) -> [f64; 3] {
        let mut sup: [f64; 3] = [1.0, 0.0, 0.0];
        for i in 0..=SAMPLES {
            let x = self.delta * (1.0 + i as f64 / SAMPLES as f64);
            for (order, s) in sup.iter_mut().enumerate() {
                *s = s.max(self.p(x, order + 1).abs());
            }
        }
        sup
    }

    /// Sampled `sup |n_δ'|`, `sup |n_δ''|`, `sup |n_δ'''|`.
    pub fn sup_derivatives(&self) -> [f64; 3] {
        self.sup_derivatives
    }

    /// Sampled `sup |n_δ'|`; the Lipschitz constant of `n_δ` and `γ_δ`.
    pub fn lipschitz(&self) -> f64 {
        self.sup_derivatives[0]
    }

    /// `sup |n_δ| = 2δ`.
    pub fn sup(&self) -> f64 {
        2.0 * self.delta
    }

    /// Derivative of order `order ≤ 3` of `n_δ` at `x`. At the joins the
    /// left branch is used.
    pub fn n_derivative(&self, x: f64, order: usize) -> f64 {
        let ax = x.abs();
        // n is odd: even-order derivatives are odd, odd-order derivatives even.
        let sign = if x < 0.0 && order.is_multiple_of(2) { -1.0 } else { 1.0 };
        let value = if ax <= self.delta {
            match order {
                0 => ax,
                1 => 1.0,
                _ => 0.0,
            }
        } else if ax <= 2.0 * self.delta {
            self.p(ax, order)
        } else if order == 0 {
            2.0 * self.delta
        } else {
            0.0
        };
        sign * value
    }

    /// `n_δ(x)`.
    pub fn n(&self, x: f64) -> f64 {
        self.n_derivative(x, 0)
    }

    /// `γ_δ(z) = n_δ(Re z) + i n_δ(Im z)`.
    pub fn gamma(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.n(z.re), self.n(z.im))
    }

    /// `γ_δ` applied at every node; keeps the boundary-zero flag since `γ_δ(0) = 0`.
    pub fn gamma_grid(&self, v: &GridFunction) -> GridFunction {
        v.map(|z| self.gamma(z))
    }

    /// `n_δ` applied at every node.
    pub fn n_grid(&self, phi: &RealGridFunction) -> RealGridFunction {
        phi.map(|x| self.n(x))
    }
}

pub fn build_mollifier(delta: f64) -> Result<Mollifier> {
    Mollifier::new(delta)
}

pub fn n_delta(m: &Mollifier, x: f64) -> f64 {
    m.n(x)
}

pub fn gamma_delta(m: &Mollifier, z: Complex64) -> Complex64 {
    m.gamma(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: with q(s) = 1 + s + c4 s⁴ + … + c7 s⁷ the
    /// conditions at s = 0 hold by construction and those at s = 1 form a
    /// 4×4 system, solved here by Cramer's rule.
    fn oracle_coefficients() -> [f64; 8] {
        let m = [
            [1.0, 1.0, 1.0, 1.0],
            [4.0, 5.0, 6.0, 7.0],
            [12.0, 20.0, 30.0, 42.0],
            [24.0, 60.0, 120.0, 210.0],
        ];
        let rhs = [0.0, -1.0, 0.0, 0.0];
        fn det3(a: [[f64; 3]; 3]) -> f64 {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        fn det4(a: [[f64; 4]; 4]) -> f64 {
            (0..4)
                .map(|c| {
                    let mut minor = [[0.0; 3]; 3];
                    for r in 1..4 {
                        let mut cc = 0;
                        for k in 0..4 {
                            if k != c {
                                minor[r - 1][cc] = a[r][k];
                                cc += 1;
                            }
                        }
                    }
                    let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                    sign * a[0][c] * det3(minor)
                })
                .sum()
        }
        let d = det4(m);
        let mut out = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for col in 0..4 {
            let mut mc = m;
            for r in 0..4 {
                mc[r][col] = rhs[r];
            }
            out[4 + col] = det4(mc) / d;
        }
        out
    }

    #[test]
    fn hermite_conditions_hold_at_several_scales() {
        for delta in [0.5, 1.0, 2.0, 1e-3, 37.0] {
            let m = Mollifier::new(delta).unwrap();
            for (name, defect) in m.condition_defects() {
                assert!(defect <= 1e-10 * delta.max(1.0), "δ={delta}: {name} defect {defect}");
            }
        }
    }

    #[test]
    fn coefficients_match_cramer_oracle() {
        let m = Mollifier::new(1.0).unwrap();
        for (a, b) in m.coefficients().iter().zip(oracle_coefficients()) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
        assert_relative_eq!(m.p(1.0, 0), 1.0, epsilon = 1e-10);
        assert_relative_eq!(m.p(1.0, 1), 1.0, epsilon = 1e-10);
        assert_relative_eq!(m.p(2.0, 0), 2.0, epsilon = 1e-10);
        assert!(m.p(2.0, 1).abs() <= 1e-10);
    }

    #[test]
    fn scaling_law() {
        let one = Mollifier::new(1.0).unwrap();
        for delta in [0.5, 2.0, 3.7] {
            let m = Mollifier::new(delta).unwrap();
            for i in 0..100 {
                let x = delta * (1.0 + i as f64 / 99.0);
                assert!((m.p(x, 0) - delta * one.p(x / delta, 0)).abs() <= 1e-10 * delta.max(1.0));
            }
        }
    }

    #[test]
    fn invalid_cutoff_rejected() {
        assert_eq!(Mollifier::new(0.0), Err(Error::InvalidCutoff(0.0)));
        assert!(Mollifier::new(-1.0).is_err());
        assert!(Mollifier::new(f64::NAN).is_err());
    }

    #[test]
    fn branches_and_oddness() {
        let m = Mollifier::new(0.8).unwrap();
        assert_eq!(m.n(0.4), 0.4);
        assert_eq!(m.n(3.0 * 0.8), 1.6);
        assert_eq!(m.n(-3.0 * 0.8), -1.6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = rng.gen_range(-5.0..5.0);
            assert_eq!(m.n(-x), -m.n(x));
            assert!(m.n(x).abs() <= 1.6 + 1e-12);
        }
        // nondecreasing on [0, ∞)
        let mut prev = 0.0;
        for i in 0..=4000 {
            let x = 3.0 * i as f64 / 4000.0;
            let y = m.n(x);
            assert!(y >= prev - 1e-12);
            prev = y;
        }
    }

    #[test]
    fn joins_are_c3_by_finite_differences() {
        let m = Mollifier::new(1.3).unwrap();
        for join in [m.delta(), 2.0 * m.delta()] {
            for order in 1..=3 {
                let left = m.n_derivative(join - 1e-12, order);
                let right = m.n_derivative(join + 1e-12, order);
                assert!((left - right).abs() <= 1e-8, "order {order} at {join}: {left} vs {right}");
            }
            // one-sided second-order finite differences of n''' shrink like step²
            let mut prev_gap: Option<f64> = None;
            for step in [1e-2, 5e-3, 2.5e-3] {
                let fd = |x0: f64, dir: f64| {
                    let f = |k: f64| m.n_derivative(x0 + dir * k * step, 2);
                    dir * (-3.0 * f(0.0) + 4.0 * f(1.0) - f(2.0)) / (2.0 * step)
                };
                let gap = (fd(join, -1.0) - fd(join, 1.0)).abs();
                if let Some(p) = prev_gap {
                    assert!(gap <= p * 0.3 + 1e-9, "gap {gap} after {p}");
                }
                prev_gap = Some(gap);
            }
        }
    }

    #[test]
    fn gamma_identity_region_and_bounds() {
        let m = Mollifier::new(0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let r = 0.7 * rng.gen_range(0.0..=1.0_f64);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = Complex64::from_polar(r, th);
            assert_eq!(m.gamma(z), z);
            let w = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            assert!(m.gamma(w).norm() <= 2.0_f64.sqrt() * m.sup() + 1e-12);
        }
        assert_eq!(m.gamma(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gamma_is_lipschitz() {
        let m = Mollifier::new(1.0).unwrap();
        let lip = m.lipschitz();
        assert!(lip >= 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let z1 = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let z2 = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            assert!((m.gamma(z1) - m.gamma(z2)).norm() <= lip * (z1 - z2).norm() * (1.0 + 1e-9));
        }
    }
}
