//! Uniform meshes, grid functions and the discrete inner products and norms.
//!
//! Node-based functions live on the `J + 2` nodes `x_j = x_a + j h`,
//! `j = 0..=J+1`. Cell-based (staggered) functions live on the `J + 1` cells
//! between consecutive nodes and hold forward differences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of `[x_a, x_b]` with `J` interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceMesh {
    x_a: f64,
    x_b: f64,
    interior: usize,
    h: f64,
}

impl SpaceMesh {
    pub fn new(x_a: f64, x_b: f64, interior: usize) -> Result<Self> {
        if !(x_a.is_finite() && x_b.is_finite()) || x_b <= x_a {
            return Err(Error::InvalidMesh(format!(
                "interval [{x_a}, {x_b}] is empty or not finite"
            )));
        }
        if interior == 0 {
            return Err(Error::InvalidMesh(
                "at least one interior node is required".into(),
            ));
        }
        let h = (x_b - x_a) / (interior as f64 + 1.0);
        Ok(Self {
            x_a,
            x_b,
            interior,
            h,
        })
    }

    pub fn x_a(&self) -> f64 {
        self.x_a
    }

    pub fn x_b(&self) -> f64 {
        self.x_b
    }

    /// Number of interior nodes `J`.
    pub fn interior(&self) -> usize {
        self.interior
    }

    /// Total node count `J + 2`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.interior + 2
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.x_b - self.x_a
    }

    /// Node coordinate; the last node is pinned to `x_b`.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.interior + 1 {
            self.x_b
        } else {
            self.x_a + j as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    /// The mesh with `2(J + 1) - 1` interior nodes, i.e. half the spacing.
    pub fn refined(&self) -> Self {
        Self::new(self.x_a, self.x_b, 2 * (self.interior + 1) - 1)
            .expect("refining a valid mesh yields a valid mesh")
    }
}

/// Uniform partition of `[0, T]` into `N` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    final_time: f64,
    steps: usize,
    tau: f64,
}

impl TimeMesh {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidMesh(format!(
                "final time {final_time} must be positive"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidMesh("at least one time step is required".into()));
        }
        Ok(Self {
            final_time,
            steps,
            tau: final_time / steps as f64,
        })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `t_n`; `t_N` is pinned to `T`.
    pub fn t(&self, n: usize) -> f64 {
        if n == self.steps {
            self.final_time
        } else {
            n as f64 * self.tau
        }
    }

    /// `t^{n+1/2} = t_n + tau / 2`.
    pub fn t_half(&self, n: usize) -> f64 {
        self.t(n) + 0.5 * self.tau
    }

    pub fn refined(&self) -> Self {
        Self::new(self.final_time, 2 * self.steps).expect("refining a valid mesh")
    }
}

/// Complex values on all `J + 2` nodes.
///
/// The `boundary_zero` flag marks membership in the subspace of functions
/// vanishing at both end nodes; it is set only by constructors that check it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
    boundary_zero: bool,
}

impl GridFunction {
    /// A general node function (no boundary condition implied).
    pub fn new(values: Vec<Complex64>) -> Self {
        Self {
            values,
            boundary_zero: false,
        }
    }

    /// A node function that must vanish at both end nodes.
    pub fn with_zero_boundary(values: Vec<Complex64>) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        match (values.first(), values.last()) {
            (Some(a), Some(b)) if *a == zero && *b == zero && values.len() >= 3 => Ok(Self {
                values,
                boundary_zero: true,
            }),
            _ => Err(Error::NotBoundaryZero),
        }
    }

    /// Pads `J` interior values with zero boundary entries.
    pub fn from_interior(interior: &[Complex64]) -> Self {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(Complex64::new(0.0, 0.0));
        values.extend_from_slice(interior);
        values.push(Complex64::new(0.0, 0.0));
        Self {
            values,
            boundary_zero: true,
        }
    }

    pub fn zeros(mesh: &SpaceMesh) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); mesh.len()],
            boundary_zero: true,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(mesh: &SpaceMesh, f: impl Fn(f64) -> Complex64) -> Self {
        Self::new(mesh.nodes().into_iter().map(f).collect())
    }

    /// Samples `f` at interior nodes; boundary entries are zero.
    pub fn from_fn_interior(mesh: &SpaceMesh, f: impl Fn(f64) -> Complex64) -> Self {
        let interior: Vec<_> = (1..=mesh.interior()).map(|j| f(mesh.node(j))).collect();
        Self::from_interior(&interior)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn interior(&self) -> &[Complex64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_boundary_zero(&self) -> bool {
        self.boundary_zero
    }

    /// Checks the actual boundary entries and sets the flag if both vanish.
    pub fn try_into_boundary_zero(self) -> Result<Self> {
        Self::with_zero_boundary(self.values)
    }

    pub(crate) fn require_boundary_zero(&self, mesh: &SpaceMesh) -> Result<()> {
        check_len(mesh.len(), self.len())?;
        if self.boundary_zero {
            Ok(())
        } else {
            Err(Error::NotBoundaryZero)
        }
    }

    /// Pointwise map. The result is flagged boundary-zero only if `f(0) = 0`
    /// keeps the boundary entries at zero.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values: Vec<_> = self.values.iter().map(|&z| f(z)).collect();
        let zero = Complex64::new(0.0, 0.0);
        let boundary_zero = self.boundary_zero
            && values.first() == Some(&zero)
            && values.last() == Some(&zero);
        Self {
            values,
            boundary_zero,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&z| c * z).collect(),
            boundary_zero: self.boundary_zero,
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&v, &w)| a * v + b * w)
                .collect(),
            boundary_zero: self.boundary_zero && other.boundary_zero,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// Pointwise squared modulus.
    pub fn modulus_squared(&self) -> RealGridFunction {
        RealGridFunction::new(self.values.iter().map(|z| z.norm_sqr()).collect())
    }

    pub(crate) fn from_parts(values: Vec<Complex64>, boundary_zero: bool) -> Self {
        debug_assert!(
            !boundary_zero
                || (values[0] == Complex64::new(0.0, 0.0)
                    && values[values.len() - 1] == Complex64::new(0.0, 0.0))
        );
        Self {
            values,
            boundary_zero,
        }
    }
}

/// Real values on all `J + 2` nodes; houses the relaxation variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealGridFunction {
    values: Vec<f64>,
}

impl RealGridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(mesh: &SpaceMesh, c: f64) -> Self {
        Self::new(vec![c; mesh.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn to_complex(&self) -> GridFunction {
        GridFunction::new(
            self.values
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
        )
    }
}

/// Complex values on the `J + 1` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredFunction {
    values: Vec<Complex64>,
}

impl StaggeredFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell inner product `h * sum z_j conj(v_j)`.
    pub fn inner_product(&self, other: &Self, mesh: &SpaceMesh) -> Result<Complex64> {
        check_len(mesh.interior() + 1, self.len())?;
        check_len(self.len(), other.len())?;
        Ok(mesh.h() * complex_sum(self.values.iter().zip(&other.values).map(|(z, v)| z * v.conj())))
    }

    pub fn norm(&self, mesh: &SpaceMesh) -> f64 {
        (mesh.h() * real_sum(self.values.iter().map(|z| z.norm_sqr()))).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// The four discrete norms of a node function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBundle {
    pub norm0h: f64,
    pub seminorm1h: f64,
    pub norm1h: f64,
    pub norm_inf: f64,
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn real_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    terms.for_each(|x| acc.add(x));
    acc.total()
}

pub(crate) fn complex_sum(terms: impl Iterator<Item = Complex64>) -> Complex64 {
    let (mut re, mut im) = (Compensated::default(), Compensated::default());
    for z in terms {
        re.add(z.re);
        im.add(z.im);
    }
    Complex64::new(re.total(), im.total())
}

/// Pointwise product `(v ⊗ w)_j = v_j w_j`.
pub fn otimes(v: &GridFunction, w: &GridFunction) -> Result<GridFunction> {
    check_len(v.len(), w.len())?;
    let values = v.values.iter().zip(&w.values).map(|(a, b)| a * b).collect();
    Ok(GridFunction::from_parts(
        values,
        v.boundary_zero || w.boundary_zero,
    ))
}

/// Pointwise product with a real node function.
pub fn otimes_real(phi: &RealGridFunction, v: &GridFunction) -> Result<GridFunction> {
    check_len(phi.len(), v.len())?;
    let values = phi.values.iter().zip(&v.values).map(|(a, b)| a * b).collect();
    Ok(GridFunction::from_parts(values, v.boundary_zero))
}

/// Forward difference `(v_{j+1} - v_j) / h` on the `J + 1` cells.
pub fn delta_h(v: &GridFunction, mesh: &SpaceMesh) -> Result<StaggeredFunction> {
    check_len(mesh.len(), v.len())?;
    let inv_h = 1.0 / mesh.h();
    Ok(StaggeredFunction::new(
        v.values.windows(2).map(|w| (w[1] - w[0]) * inv_h).collect(),
    ))
}

/// `(v, w)_{0,h} = h * sum_j v_j conj(w_j)` over all nodes.
pub fn inner_product_0h(v: &GridFunction, w: &GridFunction, mesh: &SpaceMesh) -> Result<Complex64> {
    check_len(mesh.len(), v.len())?;
    check_len(v.len(), w.len())?;
    Ok(mesh.h() * complex_sum(v.values.iter().zip(&w.values).map(|(a, b)| a * b.conj())))
}

pub fn norm_0h(v: &GridFunction, mesh: &SpaceMesh) -> f64 {
    (mesh.h() * real_sum(v.values.iter().map(|z| z.norm_sqr()))).sqrt()
}

pub fn seminorm_1h(v: &GridFunction, mesh: &SpaceMesh) -> f64 {
    let inv_h = 1.0 / mesh.h();
    let sq = real_sum(v.values.windows(2).map(|w| ((w[1] - w[0]) * inv_h).norm_sqr()));
    (mesh.h() * sq).sqrt()
}

pub fn norm_1h(v: &GridFunction, mesh: &SpaceMesh) -> f64 {
    norm_0h(v, mesh).hypot(seminorm_1h(v, mesh))
}

pub fn norm_inf(v: &GridFunction) -> f64 {
    v.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn discrete_norms(v: &GridFunction, mesh: &SpaceMesh) -> Result<NormBundle> {
    check_len(mesh.len(), v.len())?;
    let norm0h = norm_0h(v, mesh);
    let seminorm1h = seminorm_1h(v, mesh);
    Ok(NormBundle {
        norm0h,
        seminorm1h,
        norm1h: (norm0h * norm0h + seminorm1h * seminorm1h).sqrt(),
        norm_inf: norm_inf(v),
    })
}

/// `‖φ‖_{0,h}` of a real node function.
pub fn real_norm_0h(phi: &RealGridFunction, mesh: &SpaceMesh) -> f64 {
    (mesh.h() * real_sum(phi.values().iter().map(|x| x * x))).sqrt()
}

/// `‖φ‖_{1,h}` of a real node function.
pub fn real_norm_1h(phi: &RealGridFunction, mesh: &SpaceMesh) -> f64 {
    norm_1h(&phi.to_complex(), mesh)
}
