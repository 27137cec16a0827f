//! Relaxation finite difference solver for the one-dimensional nonlinear
//! Schrödinger equation `u_t = i u_xx + i g(|u|²) u + f` with homogeneous
//! Dirichlet boundary conditions.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: meshes, grid functions and discrete norms;
//! - [`ops`]: the discrete Laplacian, tridiagonal solves and step operators;
//! - [`projection`]: interpolation and the elliptic projection used for `W⁰`;
//! - [`mollifier`]: the `C³` cutoff used by the mollified scheme;
//! - [`scheme`]: the time stepper;
//! - [`problems`]: the test problem catalogue and residual oracles;
//! - [`harness`]: single runs, convergence studies and the property suite.

// `!(x <= tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod grid;
pub mod harness;
pub mod mollifier;
pub mod ops;
pub mod problems;
pub mod projection;
pub mod scheme;

pub use error::{Error, Result};
pub use grid::{GridFunction, RealGridFunction, SpaceMesh, TimeMesh};
pub use mollifier::Mollifier;
pub use problems::ProblemId;
pub use scheme::{Problem, SchemeVariant, Solver, SolverState};
