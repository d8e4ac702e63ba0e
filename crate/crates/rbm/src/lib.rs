//! Stationary distribution of semimartingale reflected Brownian motion in the
//! quarter plane, computed through its boundary Laplace transforms.
//!
//! The pipeline: validate the triple (Sigma, mu, R); derive the kernel
//! geometry (branch points, the hyperbola carrying the boundary condition,
//! the distinguished points p, p', q); glue the two half-branches with a
//! generalized Chebyshev map; compute the index of the boundary-value
//! problem; and evaluate the transforms as Cauchy integrals over the
//! hyperbola. Exponential closed forms cover the skew-symmetric and
//! orthogonal-reflection cases, a comparison table classifies the boundary
//! tail asymptotics, and a reflected Euler scheme provides an independent
//! Monte Carlo cross-check.

pub mod asymptotics;
pub mod conformal;
pub mod curve;
pub mod error;
pub mod kernel;
pub mod laplace;
pub mod mc;
pub mod model;
pub mod quad;

pub use error::{Error, Result};
pub use kernel::KernelGeometry;
pub use laplace::{Evaluator, LaplaceValue, Tolerances};
pub use model::{ModelParams, WedgeParams};
