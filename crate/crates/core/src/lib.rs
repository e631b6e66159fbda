//! Entropic homotopy for semi-discrete optimal transport variational problems.
//!
//! A problem couples a density `mu` on a box with `N` target points. The dual
//! weights `psi(t)` follow an ODE in the regularization parameter `t in [0, 1]`
//! whose endpoint solves the unregularized optimality conditions.

pub mod error;
pub mod kernel;
pub mod laguerre;
mod linalg;
pub mod model;
pub mod newton;
pub mod ode;
pub mod quadrature;
pub mod residuals;

pub use error::{Error, Result};
pub use kernel::{DualState, KernelEval};
pub use laguerre::{CellField, MeasureMode};
pub use model::{CostSpec, DensitySpec, Domain, Point, ProblemConfig, ProblemSpec, TargetSet, Variant};
pub use newton::NewtonReport;
pub use ode::{integrate_homotopy, rk3_tableau, HomotopyOptions, RkTableau, Trajectory};
pub use quadrature::{build_grid, default_resolution, QuadratureGrid};
pub use residuals::{InitialData, ResidualEval};
