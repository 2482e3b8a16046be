//! Singular fast diffusion `u_t = Δ(u^m)` on the punctured space, solved in
//! radial form, with comparison-function checks and the end geometry of the
//! conformal metric `u^{4/(n+2)} |dx|²` at the critical exponent.

pub mod comparison;
pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod io;
pub mod params;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{RadialField, RadialGrid};
pub use params::{critical_exponent, FlowParams, RegularizationConfig};
pub use solver::{solve, solve_regularized, SolverConfig, Trajectory};
