//! Numerical toolkit for probability densities with finite moments metrized by
//! a transport distance plus a Lebesgue distance.
//!
//! The crate is organised bottom-up:
//!
//! * [`measures`]: grid densities, weighted point clouds, closed-form fixtures
//!   and translation/dilation curves.
//! * [`transport`]: exact `W_q` for finite `q` with brute-force oracles.
//! * [`bottleneck`]: exact `W_∞` by threshold search with max-flow feasibility.
//! * [`plmetric`]: the composite metric `W_q + L^p` and metric derivatives.
//! * [`functionals`]: discrete total variation, isoperimetric and Sobolev ratios.
//! * [`mms`]: minimizing-movement scheme for the isoperimetric ratio.
//! * [`dynamics`]: continuity-equation residuals, upwind evolution, velocity
//!   reconstruction, dynamic formulation checks and characteristics.

pub mod bottleneck;
pub mod dynamics;
pub mod error;
pub mod functionals;
mod graph;
pub mod measures;
pub mod mms;
pub mod plmetric;
pub mod transport;

pub use error::{PlqpError, Result};
