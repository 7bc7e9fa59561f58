//! Densities on regular grids, weighted point clouds and fixture generators.

mod atoms;
mod curves;
mod grid;
pub mod io;
mod mollify;
mod shapes;

pub use atoms::{block_atoms, coarse_atoms, dist, grid_to_atoms, DiscreteMeasure, WEIGHT_TOL};
pub use curves::{dilate_curve, shift_density, translate_curve};
pub use grid::{GridDensity, GridSpec, Point, MASS_TOL, RENORM_TOL};
pub use mollify::{mollify, Kernel, MollifierConfig};
pub use shapes::{
    component_masses, indicator_box, make_cone, make_multiball, make_ramp_ball, ramp_ball_l2,
    ramp_ball_normalizer, ramp_ball_tv, ramp_profile, MultiBall,
};
