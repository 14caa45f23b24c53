//! Periodic grids and grid functions, spectral convolution, centred
//! differences and the quadrature norms used throughout the crate.

mod field;
mod grid;
pub mod io;
mod ops;
mod series;
pub mod spectral;

pub use field::{Field, Layout};
pub use grid::Grid;
pub use ops::{gradient, inner_product, norm_l1, norm_l2, norm_linf, norm_w11, periodic_convolve};
pub use series::{norm_l2_spacetime, SpaceTimeSeries};
