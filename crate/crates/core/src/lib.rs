//! Heat kernels, Green functions and weighted `L^p` estimates for the
//! degenerate operator `Δ_x + D_yy + (c/y) D_y - b/y^2` on the half-space.

pub mod error;
pub mod grid;
pub mod halfline;
pub mod kernels;
pub mod params;
pub mod quad;
pub mod report;
pub mod sampling;
pub mod specfun;
pub mod suites;
pub mod tensor;

pub use error::{Error, Result};
