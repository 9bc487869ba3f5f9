pub mod bench;
pub mod error;
pub mod geometry;
pub mod io;
pub mod labelgen;
pub mod loss;
pub mod proposal;
pub mod raster;
pub mod roi;

pub use error::{Error, Result};
