mod clock;
pub mod bench;
pub mod error;
pub mod func_approx;
pub mod geometry;
pub mod mmls;
pub mod optimize;
pub mod point_cloud;
pub mod weights;

pub use error::{Error, Result};
