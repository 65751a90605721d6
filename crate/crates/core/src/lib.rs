pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod models;
pub mod numerics;
pub mod protocols;

pub use error::{Error, ErrorClass, Result};
