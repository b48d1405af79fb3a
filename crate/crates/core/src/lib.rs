pub mod curves;
pub mod error;
pub mod figure;
pub mod foliation;
pub mod isogroup;
pub mod modelspace;
pub mod scenario;
pub mod shortening;

pub use error::{Error, Result};
