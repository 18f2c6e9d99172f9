pub mod batch;
pub mod dilations;
pub mod error;
pub mod fixtures;
pub mod models;
pub mod numerics;
pub mod random;
pub mod representations;
pub mod schmidt_support;
pub mod special;

pub use error::{Error, NotDilatable, Result};
pub use numerics::{CMatrix, CVector, Side, Tolerance};
