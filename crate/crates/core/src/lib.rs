//! Double-null foliation PDE systems on initial data sets.

pub mod cases;
pub mod elliptic;
pub mod error;
pub mod exact_slices;
pub mod identity;
pub mod initial_data;
pub mod quadrature;
pub mod spherical;
pub mod spline;
pub mod tensor;

pub use error::{Error, Result};
