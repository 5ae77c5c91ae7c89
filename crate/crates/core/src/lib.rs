// `!(x > 0.0)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exprlang;
pub mod fields;
pub mod growth;
pub mod linalg;
pub mod par;
pub mod plaplace;
pub mod quadrature;
pub mod radial;
pub mod region;
pub mod weakform;

pub use error::{Error, Result};
