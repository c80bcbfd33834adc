#![allow(clippy::needless_range_loop)]

pub mod battery;
pub mod catalog;
pub mod error;
pub mod exprlang;
pub mod exterior;
pub mod fields;
pub mod geometry;
pub mod holomorphic;
pub mod invariants;
pub mod jets;
pub mod linalg;
pub mod quadrature;
pub mod reeb;
pub mod scenefile;

pub use error::{Error, Result};
pub use exterior::{AltTensor, PointMetric, Scalar, Variance};
pub use jets::Jet;
