//! Horizon, efficiency and inspection geometry of closed curves around the
//! unit sphere.

// `!(x >= lo)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod horizon;
pub mod inspection;
pub mod oracle;
pub mod quadrature;
pub mod shortener;
pub mod sphere;
pub mod unfold;
pub mod vector;
pub mod verify;

pub use error::{Error, Result};
