#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuits;
pub mod error;
pub mod ferroelectric;
pub mod fet;
pub mod nc_device;
pub mod presets;
pub(crate) mod roots;
pub mod runner;
pub mod units;

pub use error::{Error, Result};
