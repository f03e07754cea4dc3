#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod auditor;
pub mod cli;
pub mod data;
pub mod error;
pub mod fair_metric;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod optim;
pub mod pipeline;
pub mod plot;
pub mod trainer;

pub use error::{Error, Result};
