#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod contact;
pub mod dataset;
pub mod ddpm;
pub mod error;
pub mod geometry;
pub mod hand;
pub mod losses;
pub mod metrics;
pub mod object;
pub mod optim;
pub mod symmetry;
pub mod symopt;
pub mod tta;

pub use error::{Error, Result};
