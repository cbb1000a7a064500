//! Sensitivity model and design optimizer for a pair of vertical atom
//! interferometers separated by a long baseline and addressed by common
//! laser pulses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod golden;
pub mod io;
pub mod model;
pub mod noise;
pub mod numeric;
pub mod signal;
pub mod trajectory;

pub use error::{Error, Result};
