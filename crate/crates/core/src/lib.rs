#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod kinematics;
pub mod nn;
pub mod par;
pub mod planner;
pub mod sac;
pub mod svg;
pub mod world;

pub use error::{Error, Result};
