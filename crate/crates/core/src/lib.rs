#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolve;
pub mod export;
pub mod geometry;
pub mod kinematics;
pub mod objectives;
pub mod online;
pub mod planner;
pub mod posedesign;
pub mod rng;
pub mod run;
pub mod scenario;
pub mod trajectory;
pub mod viapose;

pub use error::{Error, Result};
