//! Lower bounds on the risk-sensitive estimation cost
//! `ln E exp{alpha (estimate - theta)^2}`, their critical risk factors, and
//! numerical checks of the bounds against simulated and exact costs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod bound;
pub mod delay_design;
pub mod divergences;
pub mod error;
pub mod grid;
pub mod nonbayes;
pub mod optimize;
pub mod phase;
pub mod verify;

pub use bound::{BoundStatus, BoundValue, Diagnostics};
pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
