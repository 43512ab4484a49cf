//! Wealth-distribution dynamics under the Yard-Sale exchange rule.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod analysis;
pub mod beta;
pub mod boltzmann;
pub mod dist;
pub mod error;
pub mod fp;
pub mod gini;
pub mod grid;
pub mod io;
pub mod lorenz;
pub mod trace;

pub use beta::{BetaDistribution, BetaKind};
pub use dist::{Moments, RateField, WealthDistribution};
pub use error::{Error, Result};
pub use grid::{Spacing, WealthGrid};
pub use lorenz::LorenzCurve;
pub use trace::{GiniRecord, GiniTrace};
