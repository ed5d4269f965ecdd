//! Interference, error-probability and goodput models for TDMA-scheduled
//! LiFi attocell networks on a square LED lattice.
//!
//! The usual flow is [`SystemParams`] → [`DerivedParams`] for a mounting
//! height, a [`LatticeSpec`] for the spacing and reuse factor, then
//! [`link::metrics`] for one receiver position or [`sweep::run_sweep`] for a
//! grid. [`mcsim::simulate`] is a symbol-level Monte Carlo check of the
//! analytic model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod interference;
pub mod lattice;
pub mod link;
pub mod mcsim;
pub mod params;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
pub use interference::{InterferenceMoments, MomentMethod, SeriesOrder, Truncation};
pub use lattice::{LatticeSpec, LedIndex, ReceiverPos};
pub use link::{LinkMetrics, OptResult};
pub use mcsim::{McConfig, McReport, TransmitLevel};
pub use params::{DerivedParams, SystemParams};
pub use sweep::{SweepMethod, SweepResult, SweepRow, SweepSpec};
