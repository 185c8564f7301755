//! Decision engine and Monte Carlo simulator for Keyboard-family phase I
//! dose-finding designs: the Keyboard design, its shared-information
//! variant with kernel-weighted borrowing across doses, adaptive dose
//! insertion and time-to-event follow-up.
//!
//! Dose indices are 0-based throughout the library and 1-based in every
//! serialized form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod insertion;
pub mod kernels;
pub mod numerics;
pub mod scenarios;
pub mod service;
pub mod sim;
pub mod tite;
pub mod trial;

pub mod report;
pub mod serde_util;

pub use error::{Error, Result};
pub use kernels::{DoseGrid, DoseScale, KernelKind, KernelSpec, PseudoCounts};
pub use numerics::{BetaParams, Direction, WeightedSequence};
pub use trial::{Action, DesignConfig, TrialData, TrialState};
