//! Approximate drift-plus-penalty control with delayed, error-prone
//! detection of a non-stationary state law.
//!
//! - [`prob`]: finite distributions, product state spaces, covering sets and
//!   schedules.
//! - [`decision`]: pure strategies and cost tables.
//! - [`lp`]: the dense simplex oracle and the approximation-gap check.
//! - [`sim`]: the controller, traces and seeded ensembles.
//! - [`bounds`]: closed-form guarantees.
//! - [`empirics`]: estimators run on simulated ensembles.
//! - [`config`], [`preset`], [`format`], [`pipeline`]: experiment plumbing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod decision;
pub mod empirics;
pub mod error;
pub mod format;
pub mod lp;
pub mod pipeline;
pub mod preset;
pub mod prob;
pub mod sim;
