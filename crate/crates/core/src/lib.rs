//! Dose-response estimation for continuous treatments under network
//! interference, using a joint propensity score.
//!
//! Each unit receives an individual treatment `Z` and is exposed to its
//! neighbors' treatments through a weighted exposure `G`. The joint score
//! factors into an individual score `φ(z; x)` and a neighborhood score
//! `λ(g; z; x)`; both enter a cubic outcome model used to impute potential
//! outcomes `Y_i(z, g)` and average them into the surface `μ(z, g)`.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line and
//! parallel drivers live in `jps-cli`.
//!
//! Identification rests on unconfoundedness of the joint treatment given
//! the covariates and on interference being limited to direct neighbors.
//! Neither is testable from data; [`balance`] checks only the balancing
//! property of the fitted scores.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod balance;
pub mod bootstrap;
pub mod dataset;
pub mod error;
pub mod jps;
pub mod linear_model;
pub mod math;
pub mod network;
pub mod special;
pub mod synth;
pub mod transforms;

pub use dataset::{NodeKey, PanelDataset};
pub use error::{Error, Result};
pub use jps::{DrfGrid, EstimatorKind, GpsFit, GridAxis, GridPolicy, JpsConfig};
pub use network::{AdjacencyView, EdgeRecord, ExposureMode};
