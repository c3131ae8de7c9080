//! Statistical analysis of two-party, two-setting, two-outcome Bell-test
//! count data.
//!
//! The crate covers the whole pipeline from sixteen raw counts to p-values:
//!
//! * [`data`]: count tables, the six embedded experiments, correlations,
//!   one-sided CHSH values and canonical relabelling.
//! * [`gls`]: multinomial covariance, naive and variance-optimal estimates
//!   of CHSH `S` and Eberhard `J`, projection onto the no-signalling
//!   subspace.
//! * [`mle`]: multinomial maximum likelihood under no-signalling and on the
//!   local-realism boundary, and the boundary Wilks test.
//! * [`game`]: the Bell-game win count and its exact binomial tail.
//! * [`dist`]: tail probabilities carried in log domain.
//!
//! Everything is `no_std` with `alloc`; IO and formats live in the
//! `bellstat` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod data;
pub mod dist;
mod error;
pub mod game;
pub mod gls;
pub mod linalg;
pub mod mle;

pub use data::{
    BellDataset, CanonicalTransform, Correlations, CountTable, FlatView, OutcomeLabels, SettingPair,
    Sign, SignVector, SETTING_PAIRS,
};
pub use dist::TailProb;
pub use error::{Error, Result};
pub use game::GameResult;
pub use gls::{Estimate, FunctionalKind, LinearFunctional, Method, Projection};
pub use mle::{FitOptions, LogLik, MleFit, Model, NsParams, OneStep, WilksResult};
