//! Pool-based active learning with randomised exploration whose rate is
//! tuned online by exponentiated gradient.
//!
//! The crate is organised bottom up: [`data_pool`] holds datasets, the
//! labelled/unlabelled partition and the simulated oracle; [`model`] is a
//! linear softmax classifier; [`strategies`] are the base query rules;
//! [`reward`] scores how far a new label moved the model; [`explore`] wraps a
//! base rule with random exploration; [`eg_meta`] picks the exploration
//! parameter per step; [`harness`] runs budgeted experiments and writes
//! result files.

pub mod cli;
pub mod data_pool;
pub mod eg_meta;
pub mod error;
pub mod explore;
pub mod harness;
pub mod model;
pub mod par;
pub mod reward;
pub mod seeds;
pub mod selftest;
pub mod strategies;

pub use error::{Error, Result};
