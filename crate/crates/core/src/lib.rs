//! Inference for dynamic treatment-effect paths.
//!
//! Given jointly normal estimates `β̂ ~ N(β, V_β)` of an effect path over
//! horizons `h = 1..H`, this crate computes pointwise and sup-t bands,
//! cumulative plausible bounds, and restricted plausible bounds that stay
//! valid after data-driven selection among difference-penalty smoothers.
//! The [`simlab`] module reruns the Monte Carlo experiments used to
//! evaluate those bounds.

pub mod error;
pub mod formats;
pub mod inference;
pub mod numkit;
pub mod path_model;
pub mod selection;
pub mod simlab;

mod par;

pub use error::{Error, Result};
