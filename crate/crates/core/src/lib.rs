//! Uplink power control in a two-tier network made of one macrocell and `N`
//! underlaid femtocells.
//!
//! The crate covers the whole pipeline: layouts ([`geometry`]), path-loss gains
//! and link budgets ([`channel`]), Perron-root feasibility and centralized
//! power allocation ([`feasibility`]), per-tier SINR frontiers ([`pareto`]),
//! the utility-based distributed SINR adaptation ([`game`]), cellular
//! link-quality protection ([`protection`]) and the Monte Carlo harnesses
//! ([`experiments`]).

pub mod channel;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod game;
pub mod geometry;
pub mod pareto;
pub mod protection;
pub mod table;

pub use error::{Error, Result};

/// Linear power ratio to decibels.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Decibels to a linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
