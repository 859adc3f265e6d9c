//! Deterministic simulator of an intrinsically motivated, self-modifying
//! agent loop, plus the statistical harness that verifies its stated bounds.
//!
//! The loop couples four subsystems around a tiny classification environment:
//!
//! * an **emotion potential** over a metacognitive state vector, whose clipped
//!   gradient provides the intrinsic drive signal ([`emotion`]),
//! * **meaning metrics** — mutual-information, description-length and novelty
//!   estimators that grade how much structure the agent is extracting
//!   ([`meaning`]),
//! * an itemized **reward composition** with spike, penalty, eligibility,
//!   baseline and meaning-derived channels ([`reward`]),
//! * a gated **self-modification** operator with a goal ledger and a safety
//!   monitor that audits every run against explicit invariants ([`selfmod`],
//!   [`goals`], [`safety`]).
//!
//! Everything is seed-reproducible: same seed, same platform — byte-identical
//! trace files. The [`runner`] module drives the loop, [`verify`] re-checks
//! finished traces, and the `autotelic` CLI exposes `run`, `verify`, `fig3`
//! and `sweep` subcommands.

pub mod config;
pub mod emotion;
pub mod env;
pub mod goals;
pub mod meaning;
pub mod metacognition;
pub mod plot;
pub mod reward;
pub mod rng;
pub mod runner;
pub mod safety;
pub mod selfmod;
pub mod trace;
pub mod verify;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Floor applied to every probability before a logarithm is taken.
///
/// Distributions are floored at this value and renormalized, which bounds any
/// single log-likelihood term by `ln(1/DIST_FLOOR)` in magnitude.
pub const DIST_FLOOR: f64 = 1e-9;
