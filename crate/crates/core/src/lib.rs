//! Learning rates for a two-agent teacher/student model.
//!
//! A teacher observes a hidden bit through a binary symmetric channel with
//! flip probability `p` and, at every step, sends one bit to a student over a
//! second channel with flip probability `q`. This crate computes
//!
//! * closed-form large-deviation primitives ([`ld`]),
//! * exact finite-horizon error probabilities by dynamic programming ([`walk`]),
//! * asymptotic learning rates for every strategy pairing ([`rates`]),
//! * seeded Monte Carlo estimates of the same error probabilities ([`simulate`]),
//! * the Gaussian linear-strategy variant ([`gaussian`]).
//!
//! All rates and divergences are in nats.

pub mod error;
pub mod gaussian;
pub mod ld;
pub mod optimize;
pub mod rates;
pub mod simulate;
pub mod strategy;
pub mod walk;

pub use error::{Error, Result};
pub use ld::ChannelPair;
pub use rates::{Method, RateResult};
pub use strategy::{Student, StrategyCombo, Teacher};
