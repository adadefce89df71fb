//! Decentralized transmit-covariance optimization for multiuser MIMO
//! spectrum sharing with opportunistic multiuser detection.
//!
//! The crate is organized bottom-up:
//!
//! - [`matrix`]: complex matrix primitives (log-determinants, whitening,
//!   spectral factorizations) with pinned tolerance conventions.
//! - [`waterfill`]: exact water-filling and the single-user-detection best
//!   response against colored interference.
//! - [`rate`]: the piecewise opportunistic-decoding rate function, regime
//!   thresholds, and multiple-access capacity region membership.
//! - [`convex`]: projected gradient ascent for weighted log-det objectives
//!   over the trace-bounded PSD cone.
//! - [`two_user`]: the two-user best-response solver (closed forms plus a
//!   one-dimensional dual bisection).
//! - [`multi_user`]: decodable-set computation, the K-user best response via
//!   an ellipsoid method on the dual simplex, and decode-order extraction.
//! - [`sim`]: reproducible Monte-Carlo harness (channel draws, round-robin
//!   protocol, scenario presets, CSV rendering).
//! - [`io`]: serde-friendly instance and report types used by the CLI.
//!
//! All rates are in nats unless a rendering step explicitly converts to bits.

pub mod convex;
pub mod error;
pub mod io;
pub mod matrix;
pub mod multi_user;
pub mod rate;
pub mod selftest;
mod sets;
pub mod sim;
pub mod two_user;
pub mod waterfill;

pub use error::{Error, Result};
