//! Simulation and analytics for a qubit whose frequency telegraphs between two
//! known values.
//!
//! A slow two-level-system defect switches the qubit between a high-frequency
//! mode `H` and a low-frequency mode `L` separated by `Δ_TLS`. This crate
//! models that switching as a two-state Markov jump process, evolves the
//! qubit's Bloch vector in the controller's rotating frame, and implements a
//! controller that spends one single-shot Ramsey measurement (the *syndrome*)
//! to decide which mode the qubit is in before every protected operation.
//!
//! The crate is organised bottom-up:
//!
//! * [`tls`]: the telegraph process `ξ(t)`.
//! * [`qubit`]: Bloch-vector dynamics, drive pulses, decoherence and readout.
//! * [`protocol`]: syndrome, Ramsey and X-gate cycles plus the interleaved
//!   mitigation experiment.
//! * [`clifford`] and [`rb`]: single-qubit randomized benchmarking with and
//!   without feedback.
//! * [`fit`]: weighted nonlinear least squares used by the benchmarking and
//!   fringe analyses.
//! * [`analytics`]: closed-form expressions that act as oracles for the
//!   simulator.
//! * [`rng`]: reproducible, splittable random streams.

pub mod analytics;
pub mod clifford;
mod error;
pub mod fit;
pub mod numeric;
pub mod protocol;
pub mod qubit;
pub mod rb;
pub mod rng;
pub mod tls;

pub use error::{Error, Result};
pub use qubit::{BlochState, PulseSpec, QubitParams};
pub use tls::{Mode, TelegraphParams, TlsState};
