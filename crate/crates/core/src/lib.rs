//! # lattice-precode
//!
//! Link-level simulation library for multi-user MIMO downlink precoding.
//! A base station with N antennas serves N single-antenna users; the
//! transmitter perturbs the data vector by an integer lattice offset so the
//! channel-inverted signal needs less power, and the receivers undo the
//! perturbation with a modulo operation.
//!
//! The crate provides:
//!
//! - [`linalg`] — small dense matrix kernels (Householder QR, triangular
//!   inversion, regularized pseudo-inverse, Jacobi singular values),
//! - [`channel`] — Rayleigh flat fading, the real-valued lattice
//!   decomposition, transmitter CSI error injection, receiver noise,
//! - [`modem`] — QPSK mapping in the real lattice domain, the perturbation
//!   modulus tau, and the receiver-side modulo reduction,
//! - [`encoders`] — the precoder family: linear ZF/MMSE, THP, exhaustive
//!   oracle, sphere encoder, QRD-M encoder, and the fixed-complexity sphere
//!   encoder (FSE), all instrumented with visited-node and arithmetic
//!   operation counts,
//! - [`complexity`] — closed-form complexity formulas and the imperfect-CSI
//!   perturbation bound,
//! - [`sim`] / [`report`] — the Monte Carlo BER harness and CSV/JSON output.
//!
//! Everything is deterministic given explicit seeds; no global RNG state.

pub mod channel;
pub mod complexity;
pub mod encoders;
pub mod error;
pub mod linalg;
pub mod modem;
pub mod report;
pub mod sim;

pub use error::Error;
pub use linalg::{ComplexMatrix, QrFactors, RealMatrix};
