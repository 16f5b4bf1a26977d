//! Pseudospectral simulation of the one-dimensional Dirac–Klein–Gordon system
//!
//! ```text
//! i(u_t + u_x) = M v - φ v
//! i(v_t - v_x) = M u - φ u
//! φ_tt - φ_xx + m² φ = 2 Re(u v̄)
//! ```
//!
//! on a periodic box, together with the I-method apparatus built around it:
//!
//! - [`spectral`]: grids, FFT-backed fields, Fourier multipliers, the smoothing
//!   symbol `q`, Sobolev norms and rough random data.
//! - [`dkg`]: exact free propagators, the exponential midpoint integrator, the
//!   homogeneous/inhomogeneous splitting of `φ` and free-wave cascades.
//! - [`imethod`]: modified charge, the commutator `Q_I` and the
//!   almost-conservation ledger.
//! - [`bourgain`]: discrete space-time norms and bilinear estimate probes.
//! - [`scheduler`]: the slab-by-slab induction calculator for global
//!   well-posedness bookkeeping.

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bourgain;
pub mod dkg;
pub mod error;
pub mod imethod;
pub mod scheduler;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
