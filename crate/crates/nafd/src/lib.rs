//! Simulation and deterministic-equivalent analysis of network-assisted
//! full-duplex (NAFD) cell-free massive MIMO.
//!
//! The crate has two halves that check each other. The Monte-Carlo side draws
//! block-fading channels with imperfect CSI, builds RZF/ZF precoders under a
//! per-RAU power constraint, cancels the downlink-to-uplink interference at the
//! CPU and evaluates instantaneous SINRs. The analytic side solves the
//! large-system fixed points and linear systems that give closed-form
//! approximations of the same ergodic rates.
//!
//! ```
//! use nafd::model::{CorrelationSet, SystemConfig};
//! use nafd::detequiv;
//!
//! let cfg = SystemConfig::symmetric(4, 2, 2, 4, 4).with_snr_db(5.0, -10.0).with_alpha(0.5);
//! let corr = CorrelationSet::identity(&cfg);
//! let de = detequiv::de_dl_rzf(&cfg, &corr).unwrap();
//! assert!(de.sum_rate > 0.0);
//! ```

// Input checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detequiv;
pub mod downlink;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod rng;
pub mod scheduler;
pub mod uplink;

pub use error::{Error, Result};

/// Complex double used for every channel quantity.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
