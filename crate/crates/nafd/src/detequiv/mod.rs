//! Deterministic equivalents of the downlink and uplink SINRs.
//!
//! Every quantity here is a function of the correlation matrices and CSI
//! qualities only; no channel is ever drawn.

mod alpha;
mod derivative;
mod dl;
mod fixed_point;
mod residual;
mod ul;
mod zf;

use serde::Serialize;

pub use alpha::{optimal_alpha, ALPHA_LOG10_RANGE};
pub use derivative::{DerivativeSolution, DerivativeSystem, RhsKind};
pub use dl::{analyze_dl_rzf, de_dl_rzf, DlAnalysis};
pub use fixed_point::{
    solve_dl_fixed_point, FixedPoint, FixedPointProblem, Regularizer, FP_MAX_ITER, FP_TOL,
};
pub use residual::de_residual_covariance;
pub use ul::{de_ul, de_ul_with_sigma};
pub use zf::{de_dl_zf, ZF_MIN_EPS};

use crate::downlink::PrecoderKind;
use crate::model::{CorrelationSet, SystemConfig};
use crate::Result;

/// Downlink fixed point.
pub type DlFixedPoint = FixedPoint;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub fp_residual: f64,
    /// Largest relative residual over the linear solves.
    pub lin_residual: f64,
    /// Regularization the result was computed for (0 for ZF).
    pub alpha_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DEResult {
    pub gamma: Vec<f64>,
    pub sum_rate: f64,
    pub diagnostics: Diagnostics,
}

impl DEResult {
    pub fn new(gamma: Vec<f64>, diagnostics: Diagnostics) -> Self {
        let sum_rate = gamma.iter().map(|g| (1.0 + g).log2()).sum();
        Self {
            gamma,
            sum_rate,
            diagnostics,
        }
    }
}

/// Downlink equivalent for either precoder.
pub fn de_dl(cfg: &SystemConfig, corr: &CorrelationSet, kind: PrecoderKind) -> Result<DEResult> {
    match kind {
        PrecoderKind::Rzf { alpha } => {
            let cfg = SystemConfig {
                alpha,
                ..cfg.clone()
            };
            de_dl_rzf(&cfg, corr)
        }
        PrecoderKind::Zf => de_dl_zf(cfg, corr),
    }
}
