use super::dl::de_dl_rzf;
use super::DEResult;
use crate::model::{CorrelationSet, SystemConfig};
use crate::{Error, Result};

/// Search interval for `log10(alpha)`.
pub const ALPHA_LOG10_RANGE: (f64, f64) = (-6.0, 2.0);
const TOL: f64 = 1e-3;

/// Golden-section search of `log10(alpha)` maximizing the RZF equivalent
/// sum-rate. Returns the best `alpha` evaluated and its result.
///
/// Points where the fixed point does not converge (very small `alpha` with
/// widely spread path gains) count as infeasible rather than aborting.
pub fn optimal_alpha(cfg: &SystemConfig, corr: &CorrelationSet) -> Result<(f64, DEResult)> {
    let mut best: Option<(f64, DEResult)> = None;
    let mut last_err = None;
    let mut eval = |x: f64| -> Result<f64> {
        let alpha = 10f64.powf(x);
        match de_dl_rzf(
            &SystemConfig {
                alpha,
                ..cfg.clone()
            },
            corr,
        ) {
            Ok(de) => {
                let r = de.sum_rate;
                if best.as_ref().is_none_or(|b| r > b.1.sum_rate) {
                    best = Some((alpha, de));
                }
                Ok(r)
            }
            Err(e @ (Error::NoConvergence { .. } | Error::Singular { .. })) => {
                last_err = Some(e);
                Ok(f64::NEG_INFINITY)
            }
            Err(e) => Err(e),
        }
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ALPHA_LOG10_RANGE;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > TOL {
        if f1 >= f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - g * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + g * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    match best {
        Some(b) => Ok(b),
        None => Err(last_err.expect("every evaluation failed with a recorded error")),
    }
}
