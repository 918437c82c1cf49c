use super::derivative::RhsKind;
use super::dl::analyze_dl_rzf;
use crate::model::{CorrelationSet, SystemConfig};
use crate::uplink::{interference_error_diag, ResidualCovariance};
use crate::Result;

/// Equivalent of the residual interference covariance under RZF:
/// `delta_n = sum_k xi^2 udot_{A_n,k} / (1 + e_k)^2 + sigma2_ul`, where
/// `udot_{A_n,k}` is the equivalent of `(1/M) tr(T_k Q A_n Q)` and `A_n` holds
/// the error energies toward receive antenna `n`.
pub fn de_residual_covariance(
    cfg: &SystemConfig,
    corr: &CorrelationSet,
) -> Result<ResidualCovariance> {
    let a_diag = interference_error_diag(cfg, corr);
    let antennas = cfg.antennas_ul();
    if cfg.k_d == 0 || a_diag.iter().flatten().all(|&a| a == 0.0) {
        return Ok(ResidualCovariance {
            delta: vec![cfg.sigma2_ul; antennas],
            a_diag,
        });
    }
    let st = analyze_dl_rzf(cfg, corr)?;
    let (m, n_d, k_d) = (cfg.m, cfg.n_d, cfg.k_d);
    let delta = (0..antennas)
        .map(|rx| {
            let blocks: Vec<Vec<f64>> = (0..n_d)
                .map(|i| (0..m).map(|mm| a_diag[i * m + mm][rx]).collect())
                .collect();
            if blocks.iter().flatten().all(|&a| a == 0.0) {
                return Ok(cfg.sigma2_ul);
            }
            let tr_a: Vec<Vec<f64>> = (0..k_d)
                .map(|k| {
                    (0..n_d)
                        .map(|i| st.sys.tr_ta_diag(k, i, &blocks[i]))
                        .collect()
                })
                .collect();
            let gamma = st
                .sys
                .rhs(&tr_a.iter().map(|r| r.iter().sum()).collect::<Vec<f64>>());
            let c = st.sys.solve(&gamma, RhsKind::GammaA(rx))?;
            let leak: f64 = (0..k_d)
                .map(|k| st.xi2 * st.sys.quad(k, &tr_a[k], None, &c) / (1.0 + st.u1[k]).powi(2))
                .sum();
            Ok(leak + cfg.sigma2_ul)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ResidualCovariance { delta, a_diag })
}
