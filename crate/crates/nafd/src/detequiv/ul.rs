use super::derivative::{DerivativeSystem, RhsKind};
use super::fixed_point::{FixedPointProblem, Regularizer};
use super::residual::de_residual_covariance;
use super::{DEResult, Diagnostics};
use crate::model::{CorrelationSet, SystemConfig};
use crate::uplink::ResidualCovariance;
use crate::{Error, Result};

/// MMSE uplink SINR equivalents with the residual covariance from
/// [`de_residual_covariance`].
pub fn de_ul(cfg: &SystemConfig, corr: &CorrelationSet) -> Result<DEResult> {
    let sigma = de_residual_covariance(cfg, corr)?;
    de_ul_with_sigma(cfg, corr, &sigma)
}

/// MMSE uplink SINR equivalents for a given diagonal `Sigma`.
///
/// With `b_i = p_i e2_i / (1 + p_i e_i)` the SINR of user `k` is
///
/// ```text
/// p_k e2_k^2 / ( (1/M) sum_{i != k} p_i (X1_ik - 2 b_i X2_ik + b_i^2 X1_ik) + Y_k )
/// ```
///
/// where `X1_ik`, `X2_ik` and `Y_k` are equivalents of `(1/M) tr(T_i Q T_k Q)`,
/// its CSI-weighted variant and `(1/M) tr(T_k Q Sigma Q)`.
pub fn de_ul_with_sigma(
    cfg: &SystemConfig,
    corr: &CorrelationSet,
    sigma: &ResidualCovariance,
) -> Result<DEResult> {
    cfg.validate()?;
    corr.validate(cfg)?;
    let (m, n_u, k_u) = (cfg.m, cfg.n_u, cfg.k_u);
    if sigma.delta.len() != m * n_u {
        return Err(Error::Dimension(format!(
            "Sigma has {} entries, expected M*N_U = {}",
            sigma.delta.len(),
            m * n_u
        )));
    }
    if let Some(bad) = sigma.delta.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::config(
            format!("sigma.delta[{bad}]"),
            "residual covariance must be positive definite",
        ));
    }
    if k_u == 0 {
        return Ok(DEResult::new(Vec::new(), Diagnostics::default()));
    }
    let blocks: Vec<Vec<f64>> = sigma.delta.chunks(m).map(<[f64]>::to_vec).collect();
    let p = &cfg.p_ul;
    let fp = FixedPointProblem {
        t: &corr.t_ul,
        weights: p,
        offset: 1.0,
        reg: Regularizer::Diagonal(&blocks),
        m,
        n: n_u,
    }
    .solve()?;
    let sys = DerivativeSystem::new(&corr.t_ul, &fp, p, m)?;

    let phi: Vec<Vec<f64>> = (0..k_u)
        .map(|k| (0..n_u).map(|n| cfg.csi_ul(k, n).phi()).collect())
        .collect();
    let e1: Vec<f64> = (0..k_u).map(|k| fp.e_sum(k)).collect();
    let e2: Vec<f64> = (0..k_u)
        .map(|k| (0..n_u).map(|n| phi[k][n] * fp.e[k][n]).sum())
        .collect();
    let b: Vec<f64> = (0..k_u)
        .map(|i| p[i] * e2[i] / (1.0 + p[i] * e1[i]))
        .collect();

    let tr_sigma: Vec<Vec<f64>> = (0..k_u)
        .map(|k| (0..n_u).map(|n| sys.tr_ta_diag(k, n, &blocks[n])).collect())
        .collect();
    let c_sigma = sys.solve(
        &sys.rhs(
            &tr_sigma
                .iter()
                .map(|r| r.iter().sum())
                .collect::<Vec<f64>>(),
        ),
        RhsKind::GammaUlSigma,
    )?;
    let mut lin_residual = c_sigma.residual;

    let mut gamma = vec![0.0; k_u];
    for k in 0..k_u {
        if p[k] == 0.0 || e2[k] <= 0.0 {
            continue;
        }
        let y = sys.quad(k, &tr_sigma[k], None, &c_sigma);
        // Perturbation A = T_k: tr(T_i Phi T_k Phi) is already tabulated.
        let tr_k: Vec<Vec<f64>> = (0..k_u)
            .map(|i| (0..n_u).map(|n| sys.tr_tt(i, k, n)).collect())
            .collect();
        let c = sys.solve(
            &sys.rhs(&tr_k.iter().map(|r| r.iter().sum()).collect::<Vec<f64>>()),
            RhsKind::GammaUlK(k),
        )?;
        lin_residual = lin_residual.max(c.residual);
        let inter: f64 = (0..k_u)
            .filter(|&i| i != k && p[i] > 0.0)
            .map(|i| {
                let x1 = sys.quad(i, &tr_k[i], None, &c);
                let x2 = sys.quad(i, &tr_k[i], Some(&phi[i]), &c);
                p[i] * (x1 - 2.0 * b[i] * x2 + b[i] * b[i] * x1)
            })
            .sum::<f64>()
            / m as f64;
        gamma[k] = p[k] * e2[k] * e2[k] / (inter + y);
    }
    let diagnostics = Diagnostics {
        iterations: fp.iterations,
        fp_residual: fp.residual,
        lin_residual,
        alpha_used: cfg.alpha,
    };
    Ok(DEResult::new(gamma, diagnostics))
}
