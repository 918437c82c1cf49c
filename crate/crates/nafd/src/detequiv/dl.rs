use super::derivative::{DerivativeSolution, DerivativeSystem, RhsKind};
use super::fixed_point::{solve_dl_fixed_point, FixedPoint};
use super::{DEResult, Diagnostics};
use crate::model::{CorrelationSet, SystemConfig};
use crate::Result;

/// Everything the RZF downlink equivalent is built from. The residual
/// covariance reuses the fixed point, the derivative system and `xi2`.
pub struct DlAnalysis {
    pub fp: FixedPoint,
    pub sys: DerivativeSystem,
    pub c_alpha: DerivativeSolution,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u1_dot: Vec<f64>,
    pub u2_dot: Vec<f64>,
    /// Per transmitting RAU, the equivalent of `tr(E_i D D^H E_i)`.
    pub rau_power: Vec<f64>,
    pub xi2: f64,
}

pub fn analyze_dl_rzf(cfg: &SystemConfig, corr: &CorrelationSet) -> Result<DlAnalysis> {
    cfg.validate()?;
    corr.validate(cfg)?;
    let (m, n_d, k_d, alpha) = (cfg.m, cfg.n_d, cfg.k_d, cfg.alpha);
    let fp = solve_dl_fixed_point(&corr.t_dl, alpha, m, n_d)?;
    let sys = DerivativeSystem::new(&corr.t_dl, &fp, &vec![1.0; k_d], m)?;

    let tr2: Vec<Vec<f64>> = (0..k_d)
        .map(|k| (0..n_d).map(|n| sys.tr_t_phi2(k, n)).collect())
        .collect();
    let gamma = sys.rhs(&tr2.iter().map(|r| r.iter().sum()).collect::<Vec<f64>>());
    let c_alpha = sys.solve(&gamma, RhsKind::GammaDl)?;

    let phi: Vec<Vec<f64>> = (0..k_d)
        .map(|k| (0..n_d).map(|n| cfg.csi_dl(k, n).phi()).collect())
        .collect();
    let u1 = (0..k_d).map(|k| fp.e_sum(k)).collect();
    let u2 = (0..k_d)
        .map(|k| (0..n_d).map(|n| phi[k][n] * fp.e[k][n]).sum())
        .collect();
    let u1_dot = (0..k_d)
        .map(|k| sys.quad(k, &tr2[k], None, &c_alpha))
        .collect();
    let u2_dot = (0..k_d)
        .map(|k| sys.quad(k, &tr2[k], Some(&phi[k]), &c_alpha))
        .collect();

    let rau_power: Vec<f64> = (0..n_d)
        .map(|i| {
            let psi = &fp.phi[i];
            let tr: f64 = (0..m).map(|r| psi[(r, r)].re).sum();
            let tr_sq = crate::linalg::trace_prod(psi, psi).re;
            let corr_term: f64 = (0..k_d)
                .map(|j| c_alpha.cdot[j][i] * sys.tr_t_phi2(j, i))
                .sum();
            tr - alpha * tr_sq + alpha * corr_term
        })
        .collect();
    let worst = rau_power.iter().copied().fold(0.0, f64::max);
    let xi2 = if worst > 0.0 {
        m as f64 * cfg.p / worst
    } else {
        0.0
    };
    Ok(DlAnalysis {
        fp,
        sys,
        c_alpha,
        u1,
        u2,
        u1_dot,
        u2_dot,
        rau_power,
        xi2,
    })
}

/// RZF downlink SINR equivalents for `cfg.alpha`.
pub fn de_dl_rzf(cfg: &SystemConfig, corr: &CorrelationSet) -> Result<DEResult> {
    let st = analyze_dl_rzf(cfg, corr)?;
    let alpha = cfg.alpha;
    let gamma = (0..cfg.k_d)
        .map(|k| {
            let (u1, u2) = (st.u1[k], st.u2[k]);
            if u2 <= 0.0 || st.xi2 <= 0.0 {
                return 0.0;
            }
            let a = u1 - alpha * st.u1_dot[k];
            let b = u2 - alpha * st.u2_dot[k];
            let u = a - 2.0 * u2 * b / (1.0 + u1) + u2 * u2 * a / (1.0 + u1).powi(2);
            let extra: f64 = corr.t_uu[k].iter().zip(&cfg.p_ul).map(|(t, p)| t * p).sum();
            let v = (extra + cfg.sigma2_dl) / st.xi2;
            u2 * u2 / ((1.0 + u1).powi(2) * (u + v))
        })
        .collect();
    let diagnostics = Diagnostics {
        iterations: st.fp.iterations,
        fp_residual: st.fp.residual,
        lin_residual: st.c_alpha.residual,
        alpha_used: alpha,
    };
    Ok(DEResult::new(gamma, diagnostics))
}
