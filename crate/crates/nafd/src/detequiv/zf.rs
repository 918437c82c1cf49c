//! Zero-forcing as the `alpha -> 0` limit of RZF.
//!
//! Writing `e_k(alpha) = alpha^{-1} eps_k + O(1)`, the rescaled resolvent
//! `alpha Phi` converges to `Psi~ = ((1/M) sum_j T_j / eps_j + I)^{-1}` and every
//! RZF ingredient has a finite limit expressed through `eps` and the
//! sensitivity `d = d eps / ds` of the system perturbed along `I`.

use nalgebra::{DMatrix, DVector};

use super::fixed_point::{FixedPointProblem, Regularizer};
use super::{DEResult, Diagnostics};
use crate::linalg::{trace_prod, CheckedLu};
use crate::model::{CorrelationSet, SystemConfig};
use crate::{CMat, Error, Result};

/// Smallest `eps_k` for which the limit is trusted.
pub const ZF_MIN_EPS: f64 = 1e-8;

pub fn de_dl_zf(cfg: &SystemConfig, corr: &CorrelationSet) -> Result<DEResult> {
    cfg.validate()?;
    corr.validate(cfg)?;
    let (m, n_d) = (cfg.m, cfg.n_d);
    let mf = m as f64;
    let active: Vec<usize> = (0..cfg.k_d)
        .filter(|&k| {
            corr.t_dl[k]
                .iter()
                .any(|t| t.iter().any(|z| z.norm_sqr() > 0.0))
        })
        .collect();
    let mut gamma = vec![0.0; cfg.k_d];
    if active.is_empty() {
        return Ok(DEResult::new(gamma, Diagnostics::default()));
    }
    if active.len() >= m * n_d {
        return Err(Error::Regime { min_eps: 0.0 });
    }
    let t: Vec<Vec<CMat>> = active.iter().map(|&k| corr.t_dl[k].clone()).collect();
    let ka = t.len();
    let ones = vec![1.0; ka];
    let fp = match (FixedPointProblem {
        t: &t,
        weights: &ones,
        offset: 0.0,
        reg: Regularizer::Scaled(1.0),
        m,
        n: n_d,
    })
    .solve()
    {
        Ok(fp) => fp,
        Err(Error::NoConvergence { trace, .. }) if trace.last().is_some_and(|r| *r < 1e-4) => {
            return Err(Error::Regime { min_eps: 0.0 })
        }
        Err(e) => return Err(e),
    };
    let eps: Vec<f64> = (0..ka).map(|k| fp.e_sum(k)).collect();
    let min_eps = eps.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_eps >= ZF_MIN_EPS) {
        return Err(Error::Regime { min_eps });
    }

    let s: Vec<Vec<CMat>> = t
        .iter()
        .map(|tk| (0..n_d).map(|n| &tk[n] * &fp.phi[n]).collect())
        .collect();
    // bb[k][j][n] = tr(T_kn Psi~_n T_jn Psi~_n) / M^2
    let mut bb = vec![vec![vec![0.0; n_d]; ka]; ka];
    for k in 0..ka {
        for j in k..ka {
            for n in 0..n_d {
                let v = trace_prod(&s[k][n], &s[j][n]).re / (mf * mf);
                bb[k][j][n] = v;
                bb[j][k][n] = v;
            }
        }
    }
    let bm = DMatrix::from_fn(ka, ka, |k, j| {
        bb[k][j].iter().sum::<f64>() / (eps[j] * eps[j])
    });
    let lu = CheckedLu::new(DMatrix::identity(ka, ka) - &bm, "ZF sensitivity")?;
    let (d, lin_residual) = lu.solve(&(&bm * DVector::from_element(ka, 1.0)))?;
    let wgt: Vec<f64> = (0..ka).map(|j| (1.0 + d[j]) / (eps[j] * eps[j])).collect();

    // Equivalent of tr(E_i D D^H E_i) up to the common scale.
    let rau_power = (0..n_d)
        .map(|i| {
            (0..ka)
                .map(|j| wgt[j] * trace_prod(&s[j][i], &fp.phi[i]).re / mf)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);

    for (k, &user) in active.iter().enumerate() {
        let phi: Vec<f64> = (0..n_d).map(|n| cfg.csi_dl(user, n).phi()).collect();
        let e1 = eps[k];
        let e2: f64 = (0..n_d).map(|n| phi[n] * fp.e[k][n]).sum();
        let d1 = d[k];
        let d2: f64 = (0..n_d)
            .map(|n| phi[n] * (0..ka).map(|j| wgt[j] * bb[k][j][n]).sum::<f64>())
            .sum();
        let u = d1 - 2.0 * e2 * d2 / e1 + e2 * e2 * d1 / (e1 * e1);
        let extra: f64 = corr.t_uu[user]
            .iter()
            .zip(&cfg.p_ul)
            .map(|(t, p)| t * p)
            .sum();
        let v = (extra + cfg.sigma2_dl) / (mf * cfg.p) * rau_power;
        gamma[user] = if e2 > 0.0 {
            (e2 / e1).powi(2) / (u + v)
        } else {
            0.0
        };
    }
    let diagnostics = Diagnostics {
        iterations: fp.iterations,
        fp_residual: fp.residual,
        lin_residual,
        alpha_used: 0.0,
    };
    Ok(DEResult::new(gamma, diagnostics))
}
