//! RZF and ZF precoding under a per-RAU power budget, downlink SINRs and
//! Monte-Carlo downlink sum-rates.

use serde::{Deserialize, Serialize};

use crate::mc::{run_trials, McEstimate};
use crate::model::{ChannelRealization, ChannelSampler, CorrelationSet, SystemConfig};
use crate::rng::Streams;
use crate::{CMat, Error, Result, C64};

/// Condition-number ceiling for the ZF Gram matrix.
pub const ZF_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderKind {
    Rzf { alpha: f64 },
    Zf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    /// `(M N_D) x K_D`, already scaled by `xi`.
    pub w: CMat,
    pub xi2: f64,
    pub kind: PrecoderKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlRates {
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
}

impl DlRates {
    pub fn from_sinr(sinr: Vec<f64>) -> Self {
        let sum_rate = sinr.iter().map(|g| (1.0 + g).log2()).sum();
        Self { sinr, sum_rate }
    }
}

/// `tr(E_i D D^H E_i)` for every transmitting RAU `i`.
pub fn per_rau_power(d: &CMat, m: usize, n_d: usize) -> Vec<f64> {
    (0..n_d)
        .map(|i| d.rows(i * m, m).iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// `xi^2 = min_i M P / tr(E_i D D^H E_i)`; the binding RAU is the one with
/// the largest unnormalized power.
fn normalize(d: CMat, p: f64, m: usize, n_d: usize, kind: PrecoderKind) -> Result<Precoder> {
    let worst = per_rau_power(&d, m, n_d).into_iter().fold(0.0, f64::max);
    if !(worst > 0.0) || !worst.is_finite() {
        return Err(Error::Degenerate(
            "precoder direction is zero, xi is undefined".into(),
        ));
    }
    let xi2 = m as f64 * p / worst;
    Ok(Precoder {
        w: d * C64::from(xi2.sqrt()),
        xi2,
        kind,
    })
}

fn check_shape(ghat: &CMat, m: usize, n_d: usize) -> Result<()> {
    if ghat.nrows() != m * n_d {
        return Err(Error::Dimension(format!(
            "Ghat_dl has {} rows, expected M*N_D = {}",
            ghat.nrows(),
            m * n_d
        )));
    }
    Ok(())
}

/// `W = xi (Ghat Ghat^H + alpha I)^{-1} Ghat`.
pub fn rzf_precoder(ghat: &CMat, alpha: f64, p: f64, m: usize, n_d: usize) -> Result<Precoder> {
    check_shape(ghat, m, n_d)?;
    if !(alpha > 0.0) {
        return Err(Error::config(
            "alpha",
            format!("RZF needs alpha > 0, got {alpha}"),
        ));
    }
    let mut c = ghat * ghat.adjoint();
    for i in 0..c.nrows() {
        c[(i, i)] += alpha;
    }
    let chol = c
        .cholesky()
        .ok_or_else(|| Error::Degenerate("C_dl is not positive definite".into()))?;
    normalize(chol.solve(ghat), p, m, n_d, PrecoderKind::Rzf { alpha })
}

/// `W = xi Ghat (Ghat^H Ghat)^{-1}`.
pub fn zf_precoder(ghat: &CMat, p: f64, m: usize, n_d: usize) -> Result<Precoder> {
    check_shape(ghat, m, n_d)?;
    let (antennas, users) = ghat.shape();
    if users > antennas {
        return Err(Error::IllConditioned {
            users,
            antennas,
            cond: f64::INFINITY,
        });
    }
    let gram = ghat.adjoint() * ghat;
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| {
        (lo.min(l), hi.max(l))
    });
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= ZF_MAX_CONDITION) {
        return Err(Error::IllConditioned {
            users,
            antennas,
            cond,
        });
    }
    let chol = gram.cholesky().ok_or(Error::IllConditioned {
        users,
        antennas,
        cond,
    })?;
    let d = chol.solve(&ghat.adjoint()).adjoint();
    normalize(d, p, m, n_d, PrecoderKind::Zf)
}

pub fn build_precoder(ghat_dl: &CMat, kind: PrecoderKind, cfg: &SystemConfig) -> Result<Precoder> {
    match kind {
        PrecoderKind::Rzf { alpha } => rzf_precoder(ghat_dl, alpha, cfg.p, cfg.m, cfg.n_d),
        PrecoderKind::Zf => zf_precoder(ghat_dl, cfg.p, cfg.m, cfg.n_d),
    }
}

/// `sum_i p_i |u_{k,i}|^2` for every downlink user.
pub fn cross_interference(u: &CMat, p_ul: &[f64]) -> Vec<f64> {
    (0..u.nrows())
        .map(|k| (0..u.ncols()).map(|i| p_ul[i] * u[(k, i)].norm_sqr()).sum())
        .collect()
}

/// Per-user SINR from the effective channel `F = G^H W`, the uplink-to-
/// downlink interference seen by each user and the noise.
pub fn sinr_from_effective(f: &CMat, extra: &[f64], sigma2: f64) -> Vec<f64> {
    (0..f.nrows())
        .map(|k| {
            let sig = f[(k, k)].norm_sqr();
            let total: f64 = f.row(k).iter().map(|z| z.norm_sqr()).sum();
            let den = total - sig + extra[k] + sigma2;
            if sig > 0.0 {
                sig / den
            } else {
                0.0
            }
        })
        .collect()
}

/// Instantaneous SINRs with true channels in the bilinear forms.
pub fn dl_sinr(real: &ChannelRealization, precoder: &Precoder, cfg: &SystemConfig) -> DlRates {
    let f = real.g_dl.adjoint() * &precoder.w;
    let extra = cross_interference(&real.u, &cfg.p_ul);
    DlRates::from_sinr(sinr_from_effective(&f, &extra, cfg.sigma2_dl))
}

pub fn mc_dl_sum_rate(
    cfg: &SystemConfig,
    corr: &CorrelationSet,
    kind: PrecoderKind,
    trials: usize,
    streams: &Streams,
) -> Result<McEstimate> {
    let sampler = ChannelSampler::new(cfg, corr)?;
    let est = run_trials(trials, streams, 1, |rng| {
        let real = sampler.sample(rng);
        match build_precoder(&real.ghat_dl, kind, cfg) {
            Ok(w) => Ok(Some(vec![dl_sinr(&real, &w, cfg).sum_rate])),
            Err(Error::IllConditioned { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    Ok(est[0])
}
