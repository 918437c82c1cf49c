//! Residual DL-to-UL interference after cancellation at the CPU, MMSE
//! combining and uplink SINRs.
//!
//! The CPU knows `W` and `Ghat_I`, so it subtracts `Ghat_I W s` from the
//! received signal. What is left is `(G_I - Ghat_I) W s`. Each entry of the
//! error `G_I - Ghat_I` has variance `(1/M)((1 - phi)^2 + tau^2) T = (2/M)(1 - phi) T`;
//! the factor 2 is the sum of the `h` and `z` contributions.

use crate::downlink::{build_precoder, DlRates, Precoder, PrecoderKind};
use crate::mc::{run_trials, McEstimate};
use crate::model::{ChannelRealization, ChannelSampler, CorrelationSet, SystemConfig};
use crate::rng::Streams;
use crate::{CMat, Error, Result, C64};

/// Diagonal of `Sigma` plus the per-antenna error energies that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCovariance {
    /// `delta[n]`, `n = 0..M N_U`.
    pub delta: Vec<f64>,
    /// `a_diag[j][n]`: error energy from transmit antenna `j` at receive antenna `n`.
    pub a_diag: Vec<Vec<f64>>,
}

pub type UlRates = DlRates;

/// `a_j(n) = (2/M)(1 - phi_{I,j,r}) [T_{I,j,r}]_{mm}` for receive antenna
/// `n = r M + m`.
pub fn interference_error_diag(cfg: &SystemConfig, corr: &CorrelationSet) -> Vec<Vec<f64>> {
    let m = cfg.m;
    (0..m * cfg.n_d)
        .map(|j| {
            (0..m * cfg.n_u)
                .map(|n| {
                    let (r, mm) = (n / m, n % m);
                    let phi = cfg.csi_i(j, r).phi();
                    2.0 / m as f64 * (1.0 - phi) * corr.t_i[j][r][(mm, mm)].re
                })
                .collect()
        })
        .collect()
}

/// `delta_n = sum_j a_j(n) sum_k |W_{jk}|^2 + sigma2`.
pub fn residual_from_errors(
    a_diag: Vec<Vec<f64>>,
    w: &CMat,
    sigma2_ul: f64,
    antennas_ul: usize,
) -> ResidualCovariance {
    let row_power: Vec<f64> = (0..w.nrows())
        .map(|j| w.row(j).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let delta = (0..antennas_ul)
        .map(|n| {
            sigma2_ul
                + a_diag
                    .iter()
                    .zip(&row_power)
                    .map(|(a, pw)| a[n] * pw)
                    .sum::<f64>()
        })
        .collect();
    ResidualCovariance { delta, a_diag }
}

pub fn residual_covariance(
    corr: &CorrelationSet,
    cfg: &SystemConfig,
    precoder: &Precoder,
) -> ResidualCovariance {
    residual_from_errors(
        interference_error_diag(cfg, corr),
        &precoder.w,
        cfg.sigma2_ul,
        cfg.antennas_ul(),
    )
}

fn ul_covariance(
    ghat_ul: &CMat,
    delta: &[f64],
    p_ul: &[f64],
) -> Result<nalgebra::Cholesky<C64, nalgebra::Dyn>> {
    let scaled = CMat::from_fn(ghat_ul.nrows(), ghat_ul.ncols(), |r, c| {
        ghat_ul[(r, c)] * p_ul[c]
    });
    let mut c = scaled * ghat_ul.adjoint();
    for (n, d) in delta.iter().enumerate() {
        c[(n, n)] += *d;
    }
    c.cholesky()
        .ok_or_else(|| Error::Degenerate("C_ul is not positive definite".into()))
}

/// `R = (sum_i p_i ghat_i ghat_i^H + Sigma)^{-1} Ghat_ul`.
pub fn mmse_combiner(ghat_ul: &CMat, sigma: &ResidualCovariance, p_ul: &[f64]) -> Result<CMat> {
    if sigma.delta.len() != ghat_ul.nrows() {
        return Err(Error::Dimension(
            "Sigma and Ghat_ul disagree on M*N_U".into(),
        ));
    }
    Ok(ul_covariance(ghat_ul, &sigma.delta, p_ul)?.solve(ghat_ul))
}

/// MMSE SINRs with estimated channels in the combiner and true channels in
/// the bilinear forms.
pub fn ul_sinr(
    real: &ChannelRealization,
    sigma: &ResidualCovariance,
    p_ul: &[f64],
) -> Result<UlRates> {
    let r = mmse_combiner(&real.ghat_ul, sigma, p_ul)?;
    let f = r.adjoint() * &real.g_ul;
    let k_u = f.nrows();
    let sinr = (0..k_u)
        .map(|k| {
            let sig = p_ul[k] * f[(k, k)].norm_sqr();
            if sig <= 0.0 {
                return 0.0;
            }
            let inter: f64 = (0..k_u)
                .filter(|&i| i != k)
                .map(|i| p_ul[i] * f[(k, i)].norm_sqr())
                .sum();
            let noise: f64 = r
                .column(k)
                .iter()
                .zip(&sigma.delta)
                .map(|(z, d)| z.norm_sqr() * d)
                .sum();
            sig / (inter + noise)
        })
        .collect();
    Ok(UlRates::from_sinr(sinr))
}

/// Downlink and uplink rates of one realization with a shared precoder.
pub fn realization_rates(
    real: &ChannelRealization,
    kind: PrecoderKind,
    cfg: &SystemConfig,
    corr_a: &[Vec<f64>],
) -> Result<(DlRates, UlRates)> {
    let w = build_precoder(&real.ghat_dl, kind, cfg)?;
    let dl = crate::downlink::dl_sinr(real, &w, cfg);
    let sigma = residual_from_errors(corr_a.to_vec(), &w.w, cfg.sigma2_ul, cfg.antennas_ul());
    let ul = ul_sinr(real, &sigma, &cfg.p_ul)?;
    Ok((dl, ul))
}

/// Monte-Carlo estimates of downlink, uplink and total sum-rate from the same
/// realizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRates {
    pub dl: McEstimate,
    pub ul: McEstimate,
    pub total: McEstimate,
}

pub fn mc_rates(
    cfg: &SystemConfig,
    corr: &CorrelationSet,
    kind: PrecoderKind,
    trials: usize,
    streams: &Streams,
) -> Result<McRates> {
    let sampler = ChannelSampler::new(cfg, corr)?;
    let a = interference_error_diag(cfg, corr);
    let est = run_trials(trials, streams, 3, |rng| {
        let real = sampler.sample(rng);
        match realization_rates(&real, kind, cfg, &a) {
            Ok((dl, ul)) => Ok(Some(vec![
                dl.sum_rate,
                ul.sum_rate,
                dl.sum_rate + ul.sum_rate,
            ])),
            Err(Error::IllConditioned { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    Ok(McRates {
        dl: est[0],
        ul: est[1],
        total: est[2],
    })
}

pub fn mc_ul_sum_rate(
    cfg: &SystemConfig,
    corr: &CorrelationSet,
    kind: PrecoderKind,
    trials: usize,
    streams: &Streams,
) -> Result<McEstimate> {
    Ok(mc_rates(cfg, corr, kind, trials, streams)?.ul)
}

/// Sample mean of `Sigma` over `trials` downlink draws.
pub fn mc_mean_residual(
    cfg: &SystemConfig,
    corr: &CorrelationSet,
    kind: PrecoderKind,
    trials: usize,
    streams: &Streams,
) -> Result<Vec<McEstimate>> {
    let sampler = ChannelSampler::new(cfg, corr)?;
    let a = interference_error_diag(cfg, corr);
    run_trials(trials, streams, cfg.antennas_ul(), |rng| {
        let (_, ghat) = sampler.sample_dl(rng);
        match build_precoder(&ghat, kind, cfg) {
            Ok(w) => Ok(Some(
                residual_from_errors(a.clone(), &w.w, cfg.sigma2_ul, cfg.antennas_ul()).delta,
            )),
            Err(Error::IllConditioned { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> CMat {
        CMat::from_element(1, 1, C64::from(x))
    }

    #[test]
    fn single_antenna_error_energy() {
        let cfg = SystemConfig::symmetric(1, 1, 1, 1, 1).with_tau2_i(0.1);
        let corr = CorrelationSet::identity(&cfg);
        let a = interference_error_diag(&cfg, &corr);
        assert!((a[0][0] - 2.0 * (1.0 - 0.9f64.sqrt())).abs() < 1e-12);
        assert!((a[0][0] - 0.10263).abs() < 1e-5);
    }

    #[test]
    fn scalar_mmse() {
        let sigma = ResidualCovariance {
            delta: vec![1.0],
            a_diag: vec![],
        };
        let r = mmse_combiner(&scalar(1.0), &sigma, &[1.0]).unwrap();
        assert!((r[(0, 0)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scalar_ul_sinr() {
        let real = ChannelRealization {
            g_ul: scalar(1.0),
            g_dl: scalar(1.0),
            g_i: scalar(0.0),
            u: scalar(0.0),
            ghat_ul: scalar(1.0),
            ghat_dl: scalar(1.0),
            ghat_i: scalar(0.0),
        };
        let sigma = ResidualCovariance {
            delta: vec![1.0],
            a_diag: vec![],
        };
        let r = ul_sinr(&real, &sigma, &[1.0]).unwrap();
        assert!((r.sinr[0] - 1.0).abs() < 1e-12);
    }
}
