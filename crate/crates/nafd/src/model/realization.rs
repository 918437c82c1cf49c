use rand::Rng;
use rand_distr::StandardNormal;

use super::{CorrelationSet, CsiQuality, SystemConfig};
use crate::linalg::herm_sqrt;
use crate::{CMat, Result, C64};

/// One block-fading draw: true channels and the CPU's estimates of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `(M N_U) x K_U`
    pub g_ul: CMat,
    /// `(M N_D) x K_D`
    pub g_dl: CMat,
    /// `(M N_U) x (M N_D)`, column `j` is transmit antenna `j`.
    pub g_i: CMat,
    /// `K_D x K_U` uplink-user to downlink-user scalars.
    pub u: CMat,
    pub ghat_ul: CMat,
    pub ghat_dl: CMat,
    pub ghat_i: CMat,
}

/// Precomputed square roots and CSI scalars for repeated sampling.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    m: usize,
    sqrt_ul: Vec<Vec<CMat>>,
    sqrt_dl: Vec<Vec<CMat>>,
    sqrt_i: Vec<Vec<CMat>>,
    sqrt_uu: Vec<Vec<f64>>,
    csi_ul: Vec<Vec<CsiQuality>>,
    csi_dl: Vec<Vec<CsiQuality>>,
    csi_i: Vec<Vec<CsiQuality>>,
}

fn sqrt_blocks(t: &[Vec<CMat>]) -> Vec<Vec<CMat>> {
    t.iter()
        .map(|row| row.iter().map(herm_sqrt).collect())
        .collect()
}

fn csi_grid(g: &[Vec<f64>]) -> Result<Vec<Vec<CsiQuality>>> {
    g.iter()
        .map(|row| row.iter().map(|&t| CsiQuality::from_tau2(t)).collect())
        .collect()
}

fn cn<R: Rng + ?Sized>(rng: &mut R, s: f64) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

impl ChannelSampler {
    pub fn new(cfg: &SystemConfig, corr: &CorrelationSet) -> Result<Self> {
        cfg.validate()?;
        corr.validate(cfg)?;
        Ok(Self {
            m: cfg.m,
            sqrt_ul: sqrt_blocks(&corr.t_ul),
            sqrt_dl: sqrt_blocks(&corr.t_dl),
            sqrt_i: sqrt_blocks(&corr.t_i),
            sqrt_uu: corr
                .t_uu
                .iter()
                .map(|r| r.iter().map(|t| t.sqrt()).collect())
                .collect(),
            csi_ul: csi_grid(&cfg.tau2_ul)?,
            csi_dl: csi_grid(&cfg.tau2_dl)?,
            csi_i: csi_grid(&cfg.tau2_i)?,
        })
    }

    /// Draws every column `a` as `T_a^{1/2} h` blockwise with `h ~ CN(0, I/M)`
    /// and its estimate `T_a^{1/2} (phi h + tau z)` from the same `h`.
    fn link<R: Rng + ?Sized>(
        &self,
        sqrt: &[Vec<CMat>],
        csi: &[Vec<CsiQuality>],
        rng: &mut R,
    ) -> (CMat, CMat) {
        let m = self.m;
        let cols = sqrt.len();
        let blocks = sqrt.first().map_or(0, |r| r.len());
        let s = (0.5 / m as f64).sqrt();
        let mut g = CMat::zeros(m * blocks, cols);
        let mut gh = CMat::zeros(m * blocks, cols);
        let mut h = vec![C64::new(0.0, 0.0); m * blocks];
        let mut z = vec![C64::new(0.0, 0.0); m * blocks];
        for a in 0..cols {
            h.iter_mut().for_each(|x| *x = cn(rng, s));
            z.iter_mut().for_each(|x| *x = cn(rng, s));
            for n in 0..blocks {
                let q = &csi[a][n];
                let (phi, tau) = (q.phi(), q.tau());
                let root = &sqrt[a][n];
                for r in 0..m {
                    let (mut acc, mut acc_hat) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                    for c in 0..m {
                        let t = root[(r, c)];
                        let hv = h[n * m + c];
                        acc += t * hv;
                        acc_hat += t * (hv * phi + z[n * m + c] * tau);
                    }
                    g[(n * m + r, a)] = acc;
                    gh[(n * m + r, a)] = acc_hat;
                }
            }
        }
        (g, gh)
    }

    pub fn sample_dl<R: Rng + ?Sized>(&self, rng: &mut R) -> (CMat, CMat) {
        self.link(&self.sqrt_dl, &self.csi_dl, rng)
    }

    pub fn sample_ul<R: Rng + ?Sized>(&self, rng: &mut R) -> (CMat, CMat) {
        self.link(&self.sqrt_ul, &self.csi_ul, rng)
    }

    pub fn sample_interference<R: Rng + ?Sized>(&self, rng: &mut R) -> (CMat, CMat) {
        self.link(&self.sqrt_i, &self.csi_i, rng)
    }

    /// Unit-variance scalar fading scaled by `sqrt(T_uu)`.
    pub fn sample_cross<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        let k_d = self.sqrt_uu.len();
        let k_u = self.sqrt_uu.first().map_or(0, |r| r.len());
        let s = 0.5f64.sqrt();
        CMat::from_fn(k_d, k_u, |k, i| cn(rng, s) * self.sqrt_uu[k][i])
    }

    /// Full realization, drawn in the fixed order dl, ul, interference, cross.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let (g_dl, ghat_dl) = self.sample_dl(rng);
        let (g_ul, ghat_ul) = self.sample_ul(rng);
        let (g_i, ghat_i) = self.sample_interference(rng);
        let u = self.sample_cross(rng);
        ChannelRealization {
            g_ul,
            g_dl,
            g_i,
            u,
            ghat_ul,
            ghat_dl,
            ghat_i,
        }
    }
}

pub fn sample_realization<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    corr: &CorrelationSet,
    rng: &mut R,
) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(cfg, corr)?.sample(rng))
}
