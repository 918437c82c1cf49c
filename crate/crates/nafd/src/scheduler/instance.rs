use std::cell::RefCell;
use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use super::partition::{Group, PoolShape, SchedulingPartition};
use crate::downlink::{build_precoder, PrecoderKind};
use crate::model::{
    build_geometry, correlations_from_layout, sample_realization, ChannelRealization,
    CorrelationSet, GeometryScenario, Layout, SystemConfig,
};
use crate::uplink::{interference_error_diag, residual_from_errors, ul_sinr};
use crate::{CMat, Error, Result};

/// Waiting users with one frozen channel draw each, so every candidate
/// partition is scored on the same channels.
#[derive(Debug, Clone)]
pub struct SchedulingInstance {
    pub shape: PoolShape,
    /// Per-group system: `k_u`, `k_d` are the group sizes.
    pub cfg: SystemConfig,
    pub layout: Option<Layout>,
    /// Channels of the whole pool.
    pub real: ChannelRealization,
    a_diag: Vec<Vec<f64>>,
}

/// Scores of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupEval {
    /// Rate-weighted uplink-to-downlink interference left after cancellation.
    pub iud: f64,
    /// Downlink sum-rate when cancellable interferers are removed.
    pub dl_rate: f64,
    /// `gamma_u[k][i]`: SINR of uplink user `i` decoded at downlink user `k`.
    pub gamma_u: Vec<Vec<f64>>,
    pub gamma_ul: Vec<f64>,
    /// `true` where the interference stays.
    pub interferes: Vec<Vec<bool>>,
}

/// System covering the whole pool; powers and CSI qualities of the first
/// user of each direction apply to every pooled user.
pub fn pool_config(cfg: &SystemConfig, shape: &PoolShape) -> SystemConfig {
    let row = |rows: &[Vec<f64>], n: usize| rows.first().cloned().unwrap_or_else(|| vec![0.0; n]);
    SystemConfig {
        k_u: shape.k_u_all,
        k_d: shape.k_d_all,
        p_ul: vec![cfg.p_ul.first().copied().unwrap_or(0.0); shape.k_u_all],
        tau2_ul: vec![row(&cfg.tau2_ul, cfg.n_u); shape.k_u_all],
        tau2_dl: vec![row(&cfg.tau2_dl, cfg.n_d); shape.k_d_all],
        ..cfg.clone()
    }
}

fn columns(a: &CMat, ids: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), ids.len(), |r, c| a[(r, ids[c])])
}

impl SchedulingInstance {
    /// Places the pool with `scn` and draws its channels. Powers and CSI
    /// qualities of the first user of each direction apply to the whole pool.
    pub fn from_geometry<R: Rng + ?Sized>(
        cfg: &SystemConfig,
        scn: &GeometryScenario,
        shape: PoolShape,
        rng: &mut R,
    ) -> Result<Self> {
        let pool = pool_config(cfg, &shape);
        let layout = build_geometry(scn, &pool, rng)?;
        let corr = correlations_from_layout(scn, &pool, &layout)?;
        let mut inst = Self::from_correlations(cfg, &corr, shape, rng)?;
        inst.layout = Some(layout);
        Ok(inst)
    }

    /// `corr` describes the whole pool.
    pub fn from_correlations<R: Rng + ?Sized>(
        cfg: &SystemConfig,
        corr: &CorrelationSet,
        shape: PoolShape,
        rng: &mut R,
    ) -> Result<Self> {
        shape.groups()?;
        if cfg.k_u != shape.k_u || cfg.k_d != shape.k_d {
            return Err(Error::config(
                "system.k_u",
                "group sizes must match the scheduler pool shape",
            ));
        }
        let pool = pool_config(cfg, &shape);
        let real = sample_realization(&pool, corr, rng)?;
        Ok(Self::from_realization(cfg, shape, real, corr))
    }

    pub fn from_realization(
        cfg: &SystemConfig,
        shape: PoolShape,
        real: ChannelRealization,
        corr: &CorrelationSet,
    ) -> Self {
        let a_diag = interference_error_diag(cfg, corr);
        Self {
            shape,
            cfg: cfg.clone(),
            layout: None,
            real,
            a_diag,
        }
    }

    /// Group scores under RZF with `cfg.alpha`.
    pub fn evaluate_group(&self, g: &Group) -> Result<GroupEval> {
        let cfg = &self.cfg;
        let r = &self.real;
        let sub = ChannelRealization {
            g_ul: columns(&r.g_ul, &g.ul),
            g_dl: columns(&r.g_dl, &g.dl),
            g_i: r.g_i.clone(),
            u: CMat::from_fn(g.dl.len(), g.ul.len(), |k, i| r.u[(g.dl[k], g.ul[i])]),
            ghat_ul: columns(&r.ghat_ul, &g.ul),
            ghat_dl: columns(&r.ghat_dl, &g.dl),
            ghat_i: r.ghat_i.clone(),
        };
        let w = build_precoder(&sub.ghat_dl, PrecoderKind::Rzf { alpha: cfg.alpha }, cfg)?;
        let sigma =
            residual_from_errors(self.a_diag.clone(), &w.w, cfg.sigma2_ul, cfg.antennas_ul());
        let gamma_ul = ul_sinr(&sub, &sigma, &cfg.p_ul)?.sinr;
        let f = sub.g_dl.adjoint() * &w.w;
        let p = &cfg.p_ul;

        let (mut iud, mut dl_rate) = (0.0, 0.0);
        let mut gamma_u = Vec::with_capacity(g.dl.len());
        let mut interferes = Vec::with_capacity(g.dl.len());
        for k in 0..g.dl.len() {
            let streams: f64 = f.row(k).iter().map(|z| z.norm_sqr()).sum();
            let cross: Vec<f64> = (0..g.ul.len())
                .map(|i| p[i] * sub.u[(k, i)].norm_sqr())
                .collect();
            let total: f64 = cross.iter().sum();
            let gk: Vec<f64> = cross
                .iter()
                .map(|c| c / (streams + total - c + cfg.sigma2_dl))
                .collect();
            let keep: Vec<bool> = gk.iter().zip(&gamma_ul).map(|(gu, gl)| gu < gl).collect();
            iud += gk
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(g, _)| (1.0 + g).log2())
                .sum::<f64>();
            let residual: f64 = cross
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(c, _)| c)
                .sum();
            let sig = f[(k, k)].norm_sqr();
            dl_rate += (1.0 + sig / (streams - sig + residual + cfg.sigma2_dl)).log2();
            gamma_u.push(gk);
            interferes.push(keep);
        }
        Ok(GroupEval {
            iud,
            dl_rate,
            gamma_u,
            gamma_ul,
            interferes,
        })
    }
}

/// Memoized group scores.
pub struct Evaluator<'a> {
    pub inst: &'a SchedulingInstance,
    cache: RefCell<HashMap<(u64, u64), (f64, f64)>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a SchedulingInstance) -> Self {
        Self {
            inst,
            cache: RefCell::new(HashMap::new()),
        }
    }

    /// `(iud, dl_rate)` of one group.
    pub fn group(&self, g: &Group) -> Result<(f64, f64)> {
        let key = g.key();
        if let Some(&v) = self.cache.borrow().get(&key) {
            return Ok(v);
        }
        let e = self.inst.evaluate_group(g)?;
        self.cache.borrow_mut().insert(key, (e.iud, e.dl_rate));
        Ok((e.iud, e.dl_rate))
    }

    /// Scores of the group with members given as bit masks.
    pub(crate) fn group_by_mask(&self, ul: u64, dl: u64) -> Result<(f64, f64)> {
        if let Some(&v) = self.cache.borrow().get(&(ul, dl)) {
            return Ok(v);
        }
        let ids = |m: u64| (0..64).filter(|b| m >> b & 1 == 1).collect::<Vec<usize>>();
        self.group(&Group {
            ul: ids(ul),
            dl: ids(dl),
        })
    }

    pub fn cached_groups(&self) -> usize {
        self.cache.borrow().len()
    }

    /// Sum over groups, in canonical group order.
    pub fn iud(&self, p: &SchedulingPartition) -> Result<f64> {
        p.groups
            .iter()
            .try_fold(0.0, |acc, g| Ok(acc + self.group(g)?.0))
    }

    /// Downlink sum-rate averaged over the `L` time slots.
    pub fn dl_rate(&self, p: &SchedulingPartition) -> Result<f64> {
        let total = p
            .groups
            .iter()
            .try_fold(0.0, |acc, g| Ok::<f64, Error>(acc + self.group(g)?.1))?;
        Ok(total / p.groups.len() as f64)
    }
}

/// Objective to minimize: total interference over all groups.
pub fn iud_objective(p: &SchedulingPartition, inst: &SchedulingInstance) -> Result<f64> {
    p.validate(&inst.shape)?;
    Evaluator::new(inst).iud(p)
}

/// Downlink sum-rate per slot under partition `p`.
pub fn partition_dl_rate(p: &SchedulingPartition, inst: &SchedulingInstance) -> Result<f64> {
    p.validate(&inst.shape)?;
    Evaluator::new(inst).dl_rate(p)
}
