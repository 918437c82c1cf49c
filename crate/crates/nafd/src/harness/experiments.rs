//! The five experiment designs, each evaluated at one sweep point.

use rand::Rng;

use super::config::{Config, ExperimentKind, PrecoderChoice, Profile};
use crate::detequiv::{de_dl_rzf, de_dl_zf, de_ul, optimal_alpha, DEResult};
use crate::downlink::{build_precoder, dl_sinr, mc_dl_sum_rate, PrecoderKind};
use crate::mc::{run_trials, McEstimate};
use crate::model::{
    correlations_from_layout, rau_positions, sample_users, ChannelSampler, CorrelationSet,
    DuplexMode, GeometryScenario, Layout, SystemConfig,
};
use crate::rng::Streams;
use crate::scheduler::{
    exhaustive_schedule, ga_schedule, iud_objective, partition_dl_rate, pool_config,
    random_schedule, GaParams, SchedulingInstance,
};
use crate::uplink::mc_rates;
use crate::{Error, Result};

// Stream labels under a sweep point.
const MC: u64 = 0;
const LAYOUT: u64 = 1;
const DRAW: u64 = 2;
// Scheduling instances are shared by every sweep point.
const INSTANCES: u64 = 0x5c4e;

/// RAU positions of one mode: `(mode, receiving, transmitting)`.
type Sites = (DuplexMode, Vec<[f64; 2]>, Vec<[f64; 2]>);

/// Relative tolerance for counting a GA result as optimal.
pub const OPTIMAL_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
    pub trials: Option<usize>,
    pub skipped: Option<usize>,
}

/// One named output of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub scenario: String,
    pub name: String,
    pub outcome: std::result::Result<Estimate, String>,
    pub alpha: Option<f64>,
}

impl Metric {
    fn de(scenario: &str, name: &str, value: f64, alpha: Option<f64>) -> Self {
        let est = Estimate {
            value,
            stderr: None,
            trials: None,
            skipped: None,
        };
        Self {
            scenario: scenario.into(),
            name: name.into(),
            outcome: Ok(est),
            alpha,
        }
    }

    fn mc(scenario: &str, name: &str, e: &McEstimate, alpha: Option<f64>) -> Self {
        let est = Estimate {
            value: e.mean,
            stderr: Some(e.stderr),
            trials: Some(e.trials),
            skipped: Some(e.skipped),
        };
        Self {
            scenario: scenario.into(),
            name: name.into(),
            outcome: Ok(est),
            alpha,
        }
    }

    pub fn failed(scenario: &str, name: &str, err: &Error) -> Self {
        Self {
            scenario: scenario.into(),
            name: name.into(),
            outcome: Err(err.to_string()),
            alpha: None,
        }
    }

    fn from_result(scenario: &str, name: &str, r: &Result<(f64, Option<f64>)>) -> Self {
        match r {
            Ok((v, alpha)) => Self::de(scenario, name, *v, *alpha),
            Err(e) => Self::failed(scenario, name, e),
        }
    }
}

/// Everything an experiment needs at one sweep point.
pub struct PointContext<'a> {
    pub config: &'a Config,
    pub sys: SystemConfig,
    pub point: usize,
    pub seed: u64,
}

impl PointContext<'_> {
    fn streams(&self) -> Streams {
        Streams::new(self.seed).child(self.point as u64)
    }

    fn trials(&self) -> usize {
        self.config.experiment.trials
    }

    fn alpha_optimal(&self) -> bool {
        self.config.system.alpha.is_optimal()
    }

    fn geometry(&self) -> Result<&GeometryScenario> {
        self.config
            .geometry
            .as_ref()
            .ok_or_else(|| Error::config("geometry", "this experiment needs a [geometry] table"))
    }

    /// Correlations for the point: fixed profiles directly, the geometry
    /// profile from one layout drawn for the point.
    fn correlation(&self) -> Result<CorrelationSet> {
        match self.config.correlation.fixed(&self.sys)? {
            Some(c) => Ok(c),
            None => {
                let scn = self.geometry()?;
                let mut rng = self.streams().child(LAYOUT).trial(0);
                let layout = crate::model::build_geometry(scn, &self.sys, &mut rng)?;
                correlations_from_layout(scn, &self.sys, &layout)
            }
        }
    }

    fn scenario(&self) -> String {
        scenario_name(self.config)
    }

    /// RZF regularization for the point and its downlink equivalent.
    fn rzf(&self, corr: &CorrelationSet) -> Result<(SystemConfig, Result<DEResult>)> {
        if self.alpha_optimal() {
            let (alpha, de) = optimal_alpha(&self.sys, corr)?;
            Ok((
                SystemConfig {
                    alpha,
                    ..self.sys.clone()
                },
                Ok(de),
            ))
        } else {
            Ok((self.sys.clone(), de_dl_rzf(&self.sys, corr)))
        }
    }
}

pub fn scenario_name(c: &Config) -> String {
    match c.correlation.profile {
        Profile::Identity => "identity".into(),
        Profile::Exponential => "exponential".into(),
        Profile::Geometry => c
            .geometry
            .as_ref()
            .map_or("geometry", |g| g.mode.name())
            .into(),
    }
}

/// `(scenario, metric)` pairs an experiment emits, in emission order.
pub fn expected_metrics(c: &Config) -> Vec<(String, String)> {
    let sc = scenario_name(c);
    let names: Vec<String> = match c.experiment.kind {
        ExperimentKind::ValidateDeDl => c
            .experiment
            .precoders
            .iter()
            .flat_map(|p| ["mc", "de"].map(|s| format!("R_dl_{}_{s}", p.name())))
            .collect(),
        ExperimentKind::ValidateDeUl => ["R_dl_rzf", "R_ul", "R_total"]
            .iter()
            .flat_map(|m| ["mc", "de"].map(|s| format!("{m}_{s}")))
            .collect(),
        ExperimentKind::ComparePrecoders => vec![
            "R_dl_rzf_mc".into(),
            "R_dl_zf_mc".into(),
            "R_dl_gap_mc".into(),
        ],
        ExperimentKind::CompareDuplex => {
            return c
                .experiment
                .modes
                .iter()
                .flat_map(|m| DUPLEX_METRICS.map(|n| (m.name().to_string(), n.to_string())))
                .collect();
        }
        ExperimentKind::ScheduleCompare => {
            let mut v: Vec<String> = SCHEDULE_METRICS.iter().map(|s| s.to_string()).collect();
            if c.scheduler.as_ref().is_some_and(|s| s.exhaustive) {
                v.extend(["IUD_opt".into(), "GA_optimal".into()]);
            }
            v
        }
    };
    names.into_iter().map(|n| (sc.clone(), n)).collect()
}

const DUPLEX_METRICS: [&str; 3] = ["SE", "R_dl", "R_ul"];
const SCHEDULE_METRICS: [&str; 4] = ["IUD_best", "IUD_random", "R_dl_ga", "R_dl_random"];

pub fn run_point(ctx: &PointContext) -> Result<Vec<Metric>> {
    match ctx.config.experiment.kind {
        ExperimentKind::ValidateDeDl => validate_de_dl(ctx),
        ExperimentKind::ValidateDeUl => validate_de_ul(ctx),
        ExperimentKind::ComparePrecoders => compare_precoders(ctx),
        ExperimentKind::CompareDuplex => compare_duplex(ctx),
        ExperimentKind::ScheduleCompare => schedule_compare(ctx),
    }
}

/// Downlink sum-rate by simulation and by its equivalent, per precoder.
fn validate_de_dl(ctx: &PointContext) -> Result<Vec<Metric>> {
    let corr = ctx.correlation()?;
    let sc = ctx.scenario();
    let streams = ctx.streams().child(MC);
    let mut out = Vec::new();
    for p in &ctx.config.experiment.precoders {
        match p {
            PrecoderChoice::Rzf => {
                let (cfg, de) = match ctx.rzf(&corr) {
                    Ok(x) => x,
                    Err(e) => {
                        out.push(Metric::failed(&sc, "R_dl_rzf_mc", &e));
                        out.push(Metric::failed(&sc, "R_dl_rzf_de", &e));
                        continue;
                    }
                };
                let a = Some(cfg.alpha);
                let mc = mc_dl_sum_rate(
                    &cfg,
                    &corr,
                    PrecoderKind::Rzf { alpha: cfg.alpha },
                    ctx.trials(),
                    &streams,
                );
                out.push(match mc {
                    Ok(e) => Metric::mc(&sc, "R_dl_rzf_mc", &e, a),
                    Err(e) => Metric::failed(&sc, "R_dl_rzf_mc", &e),
                });
                out.push(Metric::from_result(
                    &sc,
                    "R_dl_rzf_de",
                    &de.map(|d| (d.sum_rate, a)),
                ));
            }
            PrecoderChoice::Zf => {
                let mc = mc_dl_sum_rate(&ctx.sys, &corr, PrecoderKind::Zf, ctx.trials(), &streams);
                out.push(match mc {
                    Ok(e) => Metric::mc(&sc, "R_dl_zf_mc", &e, None),
                    Err(e) => Metric::failed(&sc, "R_dl_zf_mc", &e),
                });
                let de = de_dl_zf(&ctx.sys, &corr).map(|d| (d.sum_rate, None));
                out.push(Metric::from_result(&sc, "R_dl_zf_de", &de));
            }
        }
    }
    Ok(out)
}

/// Uplink, downlink (RZF) and total sum-rates by simulation and equivalent.
fn validate_de_ul(ctx: &PointContext) -> Result<Vec<Metric>> {
    let corr = ctx.correlation()?;
    let sc = ctx.scenario();
    let (cfg, de_dl) = ctx.rzf(&corr)?;
    let a = Some(cfg.alpha);
    let mc = mc_rates(
        &cfg,
        &corr,
        PrecoderKind::Rzf { alpha: cfg.alpha },
        ctx.trials(),
        &ctx.streams().child(MC),
    )?;
    let de_ul = de_ul(&cfg, &corr);
    let dl = de_dl.map(|d| d.sum_rate);
    let ul = de_ul.map(|d| d.sum_rate);
    let total = match (&dl, &ul) {
        (Ok(d), Ok(u)) => Ok((d + u, a)),
        (Err(e), _) | (_, Err(e)) => Err(Error::Parse(e.to_string())),
    };
    Ok(vec![
        Metric::mc(&sc, "R_dl_rzf_mc", &mc.dl, a),
        Metric::from_result(&sc, "R_dl_rzf_de", &dl.map(|v| (v, a))),
        Metric::mc(&sc, "R_ul_mc", &mc.ul, a),
        Metric::from_result(&sc, "R_ul_de", &ul.map(|v| (v, a))),
        Metric::mc(&sc, "R_total_mc", &mc.total, a),
        Metric::from_result(&sc, "R_total_de", &total),
    ])
}

/// RZF and ZF downlink sum-rates on the same channel draws, plus their
/// paired difference.
fn compare_precoders(ctx: &PointContext) -> Result<Vec<Metric>> {
    let corr = ctx.correlation()?;
    let sc = ctx.scenario();
    let (cfg, _) = ctx.rzf(&corr)?;
    let rzf = PrecoderKind::Rzf { alpha: cfg.alpha };
    let sampler = ChannelSampler::new(&cfg, &corr)?;
    let est = run_trials(ctx.trials(), &ctx.streams().child(MC), 3, |rng| {
        let real = sampler.sample(rng);
        let zf = match build_precoder(&real.ghat_dl, PrecoderKind::Zf, &cfg) {
            Ok(w) => dl_sinr(&real, &w, &cfg).sum_rate,
            Err(Error::IllConditioned { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let r = dl_sinr(&real, &build_precoder(&real.ghat_dl, rzf, &cfg)?, &cfg).sum_rate;
        Ok(Some(vec![r, zf, r - zf]))
    })?;
    let a = Some(cfg.alpha);
    Ok(vec![
        Metric::mc(&sc, "R_dl_rzf_mc", &est[0], a),
        Metric::mc(&sc, "R_dl_zf_mc", &est[1], None),
        Metric::mc(&sc, "R_dl_gap_mc", &est[2], a),
    ])
}

/// Total spectral efficiency of each duplexing mode over random user
/// layouts. Every mode sees the same users and the same fading draws; users
/// keep the minimum distance from the RAUs of all compared modes.
fn compare_duplex(ctx: &PointContext) -> Result<Vec<Metric>> {
    let base = ctx.geometry()?.clone();
    let modes = ctx.config.experiment.modes.clone();
    if modes.is_empty() {
        return Err(Error::config(
            "experiment.modes",
            "no duplexing mode selected",
        ));
    }
    let sys = &ctx.sys;
    let sites: Vec<Sites> = modes
        .iter()
        .map(|&m| rau_positions(&base.with_mode(m), sys.n_u, sys.n_d).map(|(rx, tx)| (m, rx, tx)))
        .collect::<Result<_>>()?;
    let keep_away: Vec<[f64; 2]> = sites
        .iter()
        .flat_map(|(_, rx, tx)| rx.iter().chain(tx).copied())
        .collect();
    let draws = ctx.streams().child(DRAW);
    let per = DUPLEX_METRICS.len() + 1;
    let est = run_trials(
        ctx.trials(),
        &ctx.streams().child(LAYOUT),
        modes.len() * per,
        |rng| {
            let users_ul = sample_users(sys.k_u, &base, &keep_away, rng)?;
            let users_dl = sample_users(sys.k_d, &base, &keep_away, rng)?;
            let fading = draws.child(rng.random());
            let mut row = Vec::with_capacity(modes.len() * per);
            for (mode, rx, tx) in &sites {
                let scn = base.with_mode(*mode);
                let layout = Layout {
                    rau_rx: rx.clone(),
                    rau_tx: tx.clone(),
                    users_ul: users_ul.clone(),
                    users_dl: users_dl.clone(),
                };
                let corr = correlations_from_layout(&scn, sys, &layout)?;
                let alpha = if ctx.alpha_optimal() {
                    optimal_alpha(sys, &corr)?.0
                } else {
                    sys.alpha
                };
                let cfg = SystemConfig {
                    alpha,
                    ..sys.clone()
                };
                let r = mc_rates(&cfg, &corr, PrecoderKind::Rzf { alpha }, 1, &fading)?;
                row.extend([r.total.mean, r.dl.mean, r.ul.mean, alpha]);
            }
            Ok(Some(row))
        },
    )?;
    let mut out = Vec::new();
    for (mi, mode) in modes.iter().enumerate() {
        let e = &est[mi * per..(mi + 1) * per];
        let alpha = Some(e[DUPLEX_METRICS.len()].mean);
        for (j, name) in DUPLEX_METRICS.iter().enumerate() {
            out.push(Metric::mc(mode.name(), name, &e[j], alpha));
        }
    }
    Ok(out)
}

/// GA scheduling against random scheduling on seeded pools. `trials` is the
/// number of pools; pools and their channels do not depend on the sweep
/// point, so points are paired.
fn schedule_compare(ctx: &PointContext) -> Result<Vec<Metric>> {
    let sched =
        ctx.config.scheduler.as_ref().ok_or_else(|| {
            Error::config("scheduler", "schedule_compare needs a [scheduler] table")
        })?;
    let mut sys = ctx.sys.clone();
    if ctx.alpha_optimal() {
        // Large-system optimum of RZF for i.i.d. channels.
        sys.alpha = sys.k_d as f64 * sys.sigma2_dl / sys.p;
    }
    let shape = sched.shape(&sys);
    shape.groups()?;
    sched.ga.validate()?;
    let fixed = match ctx.config.correlation.profile {
        Profile::Geometry => None,
        _ => ctx.config.correlation.fixed(&pool_config(&sys, &shape))?,
    };
    let scn = ctx.config.geometry.clone();
    let metrics = SCHEDULE_METRICS.len() + if sched.exhaustive { 2 } else { 0 };
    let instances = Streams::new(ctx.seed).child(INSTANCES);
    let est = run_trials(ctx.trials(), &instances, metrics, |rng| {
        let inst = match (&fixed, &scn) {
            (Some(corr), _) => SchedulingInstance::from_correlations(&sys, corr, shape, rng)?,
            (None, Some(scn)) => SchedulingInstance::from_geometry(&sys, scn, shape, rng)?,
            (None, None) => {
                return Err(Error::config(
                    "geometry",
                    "the geometry profile needs a [geometry] table",
                ))
            }
        };
        let params = GaParams {
            seed: rng.random::<u64>() ^ sched.ga.seed,
            ..sched.ga
        };
        let ga = ga_schedule(&inst, &params)?;
        let random = random_schedule(&shape, rng)?;
        let mut row = vec![
            ga.best_iud,
            iud_objective(&random, &inst)?,
            partition_dl_rate(&ga.best, &inst)?,
            partition_dl_rate(&random, &inst)?,
        ];
        if sched.exhaustive {
            let opt = exhaustive_schedule(&inst)?;
            let hit = ga.best_iud <= opt.best_iud + OPTIMAL_RTOL * opt.best_iud.abs().max(1.0);
            row.extend([opt.best_iud, if hit { 1.0 } else { 0.0 }]);
        }
        Ok(Some(row))
    })?;
    let sc = ctx.scenario();
    let a = Some(sys.alpha);
    let mut names: Vec<&str> = SCHEDULE_METRICS.to_vec();
    if sched.exhaustive {
        names.extend(["IUD_opt", "GA_optimal"]);
    }
    Ok(names
        .iter()
        .zip(&est)
        .map(|(n, e)| Metric::mc(&sc, n, e, a))
        .collect())
}
