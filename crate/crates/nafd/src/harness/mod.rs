//! Experiment orchestration: configuration files, sweeps, seeded execution
//! and result tables.
//!
//! A run expands the sweep into points, evaluates each point independently
//! (trial `t` of point `p` draws from `stream(seed, [p, label, t])`), turns
//! every metric into a [`ResultRow`] and emits the sorted rows as CSV or
//! JSON. A failing point produces rows marked `failed` and leaves the other
//! points untouched.

mod config;
mod experiments;
mod output;
mod sweep;

pub use config::{
    AlphaName, AlphaSpec, Config, CorrelationSection, Emit, ExperimentKind, ExperimentSection,
    ExperimentSpec, Grid, PerUser, PrecoderChoice, Profile, SchedulerSection, SystemSection,
};
pub use experiments::{
    expected_metrics, run_point, scenario_name, Estimate, Metric, PointContext, OPTIMAL_RTOL,
};
pub use output::{render, sort_rows, write_atomic, ResultRow};
pub use sweep::{apply_point, describe_point, Axis, Point, Sweep, SweepAxis};

use crate::Result;

/// Rows of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ResultRow>,
}

impl Report {
    /// Number of sweep points with at least one failed metric.
    pub fn failed_points(&self) -> usize {
        let mut pts: Vec<usize> = self
            .rows
            .iter()
            .filter(|r| r.failed())
            .map(|r| r.point)
            .collect();
        pts.dedup();
        pts.len()
    }

    /// Value of `metric` for `scenario` at `point`, if it succeeded.
    pub fn value(&self, point: usize, scenario: &str, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.point == point && r.scenario == scenario && r.metric == metric && !r.failed()
        })
    }

    pub fn render(&self, emit: Emit) -> Result<Vec<u8>> {
        render(&self.rows, emit)
    }
}

fn clone_err(e: &crate::Error) -> crate::Error {
    match e {
        crate::Error::Config { path, msg } => crate::Error::Config {
            path: path.clone(),
            msg: msg.clone(),
        },
        other => crate::Error::Parse(other.to_string()),
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// The configuration as JSON, minus settings that cannot change any value
/// (output path, worker count, emit format).
fn fingerprint(config: &Config) -> String {
    let mut c = config.clone();
    c.experiment.out = None;
    c.experiment.workers = 0;
    c.experiment.emit = Emit::Csv;
    serde_json::to_string(&c).unwrap_or_default()
}

fn rows_for_point(config: &Config, point: usize, coords: &Point) -> Vec<ResultRow> {
    let sweep = describe_point(coords);
    let seed = config.experiment.seed;
    let point_cfg = apply_point(config, coords);
    let cfg_for_rows = point_cfg.as_ref().unwrap_or(config);
    let metrics = point_cfg.as_ref().map_err(clone_err).and_then(|c| {
        let sys = c.system.resolve()?;
        run_point(&PointContext {
            config: c,
            sys,
            point,
            seed,
        })
    });
    let metrics = match metrics {
        Ok(m) => m,
        Err(e) => expected_metrics(cfg_for_rows)
            .iter()
            .map(|(s, n)| Metric::failed(s, n, &e))
            .collect(),
    };

    let s = &cfg_for_rows.system;
    let fingerprint = fingerprint(cfg_for_rows);
    let snr_dl = s.snr_dl_db.unwrap_or_else(|| db(s.p / s.sigma2_dl));
    let snr_ul = s.snr_ul_db.unwrap_or_else(|| match &s.p_ul {
        PerUser::Scalar(v) => db(v / s.sigma2_ul),
        PerUser::List(v) => db(v.first().copied().unwrap_or(0.0) / s.sigma2_ul),
    });
    let correlation = match cfg_for_rows.correlation.profile {
        Profile::Exponential => format!("exponential({})", cfg_for_rows.correlation.rho),
        Profile::Geometry => {
            let g = cfg_for_rows.geometry.as_ref();
            format!(
                "geometry(c_r={},eta={})",
                g.map_or(f64::NAN, |g| g.c_r),
                g.map_or(f64::NAN, |g| g.eta)
            )
        }
        Profile::Identity => "identity".into(),
    };
    metrics
        .into_iter()
        .map(|m| {
            let (est, status) = match m.outcome {
                Ok(e) => (Some(e), "ok".to_string()),
                Err(msg) => (None, format!("failed: {msg}")),
            };
            ResultRow {
                experiment: config.experiment.kind.name().into(),
                point,
                sweep: sweep.clone(),
                scenario: m.scenario,
                metric: m.name,
                value: est.as_ref().map(|e| e.value),
                stderr: est.as_ref().and_then(|e| e.stderr),
                trials: est.as_ref().and_then(|e| e.trials),
                skipped: est.as_ref().and_then(|e| e.skipped),
                seed,
                status,
                alpha_used: m.alpha,
                m: s.m,
                n_u: s.n_u,
                n_d: s.n_d,
                k_u: s.k_u,
                k_d: s.k_d,
                snr_dl_db: snr_dl,
                snr_ul_db: snr_ul,
                tau2_ul: s.tau2_ul.describe(),
                tau2_dl: s.tau2_dl.describe(),
                tau2_i: s.tau2_i.describe(),
                correlation: correlation.clone(),
                config: fingerprint.clone(),
            }
        })
        .collect()
}

/// Runs every sweep point of `spec`. Output does not depend on the worker count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    let points = spec
        .sweep
        .as_ref()
        .map_or_else(|| vec![Vec::new()], Sweep::points);
    let eval = |(i, p): (usize, &Point)| rows_for_point(&spec.config, i, p);

    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<ResultRow>> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.config.experiment.workers)
            .build()
            .map_err(|e| crate::Error::config("experiment.workers", e.to_string()))?;
        pool.install(|| points.par_iter().enumerate().map(eval).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<ResultRow>> = points.iter().enumerate().map(eval).collect();

    let mut rows: Vec<ResultRow> = nested.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(Report { rows })
}

/// Runs `spec` and writes the table to `experiment.out` when set.
pub fn execute(spec: &ExperimentSpec) -> Result<Report> {
    let report = run_experiment(spec)?;
    if let Some(path) = &spec.config.experiment.out {
        write_atomic(path, &report.render(spec.config.experiment.emit)?)?;
    }
    Ok(report)
}
