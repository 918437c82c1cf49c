//! TOML configuration: one table per concern, keys mirroring the library
//! types field for field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sweep::Sweep;
use crate::model::{db_to_linear, CorrelationSet, DuplexMode, GeometryScenario, SystemConfig};
use crate::scheduler::{GaParams, PoolShape};
use crate::{Error, Result};

/// Scalar, one value per RAU, or a full `[user][rau]` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Scalar(f64),
    PerRau(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl Default for Grid {
    fn default() -> Self {
        Grid::Scalar(0.0)
    }
}

impl Grid {
    fn expand(&self, path: &str, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Grid::Scalar(v) => Ok(vec![vec![*v; cols]; rows]),
            Grid::PerRau(v) if v.len() == cols => Ok(vec![v.clone(); rows]),
            Grid::PerRau(v) => Err(Error::config(
                path,
                format!("per-RAU list has {} entries, expected {cols}", v.len()),
            )),
            Grid::Full(m) if m.len() == rows => Ok(m.clone()),
            Grid::Full(m) => Err(Error::config(
                path,
                format!("matrix has {} rows, expected {rows}", m.len()),
            )),
        }
    }

    /// Compact text for result tables.
    pub fn describe(&self) -> String {
        match self {
            Grid::Scalar(v) => v.to_string(),
            other => serde_json::to_string(other).unwrap_or_default(),
        }
    }
}

/// Scalar shared by every uplink user, or one value each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaName {
    Optimal,
}

/// A fixed regularization or `"optimal"` (maximize the equivalent sum-rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Value(f64),
    Named(AlphaName),
}

impl AlphaSpec {
    pub fn is_optimal(&self) -> bool {
        matches!(self, AlphaSpec::Named(AlphaName::Optimal))
    }

    pub fn describe(&self) -> String {
        match self {
            AlphaSpec::Value(v) => v.to_string(),
            AlphaSpec::Named(_) => "optimal".into(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn optimal() -> AlphaSpec {
    AlphaSpec::Named(AlphaName::Optimal)
}

/// `[system]`. Powers are given either directly (`p`, `p_ul`) or as SNRs
/// (`snr_dl_db = 10 log10(P / sigma2_dl)`, `snr_ul_db = 10 log10(p_ul / sigma2_ul)`);
/// an SNR wins over the matching power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub m: usize,
    pub n_u: usize,
    pub n_d: usize,
    pub k_u: usize,
    pub k_d: usize,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "default_p_ul")]
    pub p_ul: PerUser,
    #[serde(default = "one")]
    pub sigma2_ul: f64,
    #[serde(default = "one")]
    pub sigma2_dl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_dl_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_ul_db: Option<f64>,
    #[serde(default = "optimal")]
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub tau2_ul: Grid,
    #[serde(default)]
    pub tau2_dl: Grid,
    #[serde(default)]
    pub tau2_i: Grid,
}

fn default_p_ul() -> PerUser {
    PerUser::Scalar(1.0)
}

impl SystemSection {
    /// Resolved configuration; `alpha = "optimal"` leaves a placeholder of 1
    /// for the experiment to replace.
    pub fn resolve(&self) -> Result<SystemConfig> {
        let p = match self.snr_dl_db {
            Some(db) => db_to_linear(db) * self.sigma2_dl,
            None => self.p,
        };
        let p_ul = match (self.snr_ul_db, &self.p_ul) {
            (Some(db), _) => vec![db_to_linear(db) * self.sigma2_ul; self.k_u],
            (None, PerUser::Scalar(v)) => vec![*v; self.k_u],
            (None, PerUser::List(v)) => v.clone(),
        };
        let alpha = match self.alpha {
            AlphaSpec::Value(a) => a,
            AlphaSpec::Named(_) => 1.0,
        };
        let cfg = SystemConfig {
            m: self.m,
            n_u: self.n_u,
            n_d: self.n_d,
            k_u: self.k_u,
            k_d: self.k_d,
            p,
            p_ul,
            sigma2_ul: self.sigma2_ul,
            sigma2_dl: self.sigma2_dl,
            alpha,
            tau2_ul: self.tau2_ul.expand("system.tau2_ul", self.k_u, self.n_u)?,
            tau2_dl: self.tau2_dl.expand("system.tau2_dl", self.k_d, self.n_d)?,
            tau2_i: self
                .tau2_i
                .expand("system.tau2_i", self.m * self.n_d, self.n_u)?,
        };
        cfg.validate().map_err(|e| match e {
            Error::Config { path, msg } => Error::Config {
                path: format!("system.{path}"),
                msg,
            },
            other => other,
        })?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Every block `I_M`.
    Identity,
    /// `rho^|a-b|` on user links.
    Exponential,
    /// Path loss from a drawn layout (`[geometry]`).
    Geometry,
}

/// `[correlation]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    #[serde(default = "identity")]
    pub profile: Profile,
    #[serde(default = "half")]
    pub rho: f64,
}

fn identity() -> Profile {
    Profile::Identity
}
fn half() -> f64 {
    0.5
}

impl Default for CorrelationSection {
    fn default() -> Self {
        Self {
            profile: Profile::Identity,
            rho: 0.5,
        }
    }
}

impl CorrelationSection {
    /// Fixed correlations; `None` for the geometry profile, which draws them per trial.
    pub fn fixed(&self, cfg: &SystemConfig) -> Result<Option<CorrelationSet>> {
        match self.profile {
            Profile::Identity => Ok(Some(CorrelationSet::identity(cfg))),
            Profile::Exponential => {
                if !(0.0..1.0).contains(&self.rho.abs()) {
                    return Err(Error::config("correlation.rho", "need |rho| < 1"));
                }
                Ok(Some(CorrelationSet::exponential(cfg, self.rho)))
            }
            Profile::Geometry => Ok(None),
        }
    }
}

/// `[scheduler]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSection {
    pub k_u_all: usize,
    pub k_d_all: usize,
    /// Also run the exhaustive search and report how often the GA matches it.
    #[serde(default)]
    pub exhaustive: bool,
    #[serde(default)]
    pub ga: GaParams,
}

impl SchedulerSection {
    pub fn shape(&self, cfg: &SystemConfig) -> PoolShape {
        PoolShape {
            k_u_all: self.k_u_all,
            k_d_all: self.k_d_all,
            k_u: cfg.k_u,
            k_d: cfg.k_d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ValidateDeDl,
    ValidateDeUl,
    CompareDuplex,
    ComparePrecoders,
    ScheduleCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ValidateDeDl => "validate_de_dl",
            ExperimentKind::ValidateDeUl => "validate_de_ul",
            ExperimentKind::CompareDuplex => "compare_duplex",
            ExperimentKind::ComparePrecoders => "compare_precoders",
            ExperimentKind::ScheduleCompare => "schedule_compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderChoice {
    Rzf,
    Zf,
}

impl PrecoderChoice {
    pub fn name(self) -> &'static str {
        match self {
            PrecoderChoice::Rzf => "rzf",
            PrecoderChoice::Zf => "zf",
        }
    }
}

fn default_trials() -> usize {
    10_000
}
fn default_precoders() -> Vec<PrecoderChoice> {
    vec![PrecoderChoice::Rzf, PrecoderChoice::Zf]
}
fn default_modes() -> Vec<DuplexMode> {
    DuplexMode::ALL.to_vec()
}

/// `[experiment]`. For `schedule_compare`, `trials` is the number of
/// scheduling instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    #[serde(default)]
    pub emit: Emit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_precoders")]
    pub precoders: Vec<PrecoderChoice>,
    #[serde(default = "default_modes")]
    pub modes: Vec<DuplexMode>,
}

/// Whole configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemSection,
    #[serde(default)]
    pub correlation: CorrelationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerSection>,
    pub experiment: ExperimentSection,
}

/// Resolved experiment: the config plus its parsed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config: Config,
    pub sweep: Option<Sweep>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<root>".into());
            Error::config(path, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Built-in configuration reproducing one experiment design.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut system = SystemSection {
            m: 8,
            n_u: 4,
            n_d: 4,
            k_u: 32,
            k_d: 32,
            p: 1.0,
            p_ul: PerUser::Scalar(1.0),
            sigma2_ul: 1.0,
            sigma2_dl: 1.0,
            snr_dl_db: Some(5.0),
            snr_ul_db: Some(-10.0),
            alpha: optimal(),
            tau2_ul: Grid::Scalar(0.0),
            tau2_dl: Grid::Scalar(0.1),
            tau2_i: Grid::Scalar(0.1),
        };
        let mut experiment = ExperimentSection {
            kind,
            trials: default_trials(),
            seed: 0,
            sweep: None,
            emit: Emit::Csv,
            out: None,
            workers: 0,
            precoders: default_precoders(),
            modes: default_modes(),
        };
        let mut correlation = CorrelationSection::default();
        let (mut geometry, mut scheduler) = (None, None);
        match kind {
            ExperimentKind::ValidateDeDl | ExperimentKind::ComparePrecoders => {
                experiment.sweep = Some("snr_dl_db=-10:5:10".into());
            }
            ExperimentKind::ValidateDeUl => {
                system.tau2_ul = Grid::Scalar(0.1);
                experiment.sweep = Some("snr_ul_db=-10:5:10".into());
            }
            ExperimentKind::CompareDuplex => {
                system.snr_dl_db = Some(30.0);
                system.snr_ul_db = Some(30.0);
                system.tau2_dl = Grid::Scalar(0.0);
                correlation.profile = Profile::Geometry;
                geometry = Some(GeometryScenario {
                    c_r: 1e-3,
                    ..GeometryScenario::new(DuplexMode::Nafd)
                });
                experiment.trials = 500;
                experiment.sweep = Some("m=2,4,8".into());
            }
            ExperimentKind::ScheduleCompare => {
                system = SystemSection {
                    m: 1,
                    n_u: 2,
                    n_d: 2,
                    k_u: 2,
                    k_d: 2,
                    tau2_dl: Grid::Scalar(0.0),
                    alpha: AlphaSpec::Value(2.0 / db_to_linear(5.0)),
                    ..system
                };
                correlation.profile = Profile::Geometry;
                geometry = Some(GeometryScenario::new(DuplexMode::Nafd));
                scheduler = Some(SchedulerSection {
                    k_u_all: 8,
                    k_d_all: 8,
                    exhaustive: false,
                    ga: GaParams::default(),
                });
                experiment.trials = 200;
                experiment.sweep = Some("snr_ul_db=-10:10:10".into());
            }
        }
        Self {
            system,
            correlation,
            geometry,
            scheduler,
            experiment,
        }
    }

    pub fn spec(&self) -> Result<ExperimentSpec> {
        if self.experiment.trials == 0 {
            return Err(Error::config("experiment.trials", "must be at least 1"));
        }
        let sweep = self
            .experiment
            .sweep
            .as_deref()
            .map(Sweep::parse)
            .transpose()?;
        if self.correlation.profile == Profile::Geometry && self.geometry.is_none() {
            return Err(Error::config(
                "geometry",
                "the geometry profile needs a [geometry] table",
            ));
        }
        if let Some(g) = &self.geometry {
            g.validate()?;
        }
        self.system.resolve()?;
        Ok(ExperimentSpec {
            config: self.clone(),
            sweep,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for kind in [
            ExperimentKind::ValidateDeDl,
            ExperimentKind::ValidateDeUl,
            ExperimentKind::CompareDuplex,
            ExperimentKind::ComparePrecoders,
            ExperimentKind::ScheduleCompare,
        ] {
            let c = Config::preset(kind);
            let back = Config::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c);
            back.spec().unwrap();
        }
    }

    #[test]
    fn grid_forms() {
        let text = r#"
            [system]
            m = 2
            n_u = 2
            n_d = 1
            k_u = 2
            k_d = 1
            alpha = 0.5
            tau2_ul = [0.0, 0.3]
            tau2_dl = [[0.2]]
            [experiment]
            kind = "validate_de_ul"
        "#;
        let cfg = Config::from_toml(text).unwrap().system.resolve().unwrap();
        assert_eq!(cfg.tau2_ul, vec![vec![0.0, 0.3]; 2]);
        assert_eq!(cfg.tau2_dl, vec![vec![0.2]]);
        assert_eq!(cfg.alpha, 0.5);
    }

    #[test]
    fn errors_name_the_field() {
        let text = r#"
            [system]
            m = 2
            n_u = 1
            n_d = 2
            k_u = 1
            k_d = 1
            tau2_dl = [[0.2, 1.5]]
            [experiment]
            kind = "validate_de_dl"
        "#;
        let err = Config::from_toml(text)
            .unwrap()
            .system
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("system.tau2_dl[0][1]"), "{err}");
        let bad = Config::from_toml("[system]\nm = 1\nbogus = 2\n").unwrap_err();
        assert!(bad.to_string().contains("bogus"), "{bad}");
    }
}
