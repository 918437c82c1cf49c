use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nafd::harness::{execute, Config, Emit, ExperimentKind};

/// Monte-Carlo and deterministic-equivalent experiments for NAFD cell-free
/// massive MIMO.
#[derive(Parser)]
#[command(name = "nafd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Downlink sum-rate: simulation against the deterministic equivalent.
    ValidateDeDl(Flags),
    /// Uplink, downlink and total sum-rate: simulation against the equivalent.
    ValidateDeUl(Flags),
    /// Spectral efficiency of NAFD, CCFD C-RAN and CCFD massive MIMO.
    CompareDuplex(Flags),
    /// RZF against ZF downlink sum-rate on shared channel draws.
    ComparePrecoders(Flags),
    /// GA scheduling against random (and optionally exhaustive) scheduling.
    ScheduleCompare(Flags),
    /// Run the experiment named in the configuration file.
    Run(Flags),
    /// Print the built-in configuration of an experiment.
    Preset {
        #[arg(value_enum)]
        kind: Kind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    ValidateDeDl,
    ValidateDeUl,
    CompareDuplex,
    ComparePrecoders,
    ScheduleCompare,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::ValidateDeDl => ExperimentKind::ValidateDeDl,
            Kind::ValidateDeUl => ExperimentKind::ValidateDeUl,
            Kind::CompareDuplex => ExperimentKind::CompareDuplex,
            Kind::ComparePrecoders => ExperimentKind::ComparePrecoders,
            Kind::ScheduleCompare => ExperimentKind::ScheduleCompare,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Flags {
    /// TOML configuration; without it the built-in preset is used.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Monte-Carlo trials per point (scheduling instances for schedule-compare).
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Output file, written atomically; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    emit: Option<EmitArg>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// `AXIS=FROM:STEP:TO` or `AXIS=v1,v2,...`; several axes joined with `;`.
    #[arg(long, value_name = "AXIS=FROM:STEP:TO")]
    sweep: Option<String>,
}

fn load(kind: Option<ExperimentKind>, f: &Flags) -> nafd::Result<Config> {
    let mut cfg = match (&f.config, kind) {
        (Some(path), _) => Config::load(path)?,
        (None, Some(k)) => Config::preset(k),
        (None, None) => return Err(nafd::Error::Parse("`run` needs --config".into())),
    };
    if let Some(k) = kind {
        cfg.experiment.kind = k;
    }
    let e = &mut cfg.experiment;
    if let Some(s) = f.seed {
        e.seed = s;
    }
    if let Some(t) = f.trials {
        e.trials = t;
    }
    if let Some(o) = &f.out {
        e.out = Some(o.clone());
    }
    if let Some(m) = f.emit {
        e.emit = match m {
            EmitArg::Csv => Emit::Csv,
            EmitArg::Json => Emit::Json,
        };
    }
    if let Some(w) = f.workers {
        e.workers = w;
    }
    if let Some(s) = &f.sweep {
        e.sweep = Some(s.clone());
    }
    Ok(cfg)
}

fn run(kind: Option<ExperimentKind>, flags: &Flags) -> nafd::Result<bool> {
    let spec = load(kind, flags)?.spec()?;
    let report = execute(&spec)?;
    if spec.config.experiment.out.is_none() {
        std::io::stdout().write_all(&report.render(spec.config.experiment.emit)?)?;
    }
    let failed = report.failed_points();
    if failed > 0 {
        for r in report.rows.iter().filter(|r| r.failed()) {
            eprintln!(
                "point {} ({}) {}/{}: {}",
                r.point, r.sweep, r.scenario, r.metric, r.status
            );
        }
        eprintln!("{failed} sweep point(s) failed");
    }
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ValidateDeDl(f) => run(Some(ExperimentKind::ValidateDeDl), f),
        Command::ValidateDeUl(f) => run(Some(ExperimentKind::ValidateDeUl), f),
        Command::CompareDuplex(f) => run(Some(ExperimentKind::CompareDuplex), f),
        Command::ComparePrecoders(f) => run(Some(ExperimentKind::ComparePrecoders), f),
        Command::ScheduleCompare(f) => run(Some(ExperimentKind::ScheduleCompare), f),
        Command::Run(f) => run(None, f),
        Command::Preset { kind } => {
            print!("{}", Config::preset((*kind).into()).to_toml());
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
