//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if a criterion fails for any reason other than a known
//! regime limit (`Outcome::regime_limit`).

use std::process::ExitCode;
use std::time::Instant;

use nafd::detequiv::{
    de_dl_rzf, de_dl_zf, de_residual_covariance, optimal_alpha, solve_dl_fixed_point,
};
use nafd::downlink::{
    build_precoder, dl_sinr, per_rau_power, rzf_precoder, zf_precoder, PrecoderKind,
};
use nafd::harness::{
    run_experiment, Config, ExperimentKind, Grid, PrecoderChoice, Profile, Report,
};
use nafd::model::{sample_realization, ChannelRealization, CorrelationSet, SystemConfig};
use nafd::rng::{stream, Streams};
use nafd::uplink::{mc_mean_residual, residual_covariance};
use nafd::{CMat, C64};

const SEED: u64 = 20240601;
const TRIALS: usize = 2000;
const TOL: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
    /// The failing part has no equivalent at this system size; everything
    /// else held.
    regime_limit: bool,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
        regime_limit: false,
    }
}

fn run(cfg: &Config) -> Report {
    run_experiment(&cfg.spec().expect("valid config")).expect("experiment runs")
}

fn value(r: &Report, point: usize, scenario: &str, metric: &str) -> Option<(f64, f64)> {
    r.value(point, scenario, metric)
        .and_then(|row| Some((row.value?, row.stderr.unwrap_or(0.0))))
}

fn rel_gap(mc: f64, de: f64) -> f64 {
    (mc - de).abs() / mc.abs()
}

fn points(r: &Report) -> Vec<usize> {
    let mut p: Vec<usize> = r.rows.iter().map(|row| row.point).collect();
    p.dedup();
    p
}

fn label(r: &Report, point: usize) -> String {
    r.rows
        .iter()
        .find(|row| row.point == point)
        .map(|row| row.sweep.clone())
        .unwrap_or_default()
}

fn downlink_grid(kind: ExperimentKind) -> Config {
    let mut c = Config::preset(kind);
    c.system.snr_ul_db = Some(-10.0);
    c.system.tau2_i = Grid::Scalar(0.1);
    c.experiment.trials = TRIALS;
    c.experiment.seed = SEED;
    c.experiment.sweep = Some("tau2_dl=0,0.1;snr_dl_db=-10:5:10".into());
    c
}

fn criterion_1() -> Outcome {
    let mut c = downlink_grid(ExperimentKind::ValidateDeDl);
    c.experiment.precoders = vec![PrecoderChoice::Rzf, PrecoderChoice::Zf];
    let r = run(&c);
    let mut notes = Vec::new();
    let mut pass = true;
    let mut limit = false;
    for p in ["rzf", "zf"] {
        let (mut ok, mut worst, mut missing) = (0, 0.0f64, 0);
        let pts = points(&r);
        for &pt in &pts {
            let mc = value(&r, pt, "identity", &format!("R_dl_{p}_mc"));
            let de = value(&r, pt, "identity", &format!("R_dl_{p}_de"));
            match (mc, de) {
                (Some((mc, _)), Some((de, _))) => {
                    let g = rel_gap(mc, de);
                    worst = worst.max(g);
                    ok += usize::from(g < TOL);
                }
                _ => missing += 1,
            }
        }
        // ZF with K_D = M * N_D has no equivalent; only that is tolerated.
        limit = if p == "rzf" {
            ok == pts.len()
        } else {
            limit && missing == pts.len()
        };
        pass &= ok == pts.len();
        let name = p.to_uppercase();
        notes.push(if missing == pts.len() {
            format!(
                "{name}: no equivalent at any of {} points (K_D = M*N_D)",
                pts.len()
            )
        } else {
            format!(
                "{name}: {ok}/{} within 5% (worst {:.2}%, {missing} without equivalent)",
                pts.len(),
                100.0 * worst
            )
        });
    }
    Outcome {
        regime_limit: limit && !pass,
        ..outcome(pass, notes.join("; "))
    }
}

fn criterion_2() -> Outcome {
    let mut c = Config::preset(ExperimentKind::ValidateDeUl);
    c.system.snr_dl_db = Some(5.0);
    c.system.tau2_dl = Grid::Scalar(0.1);
    c.system.tau2_i = Grid::Scalar(0.1);
    c.experiment.trials = TRIALS;
    c.experiment.seed = SEED;
    c.experiment.sweep = Some("tau2_ul=0,0.1,0.3;snr_ul_db=-10:10:10".into());
    let ladder = run(&c);
    c.system.tau2_ul = Grid::PerRau(vec![0.0, 0.1, 0.2, 0.3]);
    c.experiment.sweep = Some("snr_ul_db=-10:10:10".into());
    let mixed = run(&c);

    let (mut ok, mut total, mut worst) = (0, 0, 0.0f64);
    for r in [&ladder, &mixed] {
        for pt in points(r) {
            total += 1;
            if let (Some((mc, _)), Some((de, _))) = (
                value(r, pt, "identity", "R_ul_mc"),
                value(r, pt, "identity", "R_ul_de"),
            ) {
                let g = rel_gap(mc, de);
                worst = worst.max(g);
                ok += usize::from(g < TOL);
            }
        }
    }
    // Ladder points are ordered tau2_ul-major, three SNRs each.
    let monotone = (0..3).all(|s| {
        let de: Vec<Option<f64>> = (0..3)
            .map(|t| value(&ladder, 3 * t + s, "identity", "R_ul_de").map(|v| v.0))
            .collect();
        de.iter().all(Option::is_some)
            && de
                .windows(2)
                .all(|w| w[1].unwrap() <= w[0].unwrap() + 1e-12)
    });
    outcome(
        ok == total && monotone,
        format!(
            "{ok}/{total} within 5% (worst {:.2}%), monotone in tau2_ul: {monotone}",
            100.0 * worst
        ),
    )
}

fn criterion_3() -> Outcome {
    let (mut ok, mut total, mut worst, mut ordered) = (0, 0, 0.0f64, true);
    for m in [4usize, 8] {
        for rho in [-10.0, 0.0, 10.0] {
            let mut totals = Vec::new();
            for ideal in [true, false] {
                let mut c = Config::preset(ExperimentKind::ValidateDeUl);
                c.system.m = m;
                c.system.k_u = 4 * m;
                c.system.k_d = 4 * m;
                c.system.snr_dl_db = Some(rho);
                c.system.snr_ul_db = Some(rho);
                let tau = if ideal { 0.0 } else { 0.1 };
                c.system.tau2_ul = Grid::Scalar(tau);
                c.system.tau2_dl = Grid::Scalar(tau);
                c.system.tau2_i = Grid::Scalar(tau);
                c.correlation.profile = if ideal {
                    Profile::Identity
                } else {
                    Profile::Exponential
                };
                c.experiment.trials = TRIALS;
                c.experiment.seed = SEED;
                c.experiment.sweep = None;
                let r = run(&c);
                let sc = if ideal { "identity" } else { "exponential" };
                total += 1;
                let mc = value(&r, 0, sc, "R_total_mc");
                let de = value(&r, 0, sc, "R_total_de");
                if let (Some((mc, _)), Some((de, _))) = (mc, de) {
                    let g = rel_gap(mc, de);
                    worst = worst.max(g);
                    ok += usize::from(g < TOL);
                    totals.push(de);
                }
            }
            ordered &= totals.len() == 2 && totals[0] >= totals[1];
        }
    }
    outcome(
        ok == total && ordered,
        format!(
            "{ok}/{total} within 5% (worst {:.2}%), ideal >= non-ideal: {ordered}",
            100.0 * worst
        ),
    )
}

fn criterion_4() -> Outcome {
    let r = run(&downlink_grid(ExperimentKind::ComparePrecoders));
    let pts = points(&r);
    let mut ordered = 0;
    let mut low_snr_z = f64::NAN;
    for &pt in &pts {
        let rzf = value(&r, pt, "identity", "R_dl_rzf_mc");
        let zf = value(&r, pt, "identity", "R_dl_zf_mc");
        if let (Some((a, _)), Some((b, _))) = (rzf, zf) {
            ordered += usize::from(a >= b);
        }
        if label(&r, pt) == "tau2_dl=0.1;snr_dl_db=-10" {
            if let Some((gap, se)) = value(&r, pt, "identity", "R_dl_gap_mc") {
                low_snr_z = gap / se;
            }
        }
    }
    outcome(
        ordered == pts.len() && low_snr_z > 3.0,
        format!("RZF >= ZF at {ordered}/{} points; gap at -10 dB, tau2_dl=0.1 is {low_snr_z:.1} standard errors", pts.len()),
    )
}

fn criterion_5() -> Outcome {
    let mut c = Config::preset(ExperimentKind::CompareDuplex);
    c.experiment.seed = SEED;
    assert!(c.experiment.trials >= 500);
    let r = run(&c);
    let mut pass = true;
    let mut notes = Vec::new();
    for pt in points(&r) {
        let se = |mode: &str| value(&r, pt, mode, "SE");
        let (Some(n), Some(c), Some(m)) = (se("nafd"), se("ccfd_cran"), se("ccfd_massive")) else {
            pass = false;
            notes.push(format!("{}: missing rows", label(&r, pt)));
            continue;
        };
        let z = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0) / (a.1.powi(2) + b.1.powi(2)).sqrt();
        let (z1, z2) = (z(n, c), z(c, m));
        pass &= z1 > 3.0 && z2 > 3.0;
        notes.push(format!(
            "{}: {:.1} > {:.1} > {:.1} (z {z1:.1}, {z2:.1})",
            label(&r, pt),
            n.0,
            c.0,
            m.0
        ));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_6() -> Outcome {
    let mut c = Config::preset(ExperimentKind::ScheduleCompare);
    c.experiment.seed = SEED;
    c.experiment.trials = 10;
    c.scheduler.as_mut().expect("scheduler table").exhaustive = true;
    let exact = run(&c);
    let mut notes = Vec::new();
    let mut pass = true;
    for pt in points(&exact) {
        let hits = value(&exact, pt, "nafd", "GA_optimal")
            .map_or(0.0, |v| v.0 * 10.0)
            .round() as usize;
        pass &= hits >= 9;
        notes.push(format!("{}: GA optimal {hits}/10", label(&exact, pt)));
    }

    c.experiment.trials = 200;
    c.scheduler.as_mut().expect("scheduler table").exhaustive = false;
    let rates = run(&c);
    for pt in points(&rates) {
        let ga = value(&rates, pt, "nafd", "R_dl_ga");
        let rnd = value(&rates, pt, "nafd", "R_dl_random");
        let ok = matches!((ga, rnd), (Some(a), Some(b)) if a.0 >= b.0);
        pass &= ok;
        notes.push(format!(
            "{}: DL rate GA {:.3} vs random {:.3}",
            label(&rates, pt),
            ga.map_or(f64::NAN, |v| v.0),
            rnd.map_or(f64::NAN, |v| v.0)
        ));
    }
    outcome(pass, notes.join("; "))
}

fn scalar(x: f64) -> CMat {
    CMat::from_element(1, 1, C64::from(x))
}

fn criterion_7() -> Outcome {
    let mut failed: Vec<&str> = Vec::new();
    let mut check = |name: &'static str, ok: bool| {
        if !ok {
            failed.push(name);
        }
    };
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol * b.abs().max(1.0);

    let rzf = rzf_precoder(&scalar(2.0), 1.0, 1.0, 1, 1).unwrap();
    check("rzf scalar xi^2", close(rzf.xi2, 6.25, 1e-12));
    let zf = zf_precoder(&scalar(2.0), 1.0, 1, 1).unwrap();
    check("zf scalar xi^2", close(zf.xi2, 4.0, 1e-12));
    let real = ChannelRealization {
        g_ul: CMat::zeros(1, 0),
        g_dl: scalar(2.0),
        g_i: scalar(0.0),
        u: CMat::zeros(1, 0),
        ghat_ul: CMat::zeros(1, 0),
        ghat_dl: scalar(2.0),
        ghat_i: scalar(0.0),
    };
    let one = SystemConfig {
        k_u: 0,
        p_ul: vec![],
        tau2_ul: vec![],
        ..SystemConfig::symmetric(1, 1, 1, 1, 1)
    };
    check(
        "scalar downlink SINR",
        close(dl_sinr(&real, &rzf, &one).sinr[0], 4.0, 1e-12),
    );

    let cfg = SystemConfig::symmetric(4, 2, 2, 4, 4)
        .with_snr_db(5.0, 0.0)
        .with_tau2_dl(0.1)
        .with_alpha(0.3);
    let corr = CorrelationSet::identity(&cfg);
    let mut rng = stream(SEED, &[7]);
    for _ in 0..20 {
        let real = sample_realization(&cfg, &corr, &mut rng).unwrap();
        let w =
            build_precoder(&real.ghat_dl, PrecoderKind::Rzf { alpha: cfg.alpha }, &cfg).unwrap();
        let pw = per_rau_power(&w.w, cfg.m, cfg.n_d);
        let max = pw.iter().cloned().fold(0.0, f64::max);
        check(
            "per-RAU power at the binding RAU",
            close(max, cfg.m as f64 * cfg.p, 1e-9),
        );

        let z = build_precoder(&real.ghat_dl, PrecoderKind::Zf, &cfg).unwrap();
        let id = CMat::identity(cfg.k_d, cfg.k_d) * C64::from(z.xi2.sqrt());
        check(
            "ZF identity",
            (real.ghat_dl.adjoint() * &z.w - id).norm() <= 1e-9 * z.xi2.sqrt(),
        );
        let tiny = build_precoder(&real.ghat_dl, PrecoderKind::Rzf { alpha: 1e-8 }, &cfg).unwrap();
        check("RZF to ZF precoder limit", (tiny.w - &z.w).norm() < 1e-4);

        let s = residual_covariance(&corr, &cfg, &w);
        check(
            "residual diagonal above noise",
            s.delta.iter().all(|&d| d >= cfg.sigma2_ul),
        );
        let clean = cfg.clone().with_tau2_i(0.0);
        let s0 = residual_covariance(&corr, &clean, &w);
        check(
            "tau_I = 0 gives noise only",
            s0.delta.iter().all(|&d| d == clean.sigma2_ul),
        );
    }
    let clean = cfg.clone().with_tau2_i(0.0);
    let sbar = de_residual_covariance(&clean, &corr).unwrap();
    check(
        "tau_I = 0 gives noise-only equivalent",
        sbar.delta.iter().all(|&d| d == clean.sigma2_ul),
    );

    let fp = solve_dl_fixed_point(&corr.t_dl, cfg.alpha, cfg.m, cfg.n_d).unwrap();
    check("fixed-point residual", fp.residual < 1e-10);
    let de = de_dl_rzf(&cfg, &corr).unwrap();
    check("linear-system residual", de.diagnostics.lin_residual < 1e-9);

    let sym = SystemConfig::symmetric(4, 1, 1, 4, 4).with_alpha(1.0);
    let sym_corr = CorrelationSet::identity(&sym);
    let e = solve_dl_fixed_point(&sym_corr.t_dl, 1.0, 4, 1).unwrap();
    check(
        "symmetric golden-ratio fixed point",
        e.e.iter()
            .flatten()
            .all(|&x| close(x, (5f64.sqrt() - 1.0) / 2.0, 1e-9)),
    );

    let zf_de = de_dl_zf(&cfg, &corr).unwrap().sum_rate;
    let lim = de_dl_rzf(&cfg.clone().with_alpha(1e-6), &corr)
        .unwrap()
        .sum_rate;
    check("ZF equivalent as RZF limit", (zf_de - lim).abs() < 1e-3);

    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            "all checks hold".to_string()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn criterion_8() -> Outcome {
    let base = SystemConfig::symmetric(8, 4, 4, 32, 32)
        .with_snr_db(5.0, -10.0)
        .with_tau2_dl(0.1)
        .with_tau2_i(0.1);
    let corr = CorrelationSet::identity(&base);
    let (alpha, _) = optimal_alpha(&base, &corr).unwrap();
    let cfg = base.with_alpha(alpha);
    let de = de_residual_covariance(&cfg, &corr).unwrap();
    let mc = mc_mean_residual(
        &cfg,
        &corr,
        PrecoderKind::Rzf { alpha },
        10_000,
        &Streams::new(SEED),
    )
    .unwrap();
    let worst = mc
        .iter()
        .zip(&de.delta)
        .map(|(m, d)| rel_gap(m.mean, *d))
        .fold(0.0, f64::max);
    outcome(
        worst < 0.03,
        format!(
            "max deviation {:.2}% over {} antennas (alpha {alpha:.4})",
            100.0 * worst,
            mc.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|s| s.parse().ok());
    let mut unexpected = 0;
    for (id, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let tag = match (o.pass, o.regime_limit) {
            (true, _) => "PASS",
            (false, true) => "FAIL [regime limit]",
            (false, false) => "FAIL",
        };
        println!("criterion {id}: {tag} ({secs:.0} s) {}", o.detail);
        if !o.pass && !o.regime_limit {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
