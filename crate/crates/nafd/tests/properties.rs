use nafd::detequiv::{
    de_dl_rzf, de_dl_zf, de_ul, solve_dl_fixed_point, FixedPointProblem, Regularizer,
};
use nafd::downlink::{build_precoder, dl_sinr, per_rau_power, PrecoderKind};
use nafd::harness::Sweep;
use nafd::linalg::min_eigenvalue;
use nafd::model::{exponential_profile, sample_realization, CorrelationSet, SystemConfig};
use nafd::rng::{stream, Streams};
use nafd::scheduler::{
    ga_schedule_from, random_schedule, GaParams, PoolShape, SchedulingInstance, SchedulingPartition,
};
use nafd::uplink::{mc_ul_sum_rate, residual_covariance};
use nafd::C64;
use proptest::prelude::*;

fn small_config() -> impl Strategy<Value = SystemConfig> {
    (
        1usize..=3,
        1usize..=2,
        1usize..=2,
        1usize..=3,
        1usize..=3,
        -5.0f64..10.0,
        0.0f64..0.4,
        0.0f64..0.4,
        0.01f64..2.0,
    )
        .prop_map(|(m, n_u, n_d, k_u, k_d, snr, tau_dl, tau_i, alpha)| {
            SystemConfig::symmetric(m, n_u, n_d, k_u, k_d)
                .with_snr_db(snr, 0.0)
                .with_tau2_dl(tau_dl)
                .with_tau2_i(tau_i)
                .with_alpha(alpha)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponential_profile_is_hermitian_psd(m in 1usize..8, rho in -0.95f64..0.95) {
        let t = exponential_profile(m, rho);
        prop_assert!((&t - t.adjoint()).norm() < 1e-12);
        prop_assert!(min_eigenvalue(&t) > -1e-10);
    }

    #[test]
    fn rzf_meets_per_rau_budget_with_equality(cfg in small_config(), seed in any::<u64>()) {
        let corr = CorrelationSet::identity(&cfg);
        let real = sample_realization(&cfg, &corr, &mut stream(seed, &[])).unwrap();
        let w = build_precoder(&real.ghat_dl, PrecoderKind::Rzf { alpha: cfg.alpha }, &cfg).unwrap();
        let pw = per_rau_power(&w.w, cfg.m, cfg.n_d);
        let budget = cfg.m as f64 * cfg.p;
        let max = pw.iter().cloned().fold(0.0, f64::max);
        prop_assert!((max - budget).abs() <= 1e-9 * budget);
        prop_assert!(pw.iter().all(|&x| x <= budget * (1.0 + 1e-9)));
    }

    #[test]
    fn zf_inverts_the_estimate(cfg in small_config(), seed in any::<u64>()) {
        prop_assume!(cfg.k_d <= cfg.m * cfg.n_d);
        let corr = CorrelationSet::identity(&cfg);
        let real = sample_realization(&cfg, &corr, &mut stream(seed, &[])).unwrap();
        if let Ok(w) = build_precoder(&real.ghat_dl, PrecoderKind::Zf, &cfg) {
            let prod = real.ghat_dl.adjoint() * &w.w;
            let xi = w.xi2.sqrt();
            for r in 0..cfg.k_d {
                for c in 0..cfg.k_d {
                    let want = if r == c { xi } else { 0.0 };
                    prop_assert!((prod[(r, c)] - C64::from(want)).norm() < 1e-9 * xi.max(1.0));
                }
            }
        }
    }

    #[test]
    fn sinr_ignores_phase_of_true_channel(cfg in small_config(), seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let corr = CorrelationSet::identity(&cfg);
        let mut real = sample_realization(&cfg, &corr, &mut stream(seed, &[])).unwrap();
        let w = build_precoder(&real.ghat_dl, PrecoderKind::Rzf { alpha: cfg.alpha }, &cfg).unwrap();
        let before = dl_sinr(&real, &w, &cfg).sinr;
        let rot = C64::from_polar(1.0, theta);
        real.g_dl.column_mut(0).iter_mut().for_each(|z| *z *= rot);
        let after = dl_sinr(&real, &w, &cfg).sinr;
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn residual_is_at_least_noise(cfg in small_config(), seed in any::<u64>()) {
        let corr = CorrelationSet::identity(&cfg);
        let real = sample_realization(&cfg, &corr, &mut stream(seed, &[])).unwrap();
        let w = build_precoder(&real.ghat_dl, PrecoderKind::Rzf { alpha: cfg.alpha }, &cfg).unwrap();
        let s = residual_covariance(&corr, &cfg, &w);
        prop_assert_eq!(s.delta.len(), cfg.m * cfg.n_u);
        prop_assert!(s.delta.iter().all(|&d| d >= cfg.sigma2_ul));
    }

    #[test]
    fn fixed_point_residual_is_small(cfg in small_config()) {
        let corr = CorrelationSet::identity(&cfg);
        let fp = solve_dl_fixed_point(&corr.t_dl, cfg.alpha, cfg.m, cfg.n_d).unwrap();
        let scale = fp.e.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
        prop_assert!(fp.residual < 1e-10f64.max(1e-14 * scale));
        let w = vec![1.0; cfg.k_d];
        let problem = FixedPointProblem { t: &corr.t_dl, weights: &w, offset: 1.0, reg: Regularizer::Scaled(cfg.alpha), m: cfg.m, n: cfg.n_d };
        prop_assert!(problem.equation_residual(&fp).unwrap() < 1e-9);
    }

    #[test]
    fn symmetric_users_get_equal_sinr(cfg in small_config()) {
        let corr = CorrelationSet::identity(&cfg);
        let de = de_dl_rzf(&cfg, &corr).unwrap();
        let g0 = de.gamma[0];
        prop_assert!(de.gamma.iter().all(|g| (g - g0).abs() <= 1e-12 * g0.max(1.0)));
        prop_assert!(de.diagnostics.lin_residual < 1e-9);
        let ul = de_ul(&cfg, &corr).unwrap();
        let u0 = ul.gamma[0];
        prop_assert!(ul.gamma.iter().all(|g| (g - u0).abs() <= 1e-10 * u0.max(1.0)));
    }

    #[test]
    fn zf_equivalent_is_the_small_alpha_limit(cfg in small_config()) {
        prop_assume!(2 * cfg.k_d <= cfg.m * cfg.n_d);
        let corr = CorrelationSet::identity(&cfg);
        let zf = de_dl_zf(&cfg, &corr).unwrap().sum_rate;
        let rzf = de_dl_rzf(&cfg.clone().with_alpha(1e-6), &corr).unwrap().sum_rate;
        prop_assert!((zf - rzf).abs() < 1e-3, "zf {} rzf {}", zf, rzf);
    }

    #[test]
    fn sweep_text_round_trips(from in -20i32..0, steps in 1usize..6, step in 1u32..5) {
        let to = from + (steps as i32) * step as i32;
        let s = Sweep::parse(&format!("snr_dl_db={from}:{step}:{to}")).unwrap();
        prop_assert_eq!(s.points().len(), steps + 1);
        prop_assert_eq!(Sweep::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn partition_labels_round_trip(seed in any::<u64>(), l in 1usize..5, ku in 1usize..3, kd in 1usize..3) {
        let shape = PoolShape { k_u_all: l * ku, k_d_all: l * kd, k_u: ku, k_d: kd };
        let p = random_schedule(&shape, &mut stream(seed, &[])).unwrap();
        p.validate(&shape).unwrap();
        let (ul, dl) = p.labels(&shape);
        prop_assert_eq!(SchedulingPartition::from_labels(&ul, &dl, l), p);
    }
}

#[test]
fn ga_without_variation_returns_its_seed() {
    let shape = PoolShape {
        k_u_all: 4,
        k_d_all: 4,
        k_u: 2,
        k_d: 2,
    };
    let cfg = SystemConfig::symmetric(1, 2, 2, 2, 2)
        .with_snr_db(5.0, 0.0)
        .with_tau2_i(0.1)
        .with_alpha(0.6);
    let pool = SystemConfig::symmetric(1, 2, 2, 4, 4).with_tau2_i(0.1);
    let corr = CorrelationSet::identity(&pool);
    let mut rng = stream(3, &[]);
    let inst = SchedulingInstance::from_correlations(&cfg, &corr, shape, &mut rng).unwrap();
    let seed = random_schedule(&shape, &mut rng).unwrap();
    let params = GaParams {
        population: 1,
        iterations: 20,
        crossover_rate: 0.0,
        mutation_rate: 0.0,
        local_search: false,
        ..GaParams::default()
    };
    let out = ga_schedule_from(&inst, &params, vec![seed.clone()]).unwrap();
    assert_eq!(out.best, seed);
    assert!(out.history.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn uplink_rate_non_increasing_in_each_interference_csi_entry() {
    let base = SystemConfig::symmetric(2, 2, 2, 2, 2)
        .with_snr_db(5.0, 5.0)
        .with_tau2_dl(0.1)
        .with_tau2_i(0.1)
        .with_alpha(0.5);
    let corr = CorrelationSet::identity(&base);
    let streams = Streams::new(11);
    for j in 0..base.m * base.n_d {
        for r in 0..base.n_u {
            let rates: Vec<f64> = [0.0, 0.3, 0.8]
                .iter()
                .map(|&t| {
                    let mut cfg = base.clone();
                    cfg.tau2_i[j][r] = t;
                    mc_ul_sum_rate(
                        &cfg,
                        &corr,
                        PrecoderKind::Rzf { alpha: cfg.alpha },
                        40,
                        &streams,
                    )
                    .unwrap()
                    .mean
                })
                .collect();
            assert!(
                rates.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "entry ({j},{r}): {rates:?}"
            );
        }
    }
}
