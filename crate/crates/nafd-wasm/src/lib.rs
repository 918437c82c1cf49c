//! Browser bindings for the demo page. Every export takes and returns JSON.

// Input checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nafd::detequiv::{de_dl_zf, de_ul, optimal_alpha};
use nafd::model::{
    build_geometry, CorrelationSet, DuplexMode, GeometryScenario, Layout, SystemConfig,
};
use nafd::rng::stream;
use nafd::scheduler::{
    ga_schedule, iud_objective, partition_dl_rate, random_schedule, GaParams, PoolShape,
    SchedulingInstance,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Deserialize)]
#[serde(default)]
pub struct CurveRequest {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub tau2: f64,
    pub snr_ul_db: f64,
    pub snr_from_db: f64,
    pub snr_to_db: f64,
    pub snr_step_db: f64,
}

impl Default for CurveRequest {
    fn default() -> Self {
        Self {
            m: 8,
            n: 4,
            k: 32,
            tau2: 0.1,
            snr_ul_db: -10.0,
            snr_from_db: -10.0,
            snr_to_db: 10.0,
            snr_step_db: 2.5,
        }
    }
}

#[derive(Serialize, Debug, PartialEq)]
pub struct CurvePoint {
    pub snr_dl_db: f64,
    pub alpha: f64,
    pub rzf: f64,
    pub zf: Option<f64>,
    pub ul: f64,
}

/// Equivalent RZF (optimal `alpha`), ZF and uplink sum-rates against
/// downlink SNR for an i.i.d. symmetric system.
pub fn curves(req: &CurveRequest) -> Result<Vec<CurvePoint>, String> {
    if !(req.snr_step_db > 0.0) || req.snr_from_db > req.snr_to_db {
        return Err("need from <= to and a positive step".into());
    }
    let count = ((req.snr_to_db - req.snr_from_db) / req.snr_step_db + 1e-9).floor() as usize + 1;
    if count > 200 {
        return Err("at most 200 points".into());
    }
    (0..count)
        .map(|i| {
            let snr = req.snr_from_db + i as f64 * req.snr_step_db;
            let cfg = SystemConfig::symmetric(req.m, req.n, req.n, req.k, req.k)
                .with_snr_db(snr, req.snr_ul_db)
                .with_tau2_dl(req.tau2)
                .with_tau2_ul(req.tau2)
                .with_tau2_i(req.tau2);
            cfg.validate().map_err(|e| e.to_string())?;
            let corr = CorrelationSet::identity(&cfg);
            let (alpha, rzf) = optimal_alpha(&cfg, &corr).map_err(|e| e.to_string())?;
            let ul = de_ul(&cfg.clone().with_alpha(alpha), &corr).map_err(|e| e.to_string())?;
            let zf = de_dl_zf(&cfg, &corr).ok().map(|d| d.sum_rate);
            Ok(CurvePoint {
                snr_dl_db: snr,
                alpha,
                rzf: rzf.sum_rate,
                zf,
                ul: ul.sum_rate,
            })
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(default)]
pub struct LayoutRequest {
    pub mode: DuplexMode,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for LayoutRequest {
    fn default() -> Self {
        Self {
            mode: DuplexMode::Nafd,
            n: 4,
            k: 32,
            seed: 0,
        }
    }
}

/// One seeded deployment of a duplexing mode.
pub fn layout(req: &LayoutRequest) -> Result<Layout, String> {
    let scn = GeometryScenario::new(req.mode);
    let cfg = SystemConfig::symmetric(1, req.n, req.n, req.k, req.k);
    build_geometry(&scn, &cfg, &mut stream(req.seed, &[0])).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
#[serde(default)]
pub struct ScheduleRequest {
    pub snr_ul_db: f64,
    pub seed: u64,
    pub population: usize,
    pub iterations: usize,
}

impl Default for ScheduleRequest {
    fn default() -> Self {
        Self {
            snr_ul_db: 0.0,
            seed: 0,
            population: 40,
            iterations: 100,
        }
    }
}

#[derive(Serialize, Debug)]
pub struct ScheduleReport {
    pub layout: Option<Layout>,
    /// `[ul groups, dl groups]` label per user.
    pub ga_labels: (Vec<usize>, Vec<usize>),
    pub random_labels: (Vec<usize>, Vec<usize>),
    pub ga_iud: f64,
    pub random_iud: f64,
    pub ga_dl_rate: f64,
    pub random_dl_rate: f64,
    pub history: Vec<f64>,
}

/// GA against random scheduling on a pool of 8 uplink and 8 downlink users
/// served in four slots by two receiving and two transmitting single-antenna
/// RAUs.
pub fn schedule(req: &ScheduleRequest) -> Result<ScheduleReport, String> {
    let shape = PoolShape {
        k_u_all: 8,
        k_d_all: 8,
        k_u: 2,
        k_d: 2,
    };
    let mut cfg = SystemConfig::symmetric(1, 2, 2, 2, 2)
        .with_snr_db(5.0, req.snr_ul_db)
        .with_tau2_i(0.1);
    cfg.alpha = cfg.k_d as f64 * cfg.sigma2_dl / cfg.p;
    let scn = GeometryScenario::new(DuplexMode::Nafd);
    let mut rng = stream(req.seed, &[1]);
    let inst = SchedulingInstance::from_geometry(&cfg, &scn, shape, &mut rng)
        .map_err(|e| e.to_string())?;
    let params = GaParams {
        population: req.population,
        iterations: req.iterations,
        seed: req.seed,
        ..GaParams::default()
    };
    let ga = ga_schedule(&inst, &params).map_err(|e| e.to_string())?;
    let random = random_schedule(&shape, &mut rng).map_err(|e| e.to_string())?;
    let e = |r: nafd::Result<f64>| r.map_err(|e| e.to_string());
    Ok(ScheduleReport {
        layout: inst.layout.clone(),
        ga_labels: ga.best.labels(&shape),
        random_labels: random.labels(&shape),
        ga_iud: ga.best_iud,
        random_iud: e(iud_objective(&random, &inst))?,
        ga_dl_rate: e(partition_dl_rate(&ga.best, &inst))?,
        random_dl_rate: e(partition_dl_rate(&random, &inst))?,
        history: ga.history,
    })
}

fn call<Q, A, F>(json: &str, f: F) -> Result<String, String>
where
    Q: for<'de> Deserialize<'de>,
    A: Serialize,
    F: FnOnce(&Q) -> Result<A, String>,
{
    let req: Q = serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))?;
    serde_json::to_string(&f(&req)?).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = deCurves)]
pub fn de_curves_js(json: &str) -> Result<String, JsValue> {
    js(call(json, curves))
}

#[wasm_bindgen(js_name = drawLayout)]
pub fn layout_js(json: &str) -> Result<String, JsValue> {
    js(call(json, layout))
}

#[wasm_bindgen(js_name = compareSchedules)]
pub fn schedule_js(json: &str) -> Result<String, JsValue> {
    js(call(json, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_increase_with_snr() {
        let pts = curves(&CurveRequest {
            m: 4,
            n: 2,
            k: 4,
            snr_step_db: 10.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.windows(2).all(|w| w[1].rzf > w[0].rzf));
        assert!(pts.iter().all(|p| p.zf.is_some_and(|z| z <= p.rzf + 1e-9)));
    }

    #[test]
    fn bad_requests_are_errors() {
        assert!(call::<CurveRequest, _, _>("{\"snr_step_db\": 0}", curves).is_err());
        assert!(call::<CurveRequest, _, _>("not json", curves).is_err());
    }

    #[test]
    fn layout_json_has_every_user() {
        let out = call(r#"{"mode": "ccfd_cran", "k": 5}"#, layout).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["users_ul"].as_array().unwrap().len(), 5);
        assert_eq!(v["rau_rx"], v["rau_tx"]);
    }

    #[test]
    fn ga_not_worse_than_random() {
        let r = schedule(&ScheduleRequest {
            population: 10,
            iterations: 10,
            ..Default::default()
        })
        .unwrap();
        assert!(r.ga_iud <= r.random_iud);
        assert_eq!(r.history.len(), 11);
    }
}
