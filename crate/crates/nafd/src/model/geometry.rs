use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::correlation::{pathloss_correlation, pathloss_gain};
use super::{CorrelationSet, SystemConfig};
use crate::{CMat, Error, Result, C64};

/// Rejection-sampling budget per user.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplexMode {
    /// Half-duplex receiving and transmitting RAUs alternate on a circle.
    Nafd,
    /// One full-duplex site at the centre holding every antenna.
    CcfdMassive,
    /// Full-duplex sites on the circle, each a co-located rx/tx pair.
    CcfdCran,
}

impl DuplexMode {
    pub const ALL: [DuplexMode; 3] = [
        DuplexMode::Nafd,
        DuplexMode::CcfdCran,
        DuplexMode::CcfdMassive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DuplexMode::Nafd => "nafd",
            DuplexMode::CcfdMassive => "ccfd_massive",
            DuplexMode::CcfdCran => "ccfd_cran",
        }
    }

    /// Whether transmitting RAU `tx` and receiving RAU `rx` share a site.
    pub fn colocated(self, tx: usize, rx: usize) -> bool {
        match self {
            DuplexMode::Nafd => false,
            DuplexMode::CcfdMassive => true,
            DuplexMode::CcfdCran => tx == rx,
        }
    }
}

/// Deployment geometry. Lengths in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryScenario {
    pub mode: DuplexMode,
    #[serde(default = "d_user_radius")]
    pub user_radius_m: f64,
    #[serde(default = "d_rau_radius")]
    pub rau_radius_m: f64,
    #[serde(default = "d_min_distance")]
    pub min_distance_m: f64,
    #[serde(default = "d_eta")]
    pub eta: f64,
    #[serde(default = "d_c_r")]
    pub c_r: f64,
    /// Intra-site self-interference variance; `None` means `1/M`.
    #[serde(default)]
    pub sigma2_si: Option<f64>,
}

fn d_user_radius() -> f64 {
    1000.0
}
fn d_rau_radius() -> f64 {
    500.0
}
fn d_min_distance() -> f64 {
    30.0
}
fn d_eta() -> f64 {
    3.7
}
fn d_c_r() -> f64 {
    1.0
}

impl GeometryScenario {
    pub fn new(mode: DuplexMode) -> Self {
        Self {
            mode,
            user_radius_m: d_user_radius(),
            rau_radius_m: d_rau_radius(),
            min_distance_m: d_min_distance(),
            eta: d_eta(),
            c_r: d_c_r(),
            sigma2_si: None,
        }
    }

    pub fn with_mode(&self, mode: DuplexMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn sigma2_si(&self, m: usize) -> f64 {
        self.sigma2_si.unwrap_or(1.0 / m as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let (r0, r, big_r) = (self.min_distance_m, self.rau_radius_m, self.user_radius_m);
        if !(r0 > 0.0 && r0 < big_r) {
            return Err(Error::config(
                "geometry.min_distance_m",
                "need 0 < min_distance_m < user_radius_m",
            ));
        }
        if self.mode != DuplexMode::CcfdMassive && !(r0 < r && r < big_r) {
            return Err(Error::config(
                "geometry.rau_radius_m",
                "need min_distance_m < rau_radius_m < user_radius_m",
            ));
        }
        if !(self.c_r > 0.0) || !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::config(
                "geometry.c_r",
                "c_r must be positive and eta non-negative",
            ));
        }
        if let Some(s) = self.sigma2_si {
            if !(s >= 0.0) {
                return Err(Error::config("geometry.sigma2_si", "must be non-negative"));
            }
        }
        Ok(())
    }
}

pub type Point = [f64; 2];

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    pub rau_rx: Vec<Point>,
    pub rau_tx: Vec<Point>,
    pub users_ul: Vec<Point>,
    pub users_dl: Vec<Point>,
}

fn on_circle(radius: f64, angle: f64) -> Point {
    [radius * angle.cos(), radius * angle.sin()]
}

/// Receiving and transmitting RAU positions for a duplexing mode.
pub fn rau_positions(
    scn: &GeometryScenario,
    n_u: usize,
    n_d: usize,
) -> Result<(Vec<Point>, Vec<Point>)> {
    let r = scn.rau_radius_m;
    match scn.mode {
        DuplexMode::Nafd => {
            let total = n_u + n_d;
            let (mut rx, mut tx) = (Vec::with_capacity(n_u), Vec::with_capacity(n_d));
            for s in 0..total {
                let p = on_circle(r, 2.0 * PI * s as f64 / total as f64);
                let want_rx = s % 2 == 0;
                if (want_rx && rx.len() < n_u) || tx.len() == n_d {
                    rx.push(p);
                } else {
                    tx.push(p);
                }
            }
            Ok((rx, tx))
        }
        DuplexMode::CcfdMassive => Ok((vec![[0.0, 0.0]; n_u], vec![[0.0, 0.0]; n_d])),
        DuplexMode::CcfdCran => {
            if n_u != n_d {
                return Err(Error::config(
                    "geometry.mode",
                    format!("ccfd_cran pairs RAUs and needs n_u == n_d (got {n_u} and {n_d})"),
                ));
            }
            let pts: Vec<Point> = (0..n_u)
                .map(|s| on_circle(r, 2.0 * PI * s as f64 / n_u as f64))
                .collect();
            Ok((pts.clone(), pts))
        }
    }
}

/// Users uniform on the disc, each at least `min_distance_m` from every
/// point of `keep_away`.
pub fn sample_users<R: Rng + ?Sized>(
    count: usize,
    scn: &GeometryScenario,
    keep_away: &[Point],
    rng: &mut R,
) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let rad = scn.user_radius_m * rng.random::<f64>().sqrt();
            let p = on_circle(rad, 2.0 * PI * rng.random::<f64>());
            if keep_away
                .iter()
                .all(|&q| distance(p, q) >= scn.min_distance_m)
            {
                placed = Some(p);
                break;
            }
        }
        out.push(placed.ok_or(Error::Placement(MAX_PLACEMENT_ATTEMPTS))?);
    }
    Ok(out)
}

pub fn build_geometry<R: Rng + ?Sized>(
    scn: &GeometryScenario,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<Layout> {
    scn.validate()?;
    let (rau_rx, rau_tx) = rau_positions(scn, cfg.n_u, cfg.n_d)?;
    let all: Vec<Point> = rau_rx.iter().chain(&rau_tx).copied().collect();
    let users_ul = sample_users(cfg.k_u, scn, &all, rng)?;
    let users_dl = sample_users(cfg.k_d, scn, &all, rng)?;
    Ok(Layout {
        rau_rx,
        rau_tx,
        users_ul,
        users_dl,
    })
}

/// Path-loss correlations for a layout. Distances below `min_distance_m` are
/// clamped; co-located transmit/receive pairs get `sigma2_si * I` instead.
pub fn correlations_from_layout(
    scn: &GeometryScenario,
    cfg: &SystemConfig,
    layout: &Layout,
) -> Result<CorrelationSet> {
    let m = cfg.m;
    let km = |d: f64| d.max(scn.min_distance_m) / 1000.0;
    let pl = |a: Point, b: Point| pathloss_correlation(km(distance(a, b)), scn.eta, scn.c_r, m);

    let t_ul = layout
        .users_ul
        .iter()
        .map(|&u| {
            layout
                .rau_rx
                .iter()
                .map(|&r| pl(u, r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let t_dl = layout
        .users_dl
        .iter()
        .map(|&u| {
            layout
                .rau_tx
                .iter()
                .map(|&r| pl(u, r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let si = CMat::identity(m, m) * C64::from(scn.sigma2_si(m));
    let mut t_i = Vec::with_capacity(m * cfg.n_d);
    for j in 0..m * cfg.n_d {
        let tx = j / m;
        let row = (0..cfg.n_u)
            .map(|rx| {
                if scn.mode.colocated(tx, rx) {
                    Ok(si.clone())
                } else {
                    pl(layout.rau_tx[tx], layout.rau_rx[rx])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        t_i.push(row);
    }
    let t_uu = layout
        .users_dl
        .iter()
        .map(|&k| {
            layout
                .users_ul
                .iter()
                .map(|&i| pathloss_gain(km(distance(k, i)), scn.eta, scn.c_r))
                .collect()
        })
        .collect();
    Ok(CorrelationSet {
        t_ul,
        t_dl,
        t_i,
        t_uu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn nafd_alternates_starting_with_rx() {
        let (rx, tx) = rau_positions(&GeometryScenario::new(DuplexMode::Nafd), 4, 4).unwrap();
        for (s, p) in rx.iter().enumerate() {
            let want = on_circle(500.0, PI / 2.0 * s as f64);
            assert!(distance(*p, want) < 1e-9);
        }
        for (s, p) in tx.iter().enumerate() {
            let want = on_circle(500.0, PI / 4.0 + PI / 2.0 * s as f64);
            assert!(distance(*p, want) < 1e-9);
        }
    }

    #[test]
    fn massive_sits_at_origin() {
        let (rx, tx) =
            rau_positions(&GeometryScenario::new(DuplexMode::CcfdMassive), 3, 2).unwrap();
        assert!(rx.iter().chain(&tx).all(|p| *p == [0.0, 0.0]));
    }

    #[test]
    fn cran_needs_pairs() {
        assert!(rau_positions(&GeometryScenario::new(DuplexMode::CcfdCran), 3, 2).is_err());
        let (rx, tx) = rau_positions(&GeometryScenario::new(DuplexMode::CcfdCran), 4, 4).unwrap();
        assert_eq!(rx, tx);
    }

    #[test]
    fn users_keep_their_distance() {
        let scn = GeometryScenario::new(DuplexMode::Nafd);
        let cfg = SystemConfig::symmetric(2, 4, 4, 5_000, 5_000);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let lay = build_geometry(&scn, &cfg, &mut rng).unwrap();
        let raus: Vec<Point> = lay.rau_rx.iter().chain(&lay.rau_tx).copied().collect();
        for u in lay.users_ul.iter().chain(&lay.users_dl) {
            assert!(raus.iter().all(|&r| distance(*u, r) >= 30.0));
            assert!(distance(*u, [0.0, 0.0]) <= 1000.0);
        }
    }

    #[test]
    fn impossible_placement_errors() {
        let mut scn = GeometryScenario::new(DuplexMode::CcfdMassive);
        scn.min_distance_m = 999.999_999;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_users(1, &scn, &[[0.0, 0.0]], &mut rng),
            Err(Error::Placement(_))
        ));
    }
}
