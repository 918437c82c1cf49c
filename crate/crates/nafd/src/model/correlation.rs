use crate::linalg::{is_hermitian, min_eigenvalue};
use crate::model::SystemConfig;
use crate::{CMat, Error, Result, C64};

/// Deterministic second-order statistics of every link.
///
/// `t_ul[i][n]` (uplink user, receiving RAU), `t_dl[k][n]` (downlink user,
/// transmitting RAU) and `t_i[j][n]` (transmit antenna, receiving RAU) are
/// `M x M` blocks; `t_uu[k][i]` is the scalar gain from uplink user `i` to
/// downlink user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    pub t_ul: Vec<Vec<CMat>>,
    pub t_dl: Vec<Vec<CMat>>,
    pub t_i: Vec<Vec<CMat>>,
    pub t_uu: Vec<Vec<f64>>,
}

impl CorrelationSet {
    /// Every block `I_M` and every cross-user gain 1.
    pub fn identity(cfg: &SystemConfig) -> Self {
        let eye = CMat::identity(cfg.m, cfg.m);
        Self {
            t_ul: vec![vec![eye.clone(); cfg.n_u]; cfg.k_u],
            t_dl: vec![vec![eye.clone(); cfg.n_d]; cfg.k_d],
            t_i: vec![vec![eye; cfg.n_u]; cfg.m * cfg.n_d],
            t_uu: vec![vec![1.0; cfg.k_u]; cfg.k_d],
        }
    }

    /// User links get the exponential profile `rho^|a-b|`; RAU-to-RAU blocks
    /// stay `I_M` so the residual covariance remains diagonal.
    pub fn exponential(cfg: &SystemConfig, rho: f64) -> Self {
        let t = exponential_profile(cfg.m, rho);
        Self {
            t_ul: vec![vec![t.clone(); cfg.n_u]; cfg.k_u],
            t_dl: vec![vec![t; cfg.n_d]; cfg.k_d],
            ..Self::identity(cfg)
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        check_blocks("t_ul", &self.t_ul, cfg.k_u, cfg.n_u, cfg.m)?;
        check_blocks("t_dl", &self.t_dl, cfg.k_d, cfg.n_d, cfg.m)?;
        check_blocks("t_i", &self.t_i, cfg.m * cfg.n_d, cfg.n_u, cfg.m)?;
        if self.t_uu.len() != cfg.k_d || self.t_uu.iter().any(|r| r.len() != cfg.k_u) {
            return Err(Error::Dimension(format!(
                "t_uu must be {} x {}",
                cfg.k_d, cfg.k_u
            )));
        }
        for (k, row) in self.t_uu.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config(
                        format!("t_uu[{k}][{i}]"),
                        format!("must be non-negative, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_blocks(name: &str, t: &[Vec<CMat>], rows: usize, cols: usize, m: usize) -> Result<()> {
    if t.len() != rows || t.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension(format!(
            "{name} must be {rows} x {cols} blocks"
        )));
    }
    for (a, row) in t.iter().enumerate() {
        for (b, blk) in row.iter().enumerate() {
            let path = format!("{name}[{a}][{b}]");
            if blk.nrows() != m || blk.ncols() != m {
                return Err(Error::Dimension(format!("{path} must be {m} x {m}")));
            }
            if !is_hermitian(blk, 1e-12) {
                return Err(Error::config(path, "block is not Hermitian"));
            }
            if min_eigenvalue(blk) < -1e-10 {
                return Err(Error::config(path, "block is not positive semidefinite"));
            }
        }
    }
    Ok(())
}

/// `c_r * d^-eta * I_M` with `d` in kilometres.
pub fn pathloss_correlation(distance_km: f64, eta: f64, c_r: f64, m: usize) -> Result<CMat> {
    if !(distance_km > 0.0) {
        return Err(Error::config(
            "distance_km",
            format!("must be positive, got {distance_km}"),
        ));
    }
    Ok(CMat::identity(m, m) * C64::from(pathloss_gain(distance_km, eta, c_r)))
}

pub fn pathloss_gain(distance_km: f64, eta: f64, c_r: f64) -> f64 {
    c_r * distance_km.powf(-eta)
}

/// `[T]_{a,b} = rho^|a-b|`.
pub fn exponential_profile(m: usize, rho: f64) -> CMat {
    CMat::from_fn(m, m, |a, b| {
        C64::from(rho.powi((a as i32 - b as i32).abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_distance_gives_c_r() {
        let t = pathloss_correlation(1.0, 3.7, 2.5, 3).unwrap();
        assert_eq!(t, CMat::identity(3, 3) * C64::from(2.5));
    }

    #[test]
    fn half_kilometre() {
        let t = pathloss_correlation(0.5, 3.7, 1.0, 2).unwrap();
        assert!((t[(0, 0)].re - 12.996).abs() < 1e-3);
        assert_eq!(t[(0, 1)], C64::from(0.0));
    }

    #[test]
    fn zero_exponent_is_flat() {
        for d in [0.03, 0.7, 4.0] {
            assert_eq!(
                pathloss_correlation(d, 0.0, 1.5, 2).unwrap(),
                CMat::identity(2, 2) * C64::from(1.5)
            );
        }
    }

    #[test]
    fn nonpositive_distance_rejected() {
        assert!(pathloss_correlation(0.0, 3.7, 1.0, 2).is_err());
    }

    #[test]
    fn exponential_profile_is_psd() {
        let cfg = SystemConfig::symmetric(8, 2, 2, 3, 3);
        CorrelationSet::exponential(&cfg, 0.5)
            .validate(&cfg)
            .unwrap();
        CorrelationSet::exponential(&cfg, 0.95)
            .validate(&cfg)
            .unwrap();
    }
}
