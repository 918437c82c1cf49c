use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// CSI accuracy of one (endpoint, RAU) pair. The estimate is
/// `phi * h + tau * z` with `phi = sqrt(1 - tau^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiQuality {
    tau: f64,
}

impl CsiQuality {
    pub fn from_tau2(tau2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau2) || tau2.is_nan() {
            return Err(Error::config("tau2", format!("{tau2} is outside [0, 1]")));
        }
        Ok(Self { tau: tau2.sqrt() })
    }

    pub fn perfect() -> Self {
        Self { tau: 0.0 }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi(&self) -> f64 {
        (1.0 - self.tau * self.tau).max(0.0).sqrt()
    }
}

/// System dimensions, powers, noise levels and CSI grids.
///
/// `tau2_ul[i][n]` is indexed by uplink user and receiving RAU,
/// `tau2_dl[k][n]` by downlink user and transmitting RAU, and `tau2_i[j][n]`
/// by transmit antenna (`0..m*n_d`) and receiving RAU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub m: usize,
    pub n_u: usize,
    pub n_d: usize,
    pub k_u: usize,
    pub k_d: usize,
    /// Per-antenna power budget; every transmitting RAU radiates at most `m * p`.
    pub p: f64,
    pub p_ul: Vec<f64>,
    pub sigma2_ul: f64,
    pub sigma2_dl: f64,
    pub alpha: f64,
    pub tau2_ul: Vec<Vec<f64>>,
    pub tau2_dl: Vec<Vec<f64>>,
    pub tau2_i: Vec<Vec<f64>>,
}

impl SystemConfig {
    /// Unit powers and noise, perfect CSI, `alpha = 1`.
    pub fn symmetric(m: usize, n_u: usize, n_d: usize, k_u: usize, k_d: usize) -> Self {
        Self {
            m,
            n_u,
            n_d,
            k_u,
            k_d,
            p: 1.0,
            p_ul: vec![1.0; k_u],
            sigma2_ul: 1.0,
            sigma2_dl: 1.0,
            alpha: 1.0,
            tau2_ul: vec![vec![0.0; n_u]; k_u],
            tau2_dl: vec![vec![0.0; n_d]; k_d],
            tau2_i: vec![vec![0.0; n_u]; m * n_d],
        }
    }

    /// Sets `P = rho_dl * sigma2_dl` and every `p_ul = rho_ul * sigma2_ul`.
    pub fn with_snr_db(mut self, dl_db: f64, ul_db: f64) -> Self {
        self.p = db_to_linear(dl_db) * self.sigma2_dl;
        self.p_ul = vec![db_to_linear(ul_db) * self.sigma2_ul; self.k_u];
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_tau2_dl(mut self, tau2: f64) -> Self {
        self.tau2_dl = vec![vec![tau2; self.n_d]; self.k_d];
        self
    }

    /// Per-receiving-RAU uplink CSI errors shared by all users.
    pub fn with_tau2_ul_per_rau(mut self, tau2: &[f64]) -> Self {
        self.tau2_ul = vec![tau2.to_vec(); self.k_u];
        self
    }

    pub fn with_tau2_ul(mut self, tau2: f64) -> Self {
        self.tau2_ul = vec![vec![tau2; self.n_u]; self.k_u];
        self
    }

    pub fn with_tau2_i(mut self, tau2: f64) -> Self {
        self.tau2_i = vec![vec![tau2; self.n_u]; self.m * self.n_d];
        self
    }

    pub fn antennas_ul(&self) -> usize {
        self.m * self.n_u
    }

    pub fn antennas_dl(&self) -> usize {
        self.m * self.n_d
    }

    pub fn csi_ul(&self, i: usize, n: usize) -> CsiQuality {
        CsiQuality::from_tau2(self.tau2_ul[i][n]).unwrap_or(CsiQuality::perfect())
    }

    pub fn csi_dl(&self, k: usize, n: usize) -> CsiQuality {
        CsiQuality::from_tau2(self.tau2_dl[k][n]).unwrap_or(CsiQuality::perfect())
    }

    pub fn csi_i(&self, j: usize, n: usize) -> CsiQuality {
        CsiQuality::from_tau2(self.tau2_i[j][n]).unwrap_or(CsiQuality::perfect())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("n_u", self.n_u),
            ("n_d", self.n_d),
            ("k_d", self.k_d),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        for (name, v) in [
            ("p", self.p),
            ("sigma2_ul", self.sigma2_ul),
            ("sigma2_dl", self.sigma2_dl),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(
                "alpha",
                format!("must be non-negative, got {}", self.alpha),
            ));
        }
        if self.p_ul.len() != self.k_u {
            return Err(Error::config(
                "p_ul",
                format!("expected {} entries, got {}", self.k_u, self.p_ul.len()),
            ));
        }
        for (i, &v) in self.p_ul.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(
                    format!("p_ul[{i}]"),
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        check_grid("tau2_ul", &self.tau2_ul, self.k_u, self.n_u)?;
        check_grid("tau2_dl", &self.tau2_dl, self.k_d, self.n_d)?;
        check_grid("tau2_i", &self.tau2_i, self.m * self.n_d, self.n_u)?;
        Ok(())
    }
}

fn check_grid(name: &str, g: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if g.len() != rows {
        return Err(Error::config(
            name,
            format!("expected {rows} rows, got {}", g.len()),
        ));
    }
    for (r, row) in g.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::config(
                format!("{name}[{r}]"),
                format!("expected {cols} entries, got {}", row.len()),
            ));
        }
        for (c, &v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(
                    format!("{name}[{r}][{c}]"),
                    format!("{v} is outside [0, 1]"),
                ));
            }
        }
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_and_tau_are_complementary() {
        for t2 in [0.0, 0.1, 0.37, 1.0] {
            let q = CsiQuality::from_tau2(t2).unwrap();
            assert!((q.phi().powi(2) + q.tau().powi(2) - 1.0).abs() < 1e-15);
        }
        assert!(CsiQuality::from_tau2(1.2).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = SystemConfig::symmetric(2, 2, 2, 2, 2);
        cfg.tau2_dl[1][0] = 1.5;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("tau2_dl[1][0]"), "{err}");
    }

    #[test]
    fn snr_sets_powers() {
        let cfg = SystemConfig::symmetric(2, 2, 2, 3, 2).with_snr_db(10.0, -10.0);
        assert!((cfg.p - 10.0).abs() < 1e-12);
        assert!(cfg.p_ul.iter().all(|&p| (p - 0.1).abs() < 1e-12));
    }
}
