use crate::linalg::{hpd_inverse, trace_prod};
use crate::{CMat, Error, Result, C64};

pub const FP_TOL: f64 = 1e-10;
/// Relative floor on the convergence test, a few ulp of the largest `e`.
pub const FP_REL_FLOOR: f64 = 1e-14;
pub const FP_MAX_ITER: usize = 2000;

/// Additive term inside the inverse.
#[derive(Debug, Clone, Copy)]
pub enum Regularizer<'a> {
    /// `alpha I`
    Scaled(f64),
    /// Per-RAU diagonal blocks, `diag[n]` of length `M`.
    Diagonal(&'a [Vec<f64>]),
}

/// The coupled system
///
/// ```text
/// Phi_n = ( (1/M) sum_j w_j T_{j,n} / (offset + w_j e_j) + R_n )^{-1}
/// e_{k,n} = (1/M) tr(T_{k,n} Phi_n),   e_k = sum_n e_{k,n}
/// ```
///
/// Downlink RZF uses `w = 1, offset = 1, R = alpha I`; the uplink uses the
/// transmit powers as weights and `R = Sigma`; the ZF limit uses `offset = 0`
/// and `R = I`.
#[derive(Debug, Clone, Copy)]
pub struct FixedPointProblem<'a> {
    pub t: &'a [Vec<CMat>],
    pub weights: &'a [f64],
    pub offset: f64,
    pub reg: Regularizer<'a>,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    /// `e[k][n]`
    pub e: Vec<Vec<f64>>,
    pub phi: Vec<CMat>,
    pub residual: f64,
    pub iterations: usize,
}

impl FixedPoint {
    pub fn e_sum(&self, k: usize) -> f64 {
        self.e[k].iter().sum()
    }
}

impl FixedPointProblem<'_> {
    fn phi(&self, e: &[Vec<f64>]) -> Result<Vec<CMat>> {
        let m = self.m;
        (0..self.n)
            .map(|n| {
                let mut a = match self.reg {
                    Regularizer::Scaled(alpha) => CMat::identity(m, m) * C64::from(alpha),
                    Regularizer::Diagonal(d) => {
                        CMat::from_diagonal(&nalgebra::DVector::from_fn(m, |i, _| {
                            C64::from(d[n][i])
                        }))
                    }
                };
                for (j, tj) in self.t.iter().enumerate() {
                    let den = self.offset + self.weights[j] * e[j].iter().sum::<f64>();
                    if self.weights[j] == 0.0 || den == 0.0 {
                        continue;
                    }
                    a += &tj[n] * C64::from(self.weights[j] / (m as f64 * den));
                }
                hpd_inverse(&a)
            })
            .collect()
    }

    fn map(&self, phi: &[CMat]) -> Vec<Vec<f64>> {
        let m = self.m as f64;
        self.t
            .iter()
            .map(|tk| {
                (0..self.n)
                    .map(|n| trace_prod(&tk[n], &phi[n]).re / m)
                    .collect()
            })
            .collect()
    }

    /// Picard iteration from `e = 1`, switching to 0.5 damping once the
    /// residual has grown on two consecutive steps. Converged when the step is
    /// below the tolerance, or below `FP_REL_FLOOR * |e|_inf` when `e` is so
    /// large (tiny `alpha`) that the absolute tolerance is under one ulp.
    pub fn solve(&self) -> Result<FixedPoint> {
        let mut e = vec![vec![1.0; self.n]; self.t.len()];
        let mut trace = Vec::new();
        let mut damped = false;
        let mut rises = 0;
        for it in 1..=FP_MAX_ITER {
            let next = self.map(&self.phi(&e)?);
            let res = e
                .iter()
                .flatten()
                .zip(next.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if !res.is_finite() {
                return Err(Error::NoConvergence {
                    what: "fixed point",
                    iterations: it,
                    residual: res,
                    trace,
                });
            }
            if let Some(&prev) = trace.last() {
                rises = if res > prev { rises + 1 } else { 0 };
                if rises >= 2 {
                    damped = true;
                }
            }
            trace.push(res);
            let scale = next.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
            if res < FP_TOL.max(FP_REL_FLOOR * scale) {
                let phi = self.phi(&next)?;
                return Ok(FixedPoint {
                    e: next,
                    phi,
                    residual: res,
                    iterations: it,
                });
            }
            if damped {
                for (a, b) in e.iter_mut().flatten().zip(next.iter().flatten()) {
                    *a += 0.5 * (b - *a);
                }
            } else {
                e = next;
            }
        }
        let residual = trace.last().copied().unwrap_or(f64::NAN);
        Err(Error::NoConvergence {
            what: "fixed point",
            iterations: FP_MAX_ITER,
            residual,
            trace,
        })
    }

    /// Largest violation of the defining equations at `fp`.
    pub fn equation_residual(&self, fp: &FixedPoint) -> Result<f64> {
        let next = self.map(&self.phi(&fp.e)?);
        Ok(fp
            .e
            .iter()
            .flatten()
            .zip(next.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Downlink RZF fixed point.
pub fn solve_dl_fixed_point(
    t_dl: &[Vec<CMat>],
    alpha: f64,
    m: usize,
    n_d: usize,
) -> Result<FixedPoint> {
    if !(alpha > 0.0) {
        return Err(Error::config(
            "alpha",
            "the RZF fixed point needs alpha > 0",
        ));
    }
    let w = vec![1.0; t_dl.len()];
    FixedPointProblem {
        t: t_dl,
        weights: &w,
        offset: 1.0,
        reg: Regularizer::Scaled(alpha),
        m,
        n: n_d,
    }
    .solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_case() {
        // T = I, K = M, N = 1, alpha = 1: e solves e (1 + e) = 1.
        let m = 6;
        let t = vec![vec![CMat::identity(m, m)]; m];
        let fp = solve_dl_fixed_point(&t, 1.0, m, 1).unwrap();
        let want = (5f64.sqrt() - 1.0) / 2.0;
        for k in 0..m {
            assert!((fp.e[k][0] - want).abs() < 1e-9);
        }
        assert!(fp.residual < FP_TOL);
    }

    #[test]
    fn large_alpha_shrinks_e() {
        let t = vec![vec![CMat::identity(2, 2); 2]; 3];
        let fp = solve_dl_fixed_point(&t, 1e6, 2, 2).unwrap();
        assert!(fp.e.iter().flatten().all(|&x| x < 1.1e-6));
        assert!((fp.phi[0][(0, 0)].re - 1e-6).abs() < 1e-11);
    }
}
