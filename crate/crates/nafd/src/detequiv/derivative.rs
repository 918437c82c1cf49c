use nalgebra::{DMatrix, DVector};

use super::fixed_point::FixedPoint;
use crate::linalg::{trace_prod, CheckedLu};
use crate::{CMat, Result};

/// Which right-hand side a derivative solve was made for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsKind {
    /// Derivative with respect to `alpha` (perturbation `I`).
    GammaDl,
    /// Perturbation `A_n` for receive antenna `n`.
    GammaA(usize),
    /// Uplink perturbation `T_k`.
    GammaUlK(usize),
    /// Uplink perturbation `Sigma`.
    GammaUlSigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSolution {
    /// `cdot[k][n]`
    pub cdot: Vec<Vec<f64>>,
    pub residual: f64,
    pub rhs_kind: RhsKind,
}

/// Linear system for the derivative of a resolvent along a perturbation.
///
/// The derivative of `Phi_n` along `A` is `-Phi_n (A_n - sum_j c_{j,n} T_{j,n}) Phi_n`
/// where `c` solves `Theta vec(c) = vec(Gamma)` with
///
/// ```text
/// [Theta]_{(k,i),(l,j)} = delta - w_k tr(T_{k,j} Phi_j T_{l,j} Phi_j)
/// Gamma_{k,i}           = -w_k sum_n tr(T_{k,n} Phi_n A_n Phi_n)
/// w_k                   = p_k^2 / (M^2 (1 + p_k e_k)^2)
/// ```
///
/// `Theta` is `KN x KN` and independent of `A`, so it is factored once.
pub struct DerivativeSystem {
    k: usize,
    n: usize,
    m: usize,
    pub(crate) phi: Vec<CMat>,
    /// `T_{k,n} Phi_n`
    pub(crate) s: Vec<Vec<CMat>>,
    /// `tr(T_{k,n} Phi_n T_{l,n} Phi_n)` at `(k * K + l) * N + n`
    b: Vec<f64>,
    coef: Vec<f64>,
    lu: CheckedLu,
}

impl DerivativeSystem {
    pub fn new(t: &[Vec<CMat>], fp: &FixedPoint, weights: &[f64], m: usize) -> Result<Self> {
        let k = t.len();
        let n = fp.phi.len();
        let s: Vec<Vec<CMat>> = t
            .iter()
            .map(|tk| (0..n).map(|i| &tk[i] * &fp.phi[i]).collect())
            .collect();
        let mut b = vec![0.0; k * k * n];
        for a in 0..k {
            for l in a..k {
                for i in 0..n {
                    let v = trace_prod(&s[a][i], &s[l][i]).re;
                    b[(a * k + l) * n + i] = v;
                    b[(l * k + a) * n + i] = v;
                }
            }
        }
        let coef: Vec<f64> = (0..k)
            .map(|a| {
                let p = weights[a];
                p * p / ((m * m) as f64 * (1.0 + p * fp.e_sum(a)).powi(2))
            })
            .collect();
        let dim = k * n;
        let theta = DMatrix::from_fn(dim, dim, |row, col| {
            let (ka, ia) = (row % k, row / k);
            let (lb, jb) = (col % k, col / k);
            let diag = if ka == lb && ia == jb { 1.0 } else { 0.0 };
            diag - coef[ka] * b[(ka * k + lb) * n + jb]
        });
        Ok(Self {
            k,
            n,
            m,
            phi: fp.phi.clone(),
            s,
            b,
            coef,
            lu: CheckedLu::new(theta, "Theta")?,
        })
    }

    pub fn users(&self) -> usize {
        self.k
    }

    /// `tr(T_{k,n} Phi_n T_{l,n} Phi_n)`
    pub fn tr_tt(&self, k: usize, l: usize, n: usize) -> f64 {
        self.b[(k * self.k + l) * self.n + n]
    }

    /// `tr(T_{k,n} Phi_n A_n Phi_n)` for diagonal `A_n`.
    pub fn tr_ta_diag(&self, k: usize, n: usize, a: &[f64]) -> f64 {
        let (s, phi) = (&self.s[k][n], &self.phi[n]);
        let mut acc = 0.0;
        for r in 0..self.m {
            for c in 0..self.m {
                acc += (s[(r, c)] * phi[(c, r)]).re * a[c];
            }
        }
        acc
    }

    /// `tr(T_{k,n} Phi_n^2)`
    pub fn tr_t_phi2(&self, k: usize, n: usize) -> f64 {
        trace_prod(&self.s[k][n], &self.phi[n]).re
    }

    /// Right-hand side from per-user traces `sum_n tr(T_{k,n} Phi_n A_n Phi_n)`.
    pub fn rhs(&self, traces: &[f64]) -> Vec<f64> {
        traces.iter().zip(&self.coef).map(|(t, w)| -w * t).collect()
    }

    pub fn solve(&self, gamma: &[f64], rhs_kind: RhsKind) -> Result<DerivativeSolution> {
        let (k, n) = (self.k, self.n);
        let rhs = DVector::from_fn(k * n, |row, _| gamma[row % k]);
        let (x, residual) = self.lu.solve(&rhs)?;
        let cdot = (0..k)
            .map(|a| (0..n).map(|i| x[i * k + a]).collect())
            .collect();
        Ok(DerivativeSolution {
            cdot,
            residual,
            rhs_kind,
        })
    }

    /// `(1/M) sum_n wt_n [ trA_n - sum_j c_{j,n} tr(T_{k,n} Phi_n T_{j,n} Phi_n) ]`,
    /// the equivalent of `(1/M) tr(X Q A Q)` with `X_n = wt_n T_{k,n}`, given
    /// `trA_n = tr(T_{k,n} Phi_n A_n Phi_n)`.
    pub fn quad(&self, k: usize, tr_a: &[f64], wt: Option<&[f64]>, c: &DerivativeSolution) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let corr: f64 = (0..self.k)
                .map(|j| c.cdot[j][i] * self.tr_tt(k, j, i))
                .sum();
            total += wt.map_or(1.0, |w| w[i]) * (tr_a[i] - corr);
        }
        total / self.m as f64
    }
}
