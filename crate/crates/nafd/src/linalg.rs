//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMat, Error, Result, C64};

/// Relative residual bound every real linear solve must meet.
pub const LINEAR_RESIDUAL_TOL: f64 = 1e-9;

pub fn is_diagonal(a: &CMat) -> bool {
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)] == C64::new(0.0, 0.0)))
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square()
        && (0..a.nrows()).all(|i| (0..=i).all(|j| (a[(i, j)] - a[(j, i)].conj()).norm() <= tol))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    if is_diagonal(a) {
        return a
            .diagonal()
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Hermitian square root of a PSD matrix; tiny negative eigenvalues from
/// round-off are clamped to zero.
pub fn herm_sqrt(a: &CMat) -> CMat {
    if is_diagonal(a) {
        return CMat::from_diagonal(&a.diagonal().map(|z| C64::from(z.re.max(0.0).sqrt())));
    }
    let eig = a.clone().symmetric_eigen();
    let root = eig.eigenvalues.map(|l| C64::from(l.max(0.0).sqrt()));
    let v = &eig.eigenvectors;
    v * CMat::from_diagonal(&root) * v.adjoint()
}

/// `tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn hpd_inverse(a: &CMat) -> Result<CMat> {
    if is_diagonal(a) {
        let d = a.diagonal();
        if d.iter().any(|z| z.re <= 0.0) {
            return Err(Error::Degenerate("matrix is not positive definite".into()));
        }
        return Ok(CMat::from_diagonal(&d.map(|z| C64::from(1.0 / z.re))));
    }
    a.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Degenerate("matrix is not positive definite".into()))
}

/// Matrix with i.i.d. CN(0, var) entries.
pub fn cn_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> CMat {
    let s = (var / 2.0).sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// LU factorization of a real square system that checks the residual of
/// every solve it performs.
pub struct CheckedLu {
    a: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    what: &'static str,
}

impl CheckedLu {
    pub fn new(a: DMatrix<f64>, what: &'static str) -> Result<Self> {
        let lu = a.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::Singular {
                what,
                residual: f64::INFINITY,
            });
        }
        Ok(Self { a, lu, what })
    }

    /// Solves `A x = b` and returns `x` with its relative residual.
    pub fn solve(&self, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let x = self.lu.solve(b).ok_or(Error::Singular {
            what: self.what,
            residual: f64::INFINITY,
        })?;
        let r = (&self.a * &x - b).norm();
        let scale = b.norm();
        let rel = if scale > 0.0 { r / scale } else { r };
        if !rel.is_finite() || rel >= LINEAR_RESIDUAL_TOL {
            return Err(Error::Singular {
                what: self.what,
                residual: rel,
            });
        }
        Ok((x, rel))
    }
}
