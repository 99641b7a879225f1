//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default relative threshold for counting singular values toward rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// A Haar-distributed random orthogonal `d x d` matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = random_gaussian_matrix(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // sign fix so the distribution does not depend on QR conventions
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn random_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// A uniformly random unit vector.
pub fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-300 {
            return v / n;
        }
    }
}

/// Orthonormalizes the columns of `m` in place with modified Gram–Schmidt
/// (two passes).
pub fn orthonormalize_columns(m: &mut DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for _ in 0..2 {
            for k in 0..j {
                let proj = m.column(k).dot(&m.column(j));
                let qk = m.column(k).clone_owned();
                m.column_mut(j).axpy(-proj, &qk, 1.0);
            }
        }
        let n = m.column(j).norm();
        if !(n > 1e-12) {
            return Err(Error::domain(format!("column {j} is linearly dependent on earlier columns")));
        }
        m.column_mut(j).unscale_mut(n);
    }
    Ok(())
}

/// Number of singular values above `rel_tol * sigma_max`. All-zero input has rank 0.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Eigenvalues of the sample covariance of `rows` (one point per row),
/// sorted in descending order and clamped at zero.
pub fn covariance_spectrum(points: &DMatrix<f64>) -> Vec<f64> {
    let n = points.nrows();
    let d = points.ncols();
    if n == 0 {
        return vec![0.0; d];
    }
    let mean = points.row_mean();
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * &centered / n as f64;
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().map(|&e| e.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// Least-squares fit `y = slope * x + intercept`. Needs two distinct `x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
