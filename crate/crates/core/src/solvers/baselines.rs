//! Non-Bayesian reference reconstructions: subspace pursuit, least squares on
//! a known support, and minimum-norm least squares.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

use crate::channel::C64;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BaselineOutput {
    pub estimate: Array1<f64>,
    /// Set when a restricted solve fell back to ridge regularisation.
    pub regularized: bool,
    pub iterations: usize,
}

/// `[Re A; Im A]` and `[Re y; Im y]`.
pub fn stack_real(a: &Array2<C64>, y: &Array1<C64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (k, n) = a.dim();
    if y.len() != k {
        return Err(Error::dims("measurement length", k, y.len()));
    }
    let m = DMatrix::from_fn(2 * k, n, |i, j| if i < k { a[[i, j]].re } else { a[[i - k, j]].im });
    let v = DVector::from_fn(2 * k, |i, _| if i < k { y[i].re } else { y[i - k].im });
    Ok((m, v))
}

const COND_LIMIT: f64 = 1e12;

/// Least squares restricted to `cols`; falls back to ridge when the
/// restricted matrix is rank deficient.
fn restricted_ls(a: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> (DVector<f64>, bool) {
    if cols.is_empty() {
        return (DVector::zeros(0), false);
    }
    let sub = a.select_columns(cols);
    let svd = sub.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if cols.len() <= sub.nrows() && smin > 0.0 && smax / smin < COND_LIMIT {
        if let Ok(x) = svd.solve(y, 0.0) {
            return (x, false);
        }
    }
    let lambda = 1e-10 * smax * smax + f64::MIN_POSITIVE;
    let gram = sub.transpose() * &sub + DMatrix::identity(cols.len(), cols.len()) * lambda;
    let rhs = sub.transpose() * y;
    let x = gram.cholesky().map(|c| c.solve(&rhs)).unwrap_or_else(|| DVector::zeros(cols.len()));
    (x, true)
}

fn scatter(n: usize, cols: &[usize], vals: &DVector<f64>) -> Array1<f64> {
    let mut x = Array1::zeros(n);
    for (&c, &v) in cols.iter().zip(vals.iter()) {
        x[c] = v;
    }
    x
}

/// Least squares on the true support; zero elsewhere.
pub fn sals_oracle(a: &Array2<C64>, y: &Array1<C64>, support: &[usize]) -> Result<BaselineOutput> {
    let n = a.ncols();
    if let Some(&bad) = support.iter().find(|&&s| s >= n) {
        return Err(Error::param("support", format!("index {bad} out of range for N = {n}")));
    }
    let (ar, yr) = stack_real(a, y)?;
    let mut cols = support.to_vec();
    cols.sort_unstable();
    cols.dedup();
    let (vals, regularized) = restricted_ls(&ar, &yr, &cols);
    Ok(BaselineOutput {
        estimate: scatter(n, &cols, &vals),
        regularized,
        iterations: 1,
    })
}

/// Minimum-norm least squares over all voxels.
pub fn least_squares(a: &Array2<C64>, y: &Array1<C64>) -> Result<BaselineOutput> {
    let (ar, yr) = stack_real(a, y)?;
    let svd = ar.svd(true, true);
    let eps = svd.singular_values.max() * 1e-12;
    let x = svd.solve(&yr, eps).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(BaselineOutput {
        estimate: Array1::from_iter(x.iter().copied()),
        regularized: false,
        iterations: 1,
    })
}

fn top_indices(scores: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// Subspace pursuit with a known sparsity level, on the real-stacked system.
pub fn sp_baseline(a: &Array2<C64>, y: &Array1<C64>, sparsity: usize) -> Result<BaselineOutput> {
    let (k, n) = a.dim();
    if sparsity > k.min(n) {
        return Err(Error::param("sparsity", format!("{sparsity} exceeds min(K, N) = {}", k.min(n))));
    }
    if sparsity == 0 {
        return Ok(BaselineOutput {
            estimate: Array1::zeros(n),
            regularized: false,
            iterations: 0,
        });
    }
    let (ar, yr) = stack_real(a, y)?;
    let norms: Vec<f64> = (0..n).map(|j| ar.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let correlate = |r: &DVector<f64>| -> Vec<f64> {
        let c = ar.tr_mul(r);
        c.iter().zip(&norms).map(|(v, s)| v.abs() / s).collect()
    };

    let mut support = top_indices(&correlate(&yr), sparsity);
    let (mut vals, mut regularized) = restricted_ls(&ar, &yr, &support);
    let mut resid = &yr - ar.select_columns(&support) * &vals;
    let mut iterations = 1;
    for _ in 0..10 * sparsity.max(5) {
        iterations += 1;
        let mut cand = support.clone();
        cand.extend(top_indices(&correlate(&resid), sparsity));
        cand.sort_unstable();
        cand.dedup();
        let (wide, _) = restricted_ls(&ar, &yr, &cand);
        let mags: Vec<f64> = wide.iter().map(|v| v.abs()).collect();
        let keep: Vec<usize> = top_indices(&mags, sparsity).into_iter().map(|i| cand[i]).collect();
        let (nv, nreg) = restricted_ls(&ar, &yr, &keep);
        let nr = &yr - ar.select_columns(&keep) * &nv;
        if nr.norm() >= resid.norm() {
            break;
        }
        support = keep;
        vals = nv;
        regularized |= nreg;
        resid = nr;
    }
    Ok(BaselineOutput {
        estimate: scatter(n, &support, &vals),
        regularized,
        iterations,
    })
}
