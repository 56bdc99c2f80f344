//! Reconstruction error and detection metrics.

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// dB values are floored here so perfect recovery stays finite.
pub const DB_FLOOR: f64 = -120.0;

pub fn to_db(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        DB_FLOOR
    } else {
        (10.0 * ratio.log10()).max(DB_FLOOR)
    }
}

/// `‖x̂ − x‖² / ‖x‖²` as a plain ratio.
pub fn squared_error_ratio(estimate: ArrayView1<f64>, truth: ArrayView1<f64>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::dims("estimate length", truth.len(), estimate.len()));
    }
    let energy: f64 = truth.iter().map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(Error::param("truth", "image has zero energy"));
    }
    let err: f64 = estimate.iter().zip(truth.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(err / energy)
}

/// Mean error ratio over the views of one trial (rows are views).
pub fn view_mean_ratio(estimates: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64> {
    if estimates.dim() != truth.dim() {
        return Err(Error::dims(
            "estimate shape",
            format!("{:?}", truth.dim()),
            format!("{:?}", estimates.dim()),
        ));
    }
    let t = truth.nrows();
    if t == 0 {
        return Err(Error::param("views", "need at least one view"));
    }
    let mut total = 0.0;
    for (e, x) in estimates.outer_iter().zip(truth.outer_iter()) {
        total += squared_error_ratio(e, x)?;
    }
    Ok(total / t as f64)
}

/// NMSE in dB over trials with a fixed truth image.
pub fn nmse(estimates: &[ArrayView1<f64>], truth: ArrayView1<f64>) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::param("trials", "need at least one estimate"));
    }
    let mut total = 0.0;
    for e in estimates {
        total += squared_error_ratio(*e, truth)?;
    }
    Ok(to_db(total / estimates.len() as f64))
}

/// View-averaged NMSE in dB over trials; each trial carries its own truth.
pub fn ave_nmse(trials: &[(ArrayView2<f64>, ArrayView2<f64>)]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let mut total = 0.0;
    for (e, x) in trials {
        total += view_mean_ratio(*e, *x)?;
    }
    Ok(to_db(total / trials.len() as f64))
}

/// Mean of per-trial ratios, in dB.
pub fn mean_ratio_db(ratios: &[f64]) -> f64 {
    if ratios.is_empty() {
        return f64::NAN;
    }
    to_db(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// True when the two target voxels hold the two strictly largest estimated
/// coefficients; any tie with a third voxel is a failure.
pub fn two_point_detected(estimate: ArrayView1<f64>, targets: [usize; 2]) -> Result<bool> {
    let n = estimate.len();
    if targets[0] == targets[1] || targets.iter().any(|&t| t >= n) {
        return Err(Error::param("targets", "need two distinct in-range voxels"));
    }
    let low = estimate[targets[0]].min(estimate[targets[1]]);
    Ok((0..n)
        .filter(|i| !targets.contains(i))
        .all(|i| estimate[i] < low))
}

/// Fraction of trials in which [`two_point_detected`] holds.
pub fn success_detection_rate(estimates: &[ArrayView1<f64>], targets: [usize; 2]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::param("trials", "need at least one estimate"));
    }
    let mut hits = 0usize;
    for e in estimates {
        if two_point_detected(*e, targets)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / estimates.len() as f64)
}

/// Sample mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
