//! Mutual coherence of sensing matrices and RIS phase optimisation.
//!
//! The PSF of a sensing matrix is its column-normalised absolute Gram
//! matrix. Phase optimisation drives `‖AᴴA − I‖²_F` down by projected
//! gradient descent on the unit-modulus codebook.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::Serialize;

use crate::channel::{FixedChannels, PhaseCodebook, PhaseMode, C64};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

fn column_norms(a: &Array2<C64>, context: &'static str) -> Result<Array1<f64>> {
    let norms = a.map_axis(Axis(0), |c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    if let Some(idx) = norms.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ZeroColumn { context, index: idx });
    }
    Ok(norms)
}

fn gram(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj()).dot(a)
}

fn normalized_abs_gram(a: &Array2<C64>, context: &'static str) -> Result<Array2<f64>> {
    let norms = column_norms(a, context)?;
    let g = gram(a);
    let n = a.ncols();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            1.0
        } else {
            (g[[i, j]].norm() / (norms[i] * norms[j])).min(1.0)
        }
    }))
}

/// Normalised correlation between the voxel-to-RIS subpaths, i.e. between
/// the rows of `H_vs` (N × M). Returns an N × N matrix.
pub fn subpath_correlation(roi_to_ris: &Array2<C64>) -> Result<Array2<f64>> {
    normalized_abs_gram(&roi_to_ris.t().to_owned(), "subpath matrix")
}

/// Column-normalised absolute Gram matrix of `a`.
pub fn psf(a: &Array2<C64>) -> Result<Array2<f64>> {
    normalized_abs_gram(a, "sensing matrix")
}

/// Sum of squared off-diagonal PSF entries, `‖ÃᴴÃ − I‖²_F` for the
/// column-normalised `Ã`.
pub fn beta(a: &Array2<C64>) -> Result<f64> {
    let p = psf(a)?;
    Ok(p.iter().map(|v| v * v).sum::<f64>() - a.ncols() as f64)
}

/// `‖AᴴA − I‖²_F`.
pub fn beta_prime(a: &Array2<C64>) -> f64 {
    gram_excess(&gram(a))
}

fn gram_excess(g: &Array2<C64>) -> f64 {
    g.indexed_iter()
        .map(|((i, j), z)| if i == j { (z - 1.0).norm_sqr() } else { z.norm_sqr() })
        .sum()
}

/// `ΩB(BᴴΩᴴΩB − I)Bᴴ` (K × M).
///
/// With `⟨X, Y⟩ = Re tr(XᴴY)` the first-order change of `β′` along a
/// codebook perturbation `Δ` is `4⟨∇, Δ⟩`.
pub fn gradient_beta_prime(omega: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    if omega.ncols() != b.nrows() {
        return Err(Error::dims("codebook columns vs B rows", b.nrows(), omega.ncols()));
    }
    let a = omega.dot(b);
    let mut g = gram(&a);
    for i in 0..g.nrows() {
        g[[i, i]] -= 1.0;
    }
    Ok(a.dot(&g).dot(&b.t().mapv(|z| z.conj())))
}

/// Largest off-diagonal entry in each row.
pub fn max_sidelobes(m: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(m.outer_iter().enumerate().map(|(i, row)| {
        row.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(0.0, f64::max)
    }))
}

/// `max |ΩᴴΩ/K − I|` over entries: how far a codebook is from having
/// orthogonal element columns.
pub fn codebook_gram_deviation(codebook: &PhaseCodebook) -> f64 {
    let om = codebook.matrix();
    let k = om.nrows() as f64;
    let g = gram(om);
    g.indexed_iter()
        .map(|((i, j), z)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (z / k - target).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct CoherenceReport {
    pub psf: Array2<f64>,
    pub subpath: Array2<f64>,
    pub beta: f64,
    pub beta_prime: f64,
    /// Largest off-diagonal PSF entry per voxel.
    pub psf_sidelobes: Array1<f64>,
    /// Largest off-diagonal subpath correlation per voxel.
    pub subpath_sidelobes: Array1<f64>,
    pub deviation: DeviationStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationStats {
    pub median: f64,
    pub max: f64,
}

/// Median and maximum of `|P − Q|` over off-diagonal pairs (upper triangle).
pub fn off_diagonal_deviation(p: &Array2<f64>, q: &Array2<f64>) -> Result<DeviationStats> {
    if p.dim() != q.dim() {
        return Err(Error::dims("deviation matrices", format!("{:?}", p.dim()), format!("{:?}", q.dim())));
    }
    let n = p.nrows();
    let mut diffs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            diffs.push((p[[i, j]] - q[[i, j]]).abs());
        }
    }
    if diffs.is_empty() {
        return Ok(DeviationStats { median: 0.0, max: 0.0 });
    }
    diffs.sort_by(f64::total_cmp);
    let mid = diffs.len() / 2;
    let median = if diffs.len() % 2 == 0 {
        0.5 * (diffs[mid - 1] + diffs[mid])
    } else {
        diffs[mid]
    };
    Ok(DeviationStats {
        median,
        max: *diffs.last().unwrap(),
    })
}

/// Full coherence picture of one sensing matrix.
pub fn coherence_report(fixed: &FixedChannels, a: &Array2<C64>) -> Result<CoherenceReport> {
    if a.ncols() != fixed.voxels() {
        return Err(Error::dims("sensing matrix columns", fixed.voxels(), a.ncols()));
    }
    let p = psf(a)?;
    let mu = subpath_correlation(&fixed.roi_to_ris)?;
    let deviation = off_diagonal_deviation(&p, &mu)?;
    Ok(CoherenceReport {
        beta: p.iter().map(|v| v * v).sum::<f64>() - a.ncols() as f64,
        beta_prime: beta_prime(a),
        psf_sidelobes: max_sidelobes(&p),
        subpath_sidelobes: max_sidelobes(&mu),
        psf: p,
        subpath: mu,
        deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub k: usize,
    pub median: f64,
    pub max: f64,
}

/// Off-diagonal `|PSF − μ|` for random codebooks of each size in `ks`,
/// against the subpath correlation of the fixed channels.
pub fn psf_convergence(
    fixed: &FixedChannels,
    ue_to_roi: &Array1<C64>,
    ks: &[usize],
    mode: PhaseMode,
    seed: u64,
) -> Result<Vec<ConvergencePoint>> {
    let mu = subpath_correlation(&fixed.roi_to_ris)?;
    let b = fixed.view_matrix(ue_to_roi)?;
    ks.iter()
        .map(|&k| {
            let mut rng = seeded(derive_seed(seed, k as u64), 0x7468_6d31);
            let cb = PhaseCodebook::random(k, fixed.elements(), mode, &mut rng)?;
            let p = psf(&cb.matrix().dot(&b))?;
            let d = off_diagonal_deviation(&p, &mu)?;
            Ok(ConvergencePoint {
                k,
                median: d.median,
                max: d.max,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub step: f64,
    pub iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            step: 100.0,
            iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedCodebook {
    pub codebook: PhaseCodebook,
    /// `β′` of the normalised problem, starting with the initial codebook.
    pub trace: Vec<f64>,
    /// Entries whose pre-projection value was zero and kept their old phase.
    pub zero_entries: usize,
    /// Times the step was halved because a projected step raised `β′`.
    pub step_halvings: usize,
}

/// Scale `b` so that a random unit-modulus K-row codebook gives columns of
/// unit mean squared norm, which makes the identity target of `β′`
/// commensurate with the channel.
pub fn normalize_for_codebook(b: &Array2<C64>, k: usize) -> Result<Array2<C64>> {
    if k == 0 {
        return Err(Error::param("K", "must be positive"));
    }
    let fro: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if !(fro > 0.0 && fro.is_finite()) {
        return Err(Error::Numerical("B is zero or non-finite".into()));
    }
    let s = (b.ncols() as f64 / (k as f64 * fro)).sqrt();
    Ok(b.mapv(|z| z * s))
}

const MAX_HALVINGS: usize = 40;

/// Projected gradient descent on `β′(ΩB)` over unit-modulus `Ω`, starting
/// from `init`. `b` is rescaled with [`normalize_for_codebook`] first and
/// the step is applied to the gradient of `β′/N`, so `cfg.step` does not
/// depend on the channel's absolute scale or on the voxel count.
///
/// A projected step that would raise `β′` is retried with half the step,
/// and the smaller step is kept from then on. Iteration stops early when
/// no step length lowers `β′`.
pub fn optimize_from(b: &Array2<C64>, init: PhaseCodebook, cfg: &OptimizerConfig) -> Result<OptimizedCodebook> {
    if !(cfg.step >= 0.0 && cfg.step.is_finite()) {
        return Err(Error::param("step", "must be finite and nonnegative"));
    }
    if init.elements() != b.nrows() {
        return Err(Error::dims("codebook columns vs B rows", b.nrows(), init.elements()));
    }
    let bn = normalize_for_codebook(b, init.configurations())?;
    let bh = bn.t().mapv(|z| z.conj());
    let mut omega = init.matrix().clone();
    let mut a = omega.dot(&bn);
    let mut g = gram(&a);
    let mut current = gram_excess(&g);
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(current);
    let mut zero_entries = 0;
    let mut step_halvings = 0;
    let mut step = cfg.step / b.ncols() as f64;
    'outer: for _ in 0..cfg.iterations {
        for d in 0..g.nrows() {
            g[[d, d]] -= 1.0;
        }
        let grad = a.dot(&g).dot(&bh);
        loop {
            let mut zeros = 0;
            let cand = ndarray::Zip::from(&omega).and(&grad).map_collect(|&w, &gr| {
                let v = w - gr * step;
                let mag = v.norm();
                if mag > 0.0 && mag.is_finite() {
                    v / mag
                } else {
                    zeros += 1;
                    w
                }
            });
            let a_c = cand.dot(&bn);
            let g_c = gram(&a_c);
            let value = gram_excess(&g_c);
            if value <= current {
                omega = cand;
                a = a_c;
                g = g_c;
                current = value;
                zero_entries += zeros;
                trace.push(current);
                break;
            }
            if step_halvings >= MAX_HALVINGS || step == 0.0 {
                break 'outer;
            }
            step *= 0.5;
            step_halvings += 1;
        }
    }
    Ok(OptimizedCodebook {
        codebook: PhaseCodebook::from_matrix(omega)?,
        trace,
        zero_entries,
        step_halvings,
    })
}

/// Random continuous initialisation followed by [`optimize_from`].
pub fn optimize_phases<R: Rng + ?Sized>(
    b: &Array2<C64>,
    k: usize,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<OptimizedCodebook> {
    let init = PhaseCodebook::random(k, b.nrows(), PhaseMode::Continuous, rng)?;
    optimize_from(b, init, cfg)
}
