//! Multi-view sparse scenes: Bernoulli-Gaussian images whose supports follow
//! a per-voxel binary Markov chain and whose amplitudes follow an AR(1)
//! process across views.

use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior / model parameters shared by the scene generator and the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorParams {
    /// Sparse rate α.
    pub alpha: f64,
    /// Amplitude mean η.
    pub eta: f64,
    /// Amplitude variance ς².
    pub sigma2: f64,
    /// Support death probability P{1 → 0}.
    pub p01: f64,
    /// Temporal amplitude correlation.
    pub rho: f64,
    /// Complex measurement noise variance χ².
    pub noise_var: f64,
}

impl Default for PriorParams {
    fn default() -> Self {
        PriorParams {
            alpha: 0.02,
            eta: 1.0,
            sigma2: 1.0,
            p01: 0.1,
            rho: 0.9,
            noise_var: 1e-3,
        }
    }
}

/// Quantities derived from [`PriorParams`] under the steady-state constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    /// Support birth probability P{0 → 1}.
    pub p10: f64,
    /// Mean of the AR(1) driving term.
    pub innovation_mean: f64,
    /// Variance of the AR(1) driving term, `ς²(1+ρ)/(1-ρ)`.
    pub innovation_var: f64,
}

impl PriorParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.eta, self.sigma2, self.p01, self.rho, self.noise_var]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("prior", "all parameters must be finite"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("must be in [0, 1), got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.p01) {
            return Err(Error::param("p01", format!("must be in [0, 1], got {}", self.p01)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::param("rho", format!("must be in [0, 1), got {}", self.rho)));
        }
        if self.sigma2 < 0.0 || self.noise_var < 0.0 {
            return Err(Error::param("prior", "variances must be nonnegative"));
        }
        if self.p10() > 1.0 {
            return Err(Error::param("p01", "implied birth probability exceeds 1"));
        }
        Ok(())
    }

    /// `α p01 / (1 - α)`.
    pub fn p10(&self) -> f64 {
        self.alpha * self.p01 / (1.0 - self.alpha)
    }

    /// Variance of the AR(1) step noise after scaling, `(1-ρ²)ς²`.
    pub fn step_var(&self) -> f64 {
        (1.0 - self.rho * self.rho) * self.sigma2
    }

    /// Constant offset of the AR(1) step, `(1-ρ)η`.
    pub fn step_offset(&self) -> f64 {
        (1.0 - self.rho) * self.eta
    }
}

pub fn derive_chain_params(p: &PriorParams) -> Result<ChainParams> {
    p.validate()?;
    Ok(ChainParams {
        p10: p.p10(),
        innovation_mean: p.eta,
        innovation_var: p.sigma2 * (1.0 + p.rho) / (1.0 - p.rho),
    })
}

/// Supports `s[t, n]` (T × N): stationary start, then independent per-voxel
/// two-state chains.
pub fn sample_support_chain<R: Rng + ?Sized>(p: &PriorParams, n: usize, t: usize, rng: &mut R) -> Result<Array2<bool>> {
    let chain = derive_chain_params(p)?;
    let mut s = Array2::from_elem((t, n), false);
    for v in 0..n {
        let mut on = rng.random::<f64>() < p.alpha;
        for k in 0..t {
            if k > 0 {
                let u = rng.random::<f64>();
                on = if on { u >= p.p01 } else { u < chain.p10 };
            }
            s[[k, v]] = on;
        }
    }
    Ok(s)
}

/// Amplitudes `a[t, n]` (T × N): `a_1 ~ N(η, ς²)`, then
/// `a_t = ρ a_{t-1} + (1-ρ) e_t` with `e_t ~ N(η, ς²(1+ρ)/(1-ρ))`.
pub fn sample_amplitude_process<R: Rng + ?Sized>(
    p: &PriorParams,
    n: usize,
    t: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let chain = derive_chain_params(p)?;
    let first = Normal::new(p.eta, p.sigma2.sqrt()).map_err(|e| Error::param("sigma2", e.to_string()))?;
    let drive = Normal::new(chain.innovation_mean, chain.innovation_var.sqrt())
        .map_err(|e| Error::param("sigma2", e.to_string()))?;
    let mut a = Array2::zeros((t, n));
    for v in 0..n {
        let mut cur = first.sample(rng);
        for k in 0..t {
            if k > 0 {
                cur = p.rho * cur + (1.0 - p.rho) * drive.sample(rng);
            }
            a[[k, v]] = cur;
        }
    }
    Ok(a)
}

pub fn compose_images(supports: &Array2<bool>, amplitudes: &Array2<f64>) -> Result<Array2<f64>> {
    if supports.dim() != amplitudes.dim() {
        return Err(Error::dims(
            "supports vs amplitudes",
            format!("{:?}", supports.dim()),
            format!("{:?}", amplitudes.dim()),
        ));
    }
    let mut x = amplitudes.clone();
    ndarray::Zip::from(&mut x).and(supports).for_each(|v, &s| {
        if !s {
            *v = 0.0;
        }
    });
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewScene {
    pub supports: Array2<bool>,
    pub amplitudes: Array2<f64>,
    /// `x[t, n] = s[t, n] · a[t, n]`, optionally clipped at zero.
    pub images: Array2<f64>,
}

impl MultiViewScene {
    pub fn generate<R: Rng + ?Sized>(
        p: &PriorParams,
        n: usize,
        t: usize,
        truncate_negative: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let supports = sample_support_chain(p, n, t, rng)?;
        let amplitudes = sample_amplitude_process(p, n, t, rng)?;
        let mut images = compose_images(&supports, &amplitudes)?;
        if truncate_negative {
            images.mapv_inplace(|v| v.max(0.0));
        }
        Ok(MultiViewScene {
            supports,
            amplitudes,
            images,
        })
    }

    pub fn views(&self) -> usize {
        self.images.nrows()
    }

    pub fn voxels(&self) -> usize {
        self.images.ncols()
    }

    /// Size of the union of supports over all views.
    pub fn joint_support_size(&self) -> usize {
        (0..self.voxels()).filter(|&n| self.supports.column(n).iter().any(|&s| s)).count()
    }

    /// Whether every view has at least one nonzero voxel.
    pub fn all_views_nonzero(&self) -> bool {
        self.images.rows().into_iter().all(|r| r.iter().any(|&v| v != 0.0))
    }

    /// CSV with header `t,n,s,a,x`, one row per (view, voxel).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(crate::channel::csv_err)?;
        w.write_record(["t", "n", "s", "a", "x"]).map_err(crate::channel::csv_err)?;
        for ((t, n), &x) in self.images.indexed_iter() {
            w.write_record([
                t.to_string(),
                n.to_string(),
                u8::from(self.supports[[t, n]]).to_string(),
                format!("{:e}", self.amplitudes[[t, n]]),
                format!("{:e}", x),
            ])
            .map_err(crate::channel::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Correlation-degree scaling: step length, death probability and temporal
/// correlation as functions of one factor γ ∈ [0, 10].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaScaling {
    pub step: f64,
    pub p01: f64,
    pub rho: f64,
}

/// Largest ρ returned by [`gamma_scaling`]; keeps the AR(1) drive finite.
pub const RHO_MAX: f64 = 1.0 - 1e-6;

pub fn gamma_scaling(gamma: f64) -> Result<GammaScaling> {
    if !(0.0..=10.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("must be in [0, 10], got {gamma}")));
    }
    Ok(GammaScaling {
        step: 2.0 * gamma,
        p01: 0.1 * gamma,
        rho: (1.0 - 0.1 * gamma).clamp(0.0, RHO_MAX),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    #[test]
    fn chain_params() {
        let p = PriorParams::default();
        let c = derive_chain_params(&p).unwrap();
        assert_relative_eq!(c.p10, 0.02 * 0.1 / 0.98, epsilon = 1e-15);
        assert_relative_eq!(c.innovation_var, 19.0, epsilon = 1e-12);
        let frozen = PriorParams { p01: 0.0, ..p };
        assert_eq!(derive_chain_params(&frozen).unwrap().p10, 0.0);
        assert!(derive_chain_params(&PriorParams { rho: 1.0, ..p }).is_err());
        assert!(derive_chain_params(&PriorParams { alpha: 1.0, ..p }).is_err());
    }

    #[test]
    fn frozen_supports() {
        let p = PriorParams {
            alpha: 0.3,
            p01: 0.0,
            ..Default::default()
        };
        let s = sample_support_chain(&p, 200, 6, &mut seeded(4, 0)).unwrap();
        for t in 1..6 {
            assert_eq!(s.row(t), s.row(0));
        }
    }

    #[test]
    fn zero_alpha_empty() {
        let p = PriorParams {
            alpha: 0.0,
            ..Default::default()
        };
        let s = sample_support_chain(&p, 100, 4, &mut seeded(4, 0)).unwrap();
        assert!(s.iter().all(|&v| !v));
    }

    #[test]
    fn rho_zero_is_iid() {
        let p = PriorParams {
            rho: 0.0,
            eta: 2.0,
            sigma2: 4.0,
            ..Default::default()
        };
        let a = sample_amplitude_process(&p, 20000, 2, &mut seeded(8, 0)).unwrap();
        let second = a.row(1);
        let mean = second.mean().unwrap();
        let var = second.mapv(|v| (v - mean).powi(2)).mean().unwrap();
        assert!((mean - 2.0).abs() < 0.05);
        assert!((var - 4.0).abs() < 0.2);
    }

    #[test]
    fn images_zero_off_support() {
        let scene = MultiViewScene::generate(&PriorParams::default(), 500, 5, false, &mut seeded(1, 2)).unwrap();
        for ((t, n), &x) in scene.images.indexed_iter() {
            if scene.supports[[t, n]] {
                assert_eq!(x, scene.amplitudes[[t, n]]);
            } else {
                assert_eq!(x, 0.0);
            }
        }
        assert!(scene.joint_support_size() >= scene.supports.row(0).iter().filter(|&&s| s).count());
    }

    #[test]
    fn compose_shape_mismatch() {
        let s = Array2::from_elem((2, 3), true);
        let a = Array2::zeros((3, 2));
        assert!(compose_images(&s, &a).is_err());
        let a = Array2::from_elem((2, 3), 1.5);
        assert_eq!(compose_images(&s, &a).unwrap(), a);
    }

    #[test]
    fn gamma_points() {
        let g = gamma_scaling(1.0).unwrap();
        assert_relative_eq!(g.step, 2.0);
        assert_relative_eq!(g.p01, 0.1);
        assert_relative_eq!(g.rho, 0.9);
        let g = gamma_scaling(10.0).unwrap();
        assert_eq!((g.step, g.p01, g.rho), (20.0, 1.0, 0.0));
        assert!(gamma_scaling(0.0).unwrap().rho < 1.0);
        assert!(gamma_scaling(11.0).is_err());
    }
}
