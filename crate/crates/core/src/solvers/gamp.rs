//! Sum-product GAMP with an AWGN output channel and a per-element
//! Bernoulli-Gaussian input prior, run on the real-stacked system.

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::channel::C64;
use crate::error::{Error, Result};
use crate::scene::PriorParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GampConfig {
    pub max_iters: usize,
    /// Stop when `‖x̂_i − x̂_{i−1}‖ ≤ tol · ‖x̂_i‖`.
    pub tol: f64,
    /// Weight on the new iterate; 1 disables damping.
    pub damping: f64,
    pub var_floor: f64,
}

impl Default for GampConfig {
    fn default() -> Self {
        GampConfig {
            max_iters: 200,
            tol: 1e-4,
            damping: 0.7,
            var_floor: 1e-12,
        }
    }
}

impl GampConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("gamp.max_iters", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("gamp.tol", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::param("gamp.damping", "must be in (0, 1]"));
        }
        if !(self.var_floor > 0.0) {
            return Err(Error::param("gamp.var_floor", "must be positive"));
        }
        Ok(())
    }
}

/// `[Re A; Im A] x + w = [Re y; Im y]`, rescaled so the mean squared column
/// norm is 1. `x` is left in its original units.
#[derive(Debug, Clone)]
pub struct RealSystem {
    pub a: Array2<f64>,
    pub a_sq: Array2<f64>,
    pub y: Array1<f64>,
    /// Noise variance per real component, in rescaled units.
    pub noise_var: f64,
    /// Factor applied to A and y.
    pub scale: f64,
}

impl RealSystem {
    /// `noise_var` is the total complex variance χ².
    pub fn new(a: &Array2<C64>, y: &Array1<C64>, noise_var: f64) -> Result<Self> {
        let (k, n) = a.dim();
        if y.len() != k {
            return Err(Error::dims("measurement length", k, y.len()));
        }
        if k == 0 || n == 0 {
            return Err(Error::param("sensing matrix", "must be nonempty"));
        }
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(Error::param("noise_var", "must be finite and nonnegative"));
        }
        let fro: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if !(fro > 0.0 && fro.is_finite()) {
            return Err(Error::Numerical("sensing matrix is zero or non-finite".into()));
        }
        let scale = (n as f64 / fro).sqrt();
        let mut ar = Array2::zeros((2 * k, n));
        for ((i, j), z) in a.indexed_iter() {
            ar[[i, j]] = z.re * scale;
            ar[[i + k, j]] = z.im * scale;
        }
        let mut yr = Array1::zeros(2 * k);
        for (i, z) in y.iter().enumerate() {
            yr[i] = z.re * scale;
            yr[i + k] = z.im * scale;
        }
        Ok(RealSystem {
            a_sq: ar.mapv(|v| v * v),
            a: ar,
            y: yr,
            noise_var: noise_var / 2.0 * scale * scale,
            scale,
        })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// Convert a per-component rescaled variance back to complex χ².
    pub fn to_complex_noise(&self, w: f64) -> f64 {
        2.0 * w / (self.scale * self.scale)
    }
}

/// Bernoulli-Gaussian prior per element: `(1-π)δ(x) + π N(x; m, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementPrior {
    pub activity: Array1<f64>,
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

impl ElementPrior {
    pub fn uniform(n: usize, activity: f64, mean: f64, var: f64) -> Self {
        ElementPrior {
            activity: Array1::from_elem(n, activity),
            mean: Array1::from_elem(n, mean),
            var: Array1::from_elem(n, var),
        }
    }

    pub fn from_params(n: usize, p: &PriorParams) -> Self {
        ElementPrior::uniform(n, p.alpha, p.eta, p.sigma2)
    }

    pub fn len(&self) -> usize {
        self.activity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity.is_empty()
    }
}

pub(crate) const PROB_CLAMP: f64 = 1e-12;

fn logistic(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// Log of `N(r; m, v + τ) / N(r; 0, τ)`.
pub(crate) fn active_log_ratio(r: f64, tau: f64, m: f64, v: f64) -> f64 {
    -0.5 * ((v + tau) / tau).ln() - (r - m).powi(2) / (2.0 * (v + tau)) + r * r / (2.0 * tau)
}

/// Scalar MMSE denoiser for `r = x + N(0, τ)` under a Bernoulli-Gaussian
/// prior. Returns (posterior activity, mean, variance) of x.
pub fn bg_denoise(r: f64, tau: f64, pi: f64, m: f64, v: f64) -> (f64, f64, f64) {
    let pi = pi.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let llr = (pi / (1.0 - pi)).ln() + active_log_ratio(r, tau, m, v);
    let post = logistic(llr);
    let gvar = 1.0 / (1.0 / v + 1.0 / tau);
    let gmean = gvar * (m / v + r / tau);
    let mean = post * gmean;
    let var = (post * (gvar + gmean * gmean) - mean * mean).max(0.0);
    (post, mean, var)
}

/// KL divergence from the prior to the denoiser posterior of one element,
/// given the posterior mean and variance returned by [`bg_denoise`].
fn posterior_kl(r: f64, tau: f64, pi: f64, m: f64, v: f64, mean: f64, var: f64) -> f64 {
    let pi = pi.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let a = (1.0 - pi).ln();
    let b = pi.ln() + active_log_ratio(r, tau, m, v);
    let log_z = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    (r * r - (r - mean).powi(2) - var) / (2.0 * tau) - log_z
}

/// Iteration state kept for warm starts.
#[derive(Debug, Clone)]
pub struct GampState {
    x: Array1<f64>,
    x_var: Array1<f64>,
    x_bar: Array1<f64>,
    s: Array1<f64>,
    s_var: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct GampOutput {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    /// Posterior probability that each element is active.
    pub activity: Array1<f64>,
    /// Effective scalar observation `r = x + N(0, r_var)` seen by the
    /// denoiser on the last accepted iteration.
    pub r: Array1<f64>,
    pub r_var: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations whose step was rejected and retried with more damping.
    pub rejected_steps: usize,
    /// EM estimate of the complex noise variance χ² from this run.
    pub noise_estimate: f64,
    pub state: GampState,
}

/// Run GAMP on a prepared real system.
///
/// Each iteration is scored by the approximate free energy used for
/// adaptive damping; a step that lowers the score is retried with half the
/// step size (down to 1/64 of `cfg.damping`), and accepted steps let the
/// step size recover towards `cfg.damping`. Noiseless systems keep the
/// fixed step.
pub fn gamp_solve(
    sys: &RealSystem,
    prior: &ElementPrior,
    cfg: &GampConfig,
    warm: Option<&GampState>,
) -> Result<GampOutput> {
    cfg.validate()?;
    let n = sys.cols();
    let m = sys.rows();
    if prior.len() != n {
        return Err(Error::dims("prior length", n, prior.len()));
    }
    let floor = cfg.var_floor;
    let w = sys.noise_var.max(floor);
    let adaptive = sys.noise_var > floor;
    let step_max = cfg.damping;
    let step_min = cfg.damping / 64.0;
    let mut step = step_max;

    let (mut x, mut x_var, mut x_bar, mut s, mut s_var, mut fresh) = match warm {
        Some(st) if st.x.len() == n && st.s.len() == m => {
            (st.x.clone(), st.x_var.clone(), st.x_bar.clone(), st.s.clone(), st.s_var.clone(), false)
        }
        _ => {
            let x: Array1<f64> = Zip::from(&prior.activity).and(&prior.mean).map_collect(|&p, &mu| p * mu);
            let x_var = Zip::from(&prior.activity)
                .and(&prior.mean)
                .and(&prior.var)
                .map_collect(|&p, &mu, &v| (p * (v + mu * mu) - (p * mu).powi(2)).max(floor));
            (x.clone(), x_var, x, Array1::zeros(m), Array1::zeros(m), true)
        }
    };
    let mut ax = sys.a.dot(&x);
    let mut p_var = sys.a_sq.dot(&x_var).mapv(|v| v.max(floor));
    let mut score = f64::NEG_INFINITY;

    let mut r = Array1::zeros(n);
    let mut r_var = Array1::zeros(n);
    let mut activity = Array1::zeros(n);
    let mut converged = false;
    let mut iterations = 0;
    let mut rejected = 0;
    let mut noise_estimate = w;

    let mut x_new = Array1::zeros(n);
    let mut x_var_new = Array1::zeros(n);
    let mut act_new = Array1::zeros(n);

    while iterations < cfg.max_iters {
        iterations += 1;

        // Output step from the accepted state.
        let p = &ax - &(&p_var * &s);
        let s_var_full = p_var.mapv(|pv| 1.0 / (pv + w));
        let s_full = Zip::from(&sys.y).and(&p).and(&s_var_full).map_collect(|&y, &p, &sv| (y - p) * sv);
        let (s_d, s_var_d, x_bar_d) = if fresh {
            (s_full, s_var_full, x.clone())
        } else {
            (
                &s_full * step + &(&s * (1.0 - step)),
                &s_var_full * step + &(&s_var * (1.0 - step)),
                &x * step + &(&x_bar * (1.0 - step)),
            )
        };

        // Input step.
        let r_var_d = sys.a_sq.t().dot(&s_var_d).mapv(|v| 1.0 / v.max(floor));
        let r_d = &x_bar_d + &(&r_var_d * &sys.a.t().dot(&s_d));
        let mut kl = 0.0;
        for j in 0..n {
            let v = prior.var[j].max(floor);
            let (pi, mu, var) = bg_denoise(r_d[j], r_var_d[j], prior.activity[j], prior.mean[j], v);
            kl += posterior_kl(r_d[j], r_var_d[j], prior.activity[j], prior.mean[j], v, mu, var);
            act_new[j] = pi;
            x_new[j] = mu;
            x_var_new[j] = var.max(floor);
        }
        if x_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("GAMP produced non-finite estimate at iteration {iterations}")));
        }
        let ax_new = sys.a.dot(&x_new);
        let p_var_new = sys.a_sq.dot(&x_var_new).mapv(|v| v.max(floor));
        let mut fit = 0.0;
        Zip::from(&sys.y).and(&ax_new).and(&p_var_new).for_each(|&y, &z, &pv| {
            fit += (y - z).powi(2) + pv;
        });
        let score_new = -kl - 0.5 * fit / w;

        // Without noise the score is dominated by Σ p_var / w and stops
        // tracking the fit, so every step is accepted.
        if adaptive && !fresh && score_new < score && step > step_min {
            rejected += 1;
            step = (step * 0.5).max(step_min);
            continue;
        }

        // Posterior of z = A x under the AWGN likelihood, for the noise update.
        let mut resid = 0.0;
        Zip::from(&sys.y).and(&p).and(&p_var).for_each(|&y, &p, &pv| {
            let z = (pv * y + w * p) / (pv + w);
            let zv = pv * w / (pv + w);
            resid += (y - z).powi(2) + zv;
        });
        noise_estimate = resid / m as f64;

        let change = (&x_new - &x).mapv(|d| d * d).sum().sqrt();
        let norm = x_new.mapv(|d| d * d).sum().sqrt();
        let was_fresh = fresh;
        fresh = false;
        step = (step * 1.1).min(step_max);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut x_var, &mut x_var_new);
        std::mem::swap(&mut activity, &mut act_new);
        x_bar = x_bar_d;
        s = s_d;
        s_var = s_var_d;
        ax = ax_new;
        p_var = p_var_new;
        r = r_d;
        r_var = r_var_d;
        score = score_new;
        if (!was_fresh && change <= cfg.tol * norm) || (norm == 0.0 && change == 0.0) {
            converged = true;
            break;
        }
    }

    Ok(GampOutput {
        mean: x.clone(),
        var: x_var.clone(),
        activity,
        r,
        r_var,
        iterations,
        converged,
        rejected_steps: rejected,
        noise_estimate: sys.to_complex_noise(noise_estimate),
        state: GampState {
            x,
            x_var,
            x_bar,
            s,
            s_var,
        },
    })
}

/// Single-view GAMP with a uniform Bernoulli-Gaussian prior taken from `prior`
/// (`alpha`, `eta`, `sigma2`) and noise variance `prior.noise_var`.
pub fn gamp_single(a: &Array2<C64>, y: &Array1<C64>, prior: &PriorParams, cfg: &GampConfig) -> Result<GampOutput> {
    prior.validate()?;
    let sys = RealSystem::new(a, y, prior.noise_var)?;
    gamp_solve(&sys, &ElementPrior::from_params(a.ncols(), prior), cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn denoiser_limits() {
        // Prior certainly active with huge variance: posterior mean ~ r.
        let (p, m, _) = bg_denoise(3.0, 1e-6, 1.0, 0.0, 1e6);
        assert!(p > 0.999);
        assert_relative_eq!(m, 3.0, epsilon = 1e-5);
        // Tiny activity and r = 0: estimate shrinks to zero.
        let (p, m, _) = bg_denoise(0.0, 0.1, 1e-6, 0.0, 1.0);
        assert!(p < 1e-5);
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn denoiser_matches_quadrature() {
        let (r, tau, pi, mu, v) = (0.7, 0.3, 0.2, 1.0, 0.5);
        let gauss = |x: f64, m: f64, s2: f64| (-(x - m).powi(2) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
        // Continuous part by midpoint rule, point mass handled separately.
        let (mut z, mut m1, mut m2) = ((1.0 - pi) * gauss(r, 0.0, tau), 0.0, 0.0);
        let h = 1e-4;
        let mut x = -10.0;
        while x < 10.0 {
            let wgt = pi * gauss(x, mu, v) * gauss(r, x, tau) * h;
            z += wgt;
            m1 += wgt * x;
            m2 += wgt * x * x;
            x += h;
        }
        let (_, mean, var) = bg_denoise(r, tau, pi, mu, v);
        assert_relative_eq!(mean, m1 / z, epsilon = 1e-6);
        assert_relative_eq!(var, m2 / z - (m1 / z).powi(2), epsilon = 1e-6);
    }

    #[test]
    fn scaled_identity_noiseless() {
        let n = 6;
        let a = Array2::from_shape_fn((n, n), |(i, j)| if i == j { C64::new(1.5, 2.0) } else { C64::new(0.0, 0.0) });
        let x = Array1::from(vec![0.0, 1.3, 0.0, -0.4, 2.0, 0.0]);
        let y = a.dot(&x.mapv(|v| C64::new(v, 0.0)));
        let prior = PriorParams {
            alpha: 0.5,
            noise_var: 0.0,
            ..Default::default()
        };
        let cfg = GampConfig {
            max_iters: 2000,
            tol: 1e-12,
            damping: 0.5,
            ..Default::default()
        };
        let out = gamp_single(&a, &y, &prior, &cfg).unwrap();
        let err = (&out.mean - &x).mapv(|v| v * v).sum().sqrt();
        assert!(err <= 1e-6 * x.mapv(|v| v * v).sum().sqrt(), "{err}");
    }

    #[test]
    fn zero_measurements_zero_mean_prior() {
        let a = Array2::from_shape_fn((4, 5), |(i, j)| C64::new((i + j) as f64 * 0.1 + 0.3, (i as f64 - j as f64) * 0.2));
        let y = Array1::zeros(4);
        let prior = PriorParams {
            eta: 0.0,
            noise_var: 0.01,
            ..Default::default()
        };
        let out = gamp_single(&a, &y, &prior, &GampConfig::default()).unwrap();
        assert!(out.mean.iter().all(|v| v.abs() < 1e-12));
        assert!(out.converged);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = Array2::zeros((3, 2));
        let y = Array1::zeros(3);
        assert!(gamp_single(&a, &y, &PriorParams::default(), &GampConfig::default()).is_err());
        let a = Array2::from_elem((3, 2), C64::new(1.0, 0.0));
        let y = Array1::zeros(2);
        assert!(gamp_single(&a, &y, &PriorParams::default(), &GampConfig::default()).is_err());
    }
}
