//! Property checks parameterised by a seed, shared by the proptest suite
//! and the acceptance run.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ris_imager::channel::PhaseMode;
use ris_imager::coherence::{beta_prime, gradient_beta_prime, optimize_from, psf, OptimizerConfig};
use ris_imager::scene::{sample_amplitude_process, sample_support_chain};
use ris_imager::solvers::{bg_denoise, gamp_solve, stack_real, ElementPrior, GampConfig, RealSystem};
use ris_imager::{PhaseCodebook, PriorParams};

use super::complex_gaussian;

pub type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex residual energy equals the stacked real residual energy, and
/// the rescaled system carries the same relation times `scale²`.
pub fn real_stacking(seed: u64) -> Check {
    let mut r = rng(seed);
    let k = r.random_range(1..12);
    let n = r.random_range(1..12);
    let a = complex_gaussian(k, n, 1.0, &mut r);
    let y = complex_gaussian(k, 1, 1.0, &mut r).column(0).to_owned();
    let x = Array1::from_shape_fn(n, |_| r.random_range(-2.0..2.0));
    let direct: f64 = (&y - &a.dot(&x.mapv(C64::from))).iter().map(|z| z.norm_sqr()).sum();
    let (ar, yr) = stack_real(&a, &y).map_err(|e| e.to_string())?;
    let xr = nalgebra::DVector::from_iterator(n, x.iter().copied());
    let stacked = (yr - ar * xr).norm_squared();
    ensure!((direct - stacked).abs() <= 1e-10 * direct.max(1.0), "{direct} vs {stacked}");
    let sys = RealSystem::new(&a, &y, 0.3).map_err(|e| e.to_string())?;
    let scaled: f64 = (&sys.y - &sys.a.dot(&x)).mapv(|v| v * v).sum();
    let s2 = sys.scale * sys.scale;
    ensure!((scaled - s2 * direct).abs() <= 1e-10 * scaled.max(1.0), "scaled residual");
    ensure!((sys.to_complex_noise(sys.noise_var) - 0.3).abs() < 1e-12, "noise round trip");
    let col_sq: f64 = sys.a_sq.sum() / n as f64;
    ensure!((col_sq - 1.0).abs() < 1e-10, "mean column norm² {col_sq}");
    Ok(())
}

/// Central differences of `β′(ΩB)` along a random perturbation match
/// `4 Re tr(∇ᴴΔ)`.
pub fn beta_gradient(seed: u64) -> Check {
    let mut r = rng(seed);
    let k = r.random_range(1..6);
    let m = r.random_range(1..7);
    let n = r.random_range(1..6);
    let omega = complex_gaussian(k, m, 1.0, &mut r);
    let b = complex_gaussian(m, n, 1.0 / (k * m) as f64, &mut r);
    let delta = complex_gaussian(k, m, 1.0, &mut r);
    let grad = gradient_beta_prime(&omega, &b).map_err(|e| e.to_string())?;
    let analytic = 4.0 * grad.iter().zip(&delta).map(|(g, d)| (g.conj() * d).re).sum::<f64>();
    let h = 1e-5;
    let f = |s: f64| beta_prime(&(&omega + &delta.mapv(|d| d * s)).dot(&b));
    let numeric = (f(h) - f(-h)) / (2.0 * h);
    ensure!(
        (analytic - numeric).abs() <= 1e-6 * (1.0 + analytic.abs()),
        "analytic {analytic} vs numeric {numeric}"
    );
    Ok(())
}

/// Optimised codebooks stay unit modulus and `β′` never increases.
pub fn projection_and_monotone_trace(seed: u64) -> Check {
    let mut r = rng(seed);
    let m = r.random_range(2..10);
    let n = r.random_range(2..10);
    let k = r.random_range(1..8);
    let b = complex_gaussian(m, n, 1.0, &mut r);
    let init = PhaseCodebook::random(k, m, PhaseMode::Continuous, &mut r).map_err(|e| e.to_string())?;
    let cfg = OptimizerConfig {
        step: r.random_range(0.1..1000.0),
        iterations: 30,
    };
    let out = optimize_from(&b, init, &cfg).map_err(|e| e.to_string())?;
    for z in out.codebook.matrix() {
        ensure!((z.norm() - 1.0).abs() < 1e-12, "|ω| = {}", z.norm());
    }
    for w in out.trace.windows(2) {
        ensure!(w[1] <= w[0], "trace rose {} -> {}", w[0], w[1]);
    }
    Ok(())
}

/// PSF is symmetric with unit diagonal and entries in [0, 1].
pub fn psf_shape(seed: u64) -> Check {
    let mut r = rng(seed);
    let a = complex_gaussian(r.random_range(1..8), r.random_range(1..8), 1.0, &mut r);
    let p = psf(&a).map_err(|e| e.to_string())?;
    for ((i, j), &v) in p.indexed_iter() {
        ensure!((v - p[[j, i]]).abs() < 1e-12, "asymmetric");
        ensure!((-1e-12..=1.0 + 1e-12).contains(&v), "entry {v}");
        if i == j {
            ensure!((v - 1.0).abs() < 1e-12, "diagonal {v}");
        }
    }
    Ok(())
}

/// Bernoulli-Gaussian denoiser against the two-component mixture posterior.
pub fn denoiser(seed: u64) -> Check {
    let mut r = rng(seed);
    let x = r.random_range(-3.0..3.0);
    let tau = r.random_range(0.01..2.0);
    let pi = r.random_range(0.01..0.99);
    let m = r.random_range(-2.0..2.0);
    let v = r.random_range(0.05..3.0);
    let gauss = |z: f64, mu: f64, var: f64| (-(z - mu) * (z - mu) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let w1 = pi * gauss(x, m, v + tau);
    let w0 = (1.0 - pi) * gauss(x, 0.0, tau);
    let post = w1 / (w0 + w1);
    let cv = v * tau / (v + tau);
    let cm = (m * tau + x * v) / (v + tau);
    let mean = post * cm;
    let var = post * (cv + cm * cm) - mean * mean;
    let (gp, gm, gv) = bg_denoise(x, tau, pi, m, v);
    ensure!((gm - mean).abs() < 1e-9, "mean {gm} vs {mean}");
    ensure!((gv - var).abs() < 1e-9, "var {gv} vs {var}");
    ensure!((gp - post).abs() < 1e-9, "activity {gp} vs {post}");
    Ok(())
}

/// Noiseless recovery through a scaled identity. The denoiser gain sits
/// near one until the active variances collapse, so this needs more
/// iterations and damping than the defaults.
pub fn gamp_identity(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(4..30);
    let c = r.random_range(0.1..10.0);
    let x = Array1::from_shape_fn(n, |_| if r.random::<f64>() < 0.3 { r.random_range(0.5..2.0) } else { 0.0 });
    let a = Array2::from_diag(&Array1::from_elem(n, C64::new(c, 0.0)));
    let y = a.dot(&x.mapv(C64::from));
    let sys = RealSystem::new(&a, &y, 0.0).map_err(|e| e.to_string())?;
    let prior = ElementPrior::uniform(n, 0.3, 1.0, 1.0);
    let cfg = GampConfig {
        max_iters: 2000,
        tol: 1e-12,
        damping: 0.5,
        ..Default::default()
    };
    let out = gamp_solve(&sys, &prior, &cfg, None).map_err(|e| e.to_string())?;
    for j in 0..n {
        ensure!((out.mean[j] - x[j]).abs() < 1e-6, "x[{j}] = {} vs {}", out.mean[j], x[j]);
    }
    Ok(())
}

/// Stationary occupancy of the sampled support chains.
pub fn markov_occupancy(seed: u64) -> Check {
    let mut r = rng(seed);
    let p = PriorParams {
        alpha: r.random_range(0.02..0.4),
        p01: r.random_range(0.05..0.9),
        ..Default::default()
    };
    let (n, t) = (20_000, 6);
    let s = sample_support_chain(&p, n, t, &mut r).map_err(|e| e.to_string())?;
    let se = (p.alpha * (1.0 - p.alpha) / n as f64).sqrt();
    for k in 0..t {
        let occ = s.row(k).iter().filter(|&&b| b).count() as f64 / n as f64;
        ensure!((occ - p.alpha).abs() < 5.0 * se, "view {k}: occupancy {occ} vs {}", p.alpha);
    }
    Ok(())
}

/// Stationary mean, variance and lag-one correlation of the AR(1) amplitudes.
pub fn amplitude_stationarity(seed: u64) -> Check {
    let mut r = rng(seed);
    let p = PriorParams {
        eta: r.random_range(-1.0..2.0),
        sigma2: r.random_range(0.1..2.0),
        rho: r.random_range(0.0..0.99),
        ..Default::default()
    };
    let (n, t) = (20_000, 5);
    let a = sample_amplitude_process(&p, n, t, &mut r).map_err(|e| e.to_string())?;
    let sd = p.sigma2.sqrt();
    for k in 0..t {
        let row = a.row(k);
        let mean = row.mean().unwrap();
        let var = row.mapv(|v| (v - mean) * (v - mean)).sum() / (n - 1) as f64;
        ensure!((mean - p.eta).abs() < 5.0 * sd / (n as f64).sqrt(), "view {k}: mean {mean}");
        ensure!((var / p.sigma2 - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(), "view {k}: variance {var}");
    }
    let cov = (a.row(t - 1).to_owned() - p.eta).dot(&(a.row(t - 2).to_owned() - p.eta)) / n as f64;
    ensure!((cov / p.sigma2 - p.rho).abs() < 0.05, "lag-one correlation {}", cov / p.sigma2);
    Ok(())
}

pub const ALL: &[(&str, fn(u64) -> Check)] = &[
    ("real stacking", real_stacking),
    ("beta gradient", beta_gradient),
    ("unit-modulus projection", projection_and_monotone_trace),
    ("psf shape", psf_shape),
    ("bg denoiser", denoiser),
    ("gamp identity", gamp_identity),
    ("markov occupancy", markov_occupancy),
    ("amplitude stationarity", amplitude_stationarity),
];
