//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod checks;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use ris_imager::geometry::{Aabb, SceneGeometry};
use ris_imager::{PhaseCodebook, PlanarArray, Point3, PriorParams, VoxelGrid};

/// Sensing matrix of view `t` by summing every UE → voxel → element → AP
/// path separately.
pub fn direct_sensing_matrix(geo: &SceneGeometry, cb: &PhaseCodebook, t: usize, gain: f64) -> Array2<C64> {
    let voxels = geo.roi.voxel_centers();
    let elements = geo.ris.element_positions();
    let phases = cb.phases();
    let ue = geo.ue[t];
    Array2::from_shape_fn((cb.configurations(), voxels.len()), |(k, n)| {
        let mut acc = C64::new(0.0, 0.0);
        for (m, e) in elements.iter().enumerate() {
            let d1 = ue.distance(voxels[n]);
            let d2 = voxels[n].distance(*e);
            let d3 = e.distance(geo.ap);
            let path = C64::from_polar(1.0, -2.0 * PI * (d1 + d2 + d3)) / ((4.0 * PI).powf(1.5) * d1 * d2 * d3);
            acc += path * C64::from_polar(1.0, -phases[[k, m]]);
        }
        acc * gain
    })
}

/// Small random scenario: grid of `counts` voxels, `side × side` RIS,
/// AP and `views` UE positions drawn away from the ROI.
pub fn small_geometry<R: Rng>(counts: [usize; 3], side: usize, views: usize, rng: &mut R) -> SceneGeometry {
    let roi = VoxelGrid::new(
        Point3::new(rng.random_range(15.0..30.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
        counts,
        rng.random_range(0.5..2.0),
    )
    .unwrap();
    let ris = PlanarArray::new(Point3::ORIGIN, side, side, 0.5).unwrap();
    let region = Aabb::new(Point3::new(2.0, -30.0, -10.0), Point3::new(60.0, 30.0, 10.0)).unwrap();
    let keep_out = roi.bounds().inflate(2.0);
    let mut draw = || loop {
        let p = region.sample(rng);
        if !keep_out.contains(p) {
            return p;
        }
    };
    let ap = draw();
    let ue = (0..views).map(|_| draw()).collect();
    SceneGeometry { roi, ris, ap, ue }
}

pub fn complex_gaussian<R: Rng>(rows: usize, cols: usize, var: f64, rng: &mut R) -> Array2<C64> {
    let s = (var / 2.0).sqrt();
    Array2::from_shape_fn((rows, cols), |_| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

fn stacked(a: &Array2<C64>) -> DMatrix<f64> {
    let (k, n) = a.dim();
    DMatrix::from_fn(2 * k, n, |i, j| if i < k { a[[i, j]].re } else { a[[i - k, j]].im })
}

/// Log prior of a support path under the stationary two-state chain.
fn support_log_prior(path: &[bool], p: &PriorParams) -> f64 {
    let p10 = p.p10();
    let mut lp = if path[0] { p.alpha.ln() } else { (1.0 - p.alpha).ln() };
    for w in path.windows(2) {
        let pr = match (w[0], w[1]) {
            (true, true) => 1.0 - p.p01,
            (true, false) => p.p01,
            (false, true) => p10,
            (false, false) => 1.0 - p10,
        };
        lp += pr.ln();
    }
    lp
}

/// Exact posterior mean of the images given `y_t = A_t x_t + w_t`, by
/// enumerating every joint support and conditioning the Gaussian
/// amplitudes. Only usable for N·T ≲ 12.
pub fn exact_mmse(a: &[Array2<C64>], y: &[Array1<C64>], p: &PriorParams) -> Array2<f64> {
    let t_len = a.len();
    let n = a[0].ncols();
    let dim = n * t_len;
    // Amplitude prior: independent voxels, stationary AR(1) over views.
    let mut cov = DMatrix::zeros(dim, dim);
    let mu = DVector::from_element(dim, p.eta);
    for v in 0..n {
        for t1 in 0..t_len {
            for t2 in 0..t_len {
                let lag = (t1 as i32 - t2 as i32).unsigned_abs() as i32;
                cov[(t1 * n + v, t2 * n + v)] = p.sigma2 * p.rho.powi(lag);
            }
        }
    }
    let rows: usize = a.iter().map(|m| 2 * m.nrows()).sum();
    let mut h_full = DMatrix::zeros(rows, dim);
    let mut yr = DVector::zeros(rows);
    let mut r0 = 0;
    for t in 0..t_len {
        let s = stacked(&a[t]);
        let k = a[t].nrows();
        h_full.view_mut((r0, t * n), (2 * k, n)).copy_from(&s);
        for i in 0..k {
            yr[r0 + i] = y[t][i].re;
            yr[r0 + k + i] = y[t][i].im;
        }
        r0 += 2 * k;
    }
    let noise = p.noise_var / 2.0;

    let mut log_w = Vec::new();
    let mut means = Vec::new();
    for mask in 0..(1u64 << dim) {
        let on = |i: usize| mask >> i & 1 == 1;
        let mut lp = 0.0;
        for v in 0..n {
            let path: Vec<bool> = (0..t_len).map(|t| on(t * n + v)).collect();
            lp += support_log_prior(&path, p);
        }
        let mut h = h_full.clone();
        for i in 0..dim {
            if !on(i) {
                h.column_mut(i).fill(0.0);
            }
        }
        let c = &h * &cov * h.transpose() + DMatrix::identity(rows, rows) * noise;
        let chol = c.clone().cholesky().expect("covariance is positive definite");
        let resid = &yr - &h * &mu;
        let sol = chol.solve(&resid);
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        lp += -0.5 * resid.dot(&sol) - 0.5 * logdet;
        let post = &mu + &cov * h.transpose() * sol;
        let x = DVector::from_fn(dim, |i, _| if on(i) { post[i] } else { 0.0 });
        log_w.push(lp);
        means.push(x);
    }
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut out = Array2::zeros((t_len, n));
    for (wi, m) in w.iter().zip(&means) {
        for t in 0..t_len {
            for v in 0..n {
                out[[t, v]] += wi / z * m[t * n + v];
            }
        }
    }
    out
}

/// Posterior `P(s_t = 1)` of one voxel's support chain given per-view
/// likelihood ratios `ev[t] = (p(obs | s=0), p(obs | s=1))`.
pub fn enumerate_support_posterior(ev: &[[f64; 2]], p: &PriorParams) -> Vec<f64> {
    let t_len = ev.len();
    let mut num = vec![0.0; t_len];
    let mut z = 0.0;
    for mask in 0..(1usize << t_len) {
        let path: Vec<bool> = (0..t_len).map(|t| mask >> t & 1 == 1).collect();
        let mut w = support_log_prior(&path, p).exp();
        for t in 0..t_len {
            w *= ev[t][path[t] as usize];
        }
        z += w;
        for t in 0..t_len {
            if path[t] {
                num[t] += w;
            }
        }
    }
    num.iter().map(|v| v / z).collect()
}

/// Posterior mean and variance of a stationary AR(1) amplitude chain given
/// independent Gaussian evidence `(mean, precision)` per view.
pub fn gaussian_chain_posterior(evidence: &[(f64, f64)], p: &PriorParams) -> (Vec<f64>, Vec<f64>) {
    let t_len = evidence.len();
    let cov = DMatrix::from_fn(t_len, t_len, |i, j| p.sigma2 * p.rho.powi((i as i32 - j as i32).abs()));
    let mut prec = cov.try_inverse().expect("AR(1) covariance is invertible");
    let mut info = &prec * DVector::from_element(t_len, p.eta);
    for (t, &(m, q)) in evidence.iter().enumerate() {
        prec[(t, t)] += q;
        info[t] += q * m;
    }
    let post_cov = prec.try_inverse().expect("posterior precision is invertible");
    let mean = &post_cov * info;
    (mean.iter().copied().collect(), post_cov.diagonal().iter().copied().collect())
}

/// Relative RMS gap between the joint turbo estimate and the enumerated
/// posterior mean over `instances` tiny random problems (N = 5, K = 6,
/// T = 2) with the true parameters supplied.
pub fn turbo_vs_exact_rms(instances: usize, seed: u64) -> f64 {
    use ris_imager::solvers::{em_turbo_gamp, EmConfig, GampConfig, TurboConfig};
    use ris_imager::MultiViewScene;
    use rand::SeedableRng;

    let p = PriorParams {
        alpha: 0.3,
        eta: 1.0,
        sigma2: 0.3,
        p01: 0.2,
        rho: 0.8,
        noise_var: 0.05,
    };
    let (n, k, t_len) = (5, 6, 2);
    let cfg = TurboConfig {
        gamp: GampConfig {
            max_iters: 500,
            tol: 1e-8,
            ..Default::default()
        },
        max_outer: 20,
        tol: 1e-8,
        em: EmConfig::disabled(),
        ..Default::default()
    };
    let mut err = 0.0;
    let mut norm = 0.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let a: Vec<_> = (0..t_len).map(|_| complex_gaussian(k, n, 1.0 / k as f64, &mut rng)).collect();
        let scene = MultiViewScene::generate(&p, n, t_len, false, &mut rng).unwrap();
        let noise = complex_gaussian(k, t_len, p.noise_var, &mut rng);
        let y: Vec<Array1<C64>> = (0..t_len)
            .map(|t| a[t].dot(&scene.images.row(t).mapv(C64::from)) + noise.column(t))
            .collect();
        let exact = exact_mmse(&a, &y, &p);
        let turbo = em_turbo_gamp(&a, &y, &p, &cfg).unwrap();
        err += (&turbo.estimates - &exact).mapv(|v| v * v).sum();
        norm += exact.mapv(|v| v * v).sum();
    }
    (err / norm).sqrt()
}
