//! Monte Carlo orchestration: geometry → scene → channels → codebooks →
//! measurements → reconstruction → metrics, for every sweep point.

use std::collections::HashMap;
use std::sync::Mutex;

use ndarray::{Array1, Array2};
use rand::Rng;

use super::config::{Algorithm, CodebookKind, EmInit, ExperimentConfig, MethodConfig, SceneKind};
use super::output::{MetricRecord, ResultTable};
use crate::channel::{synthesize_measurements, ue_channels, FixedChannels, PhaseCodebook, PhaseMode, SensingMatrixSet, C64};
use crate::coherence::{optimize_from, OptimizerConfig};
use crate::error::{Error, Result};
use crate::geometry::{random_trajectory, Aabb, Point3, VoxelGrid};
use crate::metrics::{mean_std, to_db, two_point_detected, view_mean_ratio};
use crate::rng::{derive_seed, seeded, SimRng};
use crate::scene::{MultiViewScene, PriorParams};
use crate::solvers::{em_turbo_gamp, gamp_single, least_squares, sals_oracle, sp_baseline};

const SCENE_ATTEMPTS: usize = 1000;
const PLACEMENT_ATTEMPTS: usize = 10_000;

// Stream labels for the per-trial generators.
const STREAM_GEOMETRY: u64 = 1;
const STREAM_SCENE: u64 = 2;
const STREAM_CODEBOOK: u64 = 3;
const STREAM_NOISE: u64 = 4;
const STREAM_OPTIMIZER: u64 = 5;

/// Per-trial outcome of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// View-averaged `‖x̂ − x‖² / ‖x‖²`.
    pub ratio: f64,
    /// Two-point detection verdict, for two-point scenes.
    pub detected: Option<bool>,
    pub converged: bool,
}

/// Everything generated for one trial before reconstruction.
#[derive(Debug, Clone)]
pub struct TrialScenario {
    pub roi: VoxelGrid,
    pub ap: Point3,
    pub ue: Vec<Point3>,
    pub scene: MultiViewScene,
    /// Target voxels of a two-point scene.
    pub targets: Option<[usize; 2]>,
}

fn roi_exclusion(cfg: &ExperimentConfig, roi: &VoxelGrid) -> Aabb {
    roi.bounds().inflate(cfg.ue.roi_margin)
}

fn sample_outside<R: Rng + ?Sized>(region: &Aabb, exclusion: &Aabb, rng: &mut R) -> Result<Point3> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let p = region.sample(rng);
        if !exclusion.contains(p) {
            return Ok(p);
        }
    }
    Err(Error::Config("UE region leaves no room outside the ROI".into()))
}

/// UE positions for one trial.
pub fn ue_positions(cfg: &ExperimentConfig, roi: &VoxelGrid, seed: u64) -> Result<Vec<Point3>> {
    if let Some(p) = &cfg.ue.positions {
        return Ok(p.iter().copied().map(Point3::from).collect());
    }
    let region = cfg.ue.region()?;
    let exclusion = roi_exclusion(cfg, roi);
    let t = cfg.ue.views;
    if t == 1 || cfg.ue.step == 0.0 {
        let start = random_trajectory(region, 1, 1.0, Some(exclusion), seed)?.positions[0];
        return Ok(vec![start; t]);
    }
    Ok(random_trajectory(region, t, cfg.ue.step, Some(exclusion), seed)?.positions)
}

fn two_point_scene(cfg: &ExperimentConfig, roi: &VoxelGrid, views: usize) -> (MultiViewScene, [usize; 2]) {
    let c = cfg.roi.counts;
    let mut idx = [c[0] / 2, c[1] / 2, c[2] / 2];
    let axis = cfg.scene.pair_axis as usize;
    let mut other = idx;
    idx[axis] -= 1;
    other[axis] = idx[axis] + 1;
    let a = roi.linear_index(idx[0], idx[1], idx[2]);
    let b = roi.linear_index(other[0], other[1], other[2]);
    let n = roi.len();
    let mut supports = Array2::from_elem((views, n), false);
    let mut images = Array2::zeros((views, n));
    for t in 0..views {
        for &v in &[a, b] {
            supports[[t, v]] = true;
            images[[t, v]] = cfg.prior.eta;
        }
    }
    let scene = MultiViewScene {
        supports,
        amplitudes: images.clone(),
        images,
    };
    (scene, [a, b])
}

/// Geometry and ground truth of trial `trial` at the sweep point with seed
/// `point_seed`.
pub fn build_scenario(cfg: &ExperimentConfig, point_seed: u64, trial: usize) -> Result<TrialScenario> {
    let trial_seed = derive_seed(point_seed, trial as u64);
    let roi = cfg.roi.grid()?;
    let mut geo_rng = seeded(trial_seed, STREAM_GEOMETRY);
    let ap = match cfg.ap_position() {
        Some(p) => p,
        None => sample_outside(&cfg.ue.region()?, &roi_exclusion(cfg, &roi), &mut geo_rng)?,
    };
    let ue = ue_positions(cfg, &roi, geo_rng.random())?;
    let views = ue.len();
    let (scene, targets) = match cfg.scene.kind {
        SceneKind::TwoPoint => {
            let (s, t) = two_point_scene(cfg, &roi, views);
            (s, Some(t))
        }
        SceneKind::Prior => {
            let mut rng = seeded(trial_seed, STREAM_SCENE);
            let mut attempt = 0;
            loop {
                let s = MultiViewScene::generate(&cfg.prior, roi.len(), views, cfg.scene.truncate_negative, &mut rng)?;
                if s.all_views_nonzero() {
                    break (s, None);
                }
                attempt += 1;
                if attempt >= SCENE_ATTEMPTS {
                    return Err(Error::Numerical("could not draw a scene with every view nonempty".into()));
                }
            }
        }
    };
    Ok(TrialScenario {
        roi,
        ap,
        ue,
        scene,
        targets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MeasurementKey {
    k: usize,
    kind: CodebookKind,
    mode: PhaseMode,
}

impl MeasurementKey {
    fn of(cfg: &ExperimentConfig, m: &MethodConfig) -> Self {
        MeasurementKey {
            k: m.k.unwrap_or(cfg.codebook.k),
            kind: m.codebook.unwrap_or(cfg.codebook.kind),
            mode: m.mode.unwrap_or(cfg.codebook.mode),
        }
    }

    fn label(&self) -> u64 {
        let (kind, step, iters) = match self.kind {
            CodebookKind::Random => (0u64, 0.0, 0),
            CodebookKind::Optimized { step, iterations } => (1, step, iterations),
        };
        let bits = match self.mode {
            PhaseMode::Continuous => 0,
            PhaseMode::Discrete { bits } => bits as u64,
        };
        let mut h = derive_seed(self.k as u64, kind);
        h = derive_seed(h, bits);
        h = derive_seed(h, step.to_bits());
        derive_seed(h, iters as u64)
    }
}

/// Optimised codebooks keyed by (measurement label, view, geometry
/// fingerprint); reused across trials and sweep points whenever the
/// geometry does not change between trials.
#[derive(Debug, Default)]
pub struct CodebookCache(Mutex<HashMap<(u64, usize, u64), PhaseCodebook>>);

impl CodebookCache {
    pub fn new() -> Self {
        Self::default()
    }
}

fn geometry_fingerprint(cfg: &ExperimentConfig, ap: Point3, ue: &[Point3]) -> u64 {
    let mut h = derive_seed(cfg.gain.to_bits(), cfg.roi.voxel_size.to_bits());
    let mut mix = |v: f64| h = derive_seed(h, v.to_bits());
    for v in cfg.roi.center.iter().chain(&cfg.ris.center) {
        mix(*v);
    }
    for c in cfg.roi.counts.iter().chain([&cfg.ris.rows, &cfg.ris.cols]) {
        mix(*c as f64);
    }
    mix(cfg.ris.spacing);
    for p in std::iter::once(&ap).chain(ue) {
        mix(p.x);
        mix(p.y);
        mix(p.z);
    }
    h
}

fn geometry_is_fixed(cfg: &ExperimentConfig) -> bool {
    cfg.ap.position.is_some() && cfg.ue.positions.is_some()
}

fn codebooks_for(
    cfg: &ExperimentConfig,
    key: &MeasurementKey,
    sc: &TrialScenario,
    fixed: &FixedChannels,
    ue_to_roi: &[Array1<C64>],
    trial_seed: u64,
    cache: &CodebookCache,
) -> Result<Vec<PhaseCodebook>> {
    let m = fixed.elements();
    let count = if cfg.codebook.per_view { ue_to_roi.len() } else { 1 };
    let mut rng = seeded(derive_seed(trial_seed, key.label()), STREAM_CODEBOOK);
    match key.kind {
        CodebookKind::Random => (0..count).map(|_| PhaseCodebook::random(key.k, m, key.mode, &mut rng)).collect(),
        CodebookKind::Optimized { step, iterations } => {
            let shared = geometry_is_fixed(cfg);
            let fp = geometry_fingerprint(cfg, sc.ap, &sc.ue);
            let opt = OptimizerConfig { step, iterations };
            (0..count)
                .map(|t| {
                    if shared {
                        if let Some(cb) = cache.0.lock().unwrap().get(&(key.label(), t, fp)) {
                            return Ok(cb.clone());
                        }
                    }
                    let seed = if shared { cfg.seed } else { trial_seed };
                    let mut r = seeded(derive_seed(derive_seed(seed, key.label()), t as u64), STREAM_OPTIMIZER);
                    let init = PhaseCodebook::random(key.k, m, PhaseMode::Continuous, &mut r)?;
                    let b = fixed.view_matrix(&ue_to_roi[t])?;
                    let cb = optimize_from(&b, init, &opt)?.codebook;
                    if shared {
                        cache.0.lock().unwrap().insert((key.label(), t, fp), cb.clone());
                    }
                    Ok(cb)
                })
                .collect()
        }
    }
}

fn em_init(method: &MethodConfig, prior: &PriorParams, a: &[Array2<C64>], y: &[Array1<C64>]) -> PriorParams {
    match method.em_init {
        EmInit::Config => *prior,
        EmInit::Perturbed => PriorParams {
            alpha: (prior.alpha * 1.5).min(0.5),
            p01: (prior.p01 * 1.5).min(1.0),
            sigma2: prior.sigma2 * 1.5,
            rho: 1.0 - ((1.0 - prior.rho) * 1.5).min(1.0),
            ..*prior
        },
        EmInit::Data => {
            // E‖y‖² ≈ α (η² + ς²) Σ‖a_n‖² + K χ²
            let mut num = 0.0;
            let mut den = 0.0;
            for (at, yt) in a.iter().zip(y) {
                num += yt.iter().map(|z| z.norm_sqr()).sum::<f64>() - yt.len() as f64 * prior.noise_var;
                den += at.iter().map(|z| z.norm_sqr()).sum::<f64>() * (prior.eta.powi(2) + prior.sigma2);
            }
            let alpha = if den > 0.0 { (num / den).clamp(1e-3, 0.5) } else { prior.alpha };
            PriorParams { alpha, ..*prior }
        }
    }
}

fn support_of(scene: &MultiViewScene, t: usize) -> Vec<usize> {
    (0..scene.voxels()).filter(|&n| scene.supports[[t, n]] && scene.images[[t, n]] != 0.0).collect()
}

/// Run one method on prepared measurements; returns (estimates T × N, converged).
pub fn solve(
    method: &MethodConfig,
    prior: &PriorParams,
    a: &[Array2<C64>],
    y: &[Array1<C64>],
    scene: &MultiViewScene,
) -> Result<(Array2<f64>, bool)> {
    let t_len = a.len();
    let n = scene.voxels();
    let mut est = Array2::zeros((t_len, n));
    let mut converged = true;
    match method.algorithm {
        Algorithm::Turbo => {
            let init = em_init(method, prior, a, y);
            let out = em_turbo_gamp(a, y, &init, &method.turbo)?;
            return Ok((out.estimates, out.converged));
        }
        Algorithm::Gamp => {
            for t in 0..t_len {
                let out = gamp_single(&a[t], &y[t], prior, &method.gamp)?;
                converged &= out.converged;
                est.row_mut(t).assign(&out.mean);
            }
        }
        Algorithm::Sp | Algorithm::Sals | Algorithm::Ls => {
            for t in 0..t_len {
                let out = match method.algorithm {
                    Algorithm::Sp => sp_baseline(&a[t], &y[t], support_of(scene, t).len())?,
                    Algorithm::Sals => sals_oracle(&a[t], &y[t], &support_of(scene, t))?,
                    _ => least_squares(&a[t], &y[t])?,
                };
                est.row_mut(t).assign(&out.estimate);
            }
        }
    }
    Ok((est, converged))
}

/// One Monte Carlo trial for every method of `cfg`.
pub fn run_trial(cfg: &ExperimentConfig, point_seed: u64, trial: usize, cache: &CodebookCache) -> Vec<Result<TrialOutcome>> {
    let prepared = (|| -> Result<_> {
        let sc = build_scenario(cfg, point_seed, trial)?;
        let ris = cfg.ris.array()?;
        let fixed = FixedChannels::build(&sc.roi, &ris, sc.ap, cfg.gain)?;
        let h = ue_channels(&sc.roi, &sc.ue)?;
        Ok((sc, fixed, h))
    })();
    let (sc, fixed, h) = match prepared {
        Ok(v) => v,
        Err(e) => {
            let msg = e.to_string();
            return cfg.methods.iter().map(|_| Err(Error::Numerical(msg.clone()))).collect();
        }
    };
    let trial_seed = derive_seed(point_seed, trial as u64);
    let mut measured: Vec<(MeasurementKey, Result<(SensingMatrixSet, Vec<Array1<C64>>, f64)>)> = Vec::new();
    let mut results = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let key = MeasurementKey::of(cfg, method);
        if !measured.iter().any(|(k, _)| *k == key) {
            let m = (|| -> Result<_> {
                let cbs = codebooks_for(cfg, &key, &sc, &fixed, &h, trial_seed, cache)?;
                let sensing = SensingMatrixSet::build(&fixed, &h, &cbs)?;
                let mut rng: SimRng = seeded(derive_seed(trial_seed, key.label()), STREAM_NOISE);
                let ms = synthesize_measurements(&sensing, &sc.scene.images, cfg.snr_db, &mut rng)?;
                Ok((sensing, ms.y, ms.noise_var))
            })();
            measured.push((key, m));
        }
        let (_, m) = measured.iter().find(|(k, _)| *k == key).unwrap();
        let outcome = match m {
            Err(e) => Err(Error::Numerical(e.to_string())),
            Ok((sensing, y, noise_var)) => {
                let prior = PriorParams {
                    noise_var: noise_var.max(f64::MIN_POSITIVE),
                    ..cfg.prior
                };
                solve(method, &prior, &sensing.a, y, &sc.scene).and_then(|(est, converged)| {
                    let ratio = view_mean_ratio(est.view(), sc.scene.images.view())?;
                    let detected = match sc.targets {
                        Some(t) => Some(two_point_detected(est.mean_axis(ndarray::Axis(0)).unwrap().view(), t)?),
                        None => None,
                    };
                    Ok(TrialOutcome {
                        ratio,
                        detected,
                        converged,
                    })
                })
            }
        };
        results.push(outcome);
    }
    results
}

fn worker_count(trials: usize) -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(trials).max(1)
}

/// All trials of one sweep point, in trial order.
pub fn run_point(cfg: &ExperimentConfig, point_seed: u64, cache: &CodebookCache) -> Vec<Vec<Result<TrialOutcome>>> {
    let workers = worker_count(cfg.trials);
    if workers == 1 {
        return (0..cfg.trials).map(|i| run_trial(cfg, point_seed, i, cache)).collect();
    }
    let mut slots: Vec<Option<Vec<Result<TrialOutcome>>>> = (0..cfg.trials).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..cfg.trials)
                        .step_by(workers)
                        .map(|i| (i, run_trial(cfg, point_seed, i, cache)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("trial worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every trial ran")).collect()
}

fn summarize(
    point: (Option<f64>, Option<f64>),
    method: &MethodConfig,
    views: usize,
    outcomes: &[&Result<TrialOutcome>],
) -> Vec<MetricRecord> {
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = outcomes.len() - ok.len();
    let n = ok.len();
    let record = |metric: &str, mean: f64, std: f64, lo: f64, hi: f64| MetricRecord {
        sweep_value: point.0,
        series_value: point.1,
        method: method.label.clone(),
        metric: metric.to_string(),
        mean,
        std,
        ci_low: lo,
        ci_high: hi,
        trials: n,
        failures,
    };
    let mut out = Vec::new();
    let ratios: Vec<f64> = ok.iter().map(|o| o.ratio).collect();
    let (m, s) = mean_std(&ratios);
    let dbs: Vec<f64> = ratios.iter().map(|&r| to_db(r)).collect();
    let (_, s_db) = mean_std(&dbs);
    let half = if n > 0 { 1.96 * s / (n as f64).sqrt() } else { f64::NAN };
    let name = if views == 1 { "nmse_db" } else { "avenmse_db" };
    out.push(record(name, to_db(m), s_db, to_db(m - half), to_db(m + half)));
    if ok.iter().any(|o| o.detected.is_some()) {
        let hits: Vec<f64> = ok.iter().map(|o| if o.detected == Some(true) { 1.0 } else { 0.0 }).collect();
        let (phi, _) = mean_std(&hits);
        let se = (phi * (1.0 - phi) / n.max(1) as f64).sqrt();
        out.push(record("phi", phi, se, (phi - 1.96 * se).max(0.0), (phi + 1.96 * se).min(1.0)));
    }
    let conv: Vec<f64> = ok.iter().map(|o| if o.converged { 1.0 } else { 0.0 }).collect();
    let (c, cs) = mean_std(&conv);
    out.push(record("converged", c, cs, c, c));
    out
}

/// Run every sweep point and trial of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let points = cfg.labelled_points()?;
    let mut table = ResultTable::new(cfg);
    let cache = CodebookCache::new();
    for (pi, point) in points.iter().enumerate() {
        let point_seed = derive_seed(cfg.seed, pi as u64);
        let outcomes = run_point(&point.config, point_seed, &cache);
        let views = point.config.ue.view_count();
        for (mi, method) in point.config.methods.iter().enumerate() {
            let per_method: Vec<&Result<TrialOutcome>> = outcomes.iter().map(|o| &o[mi]).collect();
            table.records.extend(summarize((point.sweep, point.series), method, views, &per_method));
        }
    }
    Ok(table)
}
