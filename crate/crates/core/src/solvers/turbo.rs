//! Joint multi-view reconstruction: per-view GAMP exchanging extrinsic
//! messages with smoothers over the support and amplitude chains, with EM
//! learning of the model parameters between passes.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::gamp::{active_log_ratio, gamp_solve, ElementPrior, GampConfig, GampOutput, GampState, RealSystem, PROB_CLAMP};
use crate::channel::C64;
use crate::error::{Error, Result};
use crate::scene::PriorParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportModel {
    /// Per-voxel binary Markov chain across views.
    #[default]
    Markov,
    /// One support shared by every view.
    JointSparse,
    /// Views independent.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeModel {
    /// AR(1) evolution across views.
    #[default]
    GaussMarkov,
    /// Views independent.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub enabled: bool,
    pub learn_alpha: bool,
    pub learn_transition: bool,
    pub learn_amplitude: bool,
    pub learn_noise: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            enabled: true,
            learn_alpha: true,
            learn_transition: true,
            learn_amplitude: true,
            learn_noise: true,
        }
    }
}

impl EmConfig {
    pub fn disabled() -> Self {
        EmConfig {
            enabled: false,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TurboConfig {
    pub gamp: GampConfig,
    pub max_outer: usize,
    /// Stop when the relative change of all estimates between outer
    /// iterations falls below this.
    pub tol: f64,
    pub support: SupportModel,
    pub amplitude: AmplitudeModel,
    pub em: EmConfig,
    /// Factor applied to GAMP's effective-noise variance before it is
    /// turned into messages for the other views; 1 trusts GAMP as is.
    pub evidence_inflation: f64,
}

impl Default for TurboConfig {
    fn default() -> Self {
        TurboConfig {
            gamp: GampConfig::default(),
            max_outer: 10,
            tol: 1e-4,
            support: SupportModel::Markov,
            amplitude: AmplitudeModel::GaussMarkov,
            em: EmConfig::default(),
            evidence_inflation: 1.0,
        }
    }
}

/// Extrinsic evidence produced by the per-view GAMP runs.
#[derive(Debug, Clone)]
pub struct ViewMessages {
    /// `P(s = 1)` implied by the measurements alone (T × N).
    pub support: Array2<f64>,
    /// Gaussian evidence on the amplitude: mean and precision (T × N).
    /// Precision 0 means uninformative.
    pub amp_mean: Array2<f64>,
    pub amp_prec: Array2<f64>,
}

impl ViewMessages {
    pub fn uninformative(t: usize, n: usize) -> Self {
        ViewMessages {
            support: Array2::from_elem((t, n), 0.5),
            amp_mean: Array2::zeros((t, n)),
            amp_prec: Array2::zeros((t, n)),
        }
    }
}

/// Posterior statistics from one structure pass, consumed by the M-step.
#[derive(Debug, Clone)]
pub struct PosteriorStats {
    /// Smoothed `P(s_{t,n} = 1)` (T × N).
    pub activity: Array2<f64>,
    /// Σ over t ≥ 2 and n of `P(s_{t-1} = 1, s_t = 0)`.
    pub deaths: f64,
    /// Σ over t ≥ 2 and n of `P(s_{t-1} = 1)`.
    pub alive: f64,
    /// Smoothed amplitude moments (T × N).
    pub amp_mean: Array2<f64>,
    pub amp_var: Array2<f64>,
    /// `Cov(a_t, a_{t-1})` for t ≥ 2, row t-1 (T-1 × N).
    pub amp_lag_cov: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct StructureOutput {
    pub priors: Vec<ElementPrior>,
    pub stats: PosteriorStats,
}

fn transition(p: &PriorParams, model: SupportModel) -> [[f64; 2]; 2] {
    match model {
        SupportModel::Markov => {
            let p10 = p.p10().min(1.0);
            [[1.0 - p10, p10], [p.p01, 1.0 - p.p01]]
        }
        SupportModel::JointSparse => [[1.0, 0.0], [0.0, 1.0]],
        SupportModel::Independent => [[1.0 - p.alpha, p.alpha], [1.0 - p.alpha, p.alpha]],
    }
}

fn normalize2(v: [f64; 2]) -> [f64; 2] {
    let s = v[0] + v[1];
    if s > 0.0 && s.is_finite() {
        [v[0] / s, v[1] / s]
    } else {
        [0.5, 0.5]
    }
}

/// Forward-backward smoothing over the support chains and the amplitude
/// chains. Returns per-view extrinsic priors (excluding each view's own
/// evidence) and posterior statistics.
pub fn structure_pass(
    msgs: &ViewMessages,
    p: &PriorParams,
    support_model: SupportModel,
    amplitude_model: AmplitudeModel,
) -> Result<StructureOutput> {
    let (t_len, n) = msgs.support.dim();
    if msgs.amp_mean.dim() != (t_len, n) || msgs.amp_prec.dim() != (t_len, n) {
        return Err(Error::dims("view messages", format!("{t_len}x{n}"), format!("{:?}", msgs.amp_mean.dim())));
    }
    if t_len == 0 {
        return Err(Error::param("views", "need at least one view"));
    }
    p.validate()?;

    let mut priors: Vec<ElementPrior> = (0..t_len).map(|_| ElementPrior::uniform(n, 0.0, 0.0, 0.0)).collect();
    let mut activity = Array2::zeros((t_len, n));
    let mut amp_mean = Array2::zeros((t_len, n));
    let mut amp_var = Array2::zeros((t_len, n));
    let mut amp_lag_cov = Array2::zeros((t_len.saturating_sub(1), n));
    let mut deaths = 0.0;
    let mut alive = 0.0;

    let tr = transition(p, support_model);
    let mut fwd = vec![[0.0; 2]; t_len];
    let mut bwd = vec![[1.0; 2]; t_len];
    let mut ev = vec![[0.0; 2]; t_len];

    let q = p.step_var();
    let c = p.step_offset();
    let rho = p.rho;
    let mut pred_mean = vec![0.0; t_len];
    let mut pred_var = vec![0.0; t_len];
    let mut filt_mean = vec![0.0; t_len];
    let mut filt_var = vec![0.0; t_len];
    let mut back_prec = vec![0.0; t_len];
    let mut back_info = vec![0.0; t_len];
    let mut sm_mean = vec![0.0; t_len];
    let mut sm_var = vec![0.0; t_len];

    for v in 0..n {
        // Support chain.
        for t in 0..t_len {
            let l = msgs.support[[t, v]].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            ev[t] = [1.0 - l, l];
        }
        fwd[0] = [1.0 - p.alpha, p.alpha];
        for t in 1..t_len {
            let prev = [fwd[t - 1][0] * ev[t - 1][0], fwd[t - 1][1] * ev[t - 1][1]];
            fwd[t] = normalize2([
                prev[0] * tr[0][0] + prev[1] * tr[1][0],
                prev[0] * tr[0][1] + prev[1] * tr[1][1],
            ]);
        }
        bwd[t_len - 1] = [1.0, 1.0];
        for t in (0..t_len - 1).rev() {
            let nxt = [ev[t + 1][0] * bwd[t + 1][0], ev[t + 1][1] * bwd[t + 1][1]];
            bwd[t] = normalize2([
                tr[0][0] * nxt[0] + tr[0][1] * nxt[1],
                tr[1][0] * nxt[0] + tr[1][1] * nxt[1],
            ]);
        }
        for t in 0..t_len {
            let ext = if bwd[t][0] == bwd[t][1] {
                fwd[t][1]
            } else {
                normalize2([fwd[t][0] * bwd[t][0], fwd[t][1] * bwd[t][1]])[1]
            };
            priors[t].activity[v] = ext;
            let post = normalize2([fwd[t][0] * ev[t][0] * bwd[t][0], fwd[t][1] * ev[t][1] * bwd[t][1]]);
            activity[[t, v]] = post[1];
            if t > 0 {
                let mut xi = [[0.0; 2]; 2];
                let mut z = 0.0;
                for (i, row) in xi.iter_mut().enumerate() {
                    for (j, cell) in row.iter_mut().enumerate() {
                        *cell = fwd[t - 1][i] * ev[t - 1][i] * tr[i][j] * ev[t][j] * bwd[t][j];
                        z += *cell;
                    }
                }
                if z > 0.0 {
                    deaths += xi[1][0] / z;
                    alive += (xi[1][0] + xi[1][1]) / z;
                }
            }
        }

        // Amplitude chain.
        match amplitude_model {
            AmplitudeModel::Independent => {
                for t in 0..t_len {
                    priors[t].mean[v] = p.eta;
                    priors[t].var[v] = p.sigma2;
                    let (m, var) = combine(p.eta, p.sigma2, msgs.amp_mean[[t, v]], msgs.amp_prec[[t, v]]);
                    amp_mean[[t, v]] = m;
                    amp_var[[t, v]] = var;
                }
            }
            AmplitudeModel::GaussMarkov => {
                pred_mean[0] = p.eta;
                pred_var[0] = p.sigma2;
                for t in 0..t_len {
                    let (m, var) = combine(pred_mean[t], pred_var[t], msgs.amp_mean[[t, v]], msgs.amp_prec[[t, v]]);
                    filt_mean[t] = m;
                    filt_var[t] = var;
                    if t + 1 < t_len {
                        pred_mean[t + 1] = rho * m + c;
                        pred_var[t + 1] = rho * rho * var + q;
                    }
                }
                back_prec[t_len - 1] = 0.0;
                back_info[t_len - 1] = 0.0;
                for t in (0..t_len - 1).rev() {
                    let e_prec = msgs.amp_prec[[t + 1, v]];
                    let pp = e_prec + back_prec[t + 1];
                    let h = e_prec * msgs.amp_mean[[t + 1, v]] + back_info[t + 1];
                    let d = 1.0 + q * pp;
                    back_prec[t] = rho * rho * pp / d;
                    back_info[t] = rho * (h - c * pp) / d;
                }
                for t in 0..t_len {
                    if back_prec[t] == 0.0 && back_info[t] == 0.0 {
                        priors[t].mean[v] = pred_mean[t];
                        priors[t].var[v] = pred_var[t];
                    } else {
                        let prec = 1.0 / pred_var[t] + back_prec[t];
                        priors[t].mean[v] = (pred_mean[t] / pred_var[t] + back_info[t]) / prec;
                        priors[t].var[v] = 1.0 / prec;
                    }
                }
                // Rauch-Tung-Striebel smoother.
                sm_mean[t_len - 1] = filt_mean[t_len - 1];
                sm_var[t_len - 1] = filt_var[t_len - 1];
                for t in (0..t_len - 1).rev() {
                    let gain = if pred_var[t + 1] > 0.0 {
                        filt_var[t] * rho / pred_var[t + 1]
                    } else {
                        0.0
                    };
                    sm_mean[t] = filt_mean[t] + gain * (sm_mean[t + 1] - pred_mean[t + 1]);
                    sm_var[t] = (filt_var[t] + gain * gain * (sm_var[t + 1] - pred_var[t + 1])).max(0.0);
                    amp_lag_cov[[t, v]] = gain * sm_var[t + 1];
                }
                for t in 0..t_len {
                    amp_mean[[t, v]] = sm_mean[t];
                    amp_var[[t, v]] = sm_var[t];
                }
            }
        }
    }

    Ok(StructureOutput {
        priors,
        stats: PosteriorStats {
            activity,
            deaths,
            alive,
            amp_mean,
            amp_var,
            amp_lag_cov,
        },
    })
}

/// Product of `N(m0, v0)` with evidence of precision `prec` and mean `m`.
fn combine(m0: f64, v0: f64, m: f64, prec: f64) -> (f64, f64) {
    if prec <= 0.0 {
        return (m0, v0);
    }
    let total = 1.0 / v0 + prec;
    ((m0 / v0 + prec * m) / total, 1.0 / total)
}

/// Outgoing messages from one GAMP run given the priors it was run with.
pub fn extrinsic_messages(
    out: &GampOutput,
    prior: &ElementPrior,
    var_floor: f64,
    inflation: f64,
) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let n = out.r.len();
    let mut sup = Array1::zeros(n);
    let mut mean = Array1::zeros(n);
    let mut prec = Array1::zeros(n);
    for j in 0..n {
        let r = out.r[j];
        let tau = (out.r_var[j] * inflation).max(var_floor);
        let m = prior.mean[j];
        let v = prior.var[j].max(var_floor);
        // Support: N(r; m, v+τ) / (N(r; m, v+τ) + N(r; 0, τ)).
        let l = active_log_ratio(r, tau, m, v);
        sup[j] = 1.0 / (1.0 + (-l).exp());

        // Amplitude: project the belief onto a Gaussian, then divide out the prior.
        let pi_in = prior.activity[j].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let llr = (pi_in / (1.0 - pi_in)).ln() + l;
        let post = 1.0 / (1.0 + (-llr).exp());
        let gvar = 1.0 / (1.0 / v + 1.0 / tau);
        let gmean = gvar * (m / v + r / tau);
        let bmean = (1.0 - post) * m + post * gmean;
        let bvar = ((1.0 - post) * (v + m * m) + post * (gvar + gmean * gmean) - bmean * bmean).max(var_floor);
        let p_out = 1.0 / bvar - 1.0 / v;
        if p_out > 1e-9 / v {
            prec[j] = p_out;
            mean[j] = (bmean / bvar - m / v) / p_out;
        }
    }
    (sup, mean, prec)
}

/// Closed-form M-step.
pub fn em_update(
    stats: &PosteriorStats,
    noise_estimates: &[f64],
    current: &PriorParams,
    support_model: SupportModel,
    amplitude_model: AmplitudeModel,
    cfg: &EmConfig,
    noise_floor: f64,
) -> PriorParams {
    let mut next = *current;
    if !cfg.enabled {
        return next;
    }
    let (t_len, n) = stats.activity.dim();
    let cells = (t_len * n) as f64;
    if cfg.learn_alpha && cells > 0.0 {
        next.alpha = (stats.activity.sum() / cells).clamp(1e-6, 0.5);
    }
    if cfg.learn_transition && support_model == SupportModel::Markov && t_len > 1 && stats.alive > 1e-9 {
        let max_p01 = ((1.0 - next.alpha) / next.alpha).min(1.0);
        next.p01 = (stats.deaths / stats.alive).clamp(1e-6, max_p01);
    }
    if cfg.learn_amplitude {
        let m1 = stats.amp_mean.sum() / cells;
        let m2 = (stats.amp_mean.mapv(|v| v * v) + &stats.amp_var).sum() / cells;
        // Stationary mean and variance from the marginal moments; the AR
        // coefficient from the lag-one covariance. Fitting (ρ, c, q) by
        // free regression instead makes η = c / (1 - ρ) blow up as ρ → 1.
        next.eta = m1;
        next.sigma2 = (m2 - m1 * m1).max(1e-9);
        if amplitude_model == AmplitudeModel::GaussMarkov && t_len > 1 {
            let mut lag = 0.0;
            for t in 1..t_len {
                for v in 0..n {
                    lag += stats.amp_mean[[t - 1, v]] * stats.amp_mean[[t, v]] + stats.amp_lag_cov[[t - 1, v]];
                }
            }
            let lag = lag / ((t_len - 1) * n) as f64;
            next.rho = ((lag - m1 * m1) / next.sigma2).clamp(0.0, 0.999);
        }
    }
    if cfg.learn_noise && !noise_estimates.is_empty() {
        let mean = noise_estimates.iter().sum::<f64>() / noise_estimates.len() as f64;
        next.noise_var = mean.max(noise_floor);
    }
    next
}

#[derive(Debug, Clone)]
pub struct OuterDiagnostics {
    pub gamp_iterations: Vec<usize>,
    pub gamp_converged: Vec<bool>,
    /// Relative change of the stacked estimates from the previous outer
    /// iteration (infinite on the first).
    pub change: f64,
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    /// Final estimates x̂_t (T × N).
    pub estimates: Array2<f64>,
    pub variances: Array2<f64>,
    /// Posterior activity probabilities (T × N).
    pub activity: Array2<f64>,
    /// Parameters used for each outer iteration; the last entry is the
    /// final learned set.
    pub params: Vec<PriorParams>,
    /// Estimates after each outer iteration.
    pub history: Vec<Array2<f64>>,
    pub diagnostics: Vec<OuterDiagnostics>,
    pub converged: bool,
}

/// Joint multi-view estimation from per-view sensing matrices and
/// measurements. `init` supplies the starting parameters, including χ².
pub fn em_turbo_gamp(a: &[Array2<C64>], y: &[Array1<C64>], init: &PriorParams, cfg: &TurboConfig) -> Result<SolverOutput> {
    let t_len = a.len();
    if t_len == 0 {
        return Err(Error::param("views", "need at least one view"));
    }
    if y.len() != t_len {
        return Err(Error::dims("measurement views", t_len, y.len()));
    }
    if cfg.max_outer == 0 {
        return Err(Error::param("turbo.max_outer", "must be positive"));
    }
    cfg.gamp.validate()?;
    if !(cfg.evidence_inflation >= 1.0 && cfg.evidence_inflation.is_finite()) {
        return Err(Error::param("turbo.evidence_inflation", "must be finite and at least 1"));
    }
    init.validate()?;
    let n = a[0].ncols();
    if a.iter().any(|m| m.ncols() != n) {
        return Err(Error::param("sensing matrices", "all views must share the voxel count"));
    }

    let mut params = *init;
    let mut systems = a
        .iter()
        .zip(y)
        .map(|(at, yt)| RealSystem::new(at, yt, params.noise_var))
        .collect::<Result<Vec<_>>>()?;
    let power: f64 = y.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>()
        / y.iter().map(|v| v.len()).sum::<usize>().max(1) as f64;
    let noise_floor = cfg.gamp.var_floor * power.max(f64::MIN_POSITIVE);

    let mut priors: Vec<ElementPrior> = (0..t_len).map(|_| ElementPrior::from_params(n, &params)).collect();
    let mut last_priors: Vec<Option<ElementPrior>> = vec![None; t_len];
    let mut last_noise = params.noise_var;
    let mut outputs: Vec<Option<GampOutput>> = vec![None; t_len];
    let mut states: Vec<Option<GampState>> = vec![None; t_len];

    let mut history = Vec::new();
    let mut diagnostics = Vec::new();
    let mut param_trace = vec![params];
    let mut converged = false;
    let mut activity = Array2::zeros((t_len, n));

    for _outer in 0..cfg.max_outer {
        let noise_changed = params.noise_var != last_noise;
        if noise_changed {
            for s in systems.iter_mut() {
                s.noise_var = params.noise_var / 2.0 * s.scale * s.scale;
            }
            last_noise = params.noise_var;
        }
        let mut iters = vec![0; t_len];
        let mut conv = vec![true; t_len];
        for t in 0..t_len {
            let unchanged = !noise_changed && last_priors[t].as_ref() == Some(&priors[t]) && outputs[t].is_some();
            if unchanged {
                continue;
            }
            let out = gamp_solve(&systems[t], &priors[t], &cfg.gamp, states[t].as_ref())?;
            iters[t] = out.iterations;
            conv[t] = out.converged;
            states[t] = Some(out.state.clone());
            outputs[t] = Some(out);
            last_priors[t] = Some(priors[t].clone());
        }

        let mut est = Array2::zeros((t_len, n));
        let mut msgs = ViewMessages::uninformative(t_len, n);
        for t in 0..t_len {
            let out = outputs[t].as_ref().expect("every view solved");
            est.row_mut(t).assign(&out.mean);
            activity.row_mut(t).assign(&out.activity);
            let (s, m, p) = extrinsic_messages(
                out,
                last_priors[t].as_ref().expect("priors recorded"),
                cfg.gamp.var_floor,
                cfg.evidence_inflation,
            );
            msgs.support.row_mut(t).assign(&s);
            msgs.amp_mean.row_mut(t).assign(&m);
            msgs.amp_prec.row_mut(t).assign(&p);
        }
        let change = match history.last() {
            Some(prev) => {
                let d: f64 = (&est - prev).mapv(|v: f64| v * v).sum().sqrt();
                let norm: f64 = est.mapv(|v| v * v).sum().sqrt();
                if norm > 0.0 {
                    d / norm
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            None => f64::INFINITY,
        };
        history.push(est);
        diagnostics.push(OuterDiagnostics {
            gamp_iterations: iters,
            gamp_converged: conv,
            change,
        });
        if change < cfg.tol {
            converged = true;
            break;
        }

        let structure = structure_pass(&msgs, &params, cfg.support, cfg.amplitude)?;
        let noise: Vec<f64> = outputs.iter().flatten().map(|o| o.noise_estimate).collect();
        let next = em_update(&structure.stats, &noise, &params, cfg.support, cfg.amplitude, &cfg.em, noise_floor);
        let next_priors = if next == params {
            structure.priors
        } else {
            // Re-run the pass so the priors reflect the updated parameters.
            structure_pass(&msgs, &next, cfg.support, cfg.amplitude)?.priors
        };
        params = next;
        param_trace.push(params);
        let same = next_priors == priors && params.noise_var == last_noise;
        priors = next_priors;
        if same {
            // A further pass would reproduce the same estimates.
            converged = true;
            break;
        }
    }

    let last = outputs.iter().map(|o| o.as_ref().expect("solved")).collect::<Vec<_>>();
    let mut variances = Array2::zeros((t_len, n));
    for (t, o) in last.iter().enumerate() {
        variances.row_mut(t).assign(&o.var);
    }
    Ok(SolverOutput {
        estimates: history.last().expect("at least one pass").clone(),
        variances,
        activity,
        params: param_trace,
        history,
        diagnostics,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uninformative_inputs_give_steady_state() {
        let p = PriorParams::default();
        let msgs = ViewMessages::uninformative(5, 3);
        for model in [SupportModel::Markov, SupportModel::JointSparse, SupportModel::Independent] {
            let out = structure_pass(&msgs, &p, model, AmplitudeModel::GaussMarkov).unwrap();
            for pr in &out.priors {
                for v in 0..3 {
                    assert_relative_eq!(pr.activity[v], p.alpha, epsilon = 1e-12);
                    assert_relative_eq!(pr.mean[v], p.eta, epsilon = 1e-12);
                    assert_relative_eq!(pr.var[v], p.sigma2, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn frozen_chain_propagates_certainty() {
        let p = PriorParams {
            p01: 0.0,
            ..Default::default()
        };
        let mut msgs = ViewMessages::uninformative(4, 1);
        msgs.support[[0, 0]] = 1.0;
        let out = structure_pass(&msgs, &p, SupportModel::Markov, AmplitudeModel::GaussMarkov).unwrap();
        for t in 1..4 {
            assert!(out.priors[t].activity[0] > 1.0 - 1e-6);
        }
    }

    #[test]
    fn gaussian_evidence_propagates_through_ar1() {
        let p = PriorParams {
            rho: 0.5,
            eta: 1.0,
            sigma2: 2.0,
            ..Default::default()
        };
        let mut msgs = ViewMessages::uninformative(2, 1);
        msgs.amp_mean[[1, 0]] = 3.0;
        msgs.amp_prec[[1, 0]] = 4.0;
        let out = structure_pass(&msgs, &p, SupportModel::Markov, AmplitudeModel::GaussMarkov).unwrap();
        // Joint Gaussian oracle: a1 ~ N(η, ς²), a2 = ρ a1 + c + N(0, q).
        let (q, c) = (p.step_var(), p.step_offset());
        let cov12 = p.rho * p.sigma2;
        let var2 = p.rho * p.rho * p.sigma2 + q;
        let mean2 = p.rho * p.eta + c;
        let k = cov12 / (var2 + 0.25);
        let expect_mean = p.eta + k * (3.0 - mean2);
        let expect_var = p.sigma2 - k * cov12;
        assert_relative_eq!(out.priors[0].mean[0], expect_mean, epsilon = 1e-12);
        assert_relative_eq!(out.priors[0].var[0], expect_var, epsilon = 1e-12);
        assert_relative_eq!(out.stats.amp_mean[[0, 0]], expect_mean, epsilon = 1e-12);
    }

    #[test]
    fn em_alpha_is_mean_activity() {
        let stats = PosteriorStats {
            activity: Array2::from_shape_vec((1, 4), vec![1.0, 0.0, 0.0, 0.0]).unwrap(),
            deaths: 0.0,
            alive: 0.0,
            amp_mean: Array2::from_elem((1, 4), 1.0),
            amp_var: Array2::from_elem((1, 4), 1.0),
            amp_lag_cov: Array2::zeros((0, 4)),
        };
        let next = em_update(
            &stats,
            &[],
            &PriorParams::default(),
            SupportModel::Markov,
            AmplitudeModel::GaussMarkov,
            &EmConfig::default(),
            1e-12,
        );
        assert_relative_eq!(next.alpha, 0.25);
    }
}
