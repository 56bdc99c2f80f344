//! Built-in experiment presets at desk scale.
//!
//! Each preset returns one or more complete configurations; `trials` can be
//! overridden afterwards.

use super::config::{
    Algorithm, AxisConfig, CodebookKind, ExperimentConfig, MethodConfig, SceneKind, SweepAxis,
};
use crate::channel::PhaseMode;
use crate::coherence::OptimizerConfig;
use crate::error::{Error, Result};
use crate::solvers::{AmplitudeModel, SupportModel};

/// Preset names accepted by [`preset`], including aliases.
pub const PRESETS: &[&str] = &[
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "fig10",
    "fig11",
    "fig12",
    "table4",
    "single-view-k-sweep",
    "roi-position",
    "gamma-sweep",
    "t-k-tradeoff",
];

fn axis(axis: SweepAxis, values: &[f64]) -> Option<AxisConfig> {
    Some(AxisConfig {
        axis,
        values: values.to_vec(),
    })
}

fn turbo(label: &str, support: SupportModel, amplitude: AmplitudeModel) -> MethodConfig {
    let mut m = MethodConfig::new(label, Algorithm::Turbo);
    m.turbo.support = support;
    m.turbo.amplitude = amplitude;
    m
}

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        ..Default::default()
    }
}

/// Single view, AP and UE random in the region, D and voxel size swept.
fn fig6() -> ExperimentConfig {
    let mut c = base("fig6");
    c.ap.position = None;
    c.ue.views = 1;
    c.scene.alpha_times_voxel = Some(0.04);
    c.methods = vec![
        MethodConfig::new("sp", Algorithm::Sp),
        MethodConfig::new("gamp", Algorithm::Gamp),
        MethodConfig::new("sals", Algorithm::Sals),
    ];
    c.sweep = axis(SweepAxis::D, &[30.0, 40.0, 50.0, 60.0, 70.0]);
    c.series = axis(SweepAxis::VoxelSize, &[2.0, 4.0]);
    c
}

/// Fixed single-view geometry; random against optimised phases over K.
fn fig7() -> ExperimentConfig {
    let mut c = base("fig7");
    c.roi.center = [40.0, 0.0, 0.0];
    c.ap.position = Some([20.0, 20.0, 30.0]);
    c.ue.positions = Some(vec![[30.0, 30.0, 10.0]]);
    let opt = OptimizerConfig::default();
    let mut optimized = MethodConfig::new("gamp-optimized", Algorithm::Gamp);
    optimized.codebook = Some(CodebookKind::Optimized {
        step: opt.step,
        iterations: opt.iterations,
    });
    c.methods = vec![MethodConfig::new("gamp-random", Algorithm::Gamp), optimized];
    c.sweep = axis(SweepAxis::K, &[40.0, 80.0, 120.0, 160.0, 200.0, 300.0, 400.0]);
    c.series = axis(SweepAxis::Snr, &[10.0, 20.0, 30.0]);
    c
}

/// Coarse grid of ROI centres in the z = 0 plane.
fn fig8() -> ExperimentConfig {
    let mut c = base("fig8");
    c.methods = vec![
        MethodConfig::new("single", Algorithm::Gamp),
        MethodConfig::new("multi", Algorithm::Turbo),
    ];
    c.sweep = axis(SweepAxis::RoiX, &[20.0, 40.0, 60.0, 80.0]);
    c.series = axis(SweepAxis::RoiY, &[-30.0, 0.0, 30.0]);
    c
}

/// Prior model comparison over D with T = 10.
fn fig9() -> ExperimentConfig {
    use AmplitudeModel::{GaussMarkov, Independent};
    use SupportModel::{JointSparse, Markov};
    let mut c = base("fig9");
    c.methods = vec![
        MethodConfig::new("single-gamp", Algorithm::Gamp),
        turbo("multi-markov-amp", Markov, GaussMarkov),
        turbo("multi-markov-noamp", Markov, Independent),
        turbo("multi-jointsparse-amp", JointSparse, GaussMarkov),
        turbo("multi-jointsparse-noamp", JointSparse, Independent),
        MethodConfig::new("sals", Algorithm::Sals),
    ];
    c.sweep = axis(SweepAxis::D, &[30.0, 40.0, 50.0, 60.0, 70.0]);
    c
}

/// Correlation degree against RIS size.
fn fig10() -> ExperimentConfig {
    let mut c = base("fig10");
    c.methods = vec![
        MethodConfig::new("single", Algorithm::Gamp),
        MethodConfig::new("multi", Algorithm::Turbo),
    ];
    c.sweep = axis(SweepAxis::Gamma, &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0]);
    c.series = axis(SweepAxis::RisSize, &[32.0, 48.0, 64.0]);
    c
}

/// Measurement count against number of views, continuous and 1-bit phases.
fn fig11() -> ExperimentConfig {
    let mut c = base("fig11");
    let mut dis = MethodConfig::new("turbo-dis", Algorithm::Turbo);
    dis.mode = Some(PhaseMode::Discrete { bits: 1 });
    c.methods = vec![MethodConfig::new("turbo-con", Algorithm::Turbo), dis];
    c.sweep = axis(SweepAxis::K, &[10.0, 20.0, 40.0, 60.0, 80.0, 100.0]);
    c.series = axis(SweepAxis::T, &[1.0, 2.0, 3.0, 6.0, 9.0]);
    c
}

/// Two adjacent point targets; detection rate over T for several voxel
/// sizes. The ROI keeps a 10λ extent, so N follows the voxel size.
fn fig12_at(name: &str, snr_db: f64) -> ExperimentConfig {
    let mut c = base(name);
    c.trials = 200;
    c.snr_db = snr_db;
    c.roi.center = [60.0, 0.0, 0.0];
    c.roi.counts = [4, 4, 4];
    c.roi.voxel_size = 2.5;
    c.ris.rows = 36;
    c.ris.cols = 36;
    c.scene.kind = SceneKind::TwoPoint;
    c.methods = vec![MethodConfig::new("turbo", Algorithm::Turbo)];
    c.sweep = axis(SweepAxis::T, &[1.0, 2.0, 3.0, 5.0, 10.0]);
    c.series = axis(SweepAxis::VoxelSize, &[2.5, 2.0, 1.5, 1.0]);
    c
}

/// Configurations of a named preset.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let cfgs = match name {
        "fig6" => vec![fig6()],
        "fig7" | "single-view-k-sweep" => vec![fig7()],
        "fig8" | "roi-position" => vec![fig8()],
        "fig9" => vec![fig9()],
        "fig10" | "gamma-sweep" => vec![fig10()],
        "fig11" | "t-k-tradeoff" => vec![fig11()],
        "fig12" => vec![fig12_at("fig12", 20.0)],
        "table4" => vec![fig12_at("table4-snr20", 20.0), fig12_at("table4-snr0", 0.0)],
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    for c in &cfgs {
        c.validate()?;
    }
    Ok(cfgs)
}
