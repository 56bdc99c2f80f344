//! Experiment configuration, loaded from TOML.
//!
//! Every field has a default, so an empty file describes the baseline
//! multi-view scenario: 20λ cube of 10³ voxels 50λ in front of a 48 × 48
//! half-wavelength RIS, AP at (2, 2, 3), ten UE positions 5λ apart, K = 80
//! random continuous phases per view and SNR 20 dB.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::PhaseMode;
use crate::coherence::OptimizerConfig;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, PlanarArray, Point3, VoxelGrid};
use crate::scene::{gamma_scaling, PriorParams};
use crate::solvers::{GampConfig, TurboConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiConfig {
    pub center: [f64; 3],
    pub counts: [usize; 3],
    pub voxel_size: f64,
}

impl Default for RoiConfig {
    fn default() -> Self {
        RoiConfig {
            center: [50.0, 0.0, 0.0],
            counts: [10, 10, 10],
            voxel_size: 2.0,
        }
    }
}

impl RoiConfig {
    pub fn grid(&self) -> Result<VoxelGrid> {
        VoxelGrid::new(self.center.into(), self.counts, self.voxel_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisConfig {
    pub center: [f64; 3],
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl Default for RisConfig {
    fn default() -> Self {
        RisConfig {
            center: [0.0; 3],
            rows: 48,
            cols: 48,
            spacing: 0.5,
        }
    }
}

impl RisConfig {
    pub fn array(&self) -> Result<PlanarArray> {
        PlanarArray::new(self.center.into(), self.rows, self.cols, self.spacing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApConfig {
    /// Fixed AP position; when absent the AP is drawn uniformly from the UE
    /// region (outside the ROI) on every trial.
    pub position: Option<[f64; 3]>,
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig {
            position: Some([2.0, 2.0, 3.0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeConfig {
    /// Explicit UE positions, one per view. Overrides the random walk.
    pub positions: Option<Vec<[f64; 3]>>,
    pub region_min: [f64; 3],
    pub region_max: [f64; 3],
    /// Number of views T for the random walk.
    pub views: usize,
    /// Step length d0; 0 keeps the UE still.
    pub step: f64,
    /// Clearance kept between UE/AP positions and the ROI box.
    pub roi_margin: f64,
}

impl Default for UeConfig {
    fn default() -> Self {
        UeConfig {
            positions: None,
            region_min: [0.0, -50.0, -15.0],
            region_max: [100.0, 50.0, 15.0],
            views: 10,
            step: 5.0,
            roi_margin: 1.0,
        }
    }
}

impl UeConfig {
    pub fn region(&self) -> Result<Aabb> {
        Aabb::new(self.region_min.into(), self.region_max.into())
    }

    pub fn view_count(&self) -> usize {
        self.positions.as_ref().map(|p| p.len()).unwrap_or(self.views)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    /// Bernoulli-Gaussian scene with Markov supports and AR(1) amplitudes.
    #[default]
    Prior,
    /// Two unit targets in adjacent voxels at the ROI centre.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridAxis {
    X,
    #[default]
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub kind: SceneKind,
    pub truncate_negative: bool,
    /// Axis along which the two targets are adjacent.
    pub pair_axis: GridAxis,
    /// When set, the sparse rate follows `alpha = alpha_times_voxel / voxel_size`.
    pub alpha_times_voxel: Option<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            kind: SceneKind::Prior,
            truncate_negative: false,
            pair_axis: GridAxis::Y,
            alpha_times_voxel: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CodebookKind {
    Random,
    Optimized {
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default = "default_iterations")]
        iterations: usize,
    },
}

fn default_step() -> f64 {
    OptimizerConfig::default().step
}

fn default_iterations() -> usize {
    OptimizerConfig::default().iterations
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    /// Number of RIS configurations K per view.
    pub k: usize,
    pub mode: PhaseMode,
    pub kind: CodebookKind,
    /// Draw a separate codebook for every view.
    pub per_view: bool,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            k: 80,
            mode: PhaseMode::Continuous,
            kind: CodebookKind::Random,
            per_view: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Independent GAMP per view.
    #[default]
    Gamp,
    /// Joint EM-turbo-GAMP over all views.
    Turbo,
    /// Subspace pursuit per view, sparsity taken from the true support.
    Sp,
    /// Least squares on the true support per view.
    Sals,
    /// Minimum-norm least squares per view.
    Ls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmInit {
    /// Start from the configured prior.
    #[default]
    Config,
    /// Configured prior with α, p01, ς² and 1 − ρ scaled by fixed factors.
    Perturbed,
    /// α from the measured energy; the rest from the configured prior.
    Data,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub label: String,
    pub algorithm: Algorithm,
    /// Overrides of the shared codebook settings.
    pub k: Option<usize>,
    pub codebook: Option<CodebookKind>,
    pub mode: Option<PhaseMode>,
    pub gamp: GampConfig,
    pub turbo: TurboConfig,
    pub em_init: EmInit,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            label: "gamp".into(),
            algorithm: Algorithm::Gamp,
            k: None,
            codebook: None,
            mode: None,
            gamp: GampConfig::default(),
            turbo: TurboConfig::default(),
            em_init: EmInit::Config,
        }
    }
}

impl MethodConfig {
    pub fn new(label: &str, algorithm: Algorithm) -> Self {
        MethodConfig {
            label: label.into(),
            algorithm,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// ROI centre distance along +x.
    D,
    K,
    /// Number of views.
    T,
    Gamma,
    /// Voxel side; the ROI extent is kept and the counts follow.
    VoxelSize,
    Snr,
    RoiX,
    RoiY,
    /// Square RIS side length in elements.
    RisSize,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::D => "d",
            SweepAxis::K => "k",
            SweepAxis::T => "t",
            SweepAxis::Gamma => "gamma",
            SweepAxis::VoxelSize => "voxel_size",
            SweepAxis::Snr => "snr",
            SweepAxis::RoiX => "roi_x",
            SweepAxis::RoiY => "roi_y",
            SweepAxis::RisSize => "ris_size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Monte Carlo trials per sweep point.
    pub trials: usize,
    pub snr_db: f64,
    pub gain: f64,
    pub roi: RoiConfig,
    pub ris: RisConfig,
    pub ap: ApConfig,
    pub ue: UeConfig,
    pub scene: SceneConfig,
    pub prior: PriorParams,
    pub codebook: CodebookConfig,
    pub methods: Vec<MethodConfig>,
    pub sweep: Option<AxisConfig>,
    /// Second axis; every sweep value is run for every series value.
    pub series: Option<AxisConfig>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            seed: 1,
            trials: 100,
            snr_db: 20.0,
            gain: 1.0,
            roi: RoiConfig::default(),
            ris: RisConfig::default(),
            ap: ApConfig::default(),
            ue: UeConfig::default(),
            scene: SceneConfig::default(),
            prior: PriorParams::default(),
            codebook: CodebookConfig::default(),
            methods: vec![MethodConfig::default()],
            sweep: None,
            series: None,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form, truncated to 16 digits.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return cfg_err("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return cfg_err("at least one method is required".into());
        }
        let mut labels: Vec<&str> = self.methods.iter().map(|m| m.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return cfg_err("method labels must be unique".into());
        }
        if self.snr_db.is_nan() {
            return cfg_err("snr_db must be a number".into());
        }
        if !(self.gain.is_finite()) {
            return cfg_err("gain must be finite".into());
        }
        for axis in [&self.sweep, &self.series].into_iter().flatten() {
            if axis.values.is_empty() {
                return cfg_err(format!("sweep axis `{}` has no values", axis.axis.name()));
            }
        }
        if let (Some(a), Some(b)) = (&self.sweep, &self.series) {
            if a.axis == b.axis {
                return cfg_err("sweep and series must use different axes".into());
            }
        }
        // Every sweep point must produce a valid scenario.
        for point in self.points()? {
            point.validate_point()?;
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::InvalidParameter { name, reason } => Error::Config(format!("{name}: {reason}")),
            other => other,
        };
        self.roi.grid().map_err(wrap)?;
        self.ris.array().map_err(wrap)?;
        self.ue.region().map_err(wrap)?;
        self.prior.validate().map_err(wrap)?;
        if self.ue.view_count() == 0 {
            return Err(Error::Config("at least one view is required".into()));
        }
        if !(self.ue.step >= 0.0) {
            return Err(Error::Config("ue.step must be nonnegative".into()));
        }
        for m in &self.methods {
            let k = m.k.unwrap_or(self.codebook.k);
            if k == 0 {
                return Err(Error::Config(format!("method `{}`: K must be positive", m.label)));
            }
            m.gamp.validate().map_err(wrap)?;
            m.turbo.gamp.validate().map_err(wrap)?;
            if let PhaseMode::Discrete { bits } = m.mode.unwrap_or(self.codebook.mode) {
                if !(1..=16).contains(&bits) {
                    return Err(Error::Config("phase bits must be in 1..=16".into()));
                }
            }
        }
        if self.scene.kind == SceneKind::TwoPoint {
            let c = self.roi.counts;
            let axis = self.scene.pair_axis as usize;
            if c[axis] < 2 {
                return Err(Error::Config("two-point scene needs at least 2 voxels along the pair axis".into()));
            }
        }
        Ok(())
    }

    /// Apply one axis value to a copy of the configuration.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let bad = |m: &str| Err(Error::Config(format!("axis `{}`: {m} (got {value})", axis.name())));
        let as_count = |v: f64| -> Option<usize> { (v >= 1.0 && v.fract() == 0.0).then_some(v as usize) };
        match axis {
            SweepAxis::D => c.roi.center[0] = value,
            SweepAxis::RoiX => c.roi.center[0] = value,
            SweepAxis::RoiY => c.roi.center[1] = value,
            SweepAxis::Snr => c.snr_db = value,
            SweepAxis::K => match as_count(value) {
                Some(k) => {
                    c.codebook.k = k;
                    for m in c.methods.iter_mut() {
                        m.k = None;
                    }
                }
                None => return bad("K must be a positive integer"),
            },
            SweepAxis::T => match as_count(value) {
                Some(t) => {
                    c.ue.views = t;
                    c.ue.positions = None;
                }
                None => return bad("T must be a positive integer"),
            },
            SweepAxis::RisSize => match as_count(value) {
                Some(s) => {
                    c.ris.rows = s;
                    c.ris.cols = s;
                }
                None => return bad("RIS size must be a positive integer"),
            },
            SweepAxis::Gamma => {
                let g = gamma_scaling(value).map_err(|e| Error::Config(e.to_string()))?;
                c.ue.step = g.step;
                c.prior.p01 = g.p01;
                c.prior.rho = g.rho;
            }
            SweepAxis::VoxelSize => {
                if !(value > 0.0) {
                    return bad("voxel size must be positive");
                }
                for i in 0..3 {
                    let extent = self.roi.counts[i] as f64 * self.roi.voxel_size;
                    c.roi.counts[i] = ((extent / value).round() as usize).max(1);
                }
                c.roi.voxel_size = value;
            }
        }
        c.apply_alpha_rule();
        Ok(c)
    }

    fn apply_alpha_rule(&mut self) {
        if let Some(a) = self.scene.alpha_times_voxel {
            self.prior.alpha = (a / self.roi.voxel_size).min(0.5);
        }
    }

    /// All (sweep value, series value, configuration) points in run order.
    pub fn points(&self) -> Result<Vec<Self>> {
        Ok(self.labelled_points()?.into_iter().map(|p| p.config).collect())
    }

    pub fn labelled_points(&self) -> Result<Vec<SweepPoint>> {
        let mut base = self.clone();
        base.apply_alpha_rule();
        let sweep: Vec<Option<f64>> = match &self.sweep {
            Some(a) => a.values.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let series: Vec<Option<f64>> = match &self.series {
            Some(a) => a.values.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::with_capacity(sweep.len() * series.len());
        for s in &series {
            for v in &sweep {
                let mut c = base.clone();
                if let (Some(ax), Some(val)) = (&self.series, s) {
                    c = c.with_axis(ax.axis, *val)?;
                }
                if let (Some(ax), Some(val)) = (&self.sweep, v) {
                    c = c.with_axis(ax.axis, *val)?;
                }
                out.push(SweepPoint {
                    sweep: *v,
                    series: *s,
                    config: c,
                });
            }
        }
        Ok(out)
    }

    pub fn ap_position(&self) -> Option<Point3> {
        self.ap.position.map(Point3::from)
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub sweep: Option<f64>,
    pub series: Option<f64>,
    pub config: ExperimentConfig,
}
