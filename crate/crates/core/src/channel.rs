//! UE → ROI → RIS → AP forward model.
//!
//! A single three-hop subpath through voxel `n` and RIS element `m` is
//!
//! ```text
//! g · exp(-j2π(d_uv + d_vs + d_sa)) / ((4π)^1.5 · d_uv · d_vs · d_sa) · exp(-jω_km) · x_n
//! ```
//!
//! Summed over elements this factors as `A_t = Ω · B_t` with
//! `B_t = g · diag(h_sa) · H_vsᵀ · diag(h_uv[t])` (M × N).

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{Array1, Array2, Axis, Zip};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{PlanarArray, Point3, SceneGeometry, VoxelGrid};

pub type C64 = Complex64;

/// Free-space subpath over distance `d` (wavelengths):
/// `exp(-j2πd) / (sqrt(4π)·d)`.
pub fn freespace_subpath(d: f64) -> Result<C64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::CoincidentPoints("free-space subpath"));
    }
    let mag = 1.0 / ((4.0 * PI).sqrt() * d);
    Ok(C64::from_polar(mag, -2.0 * PI * d))
}

/// RIS phase configuration matrix Ω (K × M), unit-modulus entries
/// `exp(-jω_km)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCodebook {
    entries: Array2<C64>,
    mode: PhaseMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseMode {
    Continuous,
    Discrete { bits: u32 },
}

impl Default for PhaseMode {
    fn default() -> Self {
        PhaseMode::Continuous
    }
}

impl PhaseCodebook {
    /// Random codebook. Continuous phases are uniform on [0, 2π); discrete
    /// phases are uniform over the `2^b` alphabet `{2πq / 2^b}`.
    pub fn random<R: Rng + ?Sized>(k: usize, m: usize, mode: PhaseMode, rng: &mut R) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::param("codebook", "K and M must be positive"));
        }
        let levels = match mode {
            PhaseMode::Continuous => None,
            PhaseMode::Discrete { bits } if (1..=16).contains(&bits) => Some(1u32 << bits),
            PhaseMode::Discrete { .. } => return Err(Error::param("codebook.bits", "must be in 1..=16")),
        };
        let phases = Array2::from_shape_simple_fn((k, m), || match levels {
            None => rng.random::<f64>() * 2.0 * PI,
            Some(l) => 2.0 * PI * rng.random_range(0..l) as f64 / l as f64,
        });
        Ok(PhaseCodebook {
            entries: phases.mapv(|w| C64::from_polar(1.0, -w)),
            mode,
        })
    }

    /// Codebook from phases ω (radians), entry = exp(-jω).
    pub fn from_phases(phases: &Array2<f64>, mode: PhaseMode) -> Result<Self> {
        if phases.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("codebook", "phases must be finite"));
        }
        Ok(PhaseCodebook {
            entries: phases.mapv(|w| C64::from_polar(1.0, -w)),
            mode,
        })
    }

    /// Wrap a matrix whose entries are already unit modulus.
    pub fn from_matrix(entries: Array2<C64>) -> Result<Self> {
        if entries.iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::param("codebook", "entries must have unit modulus"));
        }
        Ok(PhaseCodebook {
            entries,
            mode: PhaseMode::Continuous,
        })
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn mode(&self) -> PhaseMode {
        self.mode
    }

    pub fn configurations(&self) -> usize {
        self.entries.nrows()
    }

    pub fn elements(&self) -> usize {
        self.entries.ncols()
    }

    /// Phases ω in [0, 2π).
    pub fn phases(&self) -> Array2<f64> {
        self.entries.mapv(|z| (-z.arg()).rem_euclid(2.0 * PI))
    }

    /// CSV with K rows × M columns of phases in radians, no header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
        for row in self.phases().rows() {
            w.write_record(row.iter().map(|v| format!("{:.17e}", v))).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, mode: PhaseMode) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            if cols.get_or_insert(rec.len()) != &rec.len() {
                return Err(Error::Config("codebook CSV rows have differing lengths".into()));
            }
            for f in rec.iter() {
                data.push(f.parse::<f64>().map_err(|e| Error::Config(format!("codebook CSV: {e}")))?);
            }
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::Config("codebook CSV is empty".into()))?;
        let phases = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Config(e.to_string()))?;
        PhaseCodebook::from_phases(&phases, mode)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Channels that do not depend on the UE: RIS → AP and ROI → RIS.
#[derive(Debug, Clone)]
pub struct FixedChannels {
    /// `h_sa`, length M.
    pub ris_to_ap: Array1<C64>,
    /// `H_vs`, N × M; row n is the subpath from voxel n to every element.
    pub roi_to_ris: Array2<C64>,
    pub gain: f64,
    base: Array2<C64>,
}

impl FixedChannels {
    pub fn build(roi: &VoxelGrid, ris: &PlanarArray, ap: Point3, gain: f64) -> Result<Self> {
        let voxels = roi.voxel_centers();
        let elements = ris.element_positions();
        let ris_to_ap = elements
            .iter()
            .map(|e| freespace_subpath(e.distance(ap)))
            .collect::<Result<Array1<C64>>>()?;
        let mut roi_to_ris = Array2::zeros((voxels.len(), elements.len()));
        for (n, v) in voxels.iter().enumerate() {
            for (m, e) in elements.iter().enumerate() {
                roi_to_ris[[n, m]] = freespace_subpath(v.distance(*e))?;
            }
        }
        // g · diag(h_sa) · H_vsᵀ
        let mut base = roi_to_ris.t().to_owned();
        Zip::from(base.rows_mut()).and(&ris_to_ap).for_each(|mut row, &h| {
            row.mapv_inplace(|z| z * h * gain);
        });
        Ok(FixedChannels {
            ris_to_ap,
            roi_to_ris,
            gain,
            base,
        })
    }

    pub fn voxels(&self) -> usize {
        self.roi_to_ris.nrows()
    }

    pub fn elements(&self) -> usize {
        self.roi_to_ris.ncols()
    }

    /// `g · diag(h_sa) · H_vsᵀ` (M × N), the UE-independent part of `B_t`.
    pub fn base(&self) -> &Array2<C64> {
        &self.base
    }

    /// `B_t = base · diag(h_uv)` (M × N).
    pub fn view_matrix(&self, ue_to_roi: &Array1<C64>) -> Result<Array2<C64>> {
        if ue_to_roi.len() != self.voxels() {
            return Err(Error::dims("B_t", self.voxels(), ue_to_roi.len()));
        }
        let mut b = self.base.clone();
        scale_columns(&mut b, ue_to_roi);
        Ok(b)
    }
}

/// `h_uv[t]` for each UE position.
pub fn ue_channels(roi: &VoxelGrid, ue: &[Point3]) -> Result<Vec<Array1<C64>>> {
    let voxels = roi.voxel_centers();
    ue.iter()
        .map(|u| voxels.iter().map(|v| freespace_subpath(u.distance(*v))).collect())
        .collect()
}

/// All subpath channels of a scenario.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub fixed: FixedChannels,
    /// `h_uv[t]`, length N per UE position.
    pub ue_to_roi: Vec<Array1<C64>>,
}

impl ChannelSet {
    pub fn build(geometry: &SceneGeometry, gain: f64) -> Result<Self> {
        Ok(ChannelSet {
            fixed: FixedChannels::build(&geometry.roi, &geometry.ris, geometry.ap, gain)?,
            ue_to_roi: ue_channels(&geometry.roi, &geometry.ue)?,
        })
    }

    pub fn views(&self) -> usize {
        self.ue_to_roi.len()
    }
}

fn scale_columns(m: &mut Array2<C64>, w: &Array1<C64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        Zip::from(&mut row).and(w).for_each(|z, &s| *z *= s);
    }
}

/// Per-view sensing matrices `A_t = Ω_t · B_t` (K × N).
#[derive(Debug, Clone)]
pub struct SensingMatrixSet {
    pub a: Vec<Array2<C64>>,
}

impl SensingMatrixSet {
    /// One codebook shared by every view, or one per view.
    pub fn build(fixed: &FixedChannels, ue_to_roi: &[Array1<C64>], codebooks: &[PhaseCodebook]) -> Result<Self> {
        let views = ue_to_roi.len();
        if views == 0 {
            return Err(Error::param("views", "need at least one UE position"));
        }
        if codebooks.len() != 1 && codebooks.len() != views {
            return Err(Error::dims("codebooks", format!("1 or {views}"), codebooks.len()));
        }
        for cb in codebooks {
            if cb.elements() != fixed.elements() {
                return Err(Error::dims("codebook columns (M)", fixed.elements(), cb.elements()));
            }
        }
        for h in ue_to_roi {
            if h.len() != fixed.voxels() {
                return Err(Error::dims("h_uv length (N)", fixed.voxels(), h.len()));
            }
        }
        let shared = (codebooks.len() == 1).then(|| codebooks[0].matrix().dot(fixed.base()));
        let a = ue_to_roi
            .iter()
            .enumerate()
            .map(|(t, h)| {
                let mut at = match &shared {
                    Some(s) => s.clone(),
                    None => codebooks[t].matrix().dot(fixed.base()),
                };
                scale_columns(&mut at, h);
                at
            })
            .collect();
        Ok(SensingMatrixSet { a })
    }

    pub fn views(&self) -> usize {
        self.a.len()
    }

    pub fn voxels(&self) -> usize {
        self.a[0].ncols()
    }
}

/// Convenience wrapper over [`SensingMatrixSet::build`].
pub fn build_sensing_matrices(channels: &ChannelSet, codebooks: &[PhaseCodebook]) -> Result<SensingMatrixSet> {
    SensingMatrixSet::build(&channels.fixed, &channels.ue_to_roi, codebooks)
}

/// Noisy measurements `y_t = A_t x_t + z_t`.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub y: Vec<Array1<C64>>,
    /// Total complex noise variance χ² (χ²/2 per real component).
    pub noise_var: f64,
    /// `f64::INFINITY` for noiseless synthesis.
    pub snr_db: f64,
}

fn check_images(a: &[Array2<C64>], images: &Array2<f64>) -> Result<()> {
    if images.nrows() != a.len() {
        return Err(Error::dims("images (views)", a.len(), images.nrows()));
    }
    if let Some(at) = a.first() {
        if images.ncols() != at.ncols() {
            return Err(Error::dims("images (voxels)", at.ncols(), images.ncols()));
        }
    }
    Ok(())
}

/// χ² = mean over (t, k) of |(A_t x_t)_k|², divided by `10^(snr_db/10)`.
pub fn calibrate_noise(a: &[Array2<C64>], images: &Array2<f64>, snr_db: f64) -> Result<f64> {
    check_images(a, images)?;
    let mut power = 0.0;
    let mut count = 0usize;
    for (at, x) in a.iter().zip(images.rows()) {
        let xc = x.mapv(|v| C64::new(v, 0.0));
        let clean = at.dot(&xc);
        power += clean.iter().map(|z| z.norm_sqr()).sum::<f64>();
        count += clean.len();
    }
    let mean = power / count.max(1) as f64;
    if !(mean > 0.0) {
        return Err(Error::Numerical("cannot calibrate noise against an all-zero signal".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(mean / 10f64.powf(snr_db / 10.0))
}

/// Synthesise measurements at the given SNR (`f64::INFINITY` = noiseless).
pub fn synthesize_measurements<R: Rng + ?Sized>(
    sensing: &SensingMatrixSet,
    images: &Array2<f64>,
    snr_db: f64,
    rng: &mut R,
) -> Result<MeasurementSet> {
    check_images(&sensing.a, images)?;
    let noise_var = if snr_db == f64::INFINITY {
        0.0
    } else {
        calibrate_noise(&sensing.a, images, snr_db)?
    };
    let sd = (noise_var / 2.0).sqrt();
    let y = sensing
        .a
        .iter()
        .zip(images.rows())
        .map(|(at, x)| {
            let xc = x.mapv(|v| C64::new(v, 0.0));
            let mut y = at.dot(&xc);
            if noise_var > 0.0 {
                for v in y.iter_mut() {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    *v += C64::new(sd * re, sd * im);
                }
            }
            y
        })
        .collect();
    Ok(MeasurementSet { y, noise_var, snr_db })
}
