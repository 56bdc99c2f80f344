//! Scene geometry in wavelength units.
//!
//! Every length in this module is expressed in carrier wavelengths (λ ≡ 1).
//! The RIS sits in the `yOz` plane by default, the ROI is a cuboid grid of
//! voxels in front of it and the UE wanders inside an axis-aligned region.

use std::ops::{Add, Mul, Sub};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    fn axis_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            _ => &mut self.z,
        }
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Cuboid ROI discretised into `nx × ny × nz` cubic voxels.
///
/// Linear voxel index `n = i + nx·(j + ny·k)`: x varies fastest, then y,
/// then z. With the RIS in the `yOz` plane, x is the range axis, so range
/// neighbours differ by 1 in index and cross-range neighbours by `nx` or
/// `nx·ny`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub center: Point3,
    pub counts: [usize; 3],
    pub voxel_size: f64,
}

impl VoxelGrid {
    pub fn new(center: Point3, counts: [usize; 3], voxel_size: f64) -> Result<Self> {
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::param("roi.counts", "voxel counts must be positive"));
        }
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(Error::param("roi.voxel_size", "must be positive and finite"));
        }
        if !center.is_finite() {
            return Err(Error::param("roi.center", "must be finite"));
        }
        Ok(VoxelGrid {
            center,
            counts,
            voxel_size,
        })
    }

    /// Cube of side `extent` split into voxels of side `voxel_size`
    /// (the count per axis is rounded to the nearest integer).
    pub fn cube(center: Point3, extent: f64, voxel_size: f64) -> Result<Self> {
        let n = (extent / voxel_size).round().max(1.0) as usize;
        VoxelGrid::new(center, [n, n, n], voxel_size)
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.counts;
        i + nx * (j + ny * k)
    }

    pub fn triple(&self, n: usize) -> (usize, usize, usize) {
        let [nx, ny, _] = self.counts;
        (n % nx, (n / nx) % ny, n / (nx * ny))
    }

    pub fn voxel_center(&self, n: usize) -> Point3 {
        let (i, j, k) = self.triple(n);
        let offset = |idx: usize, count: usize| (idx as f64 - (count as f64 - 1.0) / 2.0) * self.voxel_size;
        Point3::new(
            self.center.x + offset(i, self.counts[0]),
            self.center.y + offset(j, self.counts[1]),
            self.center.z + offset(k, self.counts[2]),
        )
    }

    pub fn voxel_centers(&self) -> Vec<Point3> {
        (0..self.len()).map(|n| self.voxel_center(n)).collect()
    }

    /// Axis-aligned bounding box of the whole grid.
    pub fn bounds(&self) -> Aabb {
        let half = Point3::new(
            self.counts[0] as f64 * self.voxel_size / 2.0,
            self.counts[1] as f64 * self.voxel_size / 2.0,
            self.counts[2] as f64 * self.voxel_size / 2.0,
        );
        Aabb {
            min: self.center - half,
            max: self.center + half,
        }
    }
}

/// Free function form of [`VoxelGrid::voxel_centers`].
pub fn voxel_centers(grid: &VoxelGrid) -> Vec<Point3> {
    grid.voxel_centers()
}

/// Plane holding a planar array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ArrayPlane {
    /// Columns along y, rows along z.
    #[default]
    Yz,
    /// Columns along x, rows along y.
    Xy,
    /// Columns along x, rows along z.
    Xz,
}

/// Uniform planar array (the RIS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarArray {
    pub center: Point3,
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    #[serde(default)]
    pub plane: ArrayPlane,
}

impl PlanarArray {
    pub fn new(center: Point3, rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("ris.rows/cols", "must be positive"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param("ris.spacing", "must be positive and finite"));
        }
        Ok(PlanarArray {
            center,
            rows,
            cols,
            spacing,
            plane: ArrayPlane::Yz,
        })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest side of the aperture, `max(rows, cols)·spacing`.
    pub fn aperture(&self) -> f64 {
        self.rows.max(self.cols) as f64 * self.spacing
    }

    /// Element positions, row-major (column index fastest).
    pub fn element_positions(&self) -> Vec<Point3> {
        let mut out = Vec::with_capacity(self.len());
        for r in 0..self.rows {
            let v = (r as f64 - (self.rows as f64 - 1.0) / 2.0) * self.spacing;
            for c in 0..self.cols {
                let u = (c as f64 - (self.cols as f64 - 1.0) / 2.0) * self.spacing;
                let offset = match self.plane {
                    ArrayPlane::Yz => Point3::new(0.0, u, v),
                    ArrayPlane::Xy => Point3::new(u, v, 0.0),
                    ArrayPlane::Xz => Point3::new(u, 0.0, v),
                };
                out.push(self.center + offset);
            }
        }
        out
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if !(min.x <= max.x && min.y <= max.y && min.z <= max.z) {
            return Err(Error::param("region", "min must not exceed max on any axis"));
        }
        Ok(Aabb { min, max })
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| p.axis(i) >= self.min.axis(i) && p.axis(i) <= self.max.axis(i))
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    /// Grow the box by `margin` on every side.
    pub fn inflate(&self, margin: f64) -> Aabb {
        let m = Point3::new(margin, margin, margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        let e = self.extent();
        Point3::new(
            self.min.x + rng.random::<f64>() * e.x,
            self.min.y + rng.random::<f64>() * e.y,
            self.min.z + rng.random::<f64>() * e.z,
        )
    }
}

/// Euclidean distances between every point of `a` (rows) and `b` (columns).
pub fn pairwise_distances(a: &[Point3], b: &[Point3]) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i].distance(b[j]))
}

/// `sin(ψ/2) = R / sqrt(R² + 4D²)` for an aperture of size `aperture` seen
/// from distance `distance`.
pub fn subtended_angle_sine(aperture: f64, distance: f64) -> Result<f64> {
    if !(aperture > 0.0 && aperture.is_finite()) {
        return Err(Error::param("aperture", "must be positive"));
    }
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::param("distance", "must be non-negative"));
    }
    Ok(aperture / (aperture * aperture + 4.0 * distance * distance).sqrt())
}

/// Diffraction-limited resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffractionLimits {
    /// `c / 2B`; `None` for a single-frequency system (unbounded).
    pub range: Option<f64>,
    /// `λ / (2 sin(ψ/2))`.
    pub cross_range: f64,
}

/// Range and cross-range resolution limits. `bandwidth` and `wavelength`
/// must use consistent units (Hz and metres, or multiples of `c/λ` and λ).
/// Pass `speed_of_light = 1.0` together with λ = 1 to work in wavelengths.
pub fn diffraction_limits(
    bandwidth: Option<f64>,
    wavelength: f64,
    sin_half_psi: f64,
    speed_of_light: f64,
) -> Result<DiffractionLimits> {
    if !(sin_half_psi > 0.0 && sin_half_psi <= 1.0) {
        return Err(Error::param("sin_half_psi", "must lie in (0, 1]"));
    }
    if !(wavelength > 0.0) {
        return Err(Error::param("wavelength", "must be positive"));
    }
    let range = match bandwidth {
        Some(b) if b > 0.0 => Some(speed_of_light / (2.0 * b)),
        Some(_) => return Err(Error::param("bandwidth", "must be positive when set")),
        None => None,
    };
    Ok(DiffractionLimits {
        range,
        cross_range: wavelength / (2.0 * sin_half_psi),
    })
}

/// UE positions along a walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub positions: Vec<Point3>,
    pub step: f64,
    pub region: Aabb,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

const MAX_STEP_ATTEMPTS: usize = 10_000;

/// Random continuous UE trajectory with fixed step length.
///
/// The start is uniform in `region` (outside `exclusion`, if given). Each
/// step perturbs the previous heading with isotropic Gaussian jitter and
/// renormalises it. A step leaving the region has the offending heading
/// components flipped (specular reflection); if that is still infeasible,
/// or the step enters `exclusion`, a fresh heading is drawn.
pub fn random_trajectory(
    region: Aabb,
    count: usize,
    step: f64,
    exclusion: Option<Aabb>,
    seed: u64,
) -> Result<Trajectory> {
    if count == 0 {
        return Err(Error::param("ue.T", "must be at least 1"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("ue.d0", "must be positive"));
    }
    let e = region.extent();
    if count > 1 && step > e.x.max(e.y).max(e.z) {
        return Err(Error::param("ue.d0", "step exceeds the region extent"));
    }
    let mut rng = seeded(seed, 0x7472_616a);
    let blocked = |p: Point3| exclusion.map(|b| b.contains(p)).unwrap_or(false);

    let mut start = region.sample(&mut rng);
    let mut tries = 0;
    while blocked(start) {
        tries += 1;
        if tries > MAX_STEP_ATTEMPTS {
            return Err(Error::param("ue.region", "no admissible start point"));
        }
        start = region.sample(&mut rng);
    }

    let mut positions = vec![start];
    let mut heading = random_unit(&mut rng);
    while positions.len() < count {
        let here = *positions.last().unwrap();
        let mut accepted = None;
        for attempt in 0..MAX_STEP_ATTEMPTS {
            let mut dir = if attempt == 0 {
                jitter(heading, &mut rng)
            } else {
                random_unit(&mut rng)
            };
            let mut next = here + dir * step;
            if !region.contains(next) {
                for i in 0..3 {
                    let v = next.axis(i);
                    if v < region.min.axis(i) || v > region.max.axis(i) {
                        *dir.axis_mut(i) = -dir.axis(i);
                    }
                }
                next = here + dir * step;
            }
            if region.contains(next) && !blocked(next) {
                accepted = Some((next, dir));
                break;
            }
        }
        let (next, dir) = accepted
            .ok_or_else(|| Error::param("ue.region", "could not place the next step inside the region"))?;
        positions.push(next);
        heading = dir;
    }
    Ok(Trajectory {
        positions,
        step,
        region,
    })
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    loop {
        let p = Point3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n = p.norm();
        if n > 1e-9 {
            return p * (1.0 / n);
        }
    }
}

fn jitter<R: Rng + ?Sized>(heading: Point3, rng: &mut R) -> Point3 {
    let noise: Point3 = random_unit(rng) * 0.5;
    let d = heading + noise;
    let n = d.norm();
    if n < 1e-9 {
        random_unit(rng)
    } else {
        d * (1.0 / n)
    }
}

/// Everything needed to build the forward channels of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGeometry {
    pub roi: VoxelGrid,
    pub ris: PlanarArray,
    pub ap: Point3,
    pub ue: Vec<Point3>,
}
