//! Physical-optics radar cross-section of a flat PEC plate split into pixels.
//!
//! The plate lies in the xOy plane centred at the origin. Illumination and
//! observation directions live in the xOz plane; an angle θ maps to the unit
//! vector `(sin θ, 0, cos θ)`, so θ = 0 is broadside (+z) for both.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Point3;

/// `sin(x)/x` with `Sa(0) = 1`.
pub fn sa(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// PO RCS of one rectangular pixel of area `area` and x-side `pixel_x`:
/// `(4π A²/λ²) cos²θ_tx · Sa²((κ ξ_px / 2)(sin θ_rx + sin θ_tx))`.
pub fn pixel_rcs(area: f64, wavelength: f64, theta_tx: f64, theta_rx: f64, pixel_x: f64) -> f64 {
    let kappa = 2.0 * PI / wavelength;
    let s = sa(0.5 * kappa * pixel_x * (theta_rx.sin() + theta_tx.sin()));
    4.0 * PI * area * area / (wavelength * wavelength) * theta_tx.cos().powi(2) * s * s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plate {
    pub size_x: f64,
    pub size_y: f64,
    pub pixel_x: f64,
    pub pixel_y: f64,
}

impl Plate {
    pub fn new(size_x: f64, size_y: f64, pixel_x: f64, pixel_y: f64) -> Result<Self> {
        for (name, v) in [("size_x", size_x), ("size_y", size_y), ("pixel_x", pixel_x), ("pixel_y", pixel_y)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        let divides = |total: f64, part: f64| {
            let q = total / part;
            (q - q.round()).abs() < 1e-9 * q.max(1.0)
        };
        if !divides(size_x, pixel_x) || !divides(size_y, pixel_y) {
            return Err(Error::param("pixel size", "must divide the plate size"));
        }
        Ok(Plate {
            size_x,
            size_y,
            pixel_x,
            pixel_y,
        })
    }

    /// Square plate with square pixels.
    pub fn square(size: f64, pixel: f64) -> Result<Self> {
        Plate::new(size, size, pixel, pixel)
    }

    pub fn counts(&self) -> (usize, usize) {
        (
            (self.size_x / self.pixel_x).round() as usize,
            (self.size_y / self.pixel_y).round() as usize,
        )
    }

    pub fn pixel_count(&self) -> usize {
        let (nx, ny) = self.counts();
        nx * ny
    }

    pub fn pixel_area(&self) -> f64 {
        self.pixel_x * self.pixel_y
    }

    pub fn pixel_centers(&self) -> Vec<Point3> {
        let (nx, ny) = self.counts();
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(Point3::new(
                    (i as f64 + 0.5) * self.pixel_x - self.size_x / 2.0,
                    (j as f64 + 0.5) * self.pixel_y - self.size_y / 2.0,
                    0.0,
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Plane-wave illumination and observation at global angles (radians).
    FarField { theta_tx: f64, theta_rx: f64 },
    /// Point transmitter and receiver; angles and path lengths per pixel.
    NearField { tx: Point3, rx: Point3 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelModel {
    /// Angle-dependent PO pixel pattern.
    Anisotropic,
    /// Every pixel scatters its broadside value in all directions.
    Isotropic,
}

fn direction(theta: f64) -> Point3 {
    Point3::new(theta.sin(), 0.0, theta.cos())
}

fn elevation_from(pixel: Point3, target: Point3) -> Result<(f64, f64)> {
    let d = target - pixel;
    let r = d.norm();
    if !(r > 0.0) {
        return Err(Error::CoincidentPoints("rcs pixel/terminal"));
    }
    Ok(((d.x / r).clamp(-1.0, 1.0).asin(), r))
}

/// Coherent sum `|Σ √σ_n' · exp(-j2π(d_tx + d_rx))|²` over plate pixels
/// (λ = 1). Far-field path lengths are measured relative to the plate centre.
pub fn aggregate_rcs(plate: &Plate, observation: Observation, model: PixelModel) -> Result<f64> {
    let area = plate.pixel_area();
    let mut field = Complex64::new(0.0, 0.0);
    for p in plate.pixel_centers() {
        let (theta_tx, theta_rx, path) = match observation {
            Observation::FarField { theta_tx, theta_rx } => {
                let path = -(p.x * (direction(theta_tx).x + direction(theta_rx).x));
                (theta_tx, theta_rx, path)
            }
            Observation::NearField { tx, rx } => {
                let (tt, dt) = elevation_from(p, tx)?;
                let (tr, dr) = elevation_from(p, rx)?;
                (tt, tr, dt + dr)
            }
        };
        let sigma = match model {
            PixelModel::Anisotropic => pixel_rcs(area, 1.0, theta_tx, theta_rx, plate.pixel_x),
            PixelModel::Isotropic => pixel_rcs(area, 1.0, 0.0, 0.0, plate.pixel_x),
        };
        field += Complex64::from_polar(sigma.sqrt(), -2.0 * PI * path);
    }
    Ok(field.norm_sqr())
}

/// Bistatic sweep at fixed illumination angle; returns σ in dBsm(λ²).
pub fn rcs_sweep(plate: &Plate, theta_tx: f64, theta_rx: &[f64], model: PixelModel) -> Result<Vec<f64>> {
    theta_rx
        .iter()
        .map(|&tr| aggregate_rcs(plate, Observation::FarField { theta_tx, theta_rx: tr }, model).map(to_db))
        .collect()
}

/// Normalised RCS values are floored here before conversion to dB.
pub const RCS_FLOOR: f64 = 1e-12;

fn to_db(v: f64) -> f64 {
    10.0 * v.max(RCS_FLOOR).log10()
}

/// Max-to-min spread (dB) of a single pixel's normalised RCS `σ(θ_rx)/σ_max`
/// under broadside illumination, over `samples` angles evenly spanning
/// `[lo, hi]`.
pub fn fluctuation_db(pixel_x: f64, lo: f64, hi: f64, samples: usize) -> Result<f64> {
    if !(pixel_x > 0.0) {
        return Err(Error::param("pixel_x", "must be positive"));
    }
    if !(hi >= lo) || samples < 2 {
        return Err(Error::param("angle range", "need hi >= lo and at least 2 samples"));
    }
    let area = pixel_x * pixel_x;
    let values: Vec<f64> = (0..samples)
        .map(|i| {
            let th = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            pixel_rcs(area, 1.0, 0.0, th, pixel_x)
        })
        .collect();
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    Ok(to_db(max / max) - to_db(min / max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn broadside_quarter_wave_pixel() {
        let s = pixel_rcs(1.0 / 16.0, 1.0, 0.0, 0.0, 0.25);
        assert_relative_eq!(s, PI / 64.0, epsilon = 1e-15);
    }

    #[test]
    fn grazing_null() {
        assert!(pixel_rcs(1.0, 1.0, PI / 2.0, 0.3, 1.0) < 1e-30);
    }

    #[test]
    fn specular_is_sinc_peak() {
        let th = 0.4;
        let spec = pixel_rcs(1.0, 1.0, th, -th, 1.0);
        assert_relative_eq!(spec, 4.0 * PI * th.cos().powi(2), epsilon = 1e-12);
        for tr in [-1.0, -0.2, 0.0, 0.7] {
            assert!(pixel_rcs(1.0, 1.0, th, tr, 1.0) <= spec + 1e-12);
        }
    }

    #[test]
    fn sign_flip_symmetry() {
        for (a, b) in [(0.1, 0.5), (-0.3, 1.2), (0.7, -0.7)] {
            assert_relative_eq!(
                pixel_rcs(0.3, 1.0, a, b, 0.5),
                pixel_rcs(0.3, 1.0, -a, -b, 0.5),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn single_pixel_aggregate() {
        let plate = Plate::square(0.5, 0.5).unwrap();
        let obs = Observation::FarField {
            theta_tx: 0.2,
            theta_rx: -0.5,
        };
        let agg = aggregate_rcs(&plate, obs, PixelModel::Anisotropic).unwrap();
        assert_relative_eq!(agg, pixel_rcs(0.25, 1.0, 0.2, -0.5, 0.5), max_relative = 1e-12);
    }

    #[test]
    fn plate_must_divide() {
        assert!(Plate::square(10.0, 0.3).is_err());
        assert!(Plate::square(10.0, 0.25).is_ok());
    }

    #[test]
    fn fluctuation_values() {
        let q = fluctuation_db(0.25, -PI / 2.0, PI / 2.0, 361).unwrap();
        assert_relative_eq!(q, -20.0 * (sa(PI / 4.0)).log10(), epsilon = 1e-9);
        assert!(q < 1.0);
        assert!(fluctuation_db(0.5, -PI / 2.0, PI / 2.0, 361).unwrap() >= 1.0);
        assert!(fluctuation_db(1e-4, -PI / 2.0, PI / 2.0, 361).unwrap() < 1e-6);
    }
}
