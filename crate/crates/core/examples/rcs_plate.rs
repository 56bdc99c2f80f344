//! Physical-optics RCS of a flat plate split into pixels: broadside value,
//! bistatic sweep and the single-pixel fluctuation that decides whether a
//! voxel can be treated as an isotropic scatterer.
//!
//!     cargo run --release --example rcs_plate

use std::f64::consts::PI;

use ris_imager::rcs::{aggregate_rcs, fluctuation_db, rcs_sweep, Observation, PixelModel, Plate};

fn main() -> ris_imager::Result<()> {
    let plate = Plate::square(10.0, 0.25)?;
    let broadside = aggregate_rcs(
        &plate,
        Observation::FarField {
            theta_tx: 0.0,
            theta_rx: 0.0,
        },
        PixelModel::Anisotropic,
    )?;
    let ideal = 4.0 * PI * 100.0f64.powi(2);
    println!("10λ plate broadside: {:.2} dB (4πA²/λ² = {:.2} dB)", 10.0 * broadside.log10(), 10.0 * ideal.log10());

    let angles: Vec<f64> = (-6..=6).map(|i| (i as f64 * 15.0).to_radians()).collect();
    for pixel in [0.25, 1.0] {
        let plate = Plate::square(10.0, pixel)?;
        let an = rcs_sweep(&plate, 0.0, &angles, PixelModel::Anisotropic)?;
        let iso = rcs_sweep(&plate, 0.0, &angles, PixelModel::Isotropic)?;
        println!("\npixel {pixel}λ      anisotropic   isotropic");
        for ((th, a), i) in angles.iter().zip(&an).zip(&iso) {
            println!("{:>8.0}°  {:>12.2}  {:>10.2}", th.to_degrees(), a, i);
        }
    }

    println!("\nsingle-pixel fluctuation over ±90°:");
    for pixel in [0.25, 0.5, 1.0] {
        println!("  {pixel}λ pixel: {:.2} dB", fluctuation_db(pixel, -PI / 2.0, PI / 2.0, 361)?);
    }
    Ok(())
}
