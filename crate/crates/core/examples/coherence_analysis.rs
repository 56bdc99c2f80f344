//! How coherent is the sensing matrix? Compares the point spread function of
//! random codebooks with the geometric subpath correlation it converges to,
//! and prints the diffraction limits of the aperture.
//!
//!     cargo run --release --example coherence_analysis

use ris_imager::channel::ue_channels;
use ris_imager::coherence::{coherence_report, psf_convergence};
use ris_imager::experiment::{build_scenario, ExperimentConfig};
use ris_imager::geometry::{diffraction_limits, subtended_angle_sine};
use ris_imager::rng::seeded;
use ris_imager::{FixedChannels, PhaseCodebook, PhaseMode, Point3};

fn main() -> ris_imager::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.ue.views = 1;
    let sc = build_scenario(&cfg, 2, 0)?;
    let ris = cfg.ris.array()?;
    let fixed = FixedChannels::build(&sc.roi, &ris, sc.ap, cfg.gain)?;
    let h = ue_channels(&sc.roi, &sc.ue)?.remove(0);

    let cb = PhaseCodebook::random(200, fixed.elements(), PhaseMode::Continuous, &mut seeded(2, 0))?;
    let rep = coherence_report(&fixed, &cb.matrix().dot(&fixed.view_matrix(&h)?))?;
    // Voxel 500 and its neighbours along x (range), y and z.
    let n1 = 500;
    println!("PSF around voxel {n1} (K = 200) vs subpath correlation:");
    for (axis, step) in [("x", 1), ("y", 10), ("z", 100)] {
        println!(
            "  {axis}-neighbour: PSF {:.3}, subpath {:.3}",
            rep.psf[[n1, n1 + step]],
            rep.subpath[[n1, n1 + step]]
        );
    }
    println!("beta {:.4e}, beta' {:.4e}", rep.beta, rep.beta_prime);

    for mode in [PhaseMode::Continuous, PhaseMode::Discrete { bits: 1 }] {
        println!("\n{mode:?}: off-diagonal |PSF - subpath|");
        for p in psf_convergence(&fixed, &h, &[50, 200, 1000], mode, 2)? {
            println!("  K = {:>4}: median {:.4}, max {:.4}", p.k, p.median, p.max);
        }
    }

    let d = Point3::from(cfg.roi.center).distance(ris.center);
    let s = subtended_angle_sine(ris.aperture(), d)?;
    let lim = diffraction_limits(None, 1.0, s, 1.0)?;
    println!("\ncross-range limit at {d}λ: {:.2}λ (range unbounded at one frequency)", lim.cross_range);
    Ok(())
}
