//! Single-view reconstruction: GAMP against subspace pursuit, the
//! support-oracle least squares bound and plain least squares, on the
//! default 10×10×10 ROI seen through a 48×48 RIS.
//!
//!     cargo run --release --example gamp_single_view [K]

use ris_imager::channel::{ue_channels, SensingMatrixSet};
use ris_imager::experiment::{build_scenario, ExperimentConfig};
use ris_imager::metrics::{squared_error_ratio, to_db};
use ris_imager::rng::seeded;
use ris_imager::solvers::{gamp_single, least_squares, sals_oracle, sp_baseline, GampConfig};
use ris_imager::{synthesize_measurements, FixedChannels, PhaseCodebook, PhaseMode, PriorParams};

fn main() -> ris_imager::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let mut cfg = ExperimentConfig::default();
    cfg.ue.views = 1;
    let sc = build_scenario(&cfg, 11, 0)?;
    let fixed = FixedChannels::build(&sc.roi, &cfg.ris.array()?, sc.ap, cfg.gain)?;
    let h = ue_channels(&sc.roi, &sc.ue)?;
    let mut rng = seeded(11, 1);
    let cb = PhaseCodebook::random(k, fixed.elements(), PhaseMode::Continuous, &mut rng)?;
    let sensing = SensingMatrixSet::build(&fixed, &h, &[cb])?;
    let meas = synthesize_measurements(&sensing, &sc.scene.images, cfg.snr_db, &mut rng)?;
    let (a, y, x) = (&sensing.a[0], &meas.y[0], sc.scene.images.row(0));

    let prior = PriorParams {
        noise_var: meas.noise_var,
        ..cfg.prior
    };
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    let g = gamp_single(a, y, &prior, &GampConfig::default())?;
    println!("K = {k}, {} active voxels of {}", support.len(), x.len());
    println!(
        "GAMP   {:>7.2} dB  ({} iterations, converged: {})",
        to_db(squared_error_ratio(g.mean.view(), x)?),
        g.iterations,
        g.converged
    );
    let sp = sp_baseline(a, y, support.len())?;
    println!("SP     {:>7.2} dB", to_db(squared_error_ratio(sp.estimate.view(), x)?));
    let sals = sals_oracle(a, y, &support)?;
    println!("SALS   {:>7.2} dB", to_db(squared_error_ratio(sals.estimate.view(), x)?));
    let ls = least_squares(a, y)?;
    println!("LS     {:>7.2} dB", to_db(squared_error_ratio(ls.estimate.view(), x)?));
    Ok(())
}
