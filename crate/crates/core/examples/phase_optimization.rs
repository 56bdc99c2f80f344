//! Design a low-coherence RIS codebook for a fixed single-view geometry and
//! compare GAMP reconstructions with a random codebook of the same size.
//!
//!     cargo run --release --example phase_optimization [K] [iterations]

use ris_imager::channel::{ue_channels, SensingMatrixSet};
use ris_imager::coherence::{beta, optimize_from, OptimizerConfig};
use ris_imager::experiment::{build_scenario, ExperimentConfig};
use ris_imager::metrics::{mean_ratio_db, squared_error_ratio};
use ris_imager::rng::seeded;
use ris_imager::solvers::{gamp_single, GampConfig};
use ris_imager::{synthesize_measurements, FixedChannels, PhaseCodebook, PhaseMode, PriorParams};

fn main() -> ris_imager::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let k = args.next().flatten().unwrap_or(120);
    let iterations = args.next().flatten().unwrap_or(100);
    let mut cfg = ExperimentConfig::default();
    cfg.roi.center = [40.0, 0.0, 0.0];
    cfg.ap.position = Some([20.0, 20.0, 30.0]);
    cfg.ue.positions = Some(vec![[30.0, 30.0, 10.0]]);

    let sc = build_scenario(&cfg, 1, 0)?;
    let fixed = FixedChannels::build(&sc.roi, &cfg.ris.array()?, sc.ap, cfg.gain)?;
    let h = ue_channels(&sc.roi, &sc.ue)?;
    let b = fixed.view_matrix(&h[0])?;

    let mut rng = seeded(1, 0);
    let random = PhaseCodebook::random(k, fixed.elements(), PhaseMode::Continuous, &mut rng)?;
    let opt = OptimizerConfig {
        iterations,
        ..Default::default()
    };
    let res = optimize_from(&b, random.clone(), &opt)?;
    println!(
        "K = {k}: normalised beta' {:.4e} -> {:.4e} in {} iterations",
        res.trace[0],
        res.trace.last().unwrap(),
        res.trace.len() - 1
    );
    println!(
        "PSF sidelobe energy: random {:.4e}, optimised {:.4e}",
        beta(&random.matrix().dot(&b))?,
        beta(&res.codebook.matrix().dot(&b))?
    );

    for (name, cb) in [("random", &random), ("optimised", &res.codebook)] {
        let sensing = SensingMatrixSet::build(&fixed, &h, std::slice::from_ref(cb))?;
        let mut ratios = Vec::new();
        for trial in 0..10 {
            let sc = build_scenario(&cfg, 100 + trial, 0)?;
            let mut noise = seeded(trial, 2);
            let meas = synthesize_measurements(&sensing, &sc.scene.images, cfg.snr_db, &mut noise)?;
            let prior = PriorParams {
                noise_var: meas.noise_var,
                ..cfg.prior
            };
            let out = gamp_single(&sensing.a[0], &meas.y[0], &prior, &GampConfig::default())?;
            ratios.push(squared_error_ratio(out.mean.view(), sc.scene.images.row(0))?);
        }
        println!("{name:>10} codebook: NMSE {:.2} dB over 10 scenes", mean_ratio_db(&ratios));
    }
    Ok(())
}
