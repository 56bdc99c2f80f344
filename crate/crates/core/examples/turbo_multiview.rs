//! Joint multi-view reconstruction with EM-turbo-GAMP against independent
//! per-view GAMP, with the learned model parameters per outer iteration.
//!
//!     cargo run --release --example turbo_multiview [T] [K]

use ris_imager::channel::{ue_channels, SensingMatrixSet};
use ris_imager::experiment::{build_scenario, ExperimentConfig};
use ris_imager::metrics::{to_db, view_mean_ratio};
use ris_imager::rng::seeded;
use ris_imager::solvers::{em_turbo_gamp, gamp_single, GampConfig, TurboConfig};
use ris_imager::{synthesize_measurements, FixedChannels, PhaseCodebook, PhaseMode, PriorParams};

fn main() -> ris_imager::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let views = args.next().flatten().unwrap_or(9);
    let k = args.next().flatten().unwrap_or(20);
    let mut cfg = ExperimentConfig::default();
    cfg.ue.views = views;
    let sc = build_scenario(&cfg, 5, 0)?;
    let fixed = FixedChannels::build(&sc.roi, &cfg.ris.array()?, sc.ap, cfg.gain)?;
    let h = ue_channels(&sc.roi, &sc.ue)?;
    let mut rng = seeded(5, 1);
    let cbs = (0..views)
        .map(|_| PhaseCodebook::random(k, fixed.elements(), PhaseMode::Continuous, &mut rng))
        .collect::<ris_imager::Result<Vec<_>>>()?;
    let sensing = SensingMatrixSet::build(&fixed, &h, &cbs)?;
    let meas = synthesize_measurements(&sensing, &sc.scene.images, cfg.snr_db, &mut rng)?;
    let prior = PriorParams {
        noise_var: meas.noise_var,
        ..cfg.prior
    };

    let mut single = ndarray::Array2::zeros(sc.scene.images.dim());
    for t in 0..views {
        let out = gamp_single(&sensing.a[t], &meas.y[t], &prior, &GampConfig::default())?;
        single.row_mut(t).assign(&out.mean);
    }
    let joint = em_turbo_gamp(&sensing.a, &meas.y, &prior, &TurboConfig::default())?;

    let truth = sc.scene.images.view();
    println!("T = {views}, K = {k}");
    println!("per-view GAMP  {:>7.2} dB", to_db(view_mean_ratio(single.view(), truth)?));
    println!("EM-turbo-GAMP  {:>7.2} dB", to_db(view_mean_ratio(joint.estimates.view(), truth)?));
    println!("\nouter  aveNMSE    alpha    p01     rho   sigma2");
    for (i, est) in joint.history.iter().enumerate() {
        let p = joint.params[i];
        println!(
            "{:>5}  {:>7.2}  {:.4}  {:.3}  {:.3}  {:.3}",
            i,
            to_db(view_mean_ratio(est.view(), truth)?),
            p.alpha,
            p.p01,
            p.rho,
            p.sigma2
        );
    }
    Ok(())
}
