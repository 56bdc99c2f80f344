//! Monte Carlo sweep through the experiment harness: a reduced version of
//! the measurement-count study, written as CSV with a JSON sidecar.
//!
//!     cargo run --release --example run_experiment [out.csv]

use ris_imager::experiment::{preset, run_experiment, AxisConfig, SweepAxis};

fn main() -> ris_imager::Result<()> {
    let mut cfg = preset("t-k-tradeoff")?.remove(0);
    cfg.name = "t-k-small".into();
    cfg.trials = 5;
    cfg.sweep = Some(AxisConfig {
        axis: SweepAxis::K,
        values: vec![20.0, 60.0],
    });
    cfg.series = Some(AxisConfig {
        axis: SweepAxis::T,
        values: vec![1.0, 3.0],
    });
    cfg.methods.truncate(1);

    let table = run_experiment(&cfg)?;
    for r in table.records.iter().filter(|r| r.metric.ends_with("nmse_db")) {
        println!(
            "K = {:>3}  T = {}  {}: {:.2} dB  [{:.2}, {:.2}]",
            r.sweep_value.unwrap_or_default(),
            r.series_value.unwrap_or_default(),
            r.method,
            r.mean,
            r.ci_low,
            r.ci_high
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        let sidecar = table.write(std::path::Path::new(&path), &cfg)?;
        println!("wrote {path} and {}", sidecar.display());
    }
    Ok(())
}
