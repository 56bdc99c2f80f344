//! Draw a correlated multi-view scene and look at how the supports and
//! amplitudes evolve, for a few correlation degrees.
//!
//!     cargo run --release --example multiview_scene [out.csv]

use ris_imager::rng::seeded;
use ris_imager::scene::gamma_scaling;
use ris_imager::{MultiViewScene, PriorParams};

fn main() -> ris_imager::Result<()> {
    let (n, t) = (1000, 10);
    for gamma in [0.0, 1.0, 10.0] {
        let g = gamma_scaling(gamma)?;
        let prior = PriorParams {
            p01: g.p01,
            rho: g.rho,
            ..Default::default()
        };
        let scene = MultiViewScene::generate(&prior, n, t, false, &mut seeded(3, 0))?;
        let counts: Vec<usize> = scene
            .supports
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|s| **s).count())
            .collect();
        let mut kept = 0usize;
        let mut alive = 0usize;
        for v in 0..t - 1 {
            for j in 0..n {
                if scene.supports[[v, j]] {
                    alive += 1;
                    kept += scene.supports[[v + 1, j]] as usize;
                }
            }
        }
        println!(
            "γ = {gamma:>4}: UE step {:>4.1}λ, active per view {:?}, union {}, support kept {:.0}%",
            g.step,
            counts,
            scene.joint_support_size(),
            100.0 * kept as f64 / alive.max(1) as f64
        );
        if gamma == 1.0 {
            if let Some(path) = std::env::args().nth(1) {
                scene.write_csv(std::path::Path::new(&path))?;
                println!("wrote {path}");
            }
        }
    }
    Ok(())
}
