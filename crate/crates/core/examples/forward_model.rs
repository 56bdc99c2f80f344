//! Build the UE → ROI → RIS → AP channels for a small scenario, form the
//! per-view sensing matrices and synthesize noisy measurements.
//!
//!     cargo run --release --example forward_model

use ris_imager::geometry::random_trajectory;
use ris_imager::rng::seeded;
use ris_imager::{
    build_sensing_matrices, synthesize_measurements, ChannelSet, MultiViewScene, PhaseCodebook, PhaseMode,
    PlanarArray, Point3, PriorParams, SceneGeometry, VoxelGrid,
};

fn main() -> ris_imager::Result<()> {
    let roi = VoxelGrid::new(Point3::new(50.0, 0.0, 0.0), [6, 6, 6], 2.0)?;
    let ris = PlanarArray::new(Point3::ORIGIN, 24, 24, 0.5)?;
    let region = ris_imager::geometry::Aabb::new(Point3::new(0.0, -50.0, -15.0), Point3::new(100.0, 50.0, 15.0))?;
    let walk = random_trajectory(region, 4, 5.0, Some(roi.bounds().inflate(1.0)), 7)?;
    let geometry = SceneGeometry {
        roi,
        ris,
        ap: Point3::new(2.0, 2.0, 3.0),
        ue: walk.positions,
    };

    let channels = ChannelSet::build(&geometry, 1.0)?;
    let mut rng = seeded(7, 0);
    let codebooks: Vec<PhaseCodebook> = (0..channels.views())
        .map(|_| PhaseCodebook::random(40, geometry.ris.len(), PhaseMode::Continuous, &mut rng))
        .collect::<ris_imager::Result<_>>()?;
    let sensing = build_sensing_matrices(&channels, &codebooks)?;

    let prior = PriorParams {
        alpha: 0.05,
        ..Default::default()
    };
    let scene = MultiViewScene::generate(&prior, geometry.roi.len(), channels.views(), false, &mut rng)?;
    let meas = synthesize_measurements(&sensing, &scene.images, 20.0, &mut rng)?;

    println!("N = {} voxels, M = {} elements, T = {} views", geometry.roi.len(), geometry.ris.len(), channels.views());
    for (t, a) in sensing.a.iter().enumerate() {
        let power = a.iter().map(|z| z.norm_sqr()).sum::<f64>() / a.ncols() as f64;
        println!(
            "view {t}: UE at ({:.1}, {:.1}, {:.1}), A is {}x{}, mean column energy {:.3e}, {} active voxels",
            geometry.ue[t].x,
            geometry.ue[t].y,
            geometry.ue[t].z,
            a.nrows(),
            a.ncols(),
            power,
            scene.supports.row(t).iter().filter(|s| **s).count()
        );
    }
    println!("noise variance for 20 dB SNR: {:.3e}", meas.noise_var);
    Ok(())
}
