//! Command-line front end. The binary only parses arguments and maps errors
//! to exit codes; everything else lives here so it can be tested.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::{ue_channels, FixedChannels, PhaseCodebook, PhaseMode};
use crate::coherence::{coherence_report, optimize_from, psf_convergence, OptimizerConfig};
use crate::error::{Error, Result};
use crate::experiment::{build_scenario, preset, run_experiment, ExperimentConfig, ResultTable};
use crate::geometry::{diffraction_limits, subtended_angle_sine};
use crate::rcs::{aggregate_rcs, fluctuation_db, rcs_sweep, Observation, PixelModel, Plate};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Parser)]
#[command(name = "ris-imager", version, about = "RIS-aided single-frequency 3D imaging simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo experiment described by a TOML file.
    Simulate(SimulateArgs),
    /// Design a low-coherence phase codebook for one view of a scenario.
    OptimizePhases(OptimizeArgs),
    /// Stand-alone analyses.
    #[command(subcommand)]
    Analyze(Analysis),
    /// Run a built-in preset.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; a `.json` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for the drawn geometry and codebooks.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// View whose sensing matrix is analysed.
    #[arg(long, default_value_t = 0)]
    pub view: usize,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 300)]
    pub k: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().step)]
    pub step: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().iterations)]
    pub iterations: usize,
    /// Codebook CSV (K rows of M phases); the β′ trace goes to `<out>.trace.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Continuous,
    OneBit,
}

impl From<ModeArg> for PhaseMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Continuous => PhaseMode::Continuous,
            ModeArg::OneBit => PhaseMode::Discrete { bits: 1 },
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// PSF and subpath-correlation sidelobes of one random codebook.
    Psf {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 80)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Continuous)]
        mode: ModeArg,
        /// Per-voxel CSV of sidelobes.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence of the PSF towards the subpath correlation as K grows.
    Coherence {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [50, 200, 1000])]
        ks: Vec<usize>,
        #[arg(long, value_enum, default_value_t = ModeArg::Continuous)]
        mode: ModeArg,
    },
    /// Bistatic RCS of a square plate, anisotropic and isotropic pixels.
    Rcs {
        /// Plate side in wavelengths.
        #[arg(long, default_value_t = 10.0)]
        size: f64,
        /// Pixel side in wavelengths.
        #[arg(long, default_value_t = 0.25)]
        pixel: f64,
        /// Illumination angle in degrees.
        #[arg(long, default_value_t = 0.0)]
        theta_tx: f64,
        /// Receiver angle step in degrees.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diffraction limits for the RIS aperture seen from the ROI centre.
    Limits {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bandwidth in units of c/λ; single frequency when omitted.
        #[arg(long)]
        bandwidth: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Preset name: fig6 to fig12, table4, or an alias such as gamma-sweep.
    pub preset: String,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving `<experiment>.csv` files.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

fn load_or_default(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn print_summary(out: &mut impl Write, table: &ResultTable) -> Result<()> {
    for r in &table.records {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:<24} {:>8} {:>8} {:<12} {:>10.3}  [{:.3}, {:.3}]  n={} failed={}",
            r.method,
            fmt(r.sweep_value),
            fmt(r.series_value),
            r.metric,
            r.mean,
            r.ci_low,
            r.ci_high,
            r.trials,
            r.failures
        )?;
    }
    Ok(())
}

fn apply_overrides(cfg: &mut ExperimentConfig, trials: Option<usize>, seed: Option<u64>) -> Result<()> {
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()
}

/// Channels and view matrix `B` of the selected view.
struct ViewSetup {
    fixed: FixedChannels,
    ue_to_roi: ndarray::Array1<crate::channel::C64>,
    b: ndarray::Array2<crate::channel::C64>,
}

fn view_setup(args: &ScenarioArgs) -> Result<ViewSetup> {
    let cfg = load_or_default(args.config.as_deref())?;
    let sc = build_scenario(&cfg, args.seed, 0)?;
    if args.view >= sc.ue.len() {
        return Err(Error::Config(format!("view {} out of range (scenario has {})", args.view, sc.ue.len())));
    }
    let fixed = FixedChannels::build(&sc.roi, &cfg.ris.array()?, sc.ap, cfg.gain)?;
    let ue_to_roi = ue_channels(&sc.roi, &sc.ue[args.view..=args.view])?.remove(0);
    let b = fixed.view_matrix(&ue_to_roi)?;
    Ok(ViewSetup { fixed, ue_to_roi, b })
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(crate::channel::csv_err)?;
    w.write_record(header).map_err(crate::channel::csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(crate::channel::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Execute a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            apply_overrides(&mut cfg, a.trials, a.seed)?;
            let table = run_experiment(&cfg)?;
            let sidecar = table.write(&a.out, &cfg)?;
            print_summary(out, &table)?;
            writeln!(out, "wrote {} and {}", a.out.display(), sidecar.display())?;
        }
        Command::OptimizePhases(a) => {
            let setup = view_setup(&a.scenario)?;
            let opt = OptimizerConfig {
                step: a.step,
                iterations: a.iterations,
            };
            let mut rng = seeded(derive_seed(a.scenario.seed, a.k as u64), 0);
            let init = PhaseCodebook::random(a.k, setup.fixed.elements(), PhaseMode::Continuous, &mut rng)?;
            let res = optimize_from(&setup.b, init, &opt)?;
            if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            res.codebook.write_csv(&a.out)?;
            let mut trace_path = a.out.as_os_str().to_owned();
            trace_path.push(".trace.csv");
            let trace_path = PathBuf::from(trace_path);
            write_rows(
                &trace_path,
                &["iteration", "beta_prime"],
                res.trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), format!("{v:.9e}")]),
            )?;
            let first = res.trace.first().copied().unwrap_or(f64::NAN);
            let last = res.trace.last().copied().unwrap_or(f64::NAN);
            writeln!(
                out,
                "beta' {first:.4e} -> {last:.4e} over {} iterations ({} step halvings)",
                res.trace.len() - 1,
                res.step_halvings
            )?;
            if res.zero_entries > 0 {
                writeln!(out, "{} projections hit a zero entry and kept their phase", res.zero_entries)?;
            }
            writeln!(out, "wrote {} and {}", a.out.display(), trace_path.display())?;
        }
        Command::Analyze(an) => analyze(an, out)?,
        Command::Reproduce(a) => {
            let cfgs = preset(&a.preset)?;
            for mut cfg in cfgs {
                apply_overrides(&mut cfg, a.trials, a.seed)?;
                let table = run_experiment(&cfg)?;
                let path = a.out.join(format!("{}.csv", cfg.name));
                table.write(&path, &cfg)?;
                print_summary(out, &table)?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
    }
    Ok(())
}

fn analyze(an: Analysis, out: &mut impl Write) -> Result<()> {
    match an {
        Analysis::Psf {
            scenario,
            k,
            mode,
            out: path,
        } => {
            let setup = view_setup(&scenario)?;
            let mut rng = seeded(derive_seed(scenario.seed, k as u64), 1);
            let cb = PhaseCodebook::random(k, setup.fixed.elements(), mode.into(), &mut rng)?;
            let rep = coherence_report(&setup.fixed, &cb.matrix().dot(&setup.b))?;
            writeln!(out, "beta {:.6e}  beta' {:.6e}", rep.beta, rep.beta_prime)?;
            writeln!(
                out,
                "|PSF - subpath| off-diagonal: median {:.4e} max {:.4e}",
                rep.deviation.median, rep.deviation.max
            )?;
            let worst = rep.psf_sidelobes.iter().cloned().fold(0.0, f64::max);
            writeln!(out, "largest PSF sidelobe {worst:.4}")?;
            if let Some(path) = path {
                let rows = (0..rep.psf_sidelobes.len()).map(|n| {
                    vec![
                        n.to_string(),
                        format!("{:.6}", rep.psf_sidelobes[n]),
                        format!("{:.6}", rep.subpath_sidelobes[n]),
                    ]
                });
                write_rows(&path, &["voxel", "psf_sidelobe", "subpath_sidelobe"], rows)?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
        Analysis::Coherence { scenario, ks, mode } => {
            let setup = view_setup(&scenario)?;
            let pts = psf_convergence(&setup.fixed, &setup.ue_to_roi, &ks, mode.into(), scenario.seed)?;
            writeln!(out, "k,median,max")?;
            for p in pts {
                writeln!(out, "{},{:.6e},{:.6e}", p.k, p.median, p.max)?;
            }
        }
        Analysis::Rcs {
            size,
            pixel,
            theta_tx,
            step,
            out: path,
        } => {
            if !(step > 0.0) {
                return Err(Error::Config("--step must be positive".into()));
            }
            let plate = Plate::square(size, pixel)?;
            let broadside = aggregate_rcs(
                &plate,
                Observation::FarField {
                    theta_tx: 0.0,
                    theta_rx: 0.0,
                },
                PixelModel::Anisotropic,
            )?;
            let ideal = 4.0 * PI * (size * size).powi(2);
            writeln!(
                out,
                "broadside {:.3} dB vs 4πA²/λ² {:.3} dB",
                10.0 * broadside.log10(),
                10.0 * ideal.log10()
            )?;
            let fl = fluctuation_db(pixel, -PI / 2.0, PI / 2.0, 181)?;
            writeln!(out, "single-pixel fluctuation over ±90°: {fl:.3} dB")?;
            let count = (180.0 / step).floor() as usize + 1;
            let angles: Vec<f64> = (0..count).map(|i| -90.0 + i as f64 * step).collect();
            let rad: Vec<f64> = angles.iter().map(|d| d.to_radians()).collect();
            let an = rcs_sweep(&plate, theta_tx.to_radians(), &rad, PixelModel::Anisotropic)?;
            let iso = rcs_sweep(&plate, theta_tx.to_radians(), &rad, PixelModel::Isotropic)?;
            let rows = (0..count).map(|i| vec![format!("{}", angles[i]), format!("{:.6}", an[i]), format!("{:.6}", iso[i])]);
            match path {
                Some(p) => {
                    write_rows(&p, &["theta_rx_deg", "anisotropic_db", "isotropic_db"], rows)?;
                    writeln!(out, "wrote {}", p.display())?;
                }
                None => {
                    writeln!(out, "theta_rx_deg,anisotropic_db,isotropic_db")?;
                    for r in rows {
                        writeln!(out, "{}", r.join(","))?;
                    }
                }
            }
        }
        Analysis::Limits { config, bandwidth } => {
            let cfg = load_or_default(config.as_deref())?;
            let ris = cfg.ris.array()?;
            let d = crate::geometry::Point3::from(cfg.roi.center).distance(ris.center);
            let s = subtended_angle_sine(ris.aperture(), d)?;
            let lim = diffraction_limits(bandwidth, 1.0, s, 1.0)?;
            writeln!(out, "aperture {:.3}λ at distance {:.3}λ: sin(ψ/2) = {:.5}", ris.aperture(), d, s)?;
            writeln!(out, "cross-range limit {:.4}λ", lim.cross_range)?;
            match lim.range {
                Some(r) => writeln!(out, "range limit {r:.4}λ")?,
                None => writeln!(out, "range limit unbounded (single frequency)")?,
            }
        }
    }
    Ok(())
}
