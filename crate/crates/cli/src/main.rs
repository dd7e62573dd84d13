//! `knudsen`: build wall profiles, transition matrices and diffusivity
//! estimates from the command line.
//!
//! Exit codes: 0 ok, 1 config, 2 geometry, 3 numeric or reliability, 4 i/o.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cache;
mod config;
mod error;
mod svg;
mod sweep;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knudsen_core::billiard::trace_cell;
use knudsen_core::diffusivity::gap_asymptotic;
use knudsen_core::operator::{spectral_summary, SamplingMode};
use knudsen_core::{Estimator, FamilySpec, Profile, TransitionMatrix};

use cache::MatrixCache;
use config::{ExperimentConfig, FamilyParams, Numerics};
use error::CliError;

#[derive(Parser)]
#[command(name = "knudsen", version, about = "Knudsen self-diffusivity of channels with microstructured walls")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the flatness parameter h of a profile.
    H {
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Build a transition matrix and write it as .bin or .csv.
    Matrix {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral gap of a built or stored transition matrix.
    Gap {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        build: BuildArgs,
        /// Read the matrix from a binary file instead of building it.
        #[arg(long, conflicts_with_all = ["family", "profile"])]
        matrix: Option<PathBuf>,
    },
    /// Diffusivity estimates for one profile, as CSV on stdout.
    Diffusivity {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        build: BuildArgs,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// Run a parameter sweep described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long = "N")]
        positions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long = "cache-dir", alias = "cache_dir")]
        cache_dir: Option<PathBuf>,
    },
    /// Dump one cell trajectory as CSV (event, point, direction).
    TraceDump {
        #[command(flatten)]
        profile: ProfileArgs,
        /// Entry position along the reference line.
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        /// Entry direction cosine in (-1, 1).
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProfileArgs {
    /// bumps, mixture, flat, two-bumps or bumps-with-wall.
    #[arg(long)]
    family: Option<String>,
    #[arg(long = "K", allow_negative_numbers = true)]
    k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    #[arg(long = "K_big", alias = "K-big", allow_negative_numbers = true)]
    k_big: Option<f64>,
    #[arg(long = "K_small", alias = "K-small", allow_negative_numbers = true)]
    k_small: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    w: Option<f64>,
    #[arg(long = "R", allow_negative_numbers = true)]
    r_wall: Option<f64>,
    /// Profile TOML file (built-in family or explicit piece list).
    #[arg(long, conflicts_with = "family")]
    profile: Option<PathBuf>,
}

impl ProfileArgs {
    fn spec(&self) -> Result<FamilySpec, CliError> {
        let params = FamilyParams {
            k: self.k,
            alpha: self.alpha,
            d: self.d,
            k_big: self.k_big,
            k_small: self.k_small,
            w: self.w,
            r: self.r_wall,
        };
        match (&self.profile, &self.family) {
            (Some(path), _) => {
                if params != FamilyParams::default() {
                    return Err(CliError::Config("family parameters go inside the --profile file".into()));
                }
                let text = read(path)?;
                FamilySpec::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
            (None, Some(family)) => params.spec(family),
            (None, None) => Err(CliError::Config("give --family or --profile".into())),
        }
    }

    fn build(&self) -> Result<(FamilySpec, Profile), CliError> {
        let spec = self.spec()?;
        let profile = spec.build::<f64>()?;
        Ok((spec, profile))
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Velocity bins.
    #[arg(long = "M", default_value_t = config::default_m())]
    m: usize,
    /// Entry positions per row.
    #[arg(long = "N", default_value_t = config::default_n())]
    positions: usize,
    /// Stratified random sampling with this seed; midpoint grid if absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix cache directory (default: $KNUDSEN_CACHE_DIR, else no cache).
    #[arg(long = "cache-dir", alias = "cache_dir")]
    cache_dir: Option<PathBuf>,
}

impl BuildArgs {
    fn sampling(&self) -> SamplingMode {
        match self.seed {
            Some(seed) => SamplingMode::Stratified { seed },
            None => SamplingMode::Grid,
        }
    }

    fn matrix(&self, profile: &Profile) -> Result<TransitionMatrix, CliError> {
        let cache = MatrixCache::new(self.cache_dir.clone());
        Ok(cache.get_or_build(profile, self.m, self.positions, self.sampling())?.0)
    }
}

#[derive(Args)]
struct EstimatorArgs {
    /// Comma-separated list of lser, galerkin, direct, spectral.
    #[arg(long = "estimator", alias = "estimators", value_delimiter = ',', default_value = "galerkin")]
    estimators: Vec<Estimator>,
    #[arg(long = "n_lser", alias = "n-lser", default_value_t = knudsen_core::diffusivity::DEFAULT_LSER_N)]
    n_lser: usize,
    /// Galerkin order [default: min(200, M)].
    #[arg(long = "n_galerkin", alias = "n-galerkin")]
    n_galerkin: Option<usize>,
    #[arg(long = "quadrature_order", alias = "quadrature-order", default_value_t = config::default_quadrature_order())]
    quadrature_order: usize,
    /// Cut-off a of the displacement observable, in channel radii.
    #[arg(long, default_value_t = config::default_cutoff())]
    cutoff: f64,
    #[arg(long, default_value_t = config::default_radius())]
    radius: f64,
    #[arg(long = "gap_threshold", alias = "gap-threshold", default_value_t = config::default_gap_threshold())]
    gap_threshold: f64,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Rounds to 12 significant digits so closed forms print as such.
fn display(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    format!("{rounded}")
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::H { profile } => {
            let (_, profile) = profile.build()?;
            println!("{}", display(profile.flatness_h().h));
        }
        Command::Matrix { profile, build, out } => {
            let (_, profile) = profile.build()?;
            let p = build.matrix(&profile)?;
            if out.extension().is_some_and(|e| e == "csv") {
                write(&out, p.to_csv().as_bytes())?;
            } else {
                p.write_binary(&out)?;
            }
            let meta = p.metadata();
            if let Some(w) = &meta.quality_warning {
                log::warn!("{w}");
            }
            eprintln!("wrote {} x {} matrix ({} rejections) to {}", meta.m, meta.m, meta.rejections, out.display());
        }
        Command::Gap { profile, build, matrix } => {
            let (p, h) = match matrix {
                Some(path) => {
                    let p = TransitionMatrix::read_binary(&path)?;
                    let h = match &p.metadata().family {
                        Some(spec) => Some(spec.build::<f64>()?.flatness_h().h),
                        None => None,
                    };
                    (p, h)
                }
                None => {
                    let (_, profile) = profile.build()?;
                    (build.matrix(&profile)?, Some(profile.flatness_h().h))
                }
            };
            let s = spectral_summary(&p)?;
            println!("gap={}", s.gap);
            println!("second_eigenvalue={}", s.second_eigenvalue);
            println!("retention={}", s.retention);
            println!("symmetrization_defect={}", s.symmetrization_defect);
            if let Some(h) = h {
                println!("h={}", display(h));
                println!("gap_asymptotic={}", display(gap_asymptotic(h)?));
            }
        }
        Command::Diffusivity { profile, build, est } => {
            if est.estimators.is_empty() {
                return Err(CliError::Config("estimator list is empty".into()));
            }
            let num = Numerics {
                m: build.m,
                n: build.positions,
                sampling: build.sampling(),
                n_lser: est.n_lser,
                n_galerkin: est.n_galerkin.unwrap_or(config::default_n_galerkin(build.m)),
                quadrature_order: est.quadrature_order,
                cutoff: est.cutoff,
                radius: est.radius,
                gap_threshold: est.gap_threshold,
            };
            num.validate()?;
            let (spec, _) = profile.build()?;
            let cache = MatrixCache::new(build.cache_dir.clone());
            let rows = sweep::run_point(&spec, &est.estimators, &num, &cache);
            sweep::write_csv(std::io::stdout().lock(), &rows)?;
            let failed: Vec<String> =
                rows.iter().filter(|r| r.status != "ok").map(|r| format!("{}: {}", r.estimator, r.status)).collect();
            if !failed.is_empty() {
                return Err(CliError::Numeric(failed.join("; ")));
            }
        }
        Command::Sweep { config, m, positions, seed, jobs, output, svg, cache_dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.m = m.unwrap_or(cfg.m);
            cfg.n = positions.unwrap_or(cfg.n);
            cfg.seed = seed.or(cfg.seed);
            cfg.jobs = jobs.or(cfg.jobs);
            cfg.output = output.or(cfg.output);
            cfg.svg = svg.or(cfg.svg);
            cfg.cache_dir = cache_dir.or(cfg.cache_dir);
            let points = cfg.grid()?;
            let parameter = cfg.parameter()?;
            let cache = MatrixCache::new(cfg.cache_dir.clone());
            let result = sweep::run_sweep(&parameter, &points, &cfg.estimators, &cfg.numerics(), &cache, cfg.jobs)?;
            match &cfg.output {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    sweep::write_csv(std::io::BufWriter::new(file), result.rows())?;
                }
                None => sweep::write_csv(std::io::stdout().lock(), result.rows())?,
            }
            if let Some(path) = &cfg.svg {
                write(path, svg::sweep_chart(&result).as_bytes())?;
            }
            let failed = result.rows().filter(|r| r.status != "ok").count();
            if failed > 0 {
                log::warn!("{failed} of {} rows have no estimate; see the status column", result.rows().count());
            }
        }
        Command::TraceDump { profile, r, x, out } => {
            let (_, profile) = profile.build()?;
            let traj = trace_cell(&profile, r, x)?;
            let csv = traj.to_csv(profile.reference_height());
            match out {
                Some(path) => write(&path, csv.as_bytes())?,
                None => std::io::stdout().lock().write_all(csv.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("knudsen: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
