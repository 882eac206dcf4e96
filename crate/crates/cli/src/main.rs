use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use rbfront_cli::config::ConfigError;
use rbfront_cli::{analyze_run, emit_plots, run_experiment, ExperimentConfig, HarnessError, EXIT_PARTIAL};
use rbfront_core::bounds::{write_bound_curve, VelocityBound};

#[derive(Parser)]
#[command(name = "rbfront", version, about = "Front propagation experiments for red/blue particle systems")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration with a single density (or beta).
    Simulate(RunArgs),
    /// Run every density (or beta) of a configuration and fit the scaling exponent.
    Sweep(RunArgs),
    /// Re-fit an existing run directory.
    Analyze {
        run_dir: PathBuf,
        /// Override the burn-in fraction of the stored configuration.
        #[arg(long)]
        burn_in: Option<f64>,
    },
    /// Write bound curves as CSV.
    Bounds(BoundArgs),
    /// Write SVG plots for a run directory.
    Plot { run_dir: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Run directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Rb,
    Frog1d,
    Rbk,
}

#[derive(clap::Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    model: BoundKind,
    #[arg(long)]
    delta: f64,
    /// Comma-separated densities.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4")]
    rho: Vec<f64>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    t: Vec<f64>,
    /// Inverse temperature for the Kawasaki bound.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Density exponent for the Kawasaki bound.
    #[arg(long, default_value_t = 1.0)]
    density_exp: f64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cfg_path: &Path, out: Option<PathBuf>, single: bool) -> Result<i32, HarnessError> {
    let cfg = ExperimentConfig::from_path(cfg_path)?;
    if single && cfg.points() != 1 {
        return Err(ConfigError {
            line: None,
            column: None,
            field: Some(if cfg.model.is_rb() { "rb.densities" } else { "kawasaki.betas" }.into()),
            message: format!("`simulate` takes one grid point, got {}; use `sweep`", cfg.points()),
        }
        .into());
    }
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.model.name()));
    let outcome = run_experiment(&cfg, &dir)?;
    let s = &outcome.summary;
    for p in &s.points {
        match (&p.velocity, &p.two_box) {
            (Some(v), _) => println!("{} = {}: v = {:.4} ± {:.4} ({} replicas)", p.parameter, p.value, v.v_hat, v.stderr, v.replicas),
            (None, Some(tb)) => println!(
                "{} = {}: discrepancy {:.4} ± {:.4} ({} replicas)",
                p.parameter, p.value, tb.discrepancy, tb.discrepancy_se, tb.replicas
            ),
            (None, None) => println!("{} = {}: no velocity ({})", p.parameter, p.value, p.velocity_error.as_deref().unwrap_or("?")),
        }
    }
    if let Some(f) = &s.scaling {
        println!("scaling exponent {:.4} ± {:.4}", f.exponent, f.exponent_se);
    }
    if let Some(b) = &s.bound {
        println!("bound violations {}/{}", b.violations, b.replicas);
    }
    println!("wrote {}", dir.display());
    Ok(if s.partial_failure { EXIT_PARTIAL } else { 0 })
}

fn bounds(args: &BoundArgs) -> Result<(), HarnessError> {
    let bound = match args.model {
        BoundKind::Rb => VelocityBound::Rb { delta: args.delta },
        BoundKind::Frog1d => VelocityBound::Frog1D { delta: args.delta },
        BoundKind::Rbk => VelocityBound::Rbk {
            beta: args.beta,
            density_exp: args.density_exp,
            delta: args.delta,
        },
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    match &args.out {
        Some(path) => {
            let f = File::create(path).map_err(io(path))?;
            write_bound_curve(BufWriter::new(f), &bound, &args.rho, &args.t).map_err(io(path))
        }
        None => {
            let stdout = io::stdout();
            write_bound_curve(stdout.lock(), &bound, &args.rho, &args.t).map_err(io(Path::new("<stdout>")))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => run(&a.config, a.out.clone(), true),
        Command::Sweep(a) => run(&a.config, a.out.clone(), false),
        Command::Analyze { run_dir, burn_in } => analyze_run(run_dir, *burn_in).map(|s| {
            if let Some(f) = &s.scaling {
                println!("scaling exponent {:.4} ± {:.4}", f.exponent, f.exponent_se);
            }
            if s.partial_failure {
                EXIT_PARTIAL
            } else {
                0
            }
        }),
        Command::Bounds(a) => bounds(a).map(|_| 0),
        Command::Plot { run_dir } => emit_plots(run_dir).map(|files| {
            for f in files {
                info!("wrote {}", f.display());
            }
            0
        }),
    };
    let _ = io::stdout().flush();
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
