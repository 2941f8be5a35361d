use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adaterm::harness::{
    exit_code, run_config, summarize_dir, verify_gradients, write_rows, ExperimentKind, HarnessConfig,
};
use adaterm::surfaces::{emit_grid, Axis, GridKind, GridSpec};
use adaterm::{Error, Result};

#[derive(Parser)]
#[command(name = "adaterm", version, about = "AdaTerm optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file.
    Run {
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute summary.csv for every trials.csv under a results directory.
    Summarize { dir: PathBuf },
    /// Emit one of the explanatory grids as CSV.
    Surface {
        /// fig1, tau-surface or dof-increment-surface
        kind: String,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Points per axis.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Check every analytic gradient against central finite differences.
    VerifyGradients {
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run only the regret experiments of a config file.
    Regret {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(config: &Path, out: Option<&Path>, only_regret: bool) -> Result<()> {
    let mut cfg = HarnessConfig::load(config)?;
    if only_regret {
        cfg.experiments.retain(|e| e.kind == ExperimentKind::Regret);
        if cfg.experiments.is_empty() {
            return Err(Error::Config(format!("{} has no regret experiments", config.display())));
        }
    }
    for o in run_config(&cfg, out)? {
        println!("{}: {} result rows in {}", o.id, o.rows, o.dir.display());
    }
    Ok(())
}

fn surface(kind: &str, out: Option<&Path>, points: Option<usize>, beta: Option<f64>) -> Result<()> {
    let kind: GridKind = kind.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    let mut spec = GridSpec::new(kind);
    if let Some(n) = points {
        spec.first = Axis { points: n, ..spec.first };
        spec.second = Axis { points: n, ..spec.second };
    }
    if let Some(b) = beta {
        spec.beta = b;
    }
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let grid = emit_grid(&spec)?;
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.into(),
                source: e,
            })?;
            grid.write_csv(std::io::BufWriter::new(file))
        }
        None => grid.write_csv(std::io::stdout().lock()),
    }
}

fn verify(tolerance: f64, seed: u64, out: Option<&Path>) -> Result<()> {
    if !(tolerance > 0.0) {
        return Err(Error::Config("--tolerance must be positive".into()));
    }
    let checks = verify_gradients(tolerance, seed)?;
    let mut stdout = std::io::stdout().lock();
    for c in &checks {
        let status = if c.pass { "ok  " } else { "FAIL" };
        // A closed pipe is not worth failing the check over.
        let _ = writeln!(stdout, "{status} {:<36} max rel err {:.3e} over {} points", c.gradient, c.max_rel_error, c.points);
    }
    if let Some(path) = out {
        write_rows(path, &checks)?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.gradient.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Invariant(format!("gradient checks failed: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out } => run(config, out.as_deref(), false),
        Command::Regret { config, out } => run(config, out.as_deref(), true),
        Command::Summarize { dir } => summarize_dir(dir).map(|rows| {
            println!("experiment,optimizer,metric,count,mean,std,median");
            for r in rows {
                println!(
                    "{},{},{},{},{},{},{}",
                    r.experiment, r.optimizer, r.metric, r.count, r.mean, r.std, r.median
                );
            }
        }),
        Command::Surface { kind, out, points, beta } => surface(kind, out.as_deref(), *points, *beta),
        Command::VerifyGradients { tolerance, seed, out } => verify(*tolerance, *seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
