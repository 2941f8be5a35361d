use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Experiment, HarnessConfig, Plan};
use super::summary::{summarize, write_rows, ResultRow};
use super::verify::verify_gradients;
use crate::error::{Error, Result};
use crate::problems::{run_test_function, train_regression, RegressionSpec, TestFunctionSpec};
use crate::regret::{corollary_two_check, run_regret_experiment};
use crate::surfaces::emit_grid;

#[derive(Debug, Clone, Serialize)]
struct TrajectoryRow<'a> {
    experiment: &'a str,
    optimizer: &'a str,
    seed: u64,
    step: usize,
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub id: String,
    pub dir: PathBuf,
    pub rows: usize,
    pub invariant_failures: Vec<String>,
}

fn row(experiment: &str, optimizer: &str, seed: u64, metric: &str, step: usize, value: f64) -> ResultRow {
    ResultRow {
        experiment: experiment.into(),
        optimizer: optimizer.into(),
        seed,
        metric: metric.into(),
        step: step as u64,
        value,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Cartesian product of settings, optimizers and trial indices, in that
/// nesting order so results merge deterministically.
fn jobs<S: Copy>(settings: &[S], exp: &Experiment) -> Vec<(S, usize, u64)> {
    let mut out = Vec::new();
    for &s in settings {
        for o in 0..exp.optimizers.len() {
            for i in 0..exp.trials {
                out.push((s, o, exp.base_seed + i as u64));
            }
        }
    }
    out
}

/// Runs one experiment, writing its files under `root/<id>/`. Invariant
/// failures are reported in the outcome, not as an error, so every file is
/// still written.
pub fn run_experiment(exp: &Experiment, root: &Path) -> Result<ExperimentOutcome> {
    let dir = root.join(&exp.id);
    create_dir(&dir)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    match &exp.plan {
        Plan::TestFunction {
            function,
            steps,
            noise_ratios,
            record_every,
        } => {
            let results = jobs(noise_ratios, exp)
                .into_par_iter()
                .map(|(p, o, seed)| {
                    let spec = TestFunctionSpec {
                        function: *function,
                        noise_ratio: p,
                        steps: *steps,
                        record_every: *record_every,
                    };
                    run_test_function(&spec, &exp.optimizers[o].1, seed).map(|r| (p, o, seed, r))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut trajectory = Vec::new();
            let names: Vec<String> = noise_ratios.iter().map(|p| format!("{}:p={p}", exp.id)).collect();
            for (p, o, seed, r) in &results {
                let name = &names[noise_ratios.iter().position(|x| x == p).unwrap_or(0)];
                let label = &exp.optimizers[*o].0;
                rows.push(row(name, label, *seed, "final_error_norm", *steps, r.error_norm));
                rows.push(row(name, label, *seed, "final_value", *steps, r.final_value));
                rows.push(row(name, label, *seed, "noisy_steps", *steps, r.noisy_steps as f64));
                if let Some(nu) = r.final_nu_tilde {
                    rows.push(row(name, label, *seed, "final_nu_tilde", *steps, nu));
                }
                for &(step, x, y) in &r.trajectory {
                    trajectory.push(TrajectoryRow {
                        experiment: name,
                        optimizer: label,
                        seed: *seed,
                        step,
                        x,
                        y,
                    });
                }
            }
            if *record_every > 0 {
                write_rows(&dir.join("trajectory.csv"), &trajectory)?;
            }
        }
        Plan::Regression { spec, noise_ratios } => {
            let results = jobs(noise_ratios, exp)
                .into_par_iter()
                .map(|(p, o, seed)| {
                    let spec = RegressionSpec {
                        noise_ratio: p,
                        ..spec.clone()
                    };
                    train_regression(&spec, &exp.optimizers[o].1, seed).map(|r| (p, o, seed, r))
                })
                .collect::<Result<Vec<_>>>()?;
            for (p, o, seed, r) in &results {
                let name = format!("{}:p={p}", exp.id);
                let label = &exp.optimizers[*o].0;
                rows.push(row(&name, label, *seed, "test_mse", r.steps, r.test_mse));
                rows.push(row(&name, label, *seed, "final_train_loss", r.steps, r.final_train_loss));
                if let Some(nu) = r.mean_nu_tilde {
                    rows.push(row(&name, label, *seed, "mean_nu_tilde", r.steps, nu));
                }
            }
        }
        Plan::Regret { spec, dims, horizon } => {
            let results = jobs(dims, exp)
                .into_par_iter()
                .map(|(d, o, seed)| {
                    let spec = crate::problems::OnlineConvexSpec { dim: d, ..spec.clone() };
                    run_regret_experiment(&spec, &exp.optimizers[o].1, *horizon, seed).map(|r| (d, o, seed, r))
                })
                .collect::<Result<Vec<_>>>()?;
            let probes: Vec<usize> = [1, 2, 10, 100, 1000, *horizon].into_iter().filter(|t| t <= horizon).collect();
            for (d, o, seed, r) in &results {
                let name = format!("{}:d={d}", exp.id);
                let label = &exp.optimizers[*o].0;
                r.write_csv(&dir.join(format!("regret_{label}_d{d}_seed{seed}.csv")))?;
                let violations = r.violations();
                rows.push(row(&name, label, *seed, "regret", *horizon, r.regret));
                rows.push(row(&name, label, *seed, "bound_rhs", *horizon, r.bound.total()));
                rows.push(row(&name, label, *seed, "tau_lower", *horizon, r.tau_lower));
                rows.push(row(&name, label, *seed, "tau_final", *horizon, r.tau_final));
                rows.push(row(&name, label, *seed, "max_grad", *horizon, r.grad_bound));
                rows.push(row(&name, label, *seed, "violations", *horizon, violations.len() as f64));
                if let Some(ratio) = r.sqrt_growth_ratio(1000, *horizon) {
                    rows.push(row(&name, label, *seed, "sqrt_growth_ratio", *horizon, ratio));
                }
                let gap = corollary_two_check(&r.log, &r.constants, &probes);
                rows.push(row(&name, label, *seed, "corollary_gap", *horizon, gap));
                if let Some(first) = violations.first() {
                    failures.push(format!(
                        "{name} {label} seed {seed}: regret exceeds the bound at T = {first} ({} prefixes)",
                        violations.len()
                    ));
                }
                if gap >= 1e-9 {
                    failures.push(format!("{name} {label} seed {seed}: corollary substitution gap {gap:e}"));
                }
            }
        }
        Plan::Surface(grid) => {
            let path = dir.join(format!("{}.csv", grid.kind));
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            emit_grid(grid)?.write_csv(std::io::BufWriter::new(file))?;
        }
        Plan::VerifyGradients { tolerance } => {
            let checks = verify_gradients(*tolerance, exp.base_seed)?;
            write_rows(&dir.join("gradient_check.csv"), &checks)?;
            failures.extend(
                checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| format!("{}: max relative error {:e} ≥ {:e}", c.gradient, c.max_rel_error, c.tolerance)),
            );
        }
    }
    if !rows.is_empty() {
        write_rows(&dir.join("trials.csv"), &rows)?;
        write_rows(&dir.join("summary.csv"), &summarize(&rows)?)?;
    }
    Ok(ExperimentOutcome {
        id: exp.id.clone(),
        dir,
        rows: rows.len(),
        invariant_failures: failures,
    })
}

/// Validates the whole file first, then runs every experiment in order.
/// Returns an invariant error after all experiments ran if any check failed.
pub fn run_config(cfg: &HarnessConfig, output_override: Option<&Path>) -> Result<Vec<ExperimentOutcome>> {
    let experiments = cfg.experiments()?;
    let root = output_override.unwrap_or(&cfg.output_dir);
    create_dir(root)?;
    let outcomes = experiments
        .iter()
        .map(|e| run_experiment(e, root))
        .collect::<Result<Vec<_>>>()?;
    let failures: Vec<&String> = outcomes.iter().flat_map(|o| &o.invariant_failures).collect();
    if !failures.is_empty() {
        let list: Vec<&str> = failures.iter().map(|s| s.as_str()).collect();
        return Err(Error::Invariant(list.join("; ")));
    }
    Ok(outcomes)
}
