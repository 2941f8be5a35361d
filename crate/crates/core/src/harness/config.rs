//! Experiment configuration files (TOML, `schema_version = 1`).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::optim::{Ablation, Algorithm, LrSchedule, OptimizerConfig, Variant};
use crate::problems::{OnlineConvexSpec, RegressionSpec, TestFunction, DEFAULT_NOISE_RATIOS};
use crate::surfaces::{Axis, GridKind, GridSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub schema_version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TestFunction,
    Regression,
    Regret,
    Surface,
    VerifyGradients,
}

/// One `[[experiment]]` table. Which keys apply depends on `kind`; keys
/// that do not apply are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub kind: ExperimentKind,
    #[serde(default = "one")]
    pub trials: usize,
    pub base_seed: Option<u64>,
    #[serde(default, rename = "optimizer")]
    pub optimizers: Vec<OptimizerSection>,

    pub function: Option<String>,
    pub steps: Option<usize>,
    pub noise_ratios: Option<Vec<f64>>,
    pub record_every: Option<usize>,

    pub samples: Option<usize>,
    pub batch_size: Option<usize>,
    pub noise_dof: Option<f64>,
    pub noise_scale: Option<f64>,
    pub domain: Option<[f64; 2]>,
    pub test_points: Option<usize>,

    pub dims: Option<Vec<usize>>,
    pub horizon: Option<usize>,
    pub half_width: Option<f64>,
    pub grad_bound: Option<f64>,
    pub curvature: Option<[f64; 2]>,
    pub center_spread: Option<f64>,

    pub surface: Option<String>,
    pub beta: Option<f64>,
    pub points: Option<usize>,

    pub tolerance: Option<f64>,
}

fn one() -> usize {
    1
}

/// `[[experiment.optimizer]]`: an algorithm name plus overrides of its defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub name: String,
    pub label: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    pub nu_tilde_min: Option<f64>,
    pub nu_tilde_init: Option<f64>,
    pub tadam_nu_tilde: Option<f64>,
    pub variant: Option<String>,
    pub ablation: Option<String>,
    pub lr_schedule: Option<String>,
    pub bias_correction: Option<bool>,
    pub weight_decay: Option<f64>,
}

fn config_err(context: &str, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{context}: {e}"))
}

impl OptimizerSection {
    pub fn resolve(&self, context: &str) -> Result<(String, OptimizerConfig)> {
        let algorithm: Algorithm = self.name.parse().map_err(|e| config_err(&format!("{context}.name"), e))?;
        let mut cfg = OptimizerConfig::new(algorithm);
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.alpha, self.alpha);
        set(&mut cfg.beta, self.beta);
        set(&mut cfg.beta1, self.beta1);
        set(&mut cfg.beta2, self.beta2);
        set(&mut cfg.eps, self.eps);
        set(&mut cfg.nu_tilde_min, self.nu_tilde_min);
        set(&mut cfg.tadam_nu_tilde, self.tadam_nu_tilde);
        set(&mut cfg.weight_decay, self.weight_decay);
        cfg.nu_tilde_init = self.nu_tilde_init.or(cfg.nu_tilde_init);
        if let Some(v) = &self.variant {
            cfg.variant = v.parse::<Variant>().map_err(|e| config_err(&format!("{context}.variant"), e))?;
        }
        if let Some(a) = &self.ablation {
            cfg.ablation = a.parse::<Ablation>().map_err(|e| config_err(&format!("{context}.ablation"), e))?;
        }
        if let Some(s) = &self.lr_schedule {
            cfg.lr_schedule = s
                .parse::<LrSchedule>()
                .map_err(|e| config_err(&format!("{context}.lr_schedule"), e))?;
        }
        if let Some(b) = self.bias_correction {
            cfg.bias_correction = b;
        }
        cfg.validate().map_err(|e| config_err(context, e))?;
        let label = self.label.clone().unwrap_or_else(|| default_label(&cfg));
        Ok((label, cfg))
    }
}

fn default_label(cfg: &OptimizerConfig) -> String {
    let mut label = cfg.algorithm.name().to_string();
    if cfg.variant != Variant::Default {
        label.push_str(&format!("-{:?}", cfg.variant).to_ascii_lowercase());
    }
    if cfg.ablation != Ablation::None {
        label.push_str(&format!("-{:?}", cfg.ablation).to_ascii_lowercase());
    }
    label
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub enum Plan {
    TestFunction {
        function: TestFunction,
        steps: usize,
        noise_ratios: Vec<f64>,
        record_every: usize,
    },
    Regression {
        spec: RegressionSpec,
        noise_ratios: Vec<f64>,
    },
    Regret {
        spec: OnlineConvexSpec,
        dims: Vec<usize>,
        horizon: usize,
    },
    Surface(GridSpec),
    VerifyGradients {
        tolerance: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: String,
    pub trials: usize,
    pub base_seed: u64,
    pub optimizers: Vec<(String, OptimizerConfig)>,
    pub plan: Plan,
}

impl ExperimentConfig {
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! check {
            ($($field:ident),*) => {$(if self.$field.is_some() { keys.push(stringify!($field)); })*};
        }
        check!(
            function, steps, noise_ratios, record_every, samples, batch_size, noise_dof, noise_scale, domain,
            test_points, dims, horizon, half_width, grad_bound, curvature, center_spread, surface, beta, points,
            tolerance
        );
        keys
    }

    fn allowed_keys(&self) -> &'static [&'static str] {
        match self.kind {
            ExperimentKind::TestFunction => &["function", "steps", "noise_ratios", "record_every"],
            ExperimentKind::Regression => &[
                "samples",
                "batch_size",
                "noise_ratios",
                "noise_dof",
                "noise_scale",
                "domain",
                "test_points",
            ],
            ExperimentKind::Regret => &["dims", "horizon", "half_width", "grad_bound", "curvature", "center_spread"],
            ExperimentKind::Surface => &["surface", "beta", "points"],
            ExperimentKind::VerifyGradients => &["tolerance"],
        }
    }

    pub fn resolve(&self, global_seed: u64) -> Result<Experiment> {
        let ctx = format!("experiment `{}`", self.id);
        if self.id.is_empty() || self.id.contains(['/', '\\']) || self.id.starts_with('.') {
            return Err(Error::Config(format!("{ctx}.id must be a plain non-empty name")));
        }
        if self.trials == 0 {
            return Err(Error::Config(format!("{ctx}.trials must be at least 1")));
        }
        let allowed = self.allowed_keys();
        if let Some(key) = self.present_keys().into_iter().find(|k| !allowed.contains(k)) {
            return Err(Error::Config(format!("{ctx}.{key} does not apply to kind {:?}", self.kind)));
        }
        let optimizers = self
            .optimizers
            .iter()
            .enumerate()
            .map(|(i, o)| o.resolve(&format!("{ctx}.optimizer[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let needs_optimizers = matches!(
            self.kind,
            ExperimentKind::TestFunction | ExperimentKind::Regression | ExperimentKind::Regret
        );
        if needs_optimizers && optimizers.is_empty() {
            return Err(Error::Config(format!("{ctx} needs at least one [[experiment.optimizer]]")));
        }
        if !needs_optimizers && !optimizers.is_empty() {
            return Err(Error::Config(format!("{ctx}.optimizer does not apply to kind {:?}", self.kind)));
        }
        let ratios = |default: &[f64]| -> Result<Vec<f64>> {
            let r = self.noise_ratios.clone().unwrap_or_else(|| default.to_vec());
            if r.is_empty() || r.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Config(format!("{ctx}.noise_ratios must be non-empty and within [0, 1]")));
            }
            Ok(r)
        };
        let plan = match self.kind {
            ExperimentKind::TestFunction => {
                let name = self
                    .function
                    .as_deref()
                    .ok_or_else(|| Error::Config(format!("{ctx}.function is required")))?;
                Plan::TestFunction {
                    function: name.parse().map_err(|e| config_err(&format!("{ctx}.function"), e))?,
                    steps: self.steps.unwrap_or(15_000),
                    noise_ratios: ratios(&DEFAULT_NOISE_RATIOS)?,
                    record_every: self.record_every.unwrap_or(0),
                }
            }
            ExperimentKind::Regression => {
                let d = RegressionSpec::default();
                let spec = RegressionSpec {
                    samples: self.samples.unwrap_or(d.samples),
                    batch_size: self.batch_size.unwrap_or(d.batch_size),
                    noise_ratio: 0.0,
                    noise_dof: self.noise_dof.unwrap_or(d.noise_dof),
                    noise_scale: self.noise_scale.unwrap_or(d.noise_scale),
                    domain: self.domain.map_or(d.domain, |[a, b]| (a, b)),
                    test_points: self.test_points.unwrap_or(d.test_points),
                };
                spec.validate().map_err(|e| config_err(&ctx, e))?;
                Plan::Regression {
                    spec,
                    noise_ratios: ratios(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])?,
                }
            }
            ExperimentKind::Regret => {
                let d = OnlineConvexSpec::default();
                let spec = OnlineConvexSpec {
                    dim: d.dim,
                    half_width: self.half_width.unwrap_or(d.half_width),
                    grad_bound: self.grad_bound.unwrap_or(d.grad_bound),
                    curvature: self.curvature.map_or(d.curvature, |[a, b]| (a, b)),
                    center_spread: self.center_spread.unwrap_or(d.center_spread),
                };
                spec.validate().map_err(|e| config_err(&ctx, e))?;
                let dims = self.dims.clone().unwrap_or_else(|| vec![2, 10]);
                if dims.is_empty() || dims.contains(&0) {
                    return Err(Error::Config(format!("{ctx}.dims must list positive dimensions")));
                }
                for (label, cfg) in &optimizers {
                    if cfg.algorithm != Algorithm::AdaTerm || cfg.lr_schedule != LrSchedule::InverseSqrt {
                        return Err(Error::Config(format!(
                            "{ctx}: optimizer `{label}` must be adaterm with lr_schedule = \"inverse_sqrt\""
                        )));
                    }
                }
                let horizon = self.horizon.unwrap_or(5000);
                if horizon == 0 {
                    return Err(Error::Config(format!("{ctx}.horizon must be positive")));
                }
                Plan::Regret { spec, dims, horizon }
            }
            ExperimentKind::Surface => {
                let name = self
                    .surface
                    .as_deref()
                    .ok_or_else(|| Error::Config(format!("{ctx}.surface is required")))?;
                let kind: GridKind = name.parse().map_err(|e| config_err(&format!("{ctx}.surface"), e))?;
                let mut grid = GridSpec::new(kind);
                if let Some(b) = self.beta {
                    grid.beta = b;
                }
                if let Some(n) = self.points {
                    grid.first = Axis { points: n, ..grid.first };
                    grid.second = Axis { points: n, ..grid.second };
                }
                grid.validate().map_err(|e| config_err(&ctx, e))?;
                Plan::Surface(grid)
            }
            ExperimentKind::VerifyGradients => {
                let tolerance = self.tolerance.unwrap_or(1e-5);
                if !(tolerance > 0.0) {
                    return Err(Error::Config(format!("{ctx}.tolerance must be positive")));
                }
                Plan::VerifyGradients { tolerance }
            }
        };
        Ok(Experiment {
            id: self.id.clone(),
            trials: self.trials,
            base_seed: self.base_seed.unwrap_or(global_seed),
            optimizers,
            plan,
        })
    }
}

impl HarnessConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version = {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validates every experiment; ids must be unique.
    pub fn experiments(&self) -> Result<Vec<Experiment>> {
        let mut seen = std::collections::HashSet::new();
        self.experiments
            .iter()
            .map(|e| {
                if !seen.insert(e.id.as_str()) {
                    return Err(Error::Config(format!("duplicate experiment id `{}`", e.id)));
                }
                e.resolve(self.base_seed)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
output_dir = "out"

[[experiment]]
id = "rb"
kind = "test_function"
function = "rosenbrock"
steps = 10
noise_ratios = [0.0]

[[experiment.optimizer]]
name = "adaterm"
alpha = 0.01

[[experiment.optimizer]]
name = "adaterm"
ablation = "no_robustness"
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = HarnessConfig::parse(MINIMAL).unwrap();
        let exps = cfg.experiments().unwrap();
        assert_eq!(exps.len(), 1);
        let labels: Vec<_> = exps[0].optimizers.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, ["adaterm", "adaterm-norobustness"]);
        assert_eq!(exps[0].optimizers[0].1.alpha, 0.01);
        assert!(matches!(exps[0].plan, Plan::TestFunction { steps: 10, .. }));
    }

    #[test]
    fn unknown_optimizer_names_the_key() {
        let text = MINIMAL.replace("name = \"adaterm\"\nalpha", "name = \"sgdx\"\nalpha");
        let err = HarnessConfig::parse(&text).unwrap().experiments().unwrap_err().to_string();
        assert!(err.contains("optimizer[0].name") && err.contains("sgdx"), "{err}");
    }

    #[test]
    fn rejects_bad_schema_and_stray_keys() {
        assert!(HarnessConfig::parse(&MINIMAL.replace("schema_version = 1", "schema_version = 2")).is_err());
        assert!(HarnessConfig::parse(&MINIMAL.replace("steps = 10", "stepz = 10")).is_err());
        let stray = MINIMAL.replace("steps = 10", "steps = 10\nhorizon = 5");
        let err = HarnessConfig::parse(&stray).unwrap().experiments().unwrap_err().to_string();
        assert!(err.contains("horizon"), "{err}");
        let dup = format!("{MINIMAL}\n{}", &MINIMAL[MINIMAL.find("[[experiment]]").unwrap()..]);
        assert!(HarnessConfig::parse(&dup).unwrap().experiments().is_err());
    }

    #[test]
    fn regret_requires_inverse_sqrt_adaterm() {
        let text = r#"
schema_version = 1
[[experiment]]
id = "r"
kind = "regret"
[[experiment.optimizer]]
name = "adaterm"
"#;
        assert!(HarnessConfig::parse(text).unwrap().experiments().is_err());
        let ok = text.replace("name = \"adaterm\"", "name = \"adaterm\"\nlr_schedule = \"inverse_sqrt\"");
        assert!(HarnessConfig::parse(&ok).unwrap().experiments().is_ok());
    }
}
