use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    AdaTerm,
    Adam,
    AdaBelief,
    TAdam,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::AdaTerm, Self::Adam, Self::AdaBelief, Self::TAdam];

    pub fn name(self) -> &'static str {
        match self {
            Self::AdaTerm => "adaterm",
            Self::Adam => "adam",
            Self::AdaBelief => "adabelief",
            Self::TAdam => "tadam",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Self::AdaTerm => 1,
            Self::Adam => 2,
            Self::AdaBelief => 3,
            Self::TAdam => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.tag() == tag)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "adaterm" => Ok(Self::AdaTerm),
            "adam" => Ok(Self::Adam),
            "adabelief" => Ok(Self::AdaBelief),
            "tadam" => Ok(Self::TAdam),
            _ => Err(Error::Config(format!(
                "unknown optimizer `{s}` (expected one of adaterm, adam, adabelief, tadam)"
            ))),
        }
    }
}

/// Update-direction variants of AdaTerm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Default,
    /// Normalise by `√(v + m²)` instead of `√v`.
    Uncentered,
    /// Replace `1 − β^t` by the adaptive weight sum `c_t`.
    AdaBias,
    UncenteredAdaBias,
    /// Scale update `v ← (1 − τ_v) v + τ_v (w_mv s + ε²)`.
    AdaTerm2,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "default" => Ok(Self::Default),
            "uncentered" => Ok(Self::Uncentered),
            "adabias" => Ok(Self::AdaBias),
            "uncenteredadabias" => Ok(Self::UncenteredAdaBias),
            "adaterm2" => Ok(Self::AdaTerm2),
            _ => Err(Error::Config(format!("unknown AdaTerm variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    #[default]
    None,
    /// `ν̃` frozen at its initial value.
    NoAdaptiveness,
    /// Gaussian limit: `w_mv = w̄_mv`, `Δs = ε²`.
    NoRobustness,
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "none" => Ok(Self::None),
            "noadaptiveness" => Ok(Self::NoAdaptiveness),
            "norobustness" => Ok(Self::NoRobustness),
            _ => Err(Error::Config(format!("unknown ablation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// `α_t = α / √t`.
    InverseSqrt,
}

impl FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "constant" => Ok(Self::Constant),
            "inversesqrt" => Ok(Self::InverseSqrt),
            _ => Err(Error::Config(format!("unknown learning-rate schedule `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    /// AdaTerm's single smoothness parameter.
    pub beta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub nu_tilde_min: f64,
    /// Initial `ν̃`; `None` means `ν̃_min + ε`.
    pub nu_tilde_init: Option<f64>,
    /// Fixed `ν̃` of t-Adam (its `ν = ν̃ d`).
    pub tadam_nu_tilde: f64,
    pub variant: Variant,
    pub ablation: Ablation,
    pub lr_schedule: LrSchedule,
    pub bias_correction: bool,
    /// Decoupled decay, `θ ← θ (1 − α_t λ)` before each step.
    pub weight_decay: f64,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        let (alpha, eps) = match algorithm {
            Algorithm::AdaTerm => (1e-3, 1e-5),
            _ => (1e-3, 1e-8),
        };
        Self {
            algorithm,
            alpha,
            beta: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps,
            nu_tilde_min: 1.0,
            nu_tilde_init: None,
            tadam_nu_tilde: 1.0,
            variant: Variant::Default,
            ablation: Ablation::None,
            lr_schedule: LrSchedule::Constant,
            bias_correction: true,
            weight_decay: 0.0,
        }
    }

    pub fn adaterm() -> Self {
        Self::new(Algorithm::AdaTerm)
    }

    pub fn adam() -> Self {
        Self::new(Algorithm::Adam)
    }

    pub fn adabelief() -> Self {
        Self::new(Algorithm::AdaBelief)
    }

    pub fn tadam() -> Self {
        Self::new(Algorithm::TAdam)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn initial_nu_tilde(&self) -> f64 {
        self.nu_tilde_init.unwrap_or(self.nu_tilde_min + self.eps)
    }

    pub fn learning_rate(&self, t: u64) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.alpha,
            LrSchedule::InverseSqrt => self.alpha / (t.max(1) as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64, name: &str| {
            if x > 0.0 && x < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {x}")))
            }
        };
        let positive = |x: f64, name: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        positive(self.alpha, "alpha")?;
        positive(self.eps, "eps")?;
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        match self.algorithm {
            Algorithm::AdaTerm => {
                unit(self.beta, "beta")?;
                positive(self.nu_tilde_min, "nu_tilde_min")?;
                let init = self.initial_nu_tilde();
                if !(init > self.nu_tilde_min) || !init.is_finite() {
                    return Err(Error::Config(format!(
                        "nu_tilde_init {init} must exceed nu_tilde_min {}",
                        self.nu_tilde_min
                    )));
                }
            }
            Algorithm::Adam | Algorithm::AdaBelief => {
                unit(self.beta1, "beta1")?;
                unit(self.beta2, "beta2")?;
            }
            Algorithm::TAdam => {
                unit(self.beta2, "beta2")?;
                // The decaying weight sum needs (2β₁ − 1)/β₁ ≥ 0.
                if !(self.beta1 >= 0.5 && self.beta1 < 1.0) {
                    return Err(Error::Config(format!(
                        "t-Adam needs beta1 in [0.5, 1), got {}",
                        self.beta1
                    )));
                }
                positive(self.tadam_nu_tilde, "tadam_nu_tilde")?;
            }
        }
        if self.algorithm != Algorithm::AdaTerm
            && (self.variant != Variant::Default || self.ablation != Ablation::None)
        {
            return Err(Error::Config(format!(
                "variants and ablations only apply to adaterm, not {}",
                self.algorithm
            )));
        }
        Ok(())
    }
}
