use super::config::{Ablation, OptimizerConfig, Variant};
use super::group::{GroupState, ParamGroup, StepReport};
use crate::error::{Error, Result};
use crate::tdist::{ScaleRule, StepDiagnostics, TDistState, UpdateRule};

/// Per-group AdaTerm state: the t-estimator plus the adaptive bias
/// correction accumulator `c_t` (only read by the AdaBias variants).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaTermState {
    pub estimator: TDistState,
    pub bias: f64,
}

impl AdaTermState {
    pub fn new(d: usize, cfg: &OptimizerConfig) -> Result<Self> {
        Ok(Self {
            estimator: TDistState::with_initial_nu(
                d,
                cfg.beta,
                cfg.eps,
                cfg.nu_tilde_min,
                cfg.initial_nu_tilde(),
            )?,
            bias: 0.0,
        })
    }

    /// Advances the estimator with `g` and returns the update direction.
    pub fn advance(&mut self, g: &[f64], cfg: &OptimizerConfig) -> Result<(Vec<f64>, StepDiagnostics)> {
        let (next, diag) = self.estimator.update_with(g, update_rule(cfg))?;
        self.estimator = next;
        self.bias = adaptive_bias_step(self.bias, diag.tau_mv);
        Ok((adaterm_eta(&self.estimator, self.bias, cfg), diag))
    }
}

pub(crate) fn update_rule(cfg: &OptimizerConfig) -> UpdateRule {
    UpdateRule {
        no_robustness: cfg.ablation == Ablation::NoRobustness,
        freeze_nu: cfg.ablation == Ablation::NoAdaptiveness,
        scale_rule: if cfg.variant == Variant::AdaTerm2 {
            ScaleRule::Weighted
        } else {
            ScaleRule::Clipped
        },
    }
}

/// Weighted-average normaliser: `c_t = (1 − τ) c_{t−1} + τ`, `c_0 = 0`.
pub fn adaptive_bias_step(c: f64, tau: f64) -> f64 {
    (1.0 - tau) * c + tau
}

/// Update direction for an estimator that has already absorbed step `t`.
///
/// No `ε` is added to the denominator: `v ≥ ε²` already bounds it away from zero.
pub fn adaterm_eta(estimator: &TDistState, bias: f64, cfg: &OptimizerConfig) -> Vec<f64> {
    let correction = if !cfg.bias_correction {
        1.0
    } else {
        match cfg.variant {
            Variant::AdaBias | Variant::UncenteredAdaBias => bias,
            _ => 1.0 - estimator.beta().powf(estimator.t() as f64),
        }
    };
    let uncentered = matches!(cfg.variant, Variant::Uncentered | Variant::UncenteredAdaBias);
    estimator
        .m()
        .iter()
        .zip(estimator.v())
        .map(|(&m, &v)| {
            let second = if uncentered { v + m * m } else { v };
            (m / correction) / (second / correction).sqrt()
        })
        .collect()
}

pub fn adaterm_step(group: &mut ParamGroup, cfg: &OptimizerConfig) -> Result<StepReport> {
    group.check_gradient()?;
    let GroupState::AdaTerm(state) = &mut group.state else {
        return Err(Error::param(format!("group `{}` does not hold AdaTerm state", group.id)));
    };
    let (eta, diag) = state.advance(group.grad.as_slice(), cfg)?;
    let lr = cfg.learning_rate(state.estimator.t());
    group.apply(&eta, lr, cfg.weight_decay);
    Ok(StepReport {
        eta,
        lr,
        diagnostics: Some(diag),
    })
}
