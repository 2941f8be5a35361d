use super::adam::adam_eta;
use super::config::OptimizerConfig;
use super::group::{GroupState, ParamGroup, StepReport};
use crate::error::{Error, Result};

/// t-momentum state: Student's-t weighted first moment with a decaying
/// weight sum `W`, plus Adam's second moment.
#[derive(Debug, Clone, PartialEq)]
pub struct TMomentState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub weight_sum: f64,
    pub t: u64,
}

impl TMomentState {
    /// `W_0 = β₁/(1 − β₁)`, so that a unit weight on the first step gives
    /// Adam's `1 − β₁` interpolation.
    pub fn new(d: usize, beta1: f64) -> Self {
        Self {
            m: vec![0.0; d],
            v: vec![0.0; d],
            weight_sum: beta1 / (1.0 - beta1),
            t: 0,
        }
    }

    /// Weight `(ν + d)/(ν + Σ (g − m)²/(v + ε))` of the incoming gradient.
    pub fn weight(&self, g: &[f64], cfg: &OptimizerConfig) -> f64 {
        let d = g.len() as f64;
        let nu = cfg.tadam_nu_tilde * d;
        let dist: f64 = g
            .iter()
            .zip(&self.m)
            .zip(&self.v)
            .map(|((g, m), v)| (g - m) * (g - m) / (v + cfg.eps))
            .sum();
        (nu + d) / (nu + dist)
    }

    pub fn advance(&mut self, g: &[f64], cfg: &OptimizerConfig) -> Vec<f64> {
        self.t += 1;
        let w = self.weight(g, cfg);
        let total = self.weight_sum + w;
        let (keep, take) = (self.weight_sum / total, w / total);
        let b2 = cfg.beta2;
        for ((m, v), &g) in self.m.iter_mut().zip(self.v.iter_mut()).zip(g) {
            *m = keep * *m + take * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
        }
        let b1 = cfg.beta1;
        self.weight_sum = (2.0 * b1 - 1.0) / b1 * self.weight_sum + w;
        adam_eta(&self.m, &self.v, self.t, cfg)
    }
}

pub fn tadam_step(group: &mut ParamGroup, cfg: &OptimizerConfig) -> Result<StepReport> {
    group.check_gradient()?;
    let GroupState::TAdam(state) = &mut group.state else {
        return Err(Error::param(format!("group `{}` does not hold t-Adam state", group.id)));
    };
    let eta = state.advance(group.grad.as_slice(), cfg);
    let lr = cfg.learning_rate(state.t);
    group.apply(&eta, lr, cfg.weight_decay);
    Ok(StepReport {
        eta,
        lr,
        diagnostics: None,
    })
}
