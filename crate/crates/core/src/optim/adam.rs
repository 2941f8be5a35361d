use super::config::OptimizerConfig;
use super::group::{GroupState, ParamGroup, StepReport};
use crate::error::{Error, Result};

/// First and second moment EMAs shared by Adam and AdaBelief.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl MomentState {
    pub fn new(d: usize) -> Self {
        Self {
            m: vec![0.0; d],
            v: vec![0.0; d],
            t: 0,
        }
    }

    /// `center = false` gives Adam's `v` (EMA of `g²`); `center = true`
    /// gives AdaBelief's EMA of `(g − m_t)²` around the freshly updated `m`.
    pub(crate) fn advance(&mut self, g: &[f64], cfg: &OptimizerConfig, center: bool) -> Vec<f64> {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        for ((m, v), &g) in self.m.iter_mut().zip(self.v.iter_mut()).zip(g) {
            *m = b1 * *m + (1.0 - b1) * g;
            let r = if center { g - *m } else { g };
            *v = b2 * *v + (1.0 - b2) * r * r;
        }
        adam_eta(&self.m, &self.v, self.t, cfg)
    }
}

/// `m̂ / (√v̂ + ε)`, with `ε` outside the root.
pub(crate) fn adam_eta(m: &[f64], v: &[f64], t: u64, cfg: &OptimizerConfig) -> Vec<f64> {
    let (c1, c2) = if cfg.bias_correction {
        let t = t as f64;
        (1.0 - cfg.beta1.powf(t), 1.0 - cfg.beta2.powf(t))
    } else {
        (1.0, 1.0)
    };
    m.iter()
        .zip(v)
        .map(|(&m, &v)| (m / c1) / ((v / c2).sqrt() + cfg.eps))
        .collect()
}

fn moment_step(group: &mut ParamGroup, cfg: &OptimizerConfig, center: bool) -> Result<StepReport> {
    group.check_gradient()?;
    let state = match (&mut group.state, center) {
        (GroupState::Adam(s), false) | (GroupState::AdaBelief(s), true) => s,
        _ => {
            return Err(Error::param(format!(
                "group `{}` does not hold {} state",
                group.id,
                if center { "AdaBelief" } else { "Adam" }
            )))
        }
    };
    let eta = state.advance(group.grad.as_slice(), cfg, center);
    let lr = cfg.learning_rate(state.t);
    group.apply(&eta, lr, cfg.weight_decay);
    Ok(StepReport {
        eta,
        lr,
        diagnostics: None,
    })
}

pub fn adam_step(group: &mut ParamGroup, cfg: &OptimizerConfig) -> Result<StepReport> {
    moment_step(group, cfg, false)
}

pub fn adabelief_step(group: &mut ParamGroup, cfg: &OptimizerConfig) -> Result<StepReport> {
    moment_step(group, cfg, true)
}
