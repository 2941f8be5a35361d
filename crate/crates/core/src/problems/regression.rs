use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};
use crate::model::{mse_loss, MlpModel};
use crate::numerics::Rng;
use crate::optim::{Optimizer, OptimizerConfig};

/// Ground truth `f(x) = x² + ln(x + 1) + sin(2πx)·cos(2πx)`.
pub fn regression_target(x: f64) -> f64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    x * x + x.ln_1p() + s * c
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSpec {
    pub samples: usize,
    pub batch_size: usize,
    /// Fraction of observations that receive t-distributed noise.
    pub noise_ratio: f64,
    pub noise_dof: f64,
    pub noise_scale: f64,
    /// `x ~ U(low, high)`; `low > −1` keeps `ln(x + 1)` defined.
    pub domain: (f64, f64),
    /// Evenly spaced clean points on the domain used for the test loss.
    pub test_points: usize,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        Self {
            samples: 40_000,
            batch_size: 10,
            noise_ratio: 0.0,
            noise_dof: 1.0,
            noise_scale: 0.05,
            domain: (0.0, 1.0),
            test_points: 1000,
        }
    }
}

impl RegressionSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if self.samples == 0 || self.batch_size == 0 || self.test_points < 2 {
            return Err(Error::param("samples, batch size and test points must be positive"));
        }
        if !(0.0..=1.0).contains(&self.noise_ratio) {
            return Err(Error::param(format!("noise ratio {} outside [0, 1]", self.noise_ratio)));
        }
        if !(self.noise_dof > 0.0 && self.noise_scale > 0.0) {
            return Err(Error::param("noise dof and scale must be positive"));
        }
        if !(lo > -1.0 && hi > lo && hi.is_finite()) {
            return Err(Error::param(format!("input domain ({lo}, {hi}) must satisfy −1 < low < high")));
        }
        Ok(())
    }

    pub fn test_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.domain;
        let n = self.test_points;
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|&x| regression_target(x)).collect();
        (x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionBatch {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub clean: Vec<f64>,
}

/// Yields `samples` observations in batches; the last batch may be short.
#[derive(Debug)]
pub struct RegressionStream {
    spec: RegressionSpec,
    rng: Rng,
    remaining: usize,
}

impl Iterator for RegressionStream {
    type Item = Result<RegressionBatch>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let n = self.remaining.min(self.spec.batch_size);
        self.remaining -= n;
        Some(self.draw(n))
    }
}

impl RegressionStream {
    fn draw(&mut self, n: usize) -> Result<RegressionBatch> {
        let s = &self.spec;
        let mut batch = RegressionBatch {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            clean: Vec::with_capacity(n),
        };
        for _ in 0..n {
            let x = self.rng.uniform(s.domain.0, s.domain.1);
            let clean = regression_target(x);
            let noise = if self.rng.bernoulli(s.noise_ratio)? {
                self.rng.student_t(s.noise_dof, 0.0, s.noise_scale)?
            } else {
                0.0
            };
            batch.x.push(x);
            batch.y.push(clean + noise);
            batch.clean.push(clean);
        }
        Ok(batch)
    }
}

pub fn generate_regression_stream(spec: &RegressionSpec, rng: Rng) -> Result<RegressionStream> {
    spec.validate()?;
    Ok(RegressionStream {
        spec: spec.clone(),
        rng,
        remaining: spec.samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRun {
    /// MSE of the trained model against clean `f(x)` on the test grid.
    pub test_mse: f64,
    pub final_train_loss: f64,
    /// Mean final `ν̃` over parameter groups (AdaTerm only).
    pub mean_nu_tilde: Option<f64>,
    pub steps: usize,
}

/// One pass over the stream with the default regression network.
/// Stream 0 of the seed initializes the model, stream 1 draws data.
pub fn train_regression(spec: &RegressionSpec, cfg: &OptimizerConfig, seed: u64) -> Result<RegressionRun> {
    let root = Rng::new(seed);
    let mut model = MlpModel::regression(&mut root.split(0))?;
    let mut opt = Optimizer::for_model(cfg.clone(), &model)?;
    let mut steps = 0;
    let mut last_loss = f64::NAN;
    for batch in generate_regression_stream(spec, root.split(1))? {
        let batch = batch?;
        let (y_hat, tape) = model.forward(&batch.x)?;
        let (loss, lg) = mse_loss(&y_hat, &batch.y)?;
        let grads = model.backward(tape, &lg)?;
        for (group, g) in opt.groups.iter_mut().zip(&grads) {
            group.set_grad(g.as_slice())?;
        }
        opt.step()?;
        model.load_groups(&opt.groups)?;
        last_loss = loss;
        steps += 1;
    }
    let (x, y) = spec.test_grid();
    let (pred, _) = model.forward(&x)?;
    let (test_mse, _) = mse_loss(&pred, &y)?;
    ensure_finite(&[test_mse], "regression test loss")?;
    let nus: Vec<f64> = opt.groups.iter().filter_map(|g| g.state.nu_tilde()).collect();
    let mean_nu_tilde = (!nus.is_empty()).then(|| nus.iter().sum::<f64>() / nus.len() as f64);
    Ok(RegressionRun {
        test_mse,
        final_train_loss: last_loss,
        mean_nu_tilde,
        steps,
    })
}
