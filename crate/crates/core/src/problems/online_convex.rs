use crate::error::{ensure_len, Error, Result};
use crate::numerics::Rng;

/// Per-step losses `½ Σ a_i (θ_i − c_i)²` on the box `[−B, B]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineConvexSpec {
    pub dim: usize,
    /// Half-width `B`; the sup-norm diameter is `2B`.
    pub half_width: f64,
    /// Gradient bound `G` on the box.
    pub grad_bound: f64,
    /// Curvatures are drawn from `[curvature.0, curvature.1]` before clipping.
    pub curvature: (f64, f64),
    /// Spread of the centers around a common drift point.
    pub center_spread: f64,
}

impl Default for OnlineConvexSpec {
    fn default() -> Self {
        Self {
            dim: 2,
            half_width: 1.0,
            grad_bound: 1.0,
            curvature: (0.1, 1.0),
            center_spread: 0.3,
        }
    }
}

impl OnlineConvexSpec {
    pub fn diameter(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.curvature;
        if self.dim == 0 {
            return Err(Error::param("online convex problem needs dim ≥ 1"));
        }
        if !(self.half_width > 0.0 && self.grad_bound > 0.0 && self.half_width.is_finite()) {
            return Err(Error::param("box half-width and gradient bound must be positive"));
        }
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::param(format!(
                "curvature range ({lo}, {hi}) must be non-negative for a convex loss"
            )));
        }
        if !(self.center_spread >= 0.0) {
            return Err(Error::param("center spread must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    pub curvature: Vec<f64>,
    pub center: Vec<f64>,
}

impl QuadraticLoss {
    pub fn value(&self, theta: &[f64]) -> f64 {
        0.5 * self
            .curvature
            .iter()
            .zip(&self.center)
            .zip(theta)
            .map(|((a, c), t)| a * (t - c) * (t - c))
            .sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.curvature
            .iter()
            .zip(&self.center)
            .zip(theta)
            .map(|((a, c), t)| a * (t - c))
            .collect()
    }

    /// Minimizer over the box of `Σ_t ℓ_t`, coordinate-wise
    /// `clamp(Σ a c / Σ a)`; zero-curvature coordinates pick 0.
    pub fn offline_optimum(losses: &[QuadraticLoss], half_width: f64) -> Result<Vec<f64>> {
        let d = losses.first().map_or(0, |l| l.center.len());
        let mut num = vec![0.0; d];
        let mut den = vec![0.0; d];
        for l in losses {
            ensure_len(d, l.center.len())?;
            for i in 0..d {
                num[i] += l.curvature[i] * l.center[i];
                den[i] += l.curvature[i];
            }
        }
        Ok(num
            .iter()
            .zip(&den)
            .map(|(n, a)| if *a > 0.0 { (n / a).clamp(-half_width, half_width) } else { 0.0 })
            .collect())
    }
}

/// Random diagonal quadratics with centers inside the box. Curvature is
/// capped at `G / (2B)`, which bounds `|a_i(θ_i − c_i)| ≤ G` anywhere in the box.
pub fn make_online_convex_losses(spec: &OnlineConvexSpec, steps: usize, rng: &mut Rng) -> Result<Vec<QuadraticLoss>> {
    spec.validate()?;
    let b = spec.half_width;
    let cap = spec.grad_bound / spec.diameter();
    let drift: Vec<f64> = (0..spec.dim).map(|_| rng.uniform(-0.5 * b, 0.5 * b)).collect();
    let (lo, hi) = spec.curvature;
    Ok((0..steps)
        .map(|_| {
            let curvature = (0..spec.dim)
                .map(|_| if hi > lo { rng.uniform(lo, hi) } else { lo }.min(cap))
                .collect();
            let center = drift
                .iter()
                .map(|m| (m + spec.center_spread * b * rng.standard_normal()).clamp(-b, b))
                .collect();
            QuadraticLoss { curvature, center }
        })
        .collect())
}
