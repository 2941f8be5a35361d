//! Online-convex regret runs for AdaTerm, with the regret bound's right-hand
//! side evaluated from logged quantities at every prefix.

use std::path::Path;

use serde::Serialize;

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::numerics::Rng;
use crate::optim::{AdaTermState, Algorithm, LrSchedule, OptimizerConfig};
use crate::problems::{make_online_convex_losses, OnlineConvexSpec, QuadraticLoss};

/// Axis-aligned product of closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// `argmin_{θ' ∈ box} ‖θ' − θ‖_V` for diagonal `V`: the metric separates by
/// coordinate, so the minimizer is plain clamping whatever the weights.
pub fn weighted_projection(theta: &[f64], weights: &[f64], domain: &BoxDomain) -> Result<Vec<f64>> {
    ensure_len(domain.dim(), domain.upper.len())?;
    ensure_len(domain.dim(), theta.len())?;
    ensure_len(domain.dim(), weights.len())?;
    if domain.lower.iter().zip(&domain.upper).any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::param("projection onto an empty box"));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::param("projection weights must be positive"));
    }
    Ok(theta
        .iter()
        .zip(domain.lower.iter().zip(&domain.upper))
        .map(|(t, (lo, hi))| t.clamp(*lo, *hi))
        .collect())
}

/// `xy ≤ (ζ/2)x² + y²/(2ζ)`.
pub fn young_inequality_check(zeta: f64, x: f64, y: f64) -> Result<bool> {
    if !(zeta > 0.0) {
        return Err(Error::param(format!("ζ = {zeta} must be positive")));
    }
    let rhs = 0.5 * zeta * x * x + 0.5 * y * y / zeta;
    // Rounding slack for the equality case.
    Ok(x * y <= rhs + 4.0 * f64::EPSILON * rhs.abs())
}

/// Per-step record of a regret run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretStep {
    pub loss: f64,
    /// `τ_mv` of this step.
    pub tau: f64,
    pub g: Vec<f64>,
    /// Scale state after absorbing `g`.
    pub v: Vec<f64>,
}

/// Constants the bound needs besides the per-step log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    /// Sup-norm diameter of the domain.
    pub diameter: f64,
}

/// The four summands of the bound at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundTerms {
    pub final_scale: f64,
    pub scale_sum: f64,
    pub geometric: f64,
    pub log_norm: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.final_scale + self.scale_sum + self.geometric + self.log_norm
    }
}

/// Right-hand side at horizon `T = log.len()` for a given `τ̲` and `τ_T`.
/// The geometric term is read as `Σ_{k<T} (1 − τ̲)^{T−k} Σ_i g²_{k,i}`.
pub fn theorem_one_rhs(log: &[RegretStep], c: &BoundConstants, tau_lower: f64, tau_final: f64) -> BoundTerms {
    let t_len = log.len();
    let tl = tau_lower;
    let (alpha, beta, d2) = (c.alpha, c.beta, c.diameter * c.diameter);
    let sqrt_sum = |v: &[f64]| v.iter().map(|x| x.sqrt()).sum::<f64>();
    let tt = t_len as f64;
    let final_scale = d2 * tt.sqrt() / (4.0 * tau_final * alpha) * sqrt_sum(&log[t_len - 1].v);
    let head = &log[..t_len - 1];
    let scale_sum = (tl * tl + 1.0 - beta - tl) / (2.0 * tl * tl)
        * head
            .iter()
            .enumerate()
            .map(|(i, s)| d2 * ((i + 1) as f64).sqrt() / alpha * sqrt_sum(&s.v))
            .sum::<f64>();
    let lead = (1.0 - beta).powi(2) * alpha / (c.eps * tl * tl);
    let geometric = lead / tt.sqrt()
        * head
            .iter()
            .enumerate()
            .map(|(i, s)| (1.0 - tl).powi((t_len - 1 - i) as i32) * s.g.iter().map(|g| g * g).sum::<f64>())
            .sum::<f64>();
    let log_norm = if t_len < 2 {
        0.0
    } else {
        let d = log[0].g.len();
        let norms: f64 = (0..d)
            .map(|i| head.iter().map(|s| s.g[i].powi(4)).sum::<f64>().sqrt())
            .sum();
        (tl * (1.0 - tl) + 1.0 - beta) / (2.0 * tl * tl) * lead * (1.0 + (tt - 1.0).ln()).sqrt() * norms
    };
    BoundTerms {
        final_scale,
        scale_sum,
        geometric,
        log_norm,
    }
}

/// The same bound written directly for `τ̲ = τ_T = 1 − β`.
pub fn corollary_two_rhs(log: &[RegretStep], c: &BoundConstants) -> BoundTerms {
    let t_len = log.len();
    let (alpha, beta, eps, d2) = (c.alpha, c.beta, c.eps, c.diameter * c.diameter);
    let sqrt_sum = |v: &[f64]| v.iter().map(|x| x.sqrt()).sum::<f64>();
    let tt = t_len as f64;
    let head = &log[..t_len - 1];
    let log_norm = if t_len < 2 {
        0.0
    } else {
        let d = log[0].g.len();
        let norms: f64 = (0..d)
            .map(|i| head.iter().map(|s| s.g[i].powi(4)).sum::<f64>().sqrt())
            .sum();
        (1.0 + beta) * alpha * (1.0 + (tt - 1.0).ln()).sqrt() / (2.0 * (1.0 - beta) * eps) * norms
    };
    BoundTerms {
        final_scale: d2 * tt.sqrt() / (4.0 * (1.0 - beta) * alpha) * sqrt_sum(&log[t_len - 1].v),
        scale_sum: 0.5
            * head
                .iter()
                .enumerate()
                .map(|(i, s)| d2 * ((i + 1) as f64).sqrt() / alpha * sqrt_sum(&s.v))
                .sum::<f64>(),
        geometric: alpha / (eps * tt.sqrt())
            * head
                .iter()
                .enumerate()
                .map(|(i, s)| beta.powi((t_len - 1 - i) as i32) * s.g.iter().map(|g| g * g).sum::<f64>())
                .sum::<f64>(),
        log_norm,
    }
}

/// Largest relative gap between the general bound at `τ̲ = τ_T = 1 − β` and
/// the direct formula, over the given horizons.
pub fn corollary_two_check(log: &[RegretStep], c: &BoundConstants, horizons: &[usize]) -> f64 {
    let tau = 1.0 - c.beta;
    horizons
        .iter()
        .filter(|&&t| t >= 1 && t <= log.len())
        .map(|&t| {
            let a = theorem_one_rhs(&log[..t], c, tau, tau).total();
            let b = corollary_two_rhs(&log[..t], c).total();
            (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// One CSV row per prefix horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretRow {
    pub t: usize,
    pub loss: f64,
    pub regret_prefix: f64,
    pub bound_rhs_prefix: f64,
    pub tau_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub horizon: usize,
    pub losses: Vec<f64>,
    pub regret: f64,
    pub bound: BoundTerms,
    pub tau_lower: f64,
    pub tau_final: f64,
    pub diameter: f64,
    /// Largest observed `‖g_t‖_∞`.
    pub grad_bound: f64,
    pub rows: Vec<RegretRow>,
    pub log: Vec<RegretStep>,
    pub constants: BoundConstants,
}

impl RegretReport {
    /// Prefixes where the regret exceeds the bound.
    pub fn violations(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.regret_prefix > r.bound_rhs_prefix)
            .map(|r| r.t)
            .collect()
    }

    /// `max_{T ∈ [from, to]} R_T/√T` divided by `R_from/√from`.
    pub fn sqrt_growth_ratio(&self, from: usize, to: usize) -> Option<f64> {
        let scaled = |r: &RegretRow| r.regret_prefix / (r.t as f64).sqrt();
        let base = scaled(self.rows.get(from.checked_sub(1)?)?);
        let peak = self.rows.get(from - 1..to.min(self.rows.len()))?.iter().map(scaled).fold(f64::MIN, f64::max);
        (base > 0.0).then(|| peak / base)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Runs AdaTerm with `α_t = α/√t` and no bias correction, projecting onto
/// the box after every step, from the box corner `(B, …, B)`.
pub fn run_regret_experiment(
    spec: &OnlineConvexSpec,
    cfg: &OptimizerConfig,
    horizon: usize,
    seed: u64,
) -> Result<RegretReport> {
    if cfg.algorithm != Algorithm::AdaTerm {
        return Err(Error::param("regret runs are defined for AdaTerm"));
    }
    if cfg.lr_schedule != LrSchedule::InverseSqrt {
        return Err(Error::param("regret runs need the inverse-sqrt learning-rate schedule"));
    }
    if horizon == 0 {
        return Err(Error::param("regret horizon must be positive"));
    }
    cfg.validate()?;
    let cfg = OptimizerConfig {
        bias_correction: false,
        ..cfg.clone()
    };
    let losses = make_online_convex_losses(spec, horizon, &mut Rng::new(seed))?;
    let domain = BoxDomain::cube(spec.dim, spec.half_width);
    let mut state = AdaTermState::new(spec.dim, &cfg)?;
    let mut theta = vec![spec.half_width; spec.dim];
    let mut log = Vec::with_capacity(horizon);
    let mut iterates = Vec::with_capacity(horizon);
    for (t, loss) in losses.iter().enumerate() {
        let g = loss.gradient(&theta);
        let value = loss.value(&theta);
        let (eta, diag) = state.advance(&g, &cfg)?;
        iterates.push(theta.clone());
        let lr = cfg.learning_rate(t as u64 + 1);
        let v = state.estimator.v().to_vec();
        let step: Vec<f64> = theta.iter().zip(&eta).map(|(x, e)| x - lr * e).collect();
        let weights: Vec<f64> = v.iter().map(|v| v.sqrt()).collect();
        theta = weighted_projection(&step, &weights, &domain)?;
        ensure_finite(&theta, "regret iterate")?;
        log.push(RegretStep {
            loss: value,
            tau: diag.tau_mv,
            g,
            v,
        });
    }

    let constants = BoundConstants {
        alpha: cfg.alpha,
        beta: cfg.beta,
        eps: cfg.eps,
        diameter: spec.diameter(),
    };
    let rows = prefix_rows(&log, &losses, &iterates, spec.half_width, &constants)?;
    let tau_lower = log.iter().map(|s| s.tau).fold(f64::INFINITY, f64::min);
    if !(tau_lower > 0.0) {
        return Err(Error::Invariant(format!("lower bound on τ is {tau_lower}")));
    }
    let tau_final = log[horizon - 1].tau;
    let grad_bound = log.iter().flat_map(|s| s.g.iter()).fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(RegretReport {
        horizon,
        losses: log.iter().map(|s| s.loss).collect(),
        regret: rows[horizon - 1].regret_prefix,
        bound: theorem_one_rhs(&log, &constants, tau_lower, tau_final),
        tau_lower,
        tau_final,
        diameter: spec.diameter(),
        grad_bound,
        rows,
        log,
        constants,
    })
}

/// Regret against each prefix's own optimum and the bound at each prefix,
/// with `τ̲` the running minimum. Sums are carried forward so every prefix
/// costs `O(d)` except the geometric sum, which is rebuilt when `τ̲` drops.
fn prefix_rows(
    log: &[RegretStep],
    losses: &[QuadraticLoss],
    iterates: &[Vec<f64>],
    half_width: f64,
    c: &BoundConstants,
) -> Result<Vec<RegretRow>> {
    let d = iterates[0].len();
    let (alpha, beta, d2) = (c.alpha, c.beta, c.diameter * c.diameter);
    let sqrt_sum = |v: &[f64]| v.iter().map(|x| x.sqrt()).sum::<f64>();
    let sq = |g: &[f64]| g.iter().map(|g| g * g).sum::<f64>();

    let mut rows = Vec::with_capacity(log.len());
    let mut played = 0.0;
    // Σ a_i, Σ a_i c_i and Σ a_i c_i² per coordinate give Σ_t ℓ_t(θ*) in closed form.
    let (mut sa, mut sac, mut sacc) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tau_lower = f64::INFINITY;
    let mut scale_acc = 0.0;
    let mut fourth = vec![0.0; d];
    let mut geo = 0.0;
    for (t, step) in log.iter().enumerate() {
        let big_t = t + 1;
        played += step.loss;
        let l = &losses[t];
        for i in 0..d {
            sa[i] += l.curvature[i];
            sac[i] += l.curvature[i] * l.center[i];
            sacc[i] += l.curvature[i] * l.center[i] * l.center[i];
        }
        let comparator: f64 = (0..d)
            .map(|i| {
                let x = if sa[i] > 0.0 { (sac[i] / sa[i]).clamp(-half_width, half_width) } else { 0.0 };
                0.5 * (sa[i] * x * x - 2.0 * sac[i] * x + sacc[i])
            })
            .sum();

        // Head sums cover k < T, so fold in step T − 1 before evaluating.
        let previous_lower = tau_lower;
        tau_lower = tau_lower.min(step.tau);
        let q = 1.0 - tau_lower;
        if t > 0 {
            let prev = &log[t - 1];
            scale_acc += d2 * (t as f64).sqrt() / alpha * sqrt_sum(&prev.v);
            for i in 0..d {
                fourth[i] += prev.g[i].powi(4);
            }
            if tau_lower == previous_lower {
                geo = q * (geo + sq(&prev.g));
            } else {
                geo = log[..t]
                    .iter()
                    .enumerate()
                    .map(|(k, s)| q.powi((t - k) as i32) * sq(&s.g))
                    .sum();
            }
        }
        let tl = tau_lower;
        let tt = big_t as f64;
        let lead = (1.0 - beta).powi(2) * alpha / (c.eps * tl * tl);
        let terms = BoundTerms {
            final_scale: d2 * tt.sqrt() / (4.0 * step.tau * alpha) * sqrt_sum(&step.v),
            scale_sum: (tl * tl + 1.0 - beta - tl) / (2.0 * tl * tl) * scale_acc,
            geometric: lead / tt.sqrt() * geo,
            log_norm: if big_t < 2 {
                0.0
            } else {
                (tl * (1.0 - tl) + 1.0 - beta) / (2.0 * tl * tl)
                    * lead
                    * (1.0 + (tt - 1.0).ln()).sqrt()
                    * fourth.iter().map(|s| s.sqrt()).sum::<f64>()
            },
        };
        rows.push(RegretRow {
            t: big_t,
            loss: step.loss,
            regret_prefix: played - comparator,
            bound_rhs_prefix: terms.total(),
            tau_t: step.tau,
        });
    }
    Ok(rows)
}
