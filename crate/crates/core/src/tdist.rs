//! Online maximum-likelihood estimation of a diagonal Student's t model of
//! the gradient stream.
//!
//! The free functions expose the log-density, its exact gradients and the
//! surrogate degrees-of-freedom gradients so they can be checked in
//! isolation. [`TDistState`] is the per-parameter-group estimator: each call
//! to [`TDistState::update`] consumes one gradient and returns the next
//! state together with every intermediate quantity of that step.

use std::f64::consts::PI;

use crate::checkpoint;
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::numerics::{digamma, ln_gamma};

/// Smallest positive normal `f32`. Pinned so that the ceiling of `w_ν̃`
/// matches a single-precision implementation even though all arithmetic
/// here is `f64`.
pub const EPS_FLOAT: f64 = 1.175_494_350_822_287_5e-38;

/// `EPS_FLOAT − ln(EPS_FLOAT)`, about 87.3365.
pub fn w_nu_floor_ceiling() -> f64 {
    EPS_FLOAT - EPS_FLOAT.ln()
}

/// `x − ln x`; at least 1, with equality only at `x = 1`.
pub fn w_nu_of(w_mv: f64) -> f64 {
    w_mv - w_mv.ln()
}

struct Deviation {
    s: Vec<f64>,
    d_score: f64,
}

fn check_model(g: &[f64], m: &[f64], v: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::param("empty gradient vector"));
    }
    ensure_len(g.len(), m.len())?;
    ensure_len(g.len(), v.len())?;
    ensure_finite(g, "gradient")?;
    ensure_finite(m, "location")?;
    if let Some(bad) = v.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::param(format!("scale entries must be positive, found {bad}")));
    }
    Ok(())
}

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{what} must be positive and finite, got {x}")))
    }
}

fn deviation(g: &[f64], m: &[f64], v: &[f64]) -> Deviation {
    let s: Vec<f64> = g.iter().zip(m).map(|(g, m)| (g - m) * (g - m)).collect();
    let d_score = s.iter().zip(v).map(|(s, v)| s / v).sum::<f64>() / g.len() as f64;
    Deviation { s, d_score }
}

fn robust_weight(nu_tilde: f64, d_score: f64) -> f64 {
    (nu_tilde + 1.0) / (nu_tilde + d_score)
}

/// Log of the diagonal multivariate Student's t density `T(g | m, v, ν)`.
pub fn log_density(g: &[f64], m: &[f64], v: &[f64], nu: f64) -> Result<f64> {
    check_model(g, m, v)?;
    check_positive(nu, "degrees of freedom")?;
    let d = g.len() as f64;
    let dev = deviation(g, m, v);
    let log_det: f64 = v.iter().map(|x| x.ln()).sum();
    Ok(ln_gamma(0.5 * (nu + d))? - ln_gamma(0.5 * nu)?
        - 0.5 * d * (nu * PI).ln()
        - 0.5 * log_det
        - 0.5 * (nu + d) * (d * dev.d_score / nu).ln_1p())
}

/// Gradient of the log-density with respect to the location, `w_mv (g − m) / v`.
///
/// The chain-rule factor 2 of `∂(g − m)²/∂m` is kept, so this is the exact
/// gradient; the update rule only sees it through `κ_m g_m = τ_mv (g − m)`.
pub fn grad_m(g: &[f64], m: &[f64], v: &[f64], nu_tilde: f64) -> Result<Vec<f64>> {
    check_model(g, m, v)?;
    check_positive(nu_tilde, "nu_tilde")?;
    let w = robust_weight(nu_tilde, deviation(g, m, v).d_score);
    Ok(g.iter()
        .zip(m)
        .zip(v)
        .map(|((g, m), v)| w * (g - m) / v)
        .collect())
}

/// Gradient of the log-density with respect to the scale, in the factored
/// form `w_mv ν̃ / (2v²(ν̃+1)) {(s − v) + (s − Dv)/ν̃}`.
pub fn grad_v(g: &[f64], m: &[f64], v: &[f64], nu_tilde: f64) -> Result<Vec<f64>> {
    check_model(g, m, v)?;
    check_positive(nu_tilde, "nu_tilde")?;
    let dev = deviation(g, m, v);
    let w = robust_weight(nu_tilde, dev.d_score);
    Ok(dev
        .s
        .iter()
        .zip(v)
        .map(|(&s, &v)| {
            w * nu_tilde / (2.0 * v * v * (nu_tilde + 1.0))
                * ((s - v) + (s - dev.d_score * v) / nu_tilde)
        })
        .collect())
}

/// Scale gradient with the correction term replaced by its clipped value
/// `Δs = max(ε², (s − Dv)/ν̃)`; the direction the estimator actually follows.
pub fn grad_v_projected(
    g: &[f64],
    m: &[f64],
    v: &[f64],
    nu_tilde: f64,
    eps: f64,
) -> Result<Vec<f64>> {
    check_model(g, m, v)?;
    check_positive(nu_tilde, "nu_tilde")?;
    let dev = deviation(g, m, v);
    let w = robust_weight(nu_tilde, dev.d_score);
    Ok(dev
        .s
        .iter()
        .zip(v)
        .map(|(&s, &v)| {
            let delta_s = (eps * eps).max((s - dev.d_score * v) / nu_tilde);
            w * nu_tilde / (2.0 * v * v * (nu_tilde + 1.0)) * (s + delta_s - v)
        })
        .collect())
}

/// Exact derivative of the log-density with respect to `ν`.
pub fn grad_nu_exact(g: &[f64], m: &[f64], v: &[f64], nu: f64) -> Result<f64> {
    check_model(g, m, v)?;
    check_positive(nu, "degrees of freedom")?;
    let d = g.len() as f64;
    let d_score = deviation(g, m, v).d_score;
    Ok(grad_nu_exact_from_deviation(nu, d, d_score))
}

/// [`grad_nu_exact`] written in terms of the dimension and the deviation score alone.
pub fn grad_nu_exact_from_deviation(nu: f64, d: f64, d_score: f64) -> f64 {
    let psi = |x: f64| digamma(x).expect("positive argument");
    0.5 * psi(0.5 * (nu + d)) - 0.5 * psi(0.5 * nu) - d / (2.0 * nu)
        - 0.5 * (d * d_score / nu).ln_1p()
        + 0.5 * (nu + d) * d * d_score / (nu * (nu + d * d_score))
}

/// Upper bound of the `ν` gradient obtained from the digamma log bounds:
/// `½{−w_ν̃ + 1 + (ν̃+2)/(ν̃+1) · 1/ν}` with `ν̃ = ν/d`.
pub fn grad_nu_surrogate_pre(nu: f64, d: usize, w_mv: f64) -> Result<f64> {
    check_positive(nu, "degrees of freedom")?;
    check_positive(w_mv, "w_mv")?;
    if d == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    let nu_tilde = nu / d as f64;
    Ok(0.5 * (1.0 - w_nu_of(w_mv) + (nu_tilde + 2.0) / (nu_tilde + 1.0) / nu))
}

/// Surrogate gradient with respect to `ν̃` after replacing `1/ν` by `1/ν̃`:
/// `w_ν̃ (d/2){−1 + ((ν̃+2)/(ν̃+1) + ν̃)/(ν̃ w_ν̃)}`.
pub fn grad_nu_tilde_surrogate(nu_tilde: f64, d: usize, w_mv: f64) -> Result<f64> {
    check_positive(nu_tilde, "nu_tilde")?;
    check_positive(w_mv, "w_mv")?;
    if d == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    let w_nu = w_nu_of(w_mv);
    let ratio = ((nu_tilde + 2.0) / (nu_tilde + 1.0) + nu_tilde) / (nu_tilde * w_nu);
    Ok(w_nu * 0.5 * d as f64 * (ratio - 1.0))
}

/// How the estimator departs from the default update, used by the ablations
/// and the alternative scale rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateRule {
    /// Force `w_mv = w̄_mv` and `Δs = ε²`: the Gaussian (EMA) limit.
    pub no_robustness: bool,
    /// Keep `ν̃` at its current value.
    pub freeze_nu: bool,
    pub scale_rule: ScaleRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleRule {
    /// `v ← (1 − τ_mv) v + τ_mv (s + Δs)` with clipped `Δs`.
    #[default]
    Clipped,
    /// `v ← (1 − τ_v) v + τ_v (w_mv s + ε²)`, `τ_v = (1 − β)/w̄_mv`.
    Weighted,
}

/// Every intermediate of one estimator step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub s: Vec<f64>,
    pub deviation: f64,
    pub w_mv: f64,
    pub w_mv_bar: f64,
    pub w_nu: f64,
    pub w_nu_bar: f64,
    pub tau_mv: f64,
    /// Interpolation factor applied to `v`; equals `tau_mv` except under
    /// [`ScaleRule::Weighted`].
    pub tau_v: f64,
    pub tau_nu: f64,
    pub delta_s: Vec<f64>,
    pub lambda: f64,
    /// Step sizes that turn the interpolations into gradient ascent:
    /// `m + κ_m g_m`, `v + κ_v g_v` (clipped `Δs`) and
    /// `ν̃ + κ_Δν̃ g_ν̃ + τ_ν̃ ε`.
    pub kappa_m: Vec<f64>,
    pub kappa_v: Vec<f64>,
    pub kappa_dnu: f64,
}

const STATE_MAGIC: &[u8; 4] = b"ATTD";
const STATE_VERSION: u8 = 1;

/// Running location/scale/robustness estimates of one parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct TDistState {
    m: Vec<f64>,
    v: Vec<f64>,
    nu_tilde: f64,
    t: u64,
    beta: f64,
    eps: f64,
    nu_tilde_min: f64,
}

impl TDistState {
    /// Fresh state: `m = 0`, `v = ε²`, `ν̃ = ν̃_min + ε`.
    pub fn new(d: usize, beta: f64, eps: f64, nu_tilde_min: f64) -> Result<Self> {
        Self::with_initial_nu(d, beta, eps, nu_tilde_min, nu_tilde_min + eps)
    }

    pub fn with_initial_nu(
        d: usize,
        beta: f64,
        eps: f64,
        nu_tilde_min: f64,
        nu_tilde_init: f64,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("group dimension must be at least 1"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(format!("beta must lie in (0, 1), got {beta}")));
        }
        check_positive(eps, "eps")?;
        check_positive(nu_tilde_min, "nu_tilde_min")?;
        if !(nu_tilde_init > nu_tilde_min) || !nu_tilde_init.is_finite() {
            return Err(Error::param(format!(
                "initial nu_tilde {nu_tilde_init} must exceed nu_tilde_min {nu_tilde_min}"
            )));
        }
        Ok(Self {
            m: vec![0.0; d],
            v: vec![eps * eps; d],
            nu_tilde: nu_tilde_init,
            t: 0,
            beta,
            eps,
            nu_tilde_min,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn nu_tilde(&self) -> f64 {
        self.nu_tilde
    }

    /// Degrees of freedom in the original parametrisation, `ν = ν̃ d`.
    pub fn nu(&self) -> f64 {
        self.nu_tilde * self.dim() as f64
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn nu_tilde_min(&self) -> f64 {
        self.nu_tilde_min
    }

    pub fn compute_diagnostics(&self, g: &[f64]) -> Result<StepDiagnostics> {
        self.diagnostics_with(g, UpdateRule::default())
    }

    pub fn diagnostics_with(&self, g: &[f64], rule: UpdateRule) -> Result<StepDiagnostics> {
        ensure_len(self.dim(), g.len())?;
        ensure_finite(g, "gradient")?;

        let beta_c = 1.0 - self.beta;
        let eps2 = self.eps * self.eps;
        let nu = self.nu_tilde;
        let d = self.dim() as f64;
        let dev = deviation(g, &self.m, &self.v);

        let w_mv_bar = (nu + 1.0) / nu;
        // A deviation beyond float range would make w_mv vanish; the floor
        // keeps w_ν̃ inside its ceiling.
        let w_mv = if rule.no_robustness {
            w_mv_bar
        } else {
            robust_weight(nu, dev.d_score).max(EPS_FLOAT)
        };
        let w_nu = w_nu_of(w_mv);
        let w_nu_bar = w_nu_of(w_mv_bar).max(w_nu_floor_ceiling());
        let tau_mv = beta_c * w_mv / w_mv_bar;
        let tau_nu = beta_c * w_nu / w_nu_bar;
        let tau_v = match rule.scale_rule {
            ScaleRule::Clipped => tau_mv,
            ScaleRule::Weighted => beta_c / w_mv_bar,
        };

        let delta_s = if rule.no_robustness {
            vec![eps2; self.dim()]
        } else {
            dev.s
                .iter()
                .zip(&self.v)
                .map(|(&s, &v)| eps2.max((s - dev.d_score * v) / nu))
                .collect()
        };

        let excess = nu - self.nu_tilde_min;
        let lambda = ((nu + 2.0) / (nu + 1.0) + nu) * excess / (nu * w_nu) + self.nu_tilde_min + self.eps;

        Ok(StepDiagnostics {
            kappa_m: self.v.iter().map(|v| v * beta_c / w_mv_bar).collect(),
            kappa_v: self.v.iter().map(|v| 2.0 * v * v * beta_c).collect(),
            kappa_dnu: 2.0 * excess * beta_c / (d * w_nu_bar),
            s: dev.s,
            deviation: dev.d_score,
            w_mv,
            w_mv_bar,
            w_nu,
            w_nu_bar,
            tau_mv,
            tau_v,
            tau_nu,
            delta_s,
            lambda,
        })
    }

    /// One estimator step under the default rule.
    pub fn update(&self, g: &[f64]) -> Result<(TDistState, StepDiagnostics)> {
        self.update_with(g, UpdateRule::default())
    }

    pub fn update_with(&self, g: &[f64], rule: UpdateRule) -> Result<(TDistState, StepDiagnostics)> {
        let diag = self.diagnostics_with(g, rule)?;
        let tau = diag.tau_mv;
        let m = self
            .m
            .iter()
            .zip(g)
            .map(|(m, g)| (1.0 - tau) * m + tau * g)
            .collect();
        let eps2 = self.eps * self.eps;
        let v = match rule.scale_rule {
            ScaleRule::Clipped => self
                .v
                .iter()
                .zip(diag.s.iter().zip(&diag.delta_s))
                .map(|(v, (s, ds))| (1.0 - tau) * v + tau * (s + ds))
                .collect(),
            ScaleRule::Weighted => self
                .v
                .iter()
                .zip(&diag.s)
                .map(|(v, s)| (1.0 - diag.tau_v) * v + diag.tau_v * (diag.w_mv * s + eps2))
                .collect(),
        };
        let nu_tilde = if rule.freeze_nu {
            self.nu_tilde
        } else {
            (1.0 - diag.tau_nu) * self.nu_tilde + diag.tau_nu * diag.lambda
        };
        let next = TDistState {
            m,
            v,
            nu_tilde,
            t: self.t + 1,
            ..self.clone()
        };
        Ok((next, diag))
    }

    /// Serialises to the framed layout `(d, t, β, ε, ν̃_min, ν̃, m, v)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        checkpoint::encode(STATE_MAGIC, STATE_VERSION, 0, &self.to_floats())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (_, values) = checkpoint::decode(STATE_MAGIC, STATE_VERSION, bytes)?;
        Self::from_floats(&values)
    }

    pub(crate) fn to_floats(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(6 + 2 * self.dim());
        out.extend_from_slice(&[
            self.dim() as f64,
            self.t as f64,
            self.beta,
            self.eps,
            self.nu_tilde_min,
            self.nu_tilde,
        ]);
        out.extend_from_slice(&self.m);
        out.extend_from_slice(&self.v);
        out
    }

    pub(crate) fn from_floats(values: &[f64]) -> Result<Self> {
        if values.len() < 6 {
            return Err(Error::Checkpoint("state record too short".into()));
        }
        let d = checkpoint::as_count(values[0], "dimension")?;
        let t = checkpoint::as_count(values[1], "step")? as u64;
        if values.len() != 6 + 2 * d {
            return Err(Error::Checkpoint(format!(
                "dimension {d} needs {} values, found {}",
                6 + 2 * d,
                values.len()
            )));
        }
        let mut state = Self::with_initial_nu(d, values[2], values[3], values[4], values[5])
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        state.t = t;
        state.m.copy_from_slice(&values[6..6 + d]);
        state.v.copy_from_slice(&values[6 + d..]);
        let eps2 = state.eps * state.eps;
        if !state.m.iter().all(|x| x.is_finite()) || !state.v.iter().all(|&x| x >= eps2 && x.is_finite()) {
            return Err(Error::Checkpoint("moment estimates out of range".into()));
        }
        Ok(state)
    }
}

/// Free-function form of [`TDistState::compute_diagnostics`].
pub fn compute_diagnostics(state: &TDistState, g: &[f64]) -> Result<StepDiagnostics> {
    state.compute_diagnostics(g)
}

/// Free-function form of [`TDistState::update`].
pub fn update_state(state: &TDistState, g: &[f64]) -> Result<(TDistState, StepDiagnostics)> {
    state.update(g)
}
