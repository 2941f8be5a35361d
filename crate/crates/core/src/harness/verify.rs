//! Finite-difference checks of every analytic gradient in the crate.

use serde::Serialize;

use crate::error::Result;
use crate::model::{mse_loss, MlpModel};
use crate::numerics::Rng;
use crate::problems::TestFunction;
use crate::tdist::{grad_m, grad_nu_exact, grad_v, log_density};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    pub gradient: String,
    pub points: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn rel(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn check(name: String, errors: impl IntoIterator<Item = f64>, tolerance: f64) -> GradientCheck {
    let (mut points, mut worst) = (0, 0.0f64);
    for e in errors {
        points += 1;
        worst = worst.max(e);
    }
    GradientCheck {
        gradient: name,
        points,
        max_rel_error: worst,
        tolerance,
        pass: worst < tolerance,
    }
}

/// Random `(g, m, v, ν̃)` with `g` a few scales from `m`.
fn random_point(rng: &mut Rng, d: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let m: Vec<f64> = (0..d).map(|_| rng.normal(0.0, 1.0)).collect();
    let v: Vec<f64> = (0..d).map(|_| rng.uniform(0.2, 3.0)).collect();
    let g = m.iter().zip(&v).map(|(m, v)| m + v.sqrt() * rng.normal(0.0, 2.0)).collect();
    (g, m, v, rng.uniform(0.5, 20.0))
}

/// Location, scale and degrees-of-freedom gradients of the t log-density,
/// `points` random points per dimension, one randomly chosen coordinate each.
pub fn check_tdist(dims: &[usize], points: usize, tolerance: f64, rng: &mut Rng) -> Result<Vec<GradientCheck>> {
    let mut out = Vec::new();
    for &d in dims {
        let (mut em, mut ev, mut en) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..points {
            let (g, m, v, nu_tilde) = random_point(rng, d);
            let nu = nu_tilde * d as f64;
            let i = rng.index(d);
            let lp = |m: &[f64], v: &[f64], nu: f64| log_density(&g, m, v, nu);
            let shifted = |x: &[f64], h: f64| {
                let mut y = x.to_vec();
                y[i] += h;
                y
            };
            let h = 1e-5;
            let fd_m = (lp(&shifted(&m, h), &v, nu)? - lp(&shifted(&m, -h), &v, nu)?) / (2.0 * h);
            em.push(rel(grad_m(&g, &m, &v, nu_tilde)?[i], fd_m, 1e-2));
            let hv = h * v[i];
            let fd_v = (lp(&m, &shifted(&v, hv), nu)? - lp(&m, &shifted(&v, -hv), nu)?) / (2.0 * hv);
            ev.push(rel(grad_v(&g, &m, &v, nu_tilde)?[i], fd_v, 1e-2));
            // Relative step: ln Γ cancellation dominates at tiny absolute steps.
            let hn = 1e-4 * nu;
            let fd_nu = (lp(&m, &v, nu + hn)? - lp(&m, &v, nu - hn)?) / (2.0 * hn);
            en.push(rel(grad_nu_exact(&g, &m, &v, nu)?, fd_nu, 1e-3));
        }
        out.push(check(format!("tdist.grad_m[d={d}]"), em, tolerance));
        out.push(check(format!("tdist.grad_v[d={d}]"), ev, tolerance));
        out.push(check(format!("tdist.grad_nu_exact[d={d}]"), en, tolerance));
    }
    Ok(out)
}

/// Backpropagation against central differences on `coords` random
/// coordinates of the regression network. Biases are jittered so no unit
/// sits on a ReLU kink.
pub fn check_mlp(coords: usize, tolerance: f64, rng: &mut Rng) -> Result<GradientCheck> {
    let mut model = MlpModel::regression(rng)?;
    for i in (1..2 * model.layers().len()).step_by(2) {
        let b: Vec<f64> = (0..model.parameters()[i].len()).map(|_| rng.uniform(-0.1, 0.1)).collect();
        model.set_parameter(i, &b)?;
    }
    let x: Vec<f64> = (0..8).map(|_| rng.uniform(0.0, 1.0)).collect();
    let y: Vec<f64> = (0..8).map(|_| rng.standard_normal()).collect();
    let (y_hat, tape) = model.forward(&x)?;
    let (_, lg) = mse_loss(&y_hat, &y)?;
    let grads = model.backward(tape, &lg)?;
    let loss = |m: &MlpModel| -> Result<f64> { Ok(mse_loss(&m.forward(&x)?.0, &y)?.0) };
    let h = 1e-6;
    let mut errors = Vec::with_capacity(coords);
    let mut attempts = 0;
    while errors.len() < coords && attempts < 100 * coords {
        attempts += 1;
        let group = rng.index(grads.len());
        let params = model.parameters()[group].to_vec();
        let k = rng.index(params.len());
        let mut p = params.clone();
        p[k] += h;
        model.set_parameter(group, &p)?;
        let up = loss(&model)?;
        p[k] -= 2.0 * h;
        model.set_parameter(group, &p)?;
        let down = loss(&model)?;
        model.set_parameter(group, &params)?;
        let (analytic, numeric) = (grads[group].as_slice()[k], (up - down) / (2.0 * h));
        // Dead units give exact zeros on both sides; they carry no information.
        if analytic.abs() < 1e-7 && numeric.abs() < 1e-7 {
            continue;
        }
        errors.push(rel(analytic, numeric, 0.0));
    }
    Ok(check("mlp.backward".into(), errors, tolerance))
}

/// Analytic test-function gradients at `points` random points each.
pub fn check_test_functions(points: usize, tolerance: f64, rng: &mut Rng) -> Vec<GradientCheck> {
    TestFunction::ALL
        .into_iter()
        .map(|f| {
            let mut errors = Vec::with_capacity(2 * points);
            for _ in 0..points {
                let p = [rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)];
                let (_, g) = f.eval(p);
                let h = 1e-6;
                for i in 0..2 {
                    let mut up = p;
                    let mut down = p;
                    up[i] += h;
                    down[i] -= h;
                    let fd = (f.eval(up).0 - f.eval(down).0) / (2.0 * h);
                    // Absolute floor: Michalewicz is flat to ~1e-20 over most of the square.
                    errors.push(rel(g[i], fd, 1e-3));
                }
            }
            check(format!("test_function.{f}"), errors, tolerance)
        })
        .collect()
}

/// The full suite run by the `verify-gradients` command.
pub fn verify_gradients(tolerance: f64, seed: u64) -> Result<Vec<GradientCheck>> {
    let mut rng = Rng::new(seed);
    let mut out = check_tdist(&[1, 2, 5, 8], 100, tolerance, &mut rng.split(0))?;
    out.push(check_mlp(50, tolerance, &mut rng.split(1))?);
    out.extend(check_test_functions(100, tolerance, &mut rng));
    Ok(out)
}
