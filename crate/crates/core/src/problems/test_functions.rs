use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};
use crate::numerics::{DenseArray, Rng};
use crate::optim::{OptimizerConfig, ParamGroup};

/// Noise ratios swept by the test-function experiments.
pub const DEFAULT_NOISE_RATIOS: [f64; 6] = [0.0, 0.01, 0.025, 0.05, 0.10, 0.15];

/// Perturbations are uniform on `(−NOISE_HALF_WIDTH, NOISE_HALF_WIDTH)`.
pub const NOISE_HALF_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    Rosenbrock,
    McCormick,
    Michalewicz,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [Self::Rosenbrock, Self::McCormick, Self::Michalewicz];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rosenbrock => "rosenbrock",
            Self::McCormick => "mccormick",
            Self::Michalewicz => "michalewicz",
        }
    }

    pub fn start(self) -> [f64; 2] {
        match self {
            Self::Rosenbrock => [-2.0, 2.0],
            Self::McCormick => [4.0, -3.0],
            Self::Michalewicz => [1.0, 1.0],
        }
    }

    /// Reference minimizer used for error norms. McCormick's is exact
    /// (`x + y = −2π/3`, `x − y = 1`); Michalewicz's `x` is a Newton root of
    /// the partial derivative, and `y = π/2` exactly.
    pub fn optimum(self) -> [f64; 2] {
        match self {
            Self::Rosenbrock => [1.0, 1.0],
            Self::McCormick => [0.5 - FRAC_PI_3, -0.5 - FRAC_PI_3],
            Self::Michalewicz => [2.202_905_520_172_609_3, FRAC_PI_2],
        }
    }

    pub fn optimum_value(self) -> f64 {
        match self {
            Self::Rosenbrock => 0.0,
            Self::McCormick => -1.913_222_954_981_036_4,
            Self::Michalewicz => -1.801_303_410_098_552_5,
        }
    }

    /// Value and analytic gradient.
    pub fn eval(self, [x, y]: [f64; 2]) -> (f64, [f64; 2]) {
        match self {
            Self::Rosenbrock => {
                let r = y - x * x;
                let value = 100.0 * r * r + (x - 1.0) * (x - 1.0);
                (value, [-400.0 * x * r + 2.0 * (x - 1.0), 200.0 * r])
            }
            Self::McCormick => {
                let (s, c) = (x + y).sin_cos();
                let value = s + (x - y) * (x - y) - 1.5 * x + 2.5 * y + 1.0;
                (value, [c + 2.0 * (x - y) - 1.5, c - 2.0 * (x - y) + 2.5])
            }
            Self::Michalewicz => {
                // −sin(x)·sin²⁰(x²/π) − sin(y)·sin²⁰(2y²/π), with integer powers.
                let term = |u: f64, k: f64| {
                    let (su, cu) = u.sin_cos();
                    let arg = k * u * u / PI;
                    let (sa, ca) = arg.sin_cos();
                    let p19 = sa.powi(19);
                    let value = -su * p19 * sa;
                    let grad = -cu * p19 * sa - su * 20.0 * p19 * ca * (2.0 * k * u / PI);
                    (value, grad)
                };
                let (vx, gx) = term(x, 1.0);
                let (vy, gy) = term(y, 2.0);
                (vx + vy, [gx, gy])
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown test function `{s}` (expected one of rosenbrock, mccormick, michalewicz)"
                ))
            })
    }
}

pub fn eval_test_function(function: TestFunction, point: [f64; 2]) -> Result<(f64, [f64; 2])> {
    ensure_finite(&point, "test-function point")?;
    Ok(function.eval(point))
}

/// With probability `p` both coordinates receive independent uniform
/// perturbations. Returns the point and whether it was perturbed.
pub fn inject_coordinate_noise(point: [f64; 2], p: f64, rng: &mut Rng) -> Result<([f64; 2], bool)> {
    if !rng.bernoulli(p)? {
        return Ok((point, false));
    }
    let h = NOISE_HALF_WIDTH;
    Ok(([point[0] + rng.uniform(-h, h), point[1] + rng.uniform(-h, h)], true))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSpec {
    pub function: TestFunction,
    pub noise_ratio: f64,
    pub steps: usize,
    /// Keep every n-th iterate in the trajectory; 0 keeps none.
    pub record_every: usize,
}

impl TestFunctionSpec {
    pub fn new(function: TestFunction, noise_ratio: f64) -> Self {
        Self {
            function,
            noise_ratio,
            steps: 15_000,
            record_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise_ratio) {
            return Err(Error::param(format!("noise ratio {} outside [0, 1]", self.noise_ratio)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionRun {
    pub final_point: [f64; 2],
    pub error_norm: f64,
    pub final_value: f64,
    pub final_nu_tilde: Option<f64>,
    pub noisy_steps: usize,
    /// `(step, x, y)`, starting with the initial point at step 0.
    pub trajectory: Vec<(usize, f64, f64)>,
}

/// Optimizes from the fixed start point. Noise perturbs only the point where
/// the gradient is evaluated, never the stored iterate.
pub fn run_test_function(spec: &TestFunctionSpec, cfg: &OptimizerConfig, seed: u64) -> Result<TestFunctionRun> {
    spec.validate()?;
    let f = spec.function;
    let mut rng = Rng::new(seed);
    let mut group = ParamGroup::new("xy", DenseArray::from_vec(f.start().to_vec()), cfg)?;
    let mut trajectory = Vec::new();
    let mut noisy_steps = 0;
    let point = |g: &ParamGroup| [g.values.as_slice()[0], g.values.as_slice()[1]];
    if spec.record_every > 0 {
        trajectory.push((0, f.start()[0], f.start()[1]));
    }
    for step in 1..=spec.steps {
        let (probe, noisy) = inject_coordinate_noise(point(&group), spec.noise_ratio, &mut rng)?;
        noisy_steps += noisy as usize;
        let (_, grad) = eval_test_function(f, probe)?;
        group.set_grad(&grad)?;
        group.step(cfg)?;
        let p = point(&group);
        ensure_finite(&p, "test-function iterate")?;
        if spec.record_every > 0 && step % spec.record_every == 0 {
            trajectory.push((step, p[0], p[1]));
        }
    }
    let final_point = point(&group);
    let opt = f.optimum();
    Ok(TestFunctionRun {
        final_point,
        error_norm: (final_point[0] - opt[0]).hypot(final_point[1] - opt[1]),
        final_value: f.eval(final_point).0,
        final_nu_tilde: group.state.nu_tilde(),
        noisy_steps,
        trajectory,
    })
}
