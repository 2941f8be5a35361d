use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Seeded ChaCha stream. Child streams obtained through [`Rng::split`] use
/// distinct ChaCha stream ids, so parallel trials never share randomness.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha12Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `(seed, stream)`; does not advance `self`.
    pub fn split(&self, stream: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        Self {
            seed: self.seed,
            inner,
        }
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.standard_normal()
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        check_probability(p)?;
        Ok(self.inner.random::<f64>() < p)
    }

    pub fn bernoulli_mask(&mut self, n: usize, p: f64) -> Result<Vec<bool>> {
        check_probability(p)?;
        Ok((0..n).map(|_| self.inner.random::<f64>() < p).collect())
    }

    /// One draw from the location-scale Student's t law, built as
    /// `loc + scale * z / sqrt(chi2(nu) / nu)`.
    pub fn student_t(&mut self, nu: f64, loc: f64, scale: f64) -> Result<f64> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::param(format!("degrees of freedom must be positive, got {nu}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param(format!("scale must be positive, got {scale}")));
        }
        let chi2 = ChiSquared::new(nu).map_err(|e| Error::param(e.to_string()))?;
        let z = self.standard_normal();
        let c: f64 = chi2.sample(&mut self.inner);
        Ok(loc + scale * z / (c / nu).sqrt())
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("probability must lie in [0, 1], got {p}")))
    }
}

/// Free-function form of [`Rng::student_t`].
pub fn sample_student_t(rng: &mut Rng, nu: f64, loc: f64, scale: f64) -> Result<f64> {
    rng.student_t(nu, loc, scale)
}

/// Free-function form of [`Rng::bernoulli_mask`].
pub fn sample_bernoulli_mask(rng: &mut Rng, n: usize, p: f64) -> Result<Vec<bool>> {
    rng.bernoulli_mask(n, p)
}
