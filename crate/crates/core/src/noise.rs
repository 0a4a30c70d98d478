//! Bounded, symmetric noise distributions on `[-u, u]` with exact CDFs.
//!
//! The mechanism perturbs every exact answer by `D * E`, where `E` is drawn
//! from one of these models. The learner knows the model and uses its CDF to
//! derive the per-phase probabilities `delta_p` and `p1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Uniform,
    Triangular,
    TruncatedGaussian,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseKind::Uniform),
            "triangular" => Ok(NoiseKind::Triangular),
            "truncated_gaussian" => Ok(NoiseKind::TruncatedGaussian),
            other => Err(Error::Usage(format!("unknown noise kind `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Uniform => "uniform",
            NoiseKind::Triangular => "triangular",
            NoiseKind::TruncatedGaussian => "truncated_gaussian",
        })
    }
}

/// A continuous distribution supported on `[-u, u]`, symmetric about zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    u: f64,
    /// Pre-truncation standard deviation; only meaningful for the truncated
    /// Gaussian.
    sigma: f64,
    /// `erf(u / (sigma sqrt 2))`, the Gaussian mass kept by the truncation.
    mass: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, u: f64, sigma: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::Usage(format!("noise half-width u must be positive, got {u}")));
        }
        let mass = match kind {
            NoiseKind::TruncatedGaussian => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Usage(format!("noise sigma must be positive, got {sigma}")));
                }
                libm::erf(u / (sigma * std::f64::consts::SQRT_2))
            }
            _ => 1.0,
        };
        Ok(NoiseModel { kind, u, sigma, mass })
    }

    pub fn uniform(u: f64) -> Result<Self> {
        Self::new(NoiseKind::Uniform, u, 1.0)
    }

    pub fn triangular(u: f64) -> Result<Self> {
        Self::new(NoiseKind::Triangular, u, 1.0)
    }

    pub fn truncated_gaussian(u: f64, sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::TruncatedGaussian, u, sigma)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = self.u;
        match self.kind {
            NoiseKind::Uniform => u * (2.0 * rng.random::<f64>() - 1.0),
            NoiseKind::Triangular => u * (rng.random::<f64>() + rng.random::<f64>() - 1.0),
            NoiseKind::TruncatedGaussian => {
                let sigma = self.sigma;
                if u <= 2.0 * sigma {
                    // Uniform proposal, accepted with the Gaussian kernel.
                    loop {
                        let x = u * (2.0 * rng.random::<f64>() - 1.0);
                        let accept = (-0.5 * (x / sigma).powi(2)).exp();
                        if rng.random::<f64>() < accept {
                            return x;
                        }
                    }
                } else {
                    loop {
                        let z: f64 = rng.sample(StandardNormal);
                        let x = sigma * z;
                        if (-u..=u).contains(&x) {
                            return x;
                        }
                    }
                }
            }
        }
    }

    /// `P(E <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= -self.u {
            return 0.0;
        }
        if x >= self.u {
            return 1.0;
        }
        // All kinds are symmetric: cdf(x) = 1/2 + sign(x) * g(|x|).
        let a = x.abs();
        let g = match self.kind {
            NoiseKind::Uniform => 0.5 * a / self.u,
            NoiseKind::Triangular => 0.5 - 0.5 * ((self.u - a) / self.u).powi(2),
            NoiseKind::TruncatedGaussian => {
                0.5 * libm::erf(a / (self.sigma * std::f64::consts::SQRT_2)) / self.mass
            }
        };
        if x >= 0.0 {
            0.5 + g
        } else {
            0.5 - g
        }
    }

    /// Density at zero; strictly positive for every kind.
    pub fn density_at_zero(&self) -> f64 {
        match self.kind {
            NoiseKind::Uniform => 0.5 / self.u,
            NoiseKind::Triangular => 1.0 / self.u,
            NoiseKind::TruncatedGaussian => {
                1.0 / (self.sigma * (2.0 * std::f64::consts::PI).sqrt() * self.mass)
            }
        }
    }

    /// `P(-a <= E <= a)` with `a = side / (8D)`.
    pub fn delta_p(&self, side: f64, dim: usize) -> f64 {
        let a = half_band(side, dim);
        if a >= self.u {
            return 1.0;
        }
        self.cdf(a) - self.cdf(-a)
    }

    /// `P(E > a)` with `a = side / (8D)`.
    pub fn p1(&self, side: f64, dim: usize) -> f64 {
        let a = half_band(side, dim);
        if a >= self.u {
            return 0.0;
        }
        1.0 - self.cdf(a)
    }
}

fn half_band(side: f64, dim: usize) -> f64 {
    side / (8.0 * dim as f64)
}
