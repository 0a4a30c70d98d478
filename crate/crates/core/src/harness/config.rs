//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; missing keys take the defaults of [`ExperimentConfig::default`].
//! `query.jitter_angle` additionally accepts the literal `phi`, meaning the
//! learner's angular gate for the configured `d`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::HarnessError;
use crate::learner::phi;
use crate::noise::{NoiseKind, NoiseModel};
use crate::querygen::QueryKind;

pub const KEYS: &[&str] = &[
    "D",
    "d",
    "T",
    "seed",
    "eval_M",
    "w_star_mode",
    "w_star_values",
    "noise.kind",
    "noise.u",
    "noise.sigma",
    "query.kind",
    "query.mixture_weight",
    "query.jitter_angle",
    "query.scale_lo",
    "query.scale_hi",
    "output_path",
    "subspace.seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum WStarMode {
    RandomUniform01,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub u: f64,
    /// Defaults to `u / 2` when unset.
    pub sigma: Option<f64>,
}

impl NoiseSpec {
    pub fn model(&self) -> crate::Result<NoiseModel> {
        NoiseModel::new(self.kind, self.u, self.sigma.unwrap_or(self.u / 2.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub kind: QueryKind,
    pub mixture_weight: f64,
    /// `None` means "use phi(d)".
    pub jitter_angle: Option<f64>,
    pub scale_lo: f64,
    pub scale_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    pub horizon: u64,
    pub seed: u64,
    pub eval_m: usize,
    pub w_star: WStarMode,
    pub noise: NoiseSpec,
    pub query: QuerySpec,
    pub subspace_seed: Option<u64>,
    pub output_path: PathBuf,
    /// Cleared for the constant-hypothesis ablation.
    pub shrinking: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ambient_dim: 4,
            subspace_dim: 2,
            horizon: 100_000,
            seed: 0,
            eval_m: 10_000,
            w_star: WStarMode::RandomUniform01,
            noise: NoiseSpec { kind: NoiseKind::Uniform, u: 1e-3, sigma: None },
            query: QuerySpec {
                kind: QueryKind::BasisMixture,
                mixture_weight: 0.5,
                jitter_angle: None,
                scale_lo: 0.5,
                scale_hi: 1.0,
            },
            subspace_seed: None,
            output_path: PathBuf::from("run.csv"),
            shrinking: true,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Invalid { key: key.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn jitter_angle(&self) -> f64 {
        self.query.jitter_angle.unwrap_or_else(|| phi(self.subspace_dim))
    }

    pub fn noise_model(&self) -> Result<NoiseModel, HarnessError> {
        self.noise.model().map_err(|e| invalid("noise.u", e.to_string()))
    }

    /// Checks every parameter, naming the offending key on failure.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.ambient_dim < 1 {
            return Err(invalid("D", "must be at least 1"));
        }
        if self.subspace_dim < 1 || self.subspace_dim > self.ambient_dim {
            return Err(invalid("d", format!("must satisfy 1 <= d <= D = {}", self.ambient_dim)));
        }
        if self.horizon < 2 {
            return Err(invalid("T", format!("must be at least 2, got {}", self.horizon)));
        }
        if self.eval_m < 1 {
            return Err(invalid("eval_M", "must be at least 1"));
        }
        if let WStarMode::Explicit(values) = &self.w_star {
            if values.len() != self.ambient_dim {
                return Err(invalid(
                    "w_star_values",
                    format!("expected {} values, got {}", self.ambient_dim, values.len()),
                ));
            }
            if values.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(invalid("w_star_values", "entries must lie in [0, 1]"));
            }
        }
        if !(self.noise.u > 0.0 && self.noise.u.is_finite()) {
            return Err(invalid("noise.u", "must be positive and finite"));
        }
        if let Some(s) = self.noise.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("noise.sigma", "must be positive and finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.query.mixture_weight) {
            return Err(invalid("query.mixture_weight", "must lie in [0, 1]"));
        }
        let gate = phi(self.subspace_dim);
        if let Some(j) = self.query.jitter_angle {
            if !(0.0..=gate).contains(&j) {
                return Err(invalid(
                    "query.jitter_angle",
                    format!("must lie in [0, phi(d) = {gate}], got {j}"),
                ));
            }
        }
        if !(self.query.scale_lo > 0.0 && self.query.scale_lo <= 1.0) {
            return Err(invalid("query.scale_lo", "must lie in (0, 1]"));
        }
        if !(self.query.scale_hi >= self.query.scale_lo && self.query.scale_hi <= 1.0) {
            return Err(invalid("query.scale_hi", "must lie in [query.scale_lo, 1]"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut w_star_mode: Option<(usize, String)> = None;
        let mut w_star_values: Option<(usize, Vec<f64>)> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(HarnessError::Parse { line, message: "expected `key = value`".into() });
            };
            let key = key.trim();
            let value = unquote(value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(HarnessError::UnknownKey { line, key: key.to_string() });
            };
            if seen.contains(&known) {
                return Err(HarnessError::Parse { line, message: format!("duplicate key `{key}`") });
            }
            seen.push(known);

            match known {
                "D" => cfg.ambient_dim = num(line, key, value)?,
                "d" => cfg.subspace_dim = num(line, key, value)?,
                "T" => cfg.horizon = num(line, key, value)?,
                "seed" => cfg.seed = num(line, key, value)?,
                "eval_M" => cfg.eval_m = num(line, key, value)?,
                "w_star_mode" => w_star_mode = Some((line, value.to_string())),
                "w_star_values" => {
                    let vals = value
                        .split(',')
                        .map(|s| num::<f64>(line, key, s.trim()))
                        .collect::<Result<Vec<_>, _>>()?;
                    w_star_values = Some((line, vals));
                }
                "noise.kind" => {
                    cfg.noise.kind = value
                        .parse()
                        .map_err(|e: crate::Error| invalid(key, e.to_string()))?
                }
                "noise.u" => cfg.noise.u = num(line, key, value)?,
                "noise.sigma" => cfg.noise.sigma = Some(num(line, key, value)?),
                "query.kind" => {
                    cfg.query.kind = value
                        .parse()
                        .map_err(|e: crate::Error| invalid(key, e.to_string()))?
                }
                "query.mixture_weight" => cfg.query.mixture_weight = num(line, key, value)?,
                "query.jitter_angle" => {
                    cfg.query.jitter_angle =
                        if value == "phi" { None } else { Some(num(line, key, value)?) }
                }
                "query.scale_lo" => cfg.query.scale_lo = num(line, key, value)?,
                "query.scale_hi" => cfg.query.scale_hi = num(line, key, value)?,
                "output_path" => cfg.output_path = PathBuf::from(value),
                "subspace.seed" => cfg.subspace_seed = Some(num(line, key, value)?),
                _ => unreachable!("key list and match arms agree"),
            }
        }

        match w_star_mode.as_ref().map(|(_, m)| m.as_str()) {
            None | Some("random_uniform01") => {
                if w_star_values.is_some() {
                    return Err(invalid("w_star_values", "only allowed with w_star_mode = explicit"));
                }
            }
            Some("explicit") => match w_star_values {
                Some((_, vals)) => cfg.w_star = WStarMode::Explicit(vals),
                None => return Err(invalid("w_star_values", "required when w_star_mode = explicit")),
            },
            Some(other) => {
                return Err(invalid(
                    "w_star_mode",
                    format!("expected `random_uniform01` or `explicit`, got `{other}`"),
                ))
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(s)
}

fn num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| HarnessError::Parse {
        line,
        message: format!("bad value `{value}` for `{key}`: {e}"),
    })
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::parse(&text)
}
