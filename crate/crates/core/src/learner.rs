//! The online bisection learner.
//!
//! The learner keeps a box of coefficient intervals over a fixed orthonormal
//! basis of the query space and answers every query with the box center.
//! A query that lies within angle `phi` of some basis direction is also
//! spent on the oracle, thresholded at the midpoint of the box's range along
//! the query, and the resulting bit is tallied for that direction. Once every
//! direction has collected `N_crit` bits, each interval is replaced by its
//! upper or lower 3/4 depending on a majority-style vote, and a new phase
//! begins. Learning stops when the side length falls to `ln T / sqrt(T d)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{dot_slices, Basis};
use crate::hypercube::Hypercube;
use crate::noise::NoiseModel;
use crate::protocol::{validate_query, QueryTicket, ThresholdOracle};

/// Shrink factor applied to every side per phase.
pub const ALPHA: f64 = 0.75;

/// Numerator constant of `N_crit = 30 ln T / delta_p^2`.
pub const N_CRIT_SCALE: f64 = 30.0;

/// Number of scalar fields held outside the per-dimension arrays:
/// `phi`, `T`, `D`, `d`, `alpha`, `phase`, cached `n_crit`.
const FIXED_SCALARS: usize = 7;

/// Angular gate `phi = 2 asin(1 / (64 sqrt d))`.
pub fn phi(d: usize) -> f64 {
    2.0 * (1.0 / (64.0 * (d as f64).sqrt())).asin()
}

/// What happened while processing one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// The learner's answer `z^t`.
    pub answer: f64,
    pub matched_dim: Option<usize>,
    pub oracle_bit: Option<bool>,
    pub shrank: bool,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct OnlineBisection {
    hc: Hypercube,
    n_plus: Vec<u64>,
    n_minus: Vec<u64>,
    phi: f64,
    horizon: u64,
    noise: NoiseModel,
    phase: u32,
    alpha: f64,
    n_crit: f64,
    shrinking: bool,
}

impl OnlineBisection {
    /// A fresh learner for a stream of `horizon` queries in the span of `basis`.
    pub fn new(basis: Arc<Basis>, horizon: u64, noise: NoiseModel) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::Usage(format!("stream length T must be at least 2, got {horizon}")));
        }
        let d = basis.dim();
        let hc = Hypercube::initial(basis);
        let mut learner = OnlineBisection {
            phi: phi(d),
            hc,
            n_plus: vec![0; d],
            n_minus: vec![0; d],
            horizon,
            noise,
            phase: 0,
            alpha: ALPHA,
            n_crit: f64::INFINITY,
            shrinking: true,
        };
        learner.n_crit = learner.compute_n_crit()?;
        Ok(learner)
    }

    /// Disables shrinking, leaving a constant hypothesis (no-learning baseline).
    pub fn without_shrinking(mut self) -> Self {
        self.shrinking = false;
        self
    }

    pub fn hypercube(&self) -> &Hypercube {
        &self.hc
    }

    pub fn basis(&self) -> &Arc<Basis> {
        self.hc.basis()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn counters(&self) -> (&[u64], &[u64]) {
        (&self.n_plus, &self.n_minus)
    }

    pub fn ambient_dim(&self) -> usize {
        self.hc.basis().ambient()
    }

    pub fn side_length(&self) -> f64 {
        self.hc.side_length().expect("sides shrink in lockstep")
    }

    /// `delta_p` for the current side length.
    pub fn delta_p(&self) -> f64 {
        self.noise.delta_p(self.side_length(), self.ambient_dim())
    }

    /// Observation quota per direction for the current phase.
    pub fn n_crit(&self) -> f64 {
        self.n_crit
    }

    fn compute_n_crit(&self) -> Result<f64> {
        n_crit(self.horizon, self.delta_p())
    }

    /// Whether the box is already small enough to stop learning.
    pub fn is_converged(&self) -> bool {
        self.side_length() <= stopping_side(self.horizon, self.hc.dim())
    }

    /// Scalars held by the learner, excluding the basis itself.
    pub fn scalar_count(&self) -> usize {
        2 * self.hc.intervals().len() + self.n_plus.len() + self.n_minus.len() + FIXED_SCALARS
    }

    /// Processes one query: answers it, and possibly spends its ticket on
    /// the oracle and shrinks the box.
    pub fn step<O: ThresholdOracle + ?Sized>(
        &mut self,
        ticket: &mut QueryTicket,
        oracle: &mut O,
    ) -> Result<StepOutcome> {
        let q = ticket.query();
        validate_query(q, self.ambient_dim())?;

        let proj: Vec<f64> = self.basis().vectors().iter().map(|e| dot_slices(e, q)).collect();
        let answer: f64 = self.hc.intervals().iter().zip(&proj).map(|(iv, p)| iv.mid() * p).sum();
        let mut out = StepOutcome {
            answer,
            matched_dim: None,
            oracle_bit: None,
            shrank: false,
            converged: false,
        };

        if self.is_converged() {
            out.converged = true;
            return Ok(out);
        }

        // Basis vectors are unit length, so cos = (e . q) / |q|.
        let q_norm = dot_slices(q, q).sqrt();
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in proj.iter().enumerate() {
            let cos = (p / q_norm).clamp(-1.0, 1.0);
            if cos.acos() <= self.phi && best.is_none_or(|(_, c)| cos > c) {
                best = Some((i, cos));
            }
        }
        let Some((i_star, _)) = best else {
            return Ok(out);
        };

        let theta = self.hc.threshold_from_projections(&proj).theta;
        let bit = oracle.ask(ticket, theta)?;
        if bit {
            self.n_plus[i_star] += 1;
        } else {
            self.n_minus[i_star] += 1;
        }
        out.matched_dim = Some(i_star);
        out.oracle_bit = Some(bit);

        if self.shrinking && self.quota_met() {
            self.shrink()?;
            out.shrank = true;
        }
        Ok(out)
    }

    fn quota_met(&self) -> bool {
        self.n_plus
            .iter()
            .zip(&self.n_minus)
            .all(|(p, m)| (p + m) as f64 >= self.n_crit)
    }

    /// Replaces every interval by its upper or lower `alpha` fraction and
    /// starts the next phase.
    ///
    /// Direction `i` keeps its upper part iff
    /// `N+_i > N_i p1 + N_i delta_p / 2`, with both probabilities taken at
    /// the side length before the update.
    pub fn shrink(&mut self) -> Result<()> {
        let side = self.side_length();
        let dim = self.ambient_dim();
        let p1 = self.noise.p1(side, dim);
        let dp = self.noise.delta_p(side, dim);
        let keep_upper: Vec<bool> = self
            .n_plus
            .iter()
            .zip(&self.n_minus)
            .map(|(&plus, &minus)| keep_upper(plus, plus + minus, p1, dp))
            .collect();
        self.hc = self.hc.shrunk(&keep_upper, self.alpha);
        self.hc.side_length()?;
        self.n_plus.iter_mut().for_each(|n| *n = 0);
        self.n_minus.iter_mut().for_each(|n| *n = 0);
        self.phase += 1;
        self.n_crit = self.compute_n_crit()?;
        Ok(())
    }
}

/// The shrink vote for one direction.
pub fn keep_upper(n_plus: u64, n_total: u64, p1: f64, delta_p: f64) -> bool {
    let n = n_total as f64;
    n_plus as f64 > n * p1 + n * delta_p / 2.0
}

/// `30 ln T / delta_p^2`.
pub fn n_crit(horizon: u64, delta_p: f64) -> Result<f64> {
    if !(delta_p > 0.0) {
        return Err(Error::Degenerate(format!(
            "delta_p = {delta_p}: the noise puts no mass near zero at this side length"
        )));
    }
    Ok(N_CRIT_SCALE * (horizon as f64).ln() / (delta_p * delta_p))
}

/// Side length at or below which learning stops: `ln T / sqrt(T d)`.
pub fn stopping_side(horizon: u64, d: usize) -> f64 {
    let t = horizon as f64;
    t.ln() / (t * d as f64).sqrt()
}

/// Upper bound on the number of shrinks:
/// `ceil(log_{4/3}(2 sqrt(D d) sqrt(T) / ln T)) + 1`.
pub fn max_phases(ambient: usize, d: usize, horizon: u64) -> u32 {
    let t = horizon as f64;
    let h = t.sqrt() / t.ln();
    let arg = 2.0 * ((ambient * d) as f64).sqrt() * h;
    (arg.ln() / (1.0 / ALPHA).ln()).ceil().max(0.0) as u32 + 1
}
