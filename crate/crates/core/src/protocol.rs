//! The database mechanism and its binary threshold oracle.
//!
//! The learner only ever sees a [`ThresholdOracle`]: it hands over a query
//! ticket and a threshold and gets one bit back. Each ticket can be spent
//! once. The exact answer `w* . q` is available only through
//! [`Database::exact_answer`], which is reserved for the experimenter.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{dot_slices, Vector};
use crate::noise::NoiseModel;

/// The hidden database vector `w*` with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    w_star: Vector,
}

impl Database {
    pub fn new(w_star: Vector) -> Result<Self> {
        if w_star.dim() == 0 {
            return Err(Error::Usage("database vector must be nonempty".into()));
        }
        if let Some((i, x)) = w_star.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Usage(format!("database entry {i} = {x} is outside [0, 1]")));
        }
        Ok(Database { w_star })
    }

    pub fn dim(&self) -> usize {
        self.w_star.dim()
    }

    pub fn w_star(&self) -> &Vector {
        &self.w_star
    }

    pub fn exact_answer(&self, q: &[f64]) -> Result<f64> {
        validate_query(q, self.dim())?;
        Ok(dot_slices(&self.w_star, q))
    }
}

/// Queries must have entries in `[0, 1]` and not be identically zero.
pub fn validate_query(q: &[f64], dim: usize) -> Result<()> {
    if q.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: q.len() });
    }
    if let Some((i, x)) = q.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidQuery(format!("entry {i} = {x} is outside [0, 1]")));
    }
    if q.iter().all(|x| *x == 0.0) {
        return Err(Error::InvalidQuery("query is the zero vector".into()));
    }
    Ok(())
}

/// `w* . q + D * E`.
pub fn perturbed_answer<R: Rng + ?Sized>(
    db: &Database,
    q: &[f64],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<f64> {
    let exact = db.exact_answer(q)?;
    Ok(exact + db.dim() as f64 * noise.sample(rng))
}

/// 1 iff `a_tilde > theta`; ties answer 0.
pub fn oracle(a_tilde: f64, theta: f64) -> bool {
    a_tilde > theta
}

/// A query together with its single use of the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTicket {
    query: Vector,
    consumed: bool,
}

impl QueryTicket {
    pub fn new(query: Vector) -> Self {
        QueryTicket { query, consumed: false }
    }

    pub fn query(&self) -> &Vector {
        &self.query
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    pub fn into_query(self) -> Vector {
        self.query
    }

    fn consume(&mut self) -> Result<()> {
        if self.consumed {
            return Err(Error::OneShotViolation);
        }
        self.consumed = true;
        Ok(())
    }
}

/// The only channel through which a learner observes the database.
pub trait ThresholdOracle {
    fn ask(&mut self, ticket: &mut QueryTicket, theta: f64) -> Result<bool>;
}

/// Noisy mechanism in front of a [`Database`], owning its noise stream.
#[derive(Debug)]
pub struct Mechanism<R> {
    db: Arc<Database>,
    noise: NoiseModel,
    rng: R,
    calls: u64,
}

impl<R: Rng> Mechanism<R> {
    pub fn new(db: Arc<Database>, noise: NoiseModel, rng: R) -> Self {
        Mechanism { db, noise, rng, calls: 0 }
    }

    /// Number of oracle answers handed out so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }
}

impl<R: Rng> ThresholdOracle for Mechanism<R> {
    fn ask(&mut self, ticket: &mut QueryTicket, theta: f64) -> Result<bool> {
        validate_query(&ticket.query, self.db.dim())?;
        ticket.consume()?;
        self.calls += 1;
        let a_tilde = perturbed_answer(&self.db, &ticket.query, &self.noise, &mut self.rng)?;
        Ok(oracle(a_tilde, theta))
    }
}

/// Free-function form of [`ThresholdOracle::ask`].
pub fn ask<O: ThresholdOracle + ?Sized>(
    ticket: &mut QueryTicket,
    oracle: &mut O,
    theta: f64,
) -> Result<bool> {
    oracle.ask(ticket, theta)
}
