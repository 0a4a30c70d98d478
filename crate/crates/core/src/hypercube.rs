//! The learner's hypothesis region: a box of coefficient intervals over an
//! orthonormal basis.
//!
//! Linear functionals are maximized over the box in closed form. For every
//! basis direction the optimum takes the upper endpoint when the query has a
//! nonnegative component along it and the lower endpoint otherwise, so no
//! LP solver is involved and a query costs `O(dD)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{dot_slices, Basis, Vector};

/// Side lengths may drift apart by at most this much through rounding.
pub const EQUAL_SIDE_TOLERANCE: f64 = 1e-9;

/// Slack applied to interval membership.
pub const CONTAINS_SLACK: f64 = 1e-12;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Usage(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo - CONTAINS_SLACK <= x && x <= self.hi + CONTAINS_SLACK
    }
}

/// Keeps the upper or lower `alpha` fraction of `interval`.
pub fn shrink_interval(interval: Interval, keep_upper: bool, alpha: f64) -> Interval {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let Interval { lo, hi } = interval;
    if keep_upper {
        Interval { lo: hi - alpha * (hi - lo), hi }
    } else {
        Interval { lo, hi: lo + alpha * (hi - lo) }
    }
}

/// Smallest and largest value of `v . q` over the box, and their midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub min: f64,
    pub max: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypercube {
    intervals: Vec<Interval>,
    basis: Arc<Basis>,
}

impl Hypercube {
    /// Every coefficient interval set to `[-sqrt(D), sqrt(D)]`.
    pub fn initial(basis: Arc<Basis>) -> Self {
        let r = (basis.ambient() as f64).sqrt();
        let intervals = vec![Interval { lo: -r, hi: r }; basis.dim()];
        Hypercube { intervals, basis }
    }

    pub fn from_intervals(intervals: Vec<Interval>, basis: Arc<Basis>) -> Result<Self> {
        if intervals.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: intervals.len() });
        }
        for iv in &intervals {
            Interval::new(iv.lo, iv.hi)?;
        }
        let hc = Hypercube { intervals, basis };
        hc.side_length()?;
        Ok(hc)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    /// Common side length; errors if the sides have drifted apart.
    pub fn side_length(&self) -> Result<f64> {
        let first = self.intervals[0].len();
        for (i, iv) in self.intervals.iter().enumerate().skip(1) {
            if (iv.len() - first).abs() > EQUAL_SIDE_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "side {i} has length {} but side 0 has {first}",
                    iv.len()
                )));
            }
        }
        Ok(first)
    }

    /// `max_{v in box} v . q`.
    pub fn support(&self, q: &[f64]) -> Result<f64> {
        self.check_query(q)?;
        Ok(self
            .basis
            .vectors()
            .iter()
            .zip(&self.intervals)
            .map(|(e, iv)| {
                let p = dot_slices(e, q);
                if p >= 0.0 {
                    iv.hi * p
                } else {
                    iv.lo * p
                }
            })
            .sum())
    }

    /// Midpoint threshold between the min and max of `v . q` over the box.
    pub fn threshold_midpoint(&self, q: &[f64]) -> Result<Threshold> {
        self.check_query(q)?;
        let proj: Vec<f64> = self.basis.vectors().iter().map(|e| dot_slices(e, q)).collect();
        Ok(self.threshold_from_projections(&proj))
    }

    /// Same as [`threshold_midpoint`](Self::threshold_midpoint) given the
    /// precomputed projections `e^i . q`.
    pub fn threshold_from_projections(&self, proj: &[f64]) -> Threshold {
        let (mut min, mut max) = (0.0, 0.0);
        for (p, iv) in proj.iter().zip(&self.intervals) {
            if *p >= 0.0 {
                max += iv.hi * p;
                min += iv.lo * p;
            } else {
                max += iv.lo * p;
                min += iv.hi * p;
            }
        }
        Threshold { min, max, theta: 0.5 * (min + max) }
    }

    pub fn center_coeffs(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::mid).collect()
    }

    /// The center of the box as a point of `R^D`.
    pub fn representative(&self) -> Vector {
        self.basis
            .reconstruct(&self.center_coeffs())
            .expect("one interval per basis vector")
    }

    pub fn contains(&self, coeffs: &[f64]) -> bool {
        coeffs.len() == self.intervals.len()
            && self.intervals.iter().zip(coeffs).all(|(iv, c)| iv.contains(*c))
    }

    /// Applies one shrink step per dimension.
    pub fn shrunk(&self, keep_upper: &[bool], alpha: f64) -> Hypercube {
        assert_eq!(keep_upper.len(), self.intervals.len());
        let intervals = self
            .intervals
            .iter()
            .zip(keep_upper)
            .map(|(iv, up)| shrink_interval(*iv, *up, alpha))
            .collect();
        Hypercube { intervals, basis: Arc::clone(&self.basis) }
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.basis.ambient() {
            return Err(Error::DimensionMismatch { expected: self.basis.ambient(), got: q.len() });
        }
        Ok(())
    }
}
