//! Dense vector arithmetic, orthonormal bases and projections onto them.

use std::ops::{Deref, Index};

use crate::error::{Error, Result};

/// Tolerance used when validating orthonormality of a [`Basis`].
pub const BASIS_TOLERANCE: f64 = 1e-10;

/// Residual norm (relative to the input norm, floored at 1) below which
/// Gram-Schmidt declares a vector linearly dependent on its predecessors.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// A point or direction in the ambient space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        dot_slices(&self.0, &self.0).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * k).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `self + k * other`, in place.
    pub(crate) fn axpy(&mut self, k: f64, other: &[f64]) {
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += k * b;
        }
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

#[inline]
pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Standard inner product.
pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(dot_slices(a, b))
}

/// Cosine of the angle between `q` and `e`, clamped to `[-1, 1]`.
pub fn cos_angle(q: &[f64], e: &[f64]) -> Result<f64> {
    check_dims(q.len(), e.len())?;
    let nq = dot_slices(q, q).sqrt();
    let ne = dot_slices(e, e).sqrt();
    if nq == 0.0 || ne == 0.0 {
        return Err(Error::Degenerate("angle with a zero vector".into()));
    }
    Ok((dot_slices(q, e) / (nq * ne)).clamp(-1.0, 1.0))
}

/// An orthonormal family `e^1, ..., e^d` in `R^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: Vec<Vector>,
    ambient: usize,
}

impl Basis {
    /// Wraps already-orthonormal vectors, checking the invariants.
    pub fn new(vectors: Vec<Vector>) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::Degenerate("basis needs at least one vector".into()))?;
        let ambient = first.dim();
        if ambient == 0 {
            return Err(Error::Degenerate("zero-dimensional ambient space".into()));
        }
        if vectors.len() > ambient {
            return Err(Error::Degenerate(format!(
                "{} vectors cannot be independent in R^{}",
                vectors.len(),
                ambient
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            check_dims(ambient, v.dim())?;
            if !v.is_finite() {
                return Err(Error::Degenerate(format!("basis vector {i} has non-finite entries")));
            }
            if (v.norm() - 1.0).abs() > BASIS_TOLERANCE {
                return Err(Error::Degenerate(format!("basis vector {i} is not unit length")));
            }
            for (j, w) in vectors[..i].iter().enumerate() {
                if dot_slices(v, w).abs() > BASIS_TOLERANCE {
                    return Err(Error::Degenerate(format!(
                        "basis vectors {j} and {i} are not orthogonal"
                    )));
                }
            }
        }
        Ok(Basis { vectors, ambient })
    }

    /// Subspace dimension `d`.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Ambient dimension `D`.
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn get(&self, i: usize) -> &Vector {
        &self.vectors[i]
    }

    /// Coefficients `c_i = v . e^i` of the orthogonal projection of `v`.
    pub fn project_coeffs(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.ambient, v.len())?;
        Ok(self.vectors.iter().map(|e| dot_slices(e, v)).collect())
    }

    /// `sum_i c_i e^i`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vector> {
        check_dims(self.dim(), coeffs.len())?;
        let mut out = Vector::zeros(self.ambient);
        for (c, e) in coeffs.iter().zip(&self.vectors) {
            out.axpy(*c, e);
        }
        Ok(out)
    }

    /// Orthogonal projection of `v` onto the span.
    pub fn project(&self, v: &[f64]) -> Result<Vector> {
        let c = self.project_coeffs(v)?;
        self.reconstruct(&c)
    }
}

/// Free-function form of [`Basis::project_coeffs`].
pub fn project_coeffs(v: &[f64], basis: &Basis) -> Result<Vec<f64>> {
    basis.project_coeffs(v)
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// Fails with [`Error::Degenerate`] naming the first vector whose residual
/// after removing the earlier directions is numerically zero.
pub fn gram_schmidt(raw: &[Vector]) -> Result<Basis> {
    let first = raw
        .first()
        .ok_or_else(|| Error::Degenerate("no input vectors".into()))?;
    let ambient = first.dim();
    let mut out: Vec<Vector> = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        check_dims(ambient, v.dim())?;
        let mut w = v.clone();
        for _pass in 0..2 {
            for u in &out {
                let k = dot_slices(&w, u);
                w.axpy(-k, u);
            }
        }
        let n = w.norm();
        if !(n > RANK_TOLERANCE * v.norm().max(1.0)) {
            return Err(Error::Degenerate(format!(
                "input vector {i} is linearly dependent on its predecessors"
            )));
        }
        out.push(w.scaled(1.0 / n));
    }
    Basis::new(out)
}
