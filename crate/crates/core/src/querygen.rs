//! Query subspaces and query-stream distributions.
//!
//! Subspaces are built from disjoint coordinate blocks with positive
//! weights. Disjoint support makes the basis orthonormal, and nonnegative
//! entries make every nonnegative coefficient combination a nonnegative
//! vector, so rescaling its largest entry into `(0, 1]` yields a valid query
//! that still lies in the span.

use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{cos_angle, Basis, Vector};

/// A random `d`-dimensional subspace of `R^D` with a nonnegative
/// orthonormal basis on disjoint coordinate blocks.
pub fn make_subspace<R: Rng + ?Sized>(ambient: usize, d: usize, rng: &mut R) -> Result<Basis> {
    if d == 0 || d > ambient {
        return Err(Error::Usage(format!("need 1 <= d <= D, got d = {d}, D = {ambient}")));
    }
    let mut coords: Vec<usize> = (0..ambient).collect();
    coords.shuffle(rng);
    let (base, extra) = (ambient / d, ambient % d);
    let mut vectors = Vec::with_capacity(d);
    let mut next = 0;
    for i in 0..d {
        let len = base + usize::from(i < extra);
        let block = &coords[next..next + len];
        next += len;
        let mut v = vec![0.0; ambient];
        for &c in block {
            v[c] = rng.random_range(0.5..=1.0);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        vectors.push(Vector::new(v));
    }
    Basis::new(vectors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    /// Uniform nonnegative coefficients, rescaled into the unit box.
    UniformCoeff,
    /// With probability `mixture_weight`, a scaled basis direction jittered
    /// by at most `jitter_angle`; otherwise a `UniformCoeff` draw.
    BasisMixture,
}

impl FromStr for QueryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_coeff" => Ok(QueryKind::UniformCoeff),
            "basis_mixture" => Ok(QueryKind::BasisMixture),
            other => Err(Error::Usage(format!("unknown query kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryDistribution {
    pub kind: QueryKind,
    pub mixture_weight: f64,
    pub jitter_angle: f64,
    pub subspace: Arc<Basis>,
    pub scale_lo: f64,
    pub scale_hi: f64,
}

impl QueryDistribution {
    pub fn new(
        kind: QueryKind,
        mixture_weight: f64,
        jitter_angle: f64,
        subspace: Arc<Basis>,
        scale_lo: f64,
        scale_hi: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&mixture_weight) {
            return Err(Error::Usage(format!("mixture weight {mixture_weight} is outside [0, 1]")));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&jitter_angle) {
            return Err(Error::Usage(format!("jitter angle {jitter_angle} is outside [0, pi/2]")));
        }
        if !(scale_lo > 0.0 && scale_lo <= scale_hi && scale_hi <= 1.0) {
            return Err(Error::Usage(format!(
                "scale range [{scale_lo}, {scale_hi}] must satisfy 0 < lo <= hi <= 1"
            )));
        }
        if subspace.vectors().iter().any(|e| e.iter().any(|x| *x < 0.0)) {
            return Err(Error::Usage("query subspace basis must be entrywise nonnegative".into()));
        }
        Ok(QueryDistribution { kind, mixture_weight, jitter_angle, subspace, scale_lo, scale_hi })
    }

    fn scale<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.scale_lo == self.scale_hi {
            self.scale_lo
        } else {
            rng.random_range(self.scale_lo..=self.scale_hi)
        }
    }

    /// Draws one query.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        if self.kind == QueryKind::BasisMixture && rng.random::<f64>() < self.mixture_weight {
            let d = self.subspace.dim();
            let i = rng.random_range(0..d);
            let dir = rotate_within(&self.subspace, i, self.jitter_angle, rng);
            let c = self.scale(rng);
            dir.scaled(c)
        } else {
            self.sample_uniform_coeff(rng)
        }
    }

    fn sample_uniform_coeff<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        loop {
            let coeffs: Vec<f64> = (0..self.subspace.dim()).map(|_| rng.random::<f64>()).collect();
            let v = self.subspace.reconstruct(&coeffs).expect("coefficient count matches basis");
            let top = v.iter().copied().fold(0.0, f64::max);
            if top > 0.0 {
                let c = self.scale(rng);
                // (x c) / top keeps the largest entry at exactly c <= 1.
                return Vector::new(v.iter().map(|x| x * c / top).collect());
            }
        }
    }
}

/// Free-function form of [`QueryDistribution::sample`].
pub fn sample_query<R: Rng + ?Sized>(dist: &QueryDistribution, rng: &mut R) -> Vector {
    dist.sample(rng)
}

/// Unit vector at angle `a ~ U[0, max_angle]` from `e^i`, rotated toward a
/// random nonnegative combination of the other basis vectors. Stays in the
/// span and entrywise in `[0, 1]`.
fn rotate_within<R: Rng + ?Sized>(basis: &Basis, i: usize, max_angle: f64, rng: &mut R) -> Vector {
    let d = basis.dim();
    let e = basis.get(i).clone();
    if d == 1 || max_angle == 0.0 {
        return e;
    }
    let a = rng.random_range(0.0..=max_angle);
    let mut coeffs = vec![0.0; d];
    let mut n2 = 0.0;
    while n2 == 0.0 {
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = if j == i { 0.0 } else { rng.random::<f64>() };
        }
        n2 = coeffs.iter().map(|c| c * c).sum::<f64>();
    }
    let n = n2.sqrt();
    coeffs.iter_mut().for_each(|c| *c *= a.sin() / n);
    coeffs[i] = a.cos();
    basis.reconstruct(&coeffs).expect("coefficient count matches basis")
}

/// For each basis direction, the fraction of `n` sampled queries whose
/// normalized form has cosine at least `cos(theta)` with it; returns the
/// minimum over directions.
pub fn estimate_p<R: Rng + ?Sized>(
    dist: &QueryDistribution,
    theta: f64,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("estimate_p needs at least one sample".into()));
    }
    let d = dist.subspace.dim();
    let threshold = theta.cos();
    let mut hits = vec![0usize; d];
    for _ in 0..n {
        let q = dist.sample(rng);
        for (i, e) in dist.subspace.vectors().iter().enumerate() {
            if cos_angle(&q, e)? >= threshold {
                hits[i] += 1;
            }
        }
    }
    let min = hits.into_iter().min().unwrap_or(0);
    Ok(min as f64 / n as f64)
}

/// `2 / p^2`, the query-budget factor for a direction probability `p`.
pub fn r_from_p(p_hat: f64) -> Result<f64> {
    if !(p_hat > 0.0) {
        return Err(Error::Degenerate(format!(
            "direction probability {p_hat} must be positive"
        )));
    }
    Ok(2.0 / (p_hat * p_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::phi;
    use crate::protocol::validate_query;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(kind: QueryKind, w: f64, jitter: f64, big_d: usize, d: usize, seed: u64) -> QueryDistribution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Arc::new(make_subspace(big_d, d, &mut rng).unwrap());
        QueryDistribution::new(kind, w, jitter, b, 0.5, 1.0).unwrap()
    }

    fn residual(b: &Basis, q: &[f64]) -> f64 {
        let p = b.project(q).unwrap();
        q.iter().zip(p.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn subspace_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = make_subspace(4, 2, &mut rng).unwrap();
        assert_eq!((b.ambient(), b.dim()), (4, 2));
        for e in b.vectors() {
            assert_eq!(e.iter().filter(|x| **x > 0.0).count(), 2);
            assert!(e.iter().all(|x| *x >= 0.0));
        }
        assert_eq!(crate::geometry::dot(b.get(0), b.get(1)).unwrap(), 0.0);

        let b = make_subspace(5, 5, &mut rng).unwrap();
        let mut seen = [false; 5];
        for e in b.vectors() {
            let k = e.iter().position(|x| *x != 0.0).unwrap();
            assert_eq!(e[k], 1.0);
            assert!(!seen[k]);
            seen[k] = true;
        }
        assert!(make_subspace(3, 4, &mut rng).is_err());
        assert!(make_subspace(3, 0, &mut rng).is_err());
    }

    #[test]
    fn subspaces_pass_basis_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for big_d in 1..40 {
            for d in 1..=big_d.min(8) {
                let b = make_subspace(big_d, d, &mut rng).unwrap();
                assert!(Basis::new(b.vectors().to_vec()).is_ok());
            }
        }
    }

    #[test]
    fn pure_basis_queries() {
        let qd = dist(QueryKind::BasisMixture, 1.0, 0.0, 6, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let q = qd.sample(&mut rng);
            let best = qd
                .subspace
                .vectors()
                .iter()
                .map(|e| cos_angle(&q, e).unwrap())
                .fold(f64::MIN, f64::max);
            assert!((best - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn queries_are_valid_and_in_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (kind, w) in [(QueryKind::UniformCoeff, 0.0), (QueryKind::BasisMixture, 0.5)] {
            let qd = dist(kind, w, phi(3), 10, 3, 5);
            for _ in 0..100_000 {
                let q = qd.sample(&mut rng);
                validate_query(&q, 10).unwrap();
                assert!(residual(&qd.subspace, &q) <= 1e-10);
            }
        }
    }

    #[test]
    fn mixture_fraction_within_gate() {
        // d = 2: a uniform draw on [0,1]^2 lies within angle phi of an axis
        // with probability tan(phi) (tan(phi)/2 per axis), so the expected
        // gated fraction is w + (1 - w) tan(phi).
        let d = 2;
        let w = 0.5;
        let qd = dist(QueryKind::BasisMixture, w, phi(d), 4, d, 6);
        let expected = w + (1.0 - w) * phi(d).tan();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hits = (0..n)
            .filter(|_| {
                let q = qd.sample(&mut rng);
                qd.subspace
                    .vectors()
                    .iter()
                    .any(|e| cos_angle(&q, e).unwrap().acos() <= phi(d))
            })
            .count();
        let frac = hits as f64 / n as f64;
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((frac - expected).abs() < 3.0 * se, "{frac} vs {expected}");
        assert!((frac - 0.5).abs() < 0.02);
    }

    #[test]
    fn estimate_p_examples() {
        let qd = dist(QueryKind::BasisMixture, 1.0, 0.0, 4, 2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = estimate_p(&qd, phi(2), 10_000, &mut rng).unwrap();
        assert!((p - 0.5).abs() < 0.02, "{p}");

        let qd = dist(QueryKind::UniformCoeff, 0.0, 0.0, 6, 3, 10);
        assert_eq!(estimate_p(&qd, std::f64::consts::PI, 100, &mut rng).unwrap(), 1.0);
        let p = estimate_p(&qd, phi(3), 10_000, &mut rng).unwrap();
        assert!(p < 0.005, "{p}");

        assert!(estimate_p(&qd, 0.1, 0, &mut rng).is_err());
    }

    #[test]
    fn estimate_p_lower_bound_for_mixtures() {
        for (d, w) in [(2, 0.5), (3, 0.6), (4, 0.3)] {
            let qd = dist(QueryKind::BasisMixture, w, phi(d), 12, d, 11);
            let n = 20_000;
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            let p = estimate_p(&qd, phi(d), n, &mut rng).unwrap();
            let mean = w / d as f64;
            let sigma = (mean * (1.0 - mean) / n as f64).sqrt();
            assert!(p >= mean - 3.0 * sigma, "d={d} w={w}: {p} < {mean}");
        }
    }

    #[test]
    fn normalizing_keeps_argmax_direction() {
        let qd = dist(QueryKind::BasisMixture, 0.5, phi(3), 9, 3, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let argmax = |q: &[f64]| {
            qd.subspace
                .vectors()
                .iter()
                .enumerate()
                .map(|(i, e)| (i, crate::geometry::dot(q, e).unwrap()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        for _ in 0..5000 {
            let q = qd.sample(&mut rng);
            let n = q.scaled(1.0 / q.norm());
            assert_eq!(argmax(&q), argmax(&n));
        }
    }

    #[test]
    fn r_from_p_examples() {
        assert_eq!(r_from_p(1.0).unwrap(), 2.0);
        assert_eq!(r_from_p(0.5).unwrap(), 8.0);
        assert_eq!(r_from_p(0.125).unwrap(), 128.0);
        assert!(matches!(r_from_p(0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rejects_bad_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = Arc::new(make_subspace(4, 2, &mut rng).unwrap());
        assert!(QueryDistribution::new(QueryKind::BasisMixture, 1.5, 0.0, b.clone(), 0.5, 1.0).is_err());
        assert!(QueryDistribution::new(QueryKind::BasisMixture, 0.5, 0.0, b.clone(), 0.0, 1.0).is_err());
        assert!(QueryDistribution::new(QueryKind::BasisMixture, 0.5, 0.0, b.clone(), 0.5, 1.2).is_err());
        let neg = Arc::new(Basis::new(vec![Vector::from(&[-1.0, 0.0][..])]).unwrap());
        assert!(QueryDistribution::new(QueryKind::UniformCoeff, 0.0, 0.0, neg, 0.5, 1.0).is_err());
    }
}
