//! Independent checkers for the supporting lemmas: brute-force support over
//! explicit corners, Monte Carlo binomial tails, cut-box extents, and a
//! replay audit of the phase schedule.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{dot_slices, gram_schmidt, Basis, Vector};
use crate::harness::{ExperimentConfig, HarnessError, Simulation};
use crate::hypercube::{Hypercube, Interval};
use crate::learner::{max_phases, phi, ALPHA};

const MAX_BRUTE_FORCE_DIM: usize = 20;
const MAX_CUT_DIM: usize = 10;
/// Slack, in standard errors, for every Monte Carlo comparison.
pub const SE_SLACK: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheckReport {
    pub lemma: &'static str,
    pub trials: u64,
    pub worst: f64,
    pub bound: f64,
    /// Number of trials (or checks) that exceeded the bound plus slack.
    pub violations: u64,
    pub pass: bool,
    pub params: Vec<(&'static str, f64)>,
}

impl fmt::Display for LemmaCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<18} trials={:<7} worst={:.6e} bound={:.6e} violations={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.lemma,
            self.trials,
            self.worst,
            self.bound,
            self.violations
        )?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Maximum of `v . q` over the box, by reconstructing all `2^d` corners in
/// the ambient space.
pub fn brute_force_support(hc: &Hypercube, q: &[f64]) -> Result<f64> {
    let d = hc.dim();
    if d > MAX_BRUTE_FORCE_DIM {
        return Err(Error::SizeGuard(format!("brute force over 2^{d} corners (limit d = {MAX_BRUTE_FORCE_DIM})")));
    }
    let basis = hc.basis();
    if q.len() != basis.ambient() {
        return Err(Error::DimensionMismatch { expected: basis.ambient(), got: q.len() });
    }
    let mut best = f64::NEG_INFINITY;
    let mut coeffs = vec![0.0; d];
    for mask in 0u32..(1 << d) {
        for (i, (c, iv)) in coeffs.iter_mut().zip(hc.intervals()).enumerate() {
            *c = if mask >> i & 1 == 1 { iv.hi } else { iv.lo };
        }
        let corner = basis.reconstruct(&coeffs)?;
        best = best.max(dot_slices(&corner, q));
    }
    Ok(best)
}

fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    Vector::new((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

fn random_basis<R: Rng + ?Sized>(ambient: usize, d: usize, rng: &mut R) -> Basis {
    loop {
        let raw: Vec<Vector> = (0..d).map(|_| gaussian_vector(ambient, rng)).collect();
        if let Ok(b) = gram_schmidt(&raw) {
            return b;
        }
    }
}

/// Compares [`Hypercube::support`] with [`brute_force_support`] on random
/// boxes over random `d`-dimensional subspaces. The error is relative to
/// `max(|brute|, 1)` so that near-zero optima are not over-penalised.
pub fn check_support_equivalence<R: Rng + ?Sized>(d: usize, instances: u64, rng: &mut R) -> Result<LemmaCheckReport> {
    const TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..instances {
        let ambient = d + rng.random_range(0..=4);
        let basis = Arc::new(random_basis(ambient, d, rng));
        let side = rng.random_range(1e-3..4.0);
        let intervals = (0..d)
            .map(|_| {
                let lo = rng.random_range(-2.0..2.0);
                Interval::new(lo, lo + side)
            })
            .collect::<Result<Vec<_>>>()?;
        let hc = Hypercube::from_intervals(intervals, basis)?;
        let q: Vec<f64> = (0..ambient).map(|_| rng.random::<f64>()).collect();
        let fast = hc.support(&q)?;
        let slow = brute_force_support(&hc, &q)?;
        let err = (fast - slow).abs() / slow.abs().max(1.0);
        worst = worst.max(err);
        if err > TOL {
            violations += 1;
        }
    }
    Ok(LemmaCheckReport {
        lemma: "support",
        trials: instances,
        worst,
        bound: TOL,
        violations,
        pass: violations == 0,
        params: vec![("d", d as f64)],
    })
}

/// Monte Carlo check of the two binomial tails
/// `P(Z >= m p1 + m dp/2)` with `Z ~ Bin(m, p1)` and
/// `P(W <  m p1 + m dp/2)` with `W ~ Bin(m, p1 + dp)`
/// against `exp(-m dp^2 / 10)`.
pub fn check_chernoff<R: Rng + ?Sized>(m: u64, p1: f64, dp: f64, trials: u64, rng: &mut R) -> Result<LemmaCheckReport> {
    if m == 0 || trials == 0 || !(0.0..=1.0).contains(&p1) || dp < 0.0 || p1 + dp > 1.0 {
        return Err(Error::Usage(format!("check_chernoff: m={m}, p1={p1}, dp={dp}, trials={trials}")));
    }
    let mf = m as f64;
    let cut = mf * p1 + mf * dp / 2.0;
    let bound = (-mf * dp * dp / 10.0).exp();
    let lower = Binomial::new(m, p1).map_err(|e| Error::Usage(e.to_string()))?;
    let upper = Binomial::new(m, p1 + dp).map_err(|e| Error::Usage(e.to_string()))?;

    let (mut z_hits, mut w_hits) = (0u64, 0u64);
    for _ in 0..trials {
        if lower.sample(rng) as f64 >= cut {
            z_hits += 1;
        }
        if (upper.sample(rng) as f64) < cut {
            w_hits += 1;
        }
    }
    let n = trials as f64;
    let (z_tail, w_tail) = (z_hits as f64 / n, w_hits as f64 / n);
    let b = bound.min(1.0);
    let allowed = bound + SE_SLACK * (b * (1.0 - b) / n).sqrt();
    let violations = u64::from(z_tail > allowed) + u64::from(w_tail > allowed);
    Ok(LemmaCheckReport {
        lemma: "chernoff",
        trials,
        worst: z_tail.max(w_tail),
        bound,
        violations,
        pass: violations == 0,
        params: vec![("m", mf), ("p1", p1), ("dp", dp), ("upper_tail", z_tail), ("lower_tail", w_tail)],
    })
}

/// `8 sin(theta/2) sqrt(d)`.
pub fn cut_epsilon(d: usize, theta: f64) -> f64 {
    8.0 * (theta / 2.0).sin() * (d as f64).sqrt()
}

/// Extents of `a . f` over the two parts of the unit cube `[0,1]^d` cut by
/// the hyperplane `b . f = m + beta (M - m)`, where `m`, `M` are the min and
/// max of `b . f` over the cube.
///
/// Extrema of a linear functional over a cube intersected with a halfspace
/// sit at cube corners or where cube edges cross the hyperplane, so both
/// sets of candidates are enumerated. Returns `(left, right)` where left is
/// the `b . f <= cut` part.
pub fn cut_extents(a: &[f64], b: &[f64], beta: f64) -> (f64, f64) {
    let d = a.len();
    let corner = |mask: u32, f: &dyn Fn(usize) -> f64| -> f64 {
        (0..d).filter(|i| mask >> i & 1 == 1).map(f).sum()
    };
    let values: Vec<(f64, f64)> = (0u32..1 << d)
        .map(|mask| (corner(mask, &|i| a[i]), corner(mask, &|i| b[i])))
        .collect();
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let cut = lo + beta * (hi - lo);

    let mut left = (f64::INFINITY, f64::NEG_INFINITY);
    let mut right = (f64::INFINITY, f64::NEG_INFINITY);
    let take = |range: &mut (f64, f64), x: f64| {
        range.0 = range.0.min(x);
        range.1 = range.1.max(x);
    };
    for &(av, bv) in &values {
        if bv <= cut {
            take(&mut left, av);
        } else {
            take(&mut right, av);
        }
    }
    for (mask, &(av, bv)) in values.iter().enumerate() {
        for j in 0..d {
            if mask >> j & 1 == 1 || b[j] == 0.0 {
                continue;
            }
            let t = (cut - bv) / b[j];
            if (0.0..=1.0).contains(&t) {
                let x = av + t * a[j];
                take(&mut left, x);
                take(&mut right, x);
            }
        }
    }
    let extent = |r: (f64, f64)| if r.1 >= r.0 { r.1 - r.0 } else { 0.0 };
    (extent(left), extent(right))
}

/// Random trials of the cut lemma: an orthogonal frame `v^1..v^d` of length
/// `L` in `R^{d+1}`, `e = v^1 / L`, and a unit `z` with `z . e >= cos theta`.
/// Reports the worst excess of an extent over `L beta` (left) or
/// `L (1 - beta)` (right) against the bound `L eps`.
pub fn check_cut_lemma<R: Rng + ?Sized>(
    d: usize,
    side: f64,
    theta: f64,
    beta: f64,
    trials: u64,
    rng: &mut R,
) -> Result<LemmaCheckReport> {
    if d == 0 || d > MAX_CUT_DIM {
        return Err(Error::SizeGuard(format!("cut lemma enumeration at d = {d} (limit {MAX_CUT_DIM})")));
    }
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) || !(beta > 0.0 && beta < 1.0) || !(side > 0.0) {
        return Err(Error::Usage(format!("check_cut_lemma: theta={theta}, beta={beta}, L={side}")));
    }
    const TOL: f64 = 1e-9;
    let eps = cut_epsilon(d, theta);
    let bound = side * eps;
    let ambient = d + 1;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let frame = random_basis(ambient, d, rng);
        let e = frame.get(0).clone();
        let mut r = gaussian_vector(ambient, rng);
        let k = dot_slices(&r, &e);
        r.axpy(-k, &e);
        let r = r.scaled(1.0 / r.norm());
        let angle = theta * rng.random::<f64>();
        let mut z = e.scaled(angle.cos());
        z.axpy(angle.sin(), &r);

        let v: Vec<Vector> = frame.vectors().iter().map(|u| u.scaled(side)).collect();
        let a: Vec<f64> = v.iter().map(|vi| dot_slices(&e, vi)).collect();
        let b: Vec<f64> = v.iter().map(|vi| dot_slices(&z, vi)).collect();
        let (left, right) = cut_extents(&a, &b, beta);
        let excess = (left - side * beta).max(right - side * (1.0 - beta));
        worst = worst.max(excess);
        if excess > bound + TOL {
            violations += 1;
        }
    }
    Ok(LemmaCheckReport {
        lemma: "cut",
        trials,
        worst,
        bound,
        violations,
        pass: violations == 0,
        params: vec![("d", d as f64), ("L", side), ("theta", theta), ("beta", beta), ("eps", eps)],
    })
}

/// Replays a run and audits the phase schedule: `N_crit` constant within a
/// phase, `delta_p` matching its closed form at side `2 sqrt(D) (3/4)^i`,
/// consecutive side ratios of 3/4, and the phase count within its bound.
pub fn check_ncrit_schedule(cfg: &ExperimentConfig) -> std::result::Result<LemmaCheckReport, HarnessError> {
    const TOL: f64 = 1e-9;
    let mut sim = Simulation::new(cfg)?;
    let ambient = cfg.ambient_dim;
    let noise = cfg.noise_model()?;
    let initial_side = 2.0 * (ambient as f64).sqrt();

    let mut worst: f64 = 0.0;
    let mut violations = 0u64;
    let mut audit = |dev: f64| {
        worst = worst.max(dev);
        if !(dev <= TOL) {
            violations += 1;
        }
    };

    let mut phase = sim.learner().phase();
    let mut phase_n_crit = sim.learner().n_crit();
    let mut side = sim.learner().side_length();
    audit((side - initial_side).abs());
    for _ in 0..cfg.horizon {
        sim.step()?;
        let l = sim.learner();
        if l.phase() == phase {
            audit((l.n_crit() - phase_n_crit).abs() / phase_n_crit);
            continue;
        }
        phase = l.phase();
        phase_n_crit = l.n_crit();
        let new_side = l.side_length();
        audit((new_side / side - ALPHA).abs());
        side = new_side;
        let closed = noise.delta_p(initial_side * ALPHA.powi(phase as i32), ambient);
        audit((l.delta_p() - closed).abs());
    }

    let phases = sim.learner().phase();
    let limit = max_phases(ambient, cfg.subspace_dim, cfg.horizon);
    if phases > limit {
        violations += 1;
    }
    Ok(LemmaCheckReport {
        lemma: "ncrit-schedule",
        trials: cfg.horizon,
        worst,
        bound: TOL,
        violations,
        pass: violations == 0,
        params: vec![
            ("D", ambient as f64),
            ("d", cfg.subspace_dim as f64),
            ("T", cfg.horizon as f64),
            ("phases", phases as f64),
            ("max_phases", limit as f64),
        ],
    })
}

/// The full battery behind `verify-lemmas`.
pub fn run_all<R: Rng + ?Sized>(rng: &mut R) -> std::result::Result<Vec<LemmaCheckReport>, HarnessError> {
    let mut out = Vec::new();
    for d in 1..=12 {
        out.push(check_support_equivalence(d, 1000, rng)?);
    }
    for m in [100, 1_000, 10_000] {
        for dp in [0.05, 0.1, 0.2, 0.5] {
            for p1 in [0.1, 0.3] {
                out.push(check_chernoff(m, p1, dp, 100_000, rng)?);
            }
        }
    }
    for d in [1, 2, 4, 8] {
        for theta in [phi(d), 2.0 * phi(d), 0.3] {
            for beta in CUT_BETAS {
                out.push(check_cut_lemma(d, 1.0, theta, beta, 10_000, rng)?);
            }
        }
    }
    out.push(check_ncrit_schedule(&schedule_audit_config())?);
    Ok(out)
}

/// Cut fractions exercised by [`run_all`]; the learner itself uses 1/2.
pub const CUT_BETAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Tiny-noise run used for the schedule audit.
pub fn schedule_audit_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        ambient_dim: 4,
        subspace_dim: 1,
        horizon: 100_000,
        ..ExperimentConfig::default()
    };
    cfg.noise.u = 1e-9;
    cfg
}
