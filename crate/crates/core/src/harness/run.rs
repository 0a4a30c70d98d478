use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, WStarMode};
use super::record::{CsvSink, KahanSum, RunRecord};
use super::HarnessError;
use crate::geometry::{dot_slices, Basis, Vector};
use crate::learner::{OnlineBisection, StepOutcome};
use crate::protocol::{Database, Mechanism, QueryTicket};
use crate::querygen::{make_subspace, QueryDistribution};

// Independent ChaCha streams derived from one seed.
const STREAM_WORLD: u64 = 0;
const STREAM_SUBSPACE: u64 = 1;
const STREAM_QUERIES: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_EVAL: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One configured world plus the learner playing against it.
///
/// The learner reaches the database only through the mechanism; `w*` and
/// the exact answers are read here, on the experimenter's side, to score it.
pub struct Simulation {
    db: Arc<Database>,
    dist: QueryDistribution,
    learner: OnlineBisection,
    mechanism: Mechanism<ChaCha8Rng>,
    queries: ChaCha8Rng,
    target_coeffs: Vec<f64>,
    t: u64,
    error_sum: KahanSum,
}

impl Simulation {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let noise = cfg.noise_model()?;

        let mut world = stream(cfg.seed, STREAM_WORLD);
        let w_star = match &cfg.w_star {
            WStarMode::RandomUniform01 => {
                Vector::new((0..cfg.ambient_dim).map(|_| world.random::<f64>()).collect())
            }
            WStarMode::Explicit(v) => Vector::new(v.clone()),
        };
        let db = Arc::new(Database::new(w_star)?);

        let mut sub_rng = stream(cfg.subspace_seed.unwrap_or(cfg.seed), STREAM_SUBSPACE);
        let basis: Arc<Basis> = Arc::new(make_subspace(cfg.ambient_dim, cfg.subspace_dim, &mut sub_rng)?);
        let dist = QueryDistribution::new(
            cfg.query.kind,
            cfg.query.mixture_weight,
            cfg.jitter_angle(),
            Arc::clone(&basis),
            cfg.query.scale_lo,
            cfg.query.scale_hi,
        )?;

        let mut learner = OnlineBisection::new(Arc::clone(&basis), cfg.horizon, noise)?;
        if !cfg.shrinking {
            learner = learner.without_shrinking();
        }
        let target_coeffs = basis.project_coeffs(db.w_star())?;
        let mechanism = Mechanism::new(Arc::clone(&db), noise, stream(cfg.seed, STREAM_NOISE));

        Ok(Simulation {
            db,
            dist,
            learner,
            mechanism,
            queries: stream(cfg.seed, STREAM_QUERIES),
            target_coeffs,
            t: 0,
            error_sum: KahanSum::default(),
        })
    }

    pub fn learner(&self) -> &OnlineBisection {
        &self.learner
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn distribution(&self) -> &QueryDistribution {
        &self.dist
    }

    pub fn oracle_calls(&self) -> u64 {
        self.mechanism.calls()
    }

    /// Coefficients of the projection of `w*` onto the query space.
    pub fn target_coeffs(&self) -> &[f64] {
        &self.target_coeffs
    }

    pub fn queries_seen(&self) -> u64 {
        self.t
    }

    pub fn average_error(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.error_sum.value() / self.t as f64
        }
    }

    /// Draws the next query, lets the learner answer it, and scores the answer.
    pub fn step(&mut self) -> Result<(RunRecord, StepOutcome), HarnessError> {
        let q = self.dist.sample(&mut self.queries);
        let phase = self.learner.phase();
        let side = self.learner.side_length();
        let mut ticket = QueryTicket::new(q);
        let out = self.learner.step(&mut ticket, &mut self.mechanism)?;
        let exact = self.db.exact_answer(ticket.query())?;
        let error = (out.answer - exact).abs();
        self.t += 1;
        self.error_sum.add(error);
        let record = RunRecord {
            t: self.t,
            error,
            avg_error_so_far: self.average_error(),
            phase,
            side_length: side,
            oracle_called: out.oracle_bit.is_some(),
            matched_dim: out.matched_dim.map_or(-1, |i| i as i64),
        };
        Ok((record, out))
    }

    pub fn summary(&self) -> RunSummary {
        let hc = self.learner.hypercube();
        RunSummary {
            horizon: self.learner.horizon(),
            queries: self.t,
            avg_error: self.average_error(),
            final_side: self.learner.side_length(),
            phases: self.learner.phase(),
            oracle_calls: self.mechanism.calls(),
            contained: hc.contains(&self.target_coeffs),
            converged: self.learner.is_converged(),
            final_center: hc.center_coeffs(),
            target_coeffs: self.target_coeffs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub horizon: u64,
    pub queries: u64,
    pub avg_error: f64,
    pub final_side: f64,
    pub phases: u32,
    pub oracle_calls: u64,
    /// Whether the projection of `w*` lies in the final box.
    pub contained: bool,
    pub converged: bool,
    pub final_center: Vec<f64>,
    pub target_coeffs: Vec<f64>,
}

/// Runs the full stream, handing each record to `on_record`.
pub fn run_online_with<F>(cfg: &ExperimentConfig, mut on_record: F) -> Result<RunSummary, HarnessError>
where
    F: FnMut(&RunRecord) -> Result<(), HarnessError>,
{
    let mut sim = Simulation::new(cfg)?;
    for _ in 0..cfg.horizon {
        let (record, _) = sim.step()?;
        on_record(&record)?;
    }
    Ok(sim.summary())
}

/// Runs the full stream, writing the per-query CSV to `out` when given.
pub fn run_online(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunSummary, HarnessError> {
    match out {
        None => run_online_with(cfg, |_| Ok(())),
        Some(path) => {
            let mut sink = CsvSink::new(BufWriter::new(File::create(path)?))?;
            let summary = run_online_with(cfg, |r| Ok(sink.push(r)?))?;
            sink.finish()?;
            Ok(summary)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub mean_abs_error: f64,
    /// `sqrt(D) ln T / sqrt(T)`
    pub bound: f64,
    pub bound_satisfied: bool,
    pub final_side: f64,
    pub converged: bool,
    /// Oracle calls made while scoring the frozen hypothesis; always zero.
    pub eval_oracle_calls: u64,
    pub online: RunSummary,
}

/// Learns online for `T` queries, then freezes the box center and scores it
/// on `eval_M` fresh queries without touching the oracle.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchReport, HarnessError> {
    let mut sim = Simulation::new(cfg)?;
    for _ in 0..cfg.horizon {
        sim.step()?;
    }
    let online = sim.summary();
    let calls_before = sim.oracle_calls();

    let w_final = sim.learner().hypercube().representative();
    let mut eval = stream(cfg.seed, STREAM_EVAL);
    let mut sum = KahanSum::default();
    for _ in 0..cfg.eval_m {
        let q = sim.distribution().sample(&mut eval);
        let exact = sim.database().exact_answer(&q)?;
        sum.add((dot_slices(&w_final, &q) - exact).abs());
    }
    let mean_abs_error = sum.value() / cfg.eval_m as f64;
    let t = cfg.horizon as f64;
    let bound = (cfg.ambient_dim as f64).sqrt() * t.ln() / t.sqrt();

    Ok(BatchReport {
        mean_abs_error,
        bound,
        bound_satisfied: mean_abs_error <= bound,
        final_side: online.final_side,
        converged: online.converged,
        eval_oracle_calls: sim.oracle_calls() - calls_before,
        online,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub horizon: u64,
    pub avg_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `ln avg_error` against `ln T`.
    pub slope: f64,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn ln_ln_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Repeats the online run for each horizon (same seed) and fits the
/// log-log slope of the average error.
pub fn run_scaling(template: &ExperimentConfig, horizons: &[u64]) -> Result<ScalingReport, HarnessError> {
    if horizons.len() < 3 {
        return Err(HarnessError::Invalid {
            key: "t-list".into(),
            message: format!("need at least 3 horizons, got {}", horizons.len()),
        });
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Invalid {
            key: "t-list".into(),
            message: "horizons must be strictly increasing".into(),
        });
    }
    let mut points = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let cfg = ExperimentConfig { horizon, ..template.clone() };
        let s = run_online(&cfg, None)?;
        points.push(ScalingPoint { horizon, avg_error: s.avg_error });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.horizon as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.avg_error).collect();
    Ok(ScalingReport { slope: ln_ln_slope(&xs, &ys), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::record::{check_prefix_means, read_records};

    fn small(horizon: u64) -> ExperimentConfig {
        ExperimentConfig {
            ambient_dim: 3,
            subspace_dim: 1,
            horizon,
            seed: 17,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn ten_query_run_bookkeeping() {
        let mut cfg = small(10);
        cfg.noise.u = 1e-9;
        let mut rows = Vec::new();
        let s = run_online_with(&cfg, |r| {
            rows.push(*r);
            Ok(())
        })
        .unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
        assert_eq!(check_prefix_means(&rows, 1e-12), None);
        let naive = rows.iter().map(|r| r.error).sum::<f64>() / 10.0;
        assert!((naive - s.avg_error).abs() < 1e-12);
        assert_eq!(s.oracle_calls, rows.iter().filter(|r| r.oracle_called).count() as u64);
    }

    #[test]
    fn csv_output_reloads_consistently() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let s = run_online(&small(5_000), Some(&path)).unwrap();
        let rows = read_records(std::io::BufReader::new(File::open(&path).unwrap())).unwrap();
        assert_eq!(rows.len(), 5_000);
        assert_eq!(check_prefix_means(&rows, 1e-12), None);
        assert_eq!(s.oracle_calls, rows.iter().filter(|r| r.oracle_called).count() as u64);
        assert_eq!(rows.last().unwrap().avg_error_so_far, s.avg_error);
    }

    #[test]
    fn batch_with_centered_target_is_near_exact() {
        // e is a multiple of (1,1,1)/sqrt 3 on a 1-d subspace with D = d = 1
        // would be trivial; instead use D = 1 where the box starts at [-1, 1]
        // and w* = 0 sits on its center.
        let cfg = ExperimentConfig {
            ambient_dim: 1,
            subspace_dim: 1,
            horizon: 2,
            eval_m: 100,
            w_star: WStarMode::Explicit(vec![0.0]),
            ..ExperimentConfig::default()
        };
        let report = run_batch(&cfg).unwrap();
        assert_eq!(report.mean_abs_error, 0.0);
        assert_eq!(report.eval_oracle_calls, 0);
    }

    #[test]
    fn unconverged_batch_is_reported_honestly() {
        let report = run_batch(&ExperimentConfig { horizon: 50, eval_m: 10, ..small(50) }).unwrap();
        assert!(!report.converged);
        let t = 50f64;
        assert_eq!(report.bound, 3f64.sqrt() * t.ln() / t.sqrt());
        assert_eq!(report.bound_satisfied, report.mean_abs_error <= report.bound);
    }

    #[test]
    fn slope_fit() {
        let xs = [10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((ln_ln_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_rejects_bad_lists() {
        let cfg = small(10);
        assert!(run_scaling(&cfg, &[10, 100]).is_err());
        assert!(run_scaling(&cfg, &[10, 100, 100]).is_err());
    }

    #[test]
    fn scaling_is_reproducible() {
        let cfg = small(10);
        let a = run_scaling(&cfg, &[1_000, 3_000, 9_000]).unwrap();
        let b = run_scaling(&cfg, &[1_000, 3_000, 9_000]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subspace_seed_decouples_basis_from_run_seed() {
        let mut a = small(10);
        a.subspace_seed = Some(5);
        let mut b = a.clone();
        b.seed = 99;
        let sa = Simulation::new(&a).unwrap();
        let sb = Simulation::new(&b).unwrap();
        assert_eq!(sa.learner().basis(), sb.learner().basis());
    }
}
