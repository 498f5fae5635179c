//! Ensemble experiment harness: draw random invertible matrices, flow each
//! one toward its polar factor, track squared distances to the directly
//! computed reference, aggregate percentile curves, and emit CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eig::SpdMatrix;
use crate::error::{Error, Result};
use crate::flow::{integrate_with_reference, FlowOptions};
use crate::geometry::MongeInstance;
use crate::matrix::{determinant, SquareMatrix};
use crate::polar::polar_oracle;
use crate::rng::{derive_stream_seed, SplitMix};
use crate::tol;

/// Base covariance for an experiment: the literal string `"identity"` or an
/// explicit SPD matrix given as rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Sigma0Repr", into = "Sigma0Repr")]
pub enum Sigma0Spec {
    Identity,
    Matrix(SpdMatrix),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Sigma0Repr {
    Keyword(String),
    Rows(Vec<Vec<f64>>),
}

impl TryFrom<Sigma0Repr> for Sigma0Spec {
    type Error = String;

    fn try_from(repr: Sigma0Repr) -> std::result::Result<Self, String> {
        match repr {
            Sigma0Repr::Keyword(word) if word == "identity" => Ok(Sigma0Spec::Identity),
            Sigma0Repr::Keyword(word) => {
                Err(format!("unknown sigma0 keyword {word:?} (only \"identity\" is recognized)"))
            }
            Sigma0Repr::Rows(rows) => {
                let base = SquareMatrix::from_rows(rows).map_err(|e| e.to_string())?;
                Ok(Sigma0Spec::Matrix(SpdMatrix::new(base).map_err(|e| e.to_string())?))
            }
        }
    }
}

impl From<Sigma0Spec> for Sigma0Repr {
    fn from(spec: Sigma0Spec) -> Self {
        match spec {
            Sigma0Spec::Identity => Sigma0Repr::Keyword("identity".to_owned()),
            Sigma0Spec::Matrix(m) => Sigma0Repr::Rows(m.base().to_rows()),
        }
    }
}

impl Sigma0Spec {
    /// Concrete matrix for dimension n.
    pub fn materialize(&self, n: usize) -> Result<SpdMatrix> {
        match self {
            Sigma0Spec::Identity => Ok(SpdMatrix::identity(n)),
            Sigma0Spec::Matrix(m) if m.n() == n => Ok(m.clone()),
            Sigma0Spec::Matrix(m) => Err(Error::DimensionMismatch { expected: n, got: m.n() }),
        }
    }
}

fn default_h() -> f64 {
    0.1
}

fn default_steps() -> usize {
    300
}

fn default_record_every() -> usize {
    1
}

fn default_sigma0() -> Sigma0Spec {
    Sigma0Spec::Identity
}

fn default_invertibility() -> f64 {
    tol::INVERTIBILITY_COEFF
}

/// Full description of one ensemble study. Everything downstream (ensemble,
/// trajectories, CSV bytes) is a pure function of this value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_sigma0")]
    pub sigma0: Sigma0Spec,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub allow_negative_det: bool,
    /// Coefficient c of the scale-aware draw filter |det| > c·(‖A‖_F/√n)ⁿ.
    #[serde(default = "default_invertibility")]
    pub invertibility_threshold: f64,
}

impl ExperimentConfig {
    /// Invariant check; the harness entry points require this to pass.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n < 1 {
            return Err("n must be at least 1".to_owned());
        }
        if self.count < 1 {
            return Err("count must be at least 1".to_owned());
        }
        if self.steps < 1 {
            return Err("steps must be at least 1".to_owned());
        }
        if !(self.h > 0.0) {
            return Err("h must be positive".to_owned());
        }
        if self.record_every < 1 {
            return Err("record_every must be at least 1".to_owned());
        }
        if let Sigma0Spec::Matrix(m) = &self.sigma0 {
            if m.n() != self.n {
                return Err(format!("sigma0 is {}x{0} but n is {}", m.n(), self.n));
            }
        }
        Ok(())
    }

    /// Step indices that get recorded: every record_every-th plus the final
    /// step.
    fn schedule(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = (0..=self.steps).step_by(self.record_every).collect();
        if *ks.last().expect("steps >= 1 so the schedule is nonempty") != self.steps {
            ks.push(self.steps);
        }
        ks
    }
}

/// One recorded point of one trajectory.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SamplePoint {
    pub step: usize,
    pub time: f64,
    /// d²(B_k, P); NaN on failed trajectories.
    pub sq_dist: f64,
}

/// Distance-to-P curve of a single ensemble member. Failed trajectories keep
/// the full sample schedule with NaN distances so that row layouts agree
/// across the ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryCurve {
    pub trajectory_id: usize,
    pub failed: bool,
    pub samples: Vec<SamplePoint>,
}

/// Percentile summary across the ensemble at one recorded step.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AggregateRow {
    pub step: usize,
    pub time: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Everything about a run that is not the curves themselves.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentMetadata {
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    /// Ids whose instance construction, reference, or integration failed.
    pub failed_trajectories: Vec<usize>,
    /// Ids whose sq-dist curve rose by more than 1e-8 after step 5.
    pub non_monotone_trajectories: Vec<usize>,
    pub max_fiber_residual: f64,
    pub max_skew_residual: f64,
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub per_trajectory: Vec<TrajectoryCurve>,
    pub aggregate: Vec<AggregateRow>,
    pub metadata: ExperimentMetadata,
}

/// Draws config.count matrices with i.i.d. standard normal entries from
/// per-slot deterministic streams, discarding draws that fail the
/// invertibility filter (and det ≤ 0 draws unless allow_negative_det).
///
/// Slot i always consumes stream derive_stream_seed(seed, i), so the output
/// is independent of any scheduling of the slots.
///
/// # Errors
///
/// `ExhaustedDraws` when one slot rejects 100 draws in a row, which bounds
/// the total budget by 100·count.
pub fn generate_ensemble(config: &ExperimentConfig) -> Result<Vec<SquareMatrix>> {
    if let Err(reason) = config.validate() {
        panic!("invalid ExperimentConfig: {reason}");
    }
    let n = config.n;
    let mut ensemble = Vec::with_capacity(config.count);
    for slot in 0..config.count {
        let mut rng = SplitMix::new(derive_stream_seed(config.seed, slot as u64));
        let mut accepted = None;
        for _ in 0..tol::DRAW_CAP_PER_SLOT {
            let a = SquareMatrix::from_fn(n, |_, _| rng.standard_normal());
            let det = determinant(&a);
            let threshold = config.invertibility_threshold
                * (a.frobenius_norm() / (n as f64).sqrt()).powi(n as i32);
            if det.abs() <= threshold {
                continue;
            }
            if det <= 0.0 && !config.allow_negative_det {
                continue;
            }
            accepted = Some(a);
            break;
        }
        match accepted {
            Some(a) => ensemble.push(a),
            None => {
                return Err(Error::ExhaustedDraws { slot, attempts: tol::DRAW_CAP_PER_SLOT })
            }
        }
    }
    Ok(ensemble)
}

struct TrajectoryOutcome {
    curve: TrajectoryCurve,
    non_monotone: bool,
    max_fiber_residual: f64,
    max_skew_residual: f64,
}

/// The full schedule with NaN distances, for trajectories that failed.
fn nan_curve(id: usize, schedule: &[usize], h: f64) -> TrajectoryCurve {
    let samples = schedule
        .iter()
        .map(|&k| SamplePoint { step: k, time: k as f64 * h, sq_dist: f64::NAN })
        .collect();
    TrajectoryCurve { trajectory_id: id, failed: true, samples }
}

fn run_trajectory(
    id: usize,
    a: &SquareMatrix,
    sigma0: &SpdMatrix,
    config: &ExperimentConfig,
    schedule: &[usize],
) -> TrajectoryOutcome {
    let failed = |_: Error| TrajectoryOutcome {
        curve: nan_curve(id, schedule, config.h),
        non_monotone: false,
        max_fiber_residual: 0.0,
        max_skew_residual: 0.0,
    };

    let inst = if config.allow_negative_det {
        MongeInstance::with_negative_det(a.clone(), sigma0.clone())
    } else {
        MongeInstance::new(a.clone(), sigma0.clone())
    };
    let inst = match inst {
        Ok(inst) => inst,
        Err(e) => return failed(e),
    };
    let reference = match polar_oracle(&inst) {
        Ok(factors) => factors,
        Err(e) => return failed(e),
    };
    let opts = FlowOptions {
        h: config.h,
        max_steps: config.steps,
        // The full schedule is always integrated: an early stop would
        // desynchronize the row layout across trajectories.
        omega_tol: f64::NEG_INFINITY,
        record_every: config.record_every,
        check_inverse: false,
    };
    let trace = match integrate_with_reference(&inst, &opts, Some(reference.p.base())) {
        Ok(trace) => trace,
        Err(e) => return failed(e),
    };

    let sq_dists = trace.dist_to_ref_sq.expect("a reference was supplied");
    debug_assert_eq!(sq_dists.len(), schedule.len());
    let samples: Vec<SamplePoint> = schedule
        .iter()
        .zip(&sq_dists)
        .map(|(&k, &d)| SamplePoint { step: k, time: k as f64 * config.h, sq_dist: d })
        .collect();

    let mut non_monotone = false;
    for pair in samples.windows(2) {
        if pair[0].step >= 5 && pair[1].sq_dist > pair[0].sq_dist + 1e-8 {
            non_monotone = true;
        }
    }

    TrajectoryOutcome {
        curve: TrajectoryCurve { trajectory_id: id, failed: false, samples },
        non_monotone,
        max_fiber_residual: trace.max_fiber_residual,
        max_skew_residual: trace.max_skew_residual,
    }
}

/// Percentile by linear interpolation between order statistics of a sorted
/// nonempty slice: q = 0.5 is the textbook median.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let position = q * (sorted.len() - 1) as f64;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    let frac = position - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Runs the whole study: ensemble, per-trajectory flows against the direct
/// polar reference, and percentile aggregation. Per-trajectory failures are
/// flagged and excluded from the percentiles instead of aborting the batch.
///
/// # Errors
///
/// `ExhaustedDraws` from ensemble generation and `DimensionMismatch` from an
/// ill-sized sigma0; everything per-trajectory is contained.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if let Err(reason) = config.validate() {
        panic!("invalid ExperimentConfig: {reason}");
    }
    let sigma0 = config.sigma0.materialize(config.n)?;
    let ensemble = generate_ensemble(config)?;
    let schedule = config.schedule();

    let mut per_trajectory = Vec::with_capacity(config.count);
    let mut failed_trajectories = Vec::new();
    let mut non_monotone_trajectories = Vec::new();
    let mut max_fiber_residual = 0.0f64;
    let mut max_skew_residual = 0.0f64;
    for (id, a) in ensemble.iter().enumerate() {
        let outcome = run_trajectory(id, a, &sigma0, config, &schedule);
        if outcome.curve.failed {
            failed_trajectories.push(id);
        }
        if outcome.non_monotone {
            non_monotone_trajectories.push(id);
        }
        max_fiber_residual = max_fiber_residual.max(outcome.max_fiber_residual);
        max_skew_residual = max_skew_residual.max(outcome.max_skew_residual);
        per_trajectory.push(outcome.curve);
    }

    let mut aggregate = Vec::with_capacity(schedule.len());
    for (row, &k) in schedule.iter().enumerate() {
        let mut values: Vec<f64> = per_trajectory
            .iter()
            .filter(|c| !c.failed)
            .map(|c| c.samples[row].sq_dist)
            .collect();
        values.sort_by(|x, y| x.partial_cmp(y).expect("distances are finite"));
        let (median, p10, p90) = if values.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (percentile(&values, 0.5), percentile(&values, 0.1), percentile(&values, 0.9))
        };
        aggregate.push(AggregateRow { step: k, time: k as f64 * config.h, median, p10, p90 });
    }

    Ok(ExperimentReport {
        per_trajectory,
        aggregate,
        metadata: ExperimentMetadata {
            config: config.clone(),
            wall_time_seconds: started.elapsed().as_secs_f64(),
            failed_trajectories,
            non_monotone_trajectories,
            max_fiber_residual,
            max_skew_residual,
        },
    })
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_owned(), source }
}

/// Writes the per-trajectory and aggregate CSV files. Headers are
/// `trajectory_id,step,time,sq_dist` and `step,time,median,p10,p90`; floats
/// print in shortest round-trip form; failed distances print as `NaN`; rows
/// end with `\n`.
///
/// # Errors
///
/// `Io` with the offending path.
pub fn emit_csv(
    report: &ExperimentReport,
    trajectory_path: &Path,
    aggregate_path: &Path,
) -> Result<()> {
    let file = File::create(trajectory_path).map_err(|e| io_error(trajectory_path, e))?;
    let mut out = BufWriter::new(file);
    let write_trajectories = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        out.write_all(b"trajectory_id,step,time,sq_dist\n")?;
        for curve in &report.per_trajectory {
            for s in &curve.samples {
                writeln!(out, "{},{},{},{}", curve.trajectory_id, s.step, s.time, s.sq_dist)?;
            }
        }
        out.flush()
    };
    write_trajectories(&mut out).map_err(|e| io_error(trajectory_path, e))?;

    let file = File::create(aggregate_path).map_err(|e| io_error(aggregate_path, e))?;
    let mut out = BufWriter::new(file);
    let write_aggregate = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        out.write_all(b"step,time,median,p10,p90\n")?;
        for row in &report.aggregate {
            writeln!(out, "{},{},{},{},{}", row.step, row.time, row.median, row.p10, row.p90)?;
        }
        out.flush()
    };
    write_aggregate(&mut out).map_err(|e| io_error(aggregate_path, e))?;
    Ok(())
}
