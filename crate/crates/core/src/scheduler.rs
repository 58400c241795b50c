//! The SmartFill scheduler: optimal bandwidth schedules for weighted
//! completion-time minimization.
//!
//! An instance has `M` jobs with sizes `x_1 >= ... >= x_M` and weights
//! `w_1 <= ... <= w_M` sharing bandwidth `B` under one concave speedup
//! function. The optimal policy completes jobs smallest-first, holds each
//! job's rate constant between consecutive completions, and uses the full
//! bandwidth at all times. A schedule is therefore an upper-triangular
//! matrix `theta_i^j`: the rate of job `i` during interval `j`, where
//! interval `j` ends at the completion of job `j` (interval `M` is first in
//! time, interval 1 last).
//!
//! SmartFill builds the matrix one stage at a time, from the job that
//! completes last (job 1) outward. Stage 1 is forced: alone in the final
//! interval, job 1 takes the whole bandwidth, with objective coefficient
//! `a_1 = w_1/s(B)` and ratio constant `c_1 = 1`. Given stage `k`, the
//! optimal objective for jobs `1..k` is `sum a_i·x_i` over any remaining
//! sizes, so stage `k+1` only needs the allocation `mu` granted to job `k+1`
//! during the interval in which it completes. Splitting the leftover
//! `B - mu` among jobs `1..k` is the water-filling problem of [`crate::gwf`]
//! with constants `c_1..c_k`, and the best `mu` minimizes the marginal cost
//! of a unit of job-(k+1) work,
//!
//! ```text
//! q(mu) = (w_1 + ... + w_(k+1) - sum_i a_i·s(alloc_i(B - mu))) / s(mu),
//! ```
//!
//! which becomes the next coefficient `a_(k+1) = q(mu*)`. The next ratio
//! constant extends the chain through the marginal rates observed in the new
//! column: `c_(k+1) = c_k · s'(mu*) / s'(theta_k)`.
//!
//! `q` is scanned on a 1024-point grid over `(0, B]` and the best bracket is
//! refined by golden section; the grid guards against `q` failing to be
//! unimodal, and `mu = B` (starve every longer job) is always a candidate.

use std::fmt;

use crate::gwf::{gwf_solve, Bottles, CapInstance, GwfError};
use crate::speedup::{SpeedupError, SpeedupFunction};

/// Points in the coarse scan for the stage allocation.
const MU_GRID: usize = 1024;
/// Golden-section refinement width, relative to the bandwidth.
const MU_REFINE_TOL: f64 = 1e-10;
/// Relative perturbation applied to tied job sizes.
const TIE_EPSILON: f64 = 1e-12;
/// Column sums must match the bandwidth to this relative tolerance.
const COLUMN_SUM_TOL: f64 = 1e-9;

/// One job: how much work it needs and how much its completion time costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub size: f64,
    pub weight: f64,
}

/// A validated scheduling instance.
///
/// Jobs are normalized at construction: sorted by size descending, weight
/// ascending, input position as the final tie break. After sorting, weights
/// must be non-decreasing. Exact size ties are split apart by a relative
/// `1e-12` perturbation so completion times are strictly ordered; the
/// pre-perturbation sizes are kept for reporting.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    bandwidth: f64,
    sizes: Vec<f64>,
    weights: Vec<f64>,
    reported_sizes: Vec<f64>,
    speedup: SpeedupFunction,
    reordered: bool,
    perturbed: bool,
}

impl ProblemInstance {
    pub fn new(
        bandwidth: f64,
        jobs: Vec<Job>,
        speedup: SpeedupFunction,
    ) -> Result<Self, SchedulerError> {
        if jobs.is_empty() {
            return Err(SchedulerError::InvalidInstance(
                "at least one job required".into(),
            ));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(SchedulerError::InvalidInstance(format!(
                "bandwidth {bandwidth} must be positive"
            )));
        }
        if (speedup.domain_max() - bandwidth).abs() > 1e-12 * bandwidth {
            return Err(SchedulerError::InvalidInstance(format!(
                "speedup domain {} does not match bandwidth {bandwidth}",
                speedup.domain_max()
            )));
        }
        for (i, job) in jobs.iter().enumerate() {
            if !(job.size > 0.0 && job.size.is_finite()) {
                return Err(SchedulerError::InvalidInstance(format!(
                    "job {i} size {} must be positive",
                    job.size
                )));
            }
            if !(job.weight > 0.0 && job.weight.is_finite()) {
                return Err(SchedulerError::InvalidInstance(format!(
                    "job {i} weight {} must be positive",
                    job.weight
                )));
            }
        }

        let mut order: Vec<usize> = (0..jobs.len()).collect();
        order.sort_by(|&a, &b| {
            jobs[b]
                .size
                .partial_cmp(&jobs[a].size)
                .unwrap()
                .then(jobs[a].weight.partial_cmp(&jobs[b].weight).unwrap())
                .then(a.cmp(&b))
        });
        let reordered = order.iter().enumerate().any(|(pos, &idx)| pos != idx);

        let reported_sizes: Vec<f64> = order.iter().map(|&i| jobs[i].size).collect();
        let weights: Vec<f64> = order.iter().map(|&i| jobs[i].weight).collect();
        for i in 0..weights.len() - 1 {
            if weights[i] > weights[i + 1] {
                return Err(SchedulerError::InvalidInstance(format!(
                    "weights must be non-decreasing once sizes are sorted: w[{i}] = {} > w[{}] = {}",
                    weights[i],
                    i + 1,
                    weights[i + 1]
                )));
            }
        }

        // Split exact ties: within a run of equal sizes, earlier jobs get a
        // slightly larger size so completion times stay strictly ordered.
        let mut sizes = reported_sizes.clone();
        let mut perturbed = false;
        let mut run_start = 0;
        for i in 1..=sizes.len() {
            if i == sizes.len() || sizes[i] != sizes[run_start] {
                let run = i - run_start;
                if run > 1 {
                    perturbed = true;
                    for (offset, item) in sizes[run_start..i].iter_mut().enumerate() {
                        *item *= 1.0 + (run - 1 - offset) as f64 * TIE_EPSILON;
                    }
                }
                run_start = i;
            }
        }
        for i in 0..sizes.len() - 1 {
            if sizes[i] <= sizes[i + 1] {
                return Err(SchedulerError::InvalidInstance(format!(
                    "sizes {} and {} are too close to order strictly",
                    sizes[i],
                    sizes[i + 1]
                )));
            }
        }

        Ok(ProblemInstance {
            bandwidth,
            sizes,
            weights,
            reported_sizes,
            speedup,
            reordered,
            perturbed,
        })
    }

    pub fn job_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Solver sizes: strictly decreasing, ties perturbed.
    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Sizes as given (sorted, without the tie perturbation).
    pub fn reported_sizes(&self) -> &[f64] {
        &self.reported_sizes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn speedup(&self) -> &SpeedupFunction {
        &self.speedup
    }

    /// True when normalization changed the input job order.
    pub fn was_reordered(&self) -> bool {
        self.reordered
    }

    /// True when tied sizes were perturbed.
    pub fn was_perturbed(&self) -> bool {
        self.perturbed
    }

    /// Same jobs and bandwidth, different speedup function.
    pub fn with_speedup(&self, speedup: SpeedupFunction) -> Result<Self, SchedulerError> {
        let jobs = self
            .reported_sizes
            .iter()
            .zip(&self.weights)
            .map(|(&size, &weight)| Job { size, weight })
            .collect();
        ProblemInstance::new(self.bandwidth, jobs, speedup)
    }
}

/// Row-major `M x M` allocation-rate matrix; entry `(i, j)` is the rate of
/// job `i` during interval `j` (both zero-based). Interval `j` spans the
/// time between the completions of jobs `j + 1` and `j`, with interval
/// `M - 1` starting at time zero. Entries below the diagonal are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl ScheduleMatrix {
    pub fn zero(m: usize) -> Self {
        ScheduleMatrix {
            m,
            entries: vec![0.0; m * m],
        }
    }

    /// Builds from per-interval columns; column `j` holds rates for jobs
    /// `0..=j`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let m = columns.len();
        let mut matrix = ScheduleMatrix::zero(m);
        for (j, column) in columns.iter().enumerate() {
            assert_eq!(column.len(), j + 1, "column {j} must cover jobs 0..={j}");
            for (i, &rate) in column.iter().enumerate() {
                matrix.set(i, j, rate);
            }
        }
        matrix
    }

    pub fn job_count(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.m + j] = value;
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.m).map(|i| self.get(i, j)).sum()
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.m).all(|i| (0..i).all(|j| self.get(i, j) == 0.0))
    }

    /// Every column must sum to the bandwidth within `1e-9·B`.
    pub fn fully_utilizes(&self, bandwidth: f64) -> bool {
        (0..self.m).all(|j| (self.column_sum(j) - bandwidth).abs() <= COLUMN_SUM_TOL * bandwidth)
    }
}

/// Durations, completion times, and objective realized from a matrix.
#[derive(Debug, Clone)]
pub struct Realization {
    /// `durations[j]` is the length of interval `j`.
    pub durations: Vec<f64>,
    /// Strictly decreasing in the job index.
    pub completion_times: Vec<f64>,
    pub objective: f64,
}

/// A solved schedule.
///
/// `coefficients` (`a_i`, objective sensitivity per unit of size) and
/// `cdr_constants` (`c_i`, marginal-rate ratio constants) are produced by the
/// stagewise solver; schedules realized from externally supplied matrices
/// carry `None`.
#[derive(Debug, Clone)]
pub struct ScheduleResult {
    pub matrix: ScheduleMatrix,
    pub durations: Vec<f64>,
    pub completion_times: Vec<f64>,
    pub objective: f64,
    pub coefficients: Option<Vec<f64>>,
    pub cdr_constants: Option<Vec<f64>>,
}

#[derive(Debug)]
pub enum SchedulerError {
    InvalidInstance(String),
    /// The inner objective was non-finite on the whole scan grid.
    OptimizerFailure(String),
    /// A realized duration came out non-positive.
    InfeasibleMatrix {
        interval: usize,
        duration: f64,
    },
    /// Result lacks solver coefficients.
    MissingCoefficients,
    Gwf(GwfError),
    Speedup(SpeedupError),
}

impl fmt::Display for SchedulerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerError::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            SchedulerError::OptimizerFailure(msg) => write!(f, "stage optimizer failed: {msg}"),
            SchedulerError::InfeasibleMatrix { interval, duration } => {
                write!(
                    f,
                    "matrix infeasible: interval {interval} has duration {duration}"
                )
            }
            SchedulerError::MissingCoefficients => {
                write!(f, "schedule carries no solver coefficients")
            }
            SchedulerError::Gwf(e) => write!(f, "{e}"),
            SchedulerError::Speedup(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SchedulerError {}

impl From<GwfError> for SchedulerError {
    fn from(e: GwfError) -> Self {
        SchedulerError::Gwf(e)
    }
}

impl From<SpeedupError> for SchedulerError {
    fn from(e: SpeedupError) -> Self {
        SchedulerError::Speedup(e)
    }
}

/// Chosen stage allocation and the objective coefficient it induces.
#[derive(Debug, Clone, Copy)]
pub struct StageChoice {
    /// Rate granted to the stage's newly added job in its own interval.
    pub mu: f64,
    /// `q(mu)`: the marginal objective cost per unit of that job's size.
    pub coefficient: f64,
}

/// Splits `budget` among the first `constants.len()` jobs, reusing
/// precomputed bottles on the closed-form path.
fn stage_allocations(
    f: &SpeedupFunction,
    bottles: Option<&Bottles>,
    constants: &[f64],
    budget: f64,
) -> Result<Vec<f64>, SchedulerError> {
    if budget <= 0.0 {
        return Ok(vec![0.0; constants.len()]);
    }
    if constants.len() == 1 {
        return Ok(vec![budget]);
    }
    if let Some(bottles) = bottles {
        return Ok(bottles.solve(budget).1);
    }
    let cap = CapInstance::new(budget, constants.to_vec())?;
    Ok(gwf_solve(f, &cap)?.allocations)
}

/// Chooses the allocation for the job added at stage `k + 1` (zero-based
/// `stage = k`), minimizing the stage quotient `q` over `mu in (0, B]`.
pub fn optimize_mu(
    inst: &ProblemInstance,
    stage: usize,
    constants: &[f64],
    coefficients: &[f64],
) -> Result<StageChoice, SchedulerError> {
    assert!(
        stage >= 1 && stage < inst.job_count(),
        "stage must be in 1..M"
    );
    assert_eq!(constants.len(), stage);
    assert_eq!(coefficients.len(), stage);

    let f = inst.speedup();
    let b = inst.bandwidth();
    let weight_sum: f64 = inst.weights()[..=stage].iter().sum();
    let bottles = f
        .regular_descriptor()
        .map(|desc| Bottles::new(&desc, constants));

    let quotient = |mu: f64| -> Result<f64, SchedulerError> {
        let rest = stage_allocations(f, bottles.as_ref(), constants, b - mu)?;
        let consumed: f64 = rest
            .iter()
            .zip(coefficients)
            .map(|(&theta, &a)| a * f.eval_raw(theta))
            .sum();
        Ok((weight_sum - consumed) / f.eval_raw(mu))
    };

    let mut best_index = 0;
    let mut best_value = f64::INFINITY;
    for i in 1..=MU_GRID {
        let mu = b * i as f64 / MU_GRID as f64;
        let value = quotient(mu)?;
        if value < best_value {
            best_value = value;
            best_index = i;
        }
    }
    if !best_value.is_finite() {
        return Err(SchedulerError::OptimizerFailure(
            "stage quotient non-finite over the entire allocation grid".into(),
        ));
    }

    // Golden-section refinement on the bracket around the best grid point.
    let step = b / MU_GRID as f64;
    let mut lo = if best_index > 1 {
        step * (best_index - 1) as f64
    } else {
        b * 1e-9
    };
    let mut hi = (step * (best_index + 1) as f64).min(b);
    let ratio = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = quotient(x1)?;
    let mut f2 = quotient(x2)?;
    while hi - lo > MU_REFINE_TOL * b {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = quotient(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = quotient(x2)?;
        }
    }
    let refined = 0.5 * (lo + hi);
    let refined_value = quotient(refined)?;

    let (mu, coefficient) = if refined_value < best_value {
        (refined, refined_value)
    } else {
        (step * best_index as f64, best_value)
    };
    Ok(StageChoice { mu, coefficient })
}

/// Runs the stagewise solver and realizes the optimal schedule.
pub fn smartfill(inst: &ProblemInstance) -> Result<ScheduleResult, SchedulerError> {
    let f = inst.speedup();
    let b = inst.bandwidth();
    let m = inst.job_count();

    let mut constants = vec![1.0];
    let mut coefficients = vec![inst.weights()[0] / f.eval_raw(b)];
    let mut columns: Vec<Vec<f64>> = vec![vec![b]];

    for stage in 1..m {
        let choice = optimize_mu(inst, stage, &constants, &coefficients)?;
        let bottles = f
            .regular_descriptor()
            .map(|desc| Bottles::new(&desc, &constants));
        let mut column = stage_allocations(f, bottles.as_ref(), &constants, b - choice.mu)?;

        // Extend the ratio chain through the largest allocation in the new
        // column. Allocations are ordered, so if anything is positive the
        // last one is; all-zero means the new job took the whole bandwidth,
        // where only the inequality against s'(0) constrains the constant.
        let last = column[stage - 1];
        let next_constant = if last > 0.0 {
            constants[stage - 1] * f.deriv_raw(choice.mu) / f.deriv_raw(last)
        } else {
            let at_zero = f.deriv_raw(0.0);
            if at_zero.is_finite() {
                constants[stage - 1] * f.deriv_raw(b) / at_zero
            } else {
                return Err(SchedulerError::OptimizerFailure(
                    "stage starved all longer jobs although the marginal rate at zero is unbounded"
                        .into(),
                ));
            }
        };

        column.push(choice.mu);
        columns.push(column);
        constants.push(next_constant);
        coefficients.push(choice.coefficient);
    }

    let matrix = ScheduleMatrix::from_columns(&columns);
    let realization = realize_schedule(inst, &matrix)?;
    Ok(ScheduleResult {
        matrix,
        durations: realization.durations,
        completion_times: realization.completion_times,
        objective: realization.objective,
        coefficients: Some(coefficients),
        cdr_constants: Some(constants),
    })
}

/// Converts an allocation matrix into interval durations, completion times,
/// and the objective, by work conservation.
///
/// Interval `M - 1` (earliest) runs until job `M - 1` finishes:
/// `d = x / s(rate)`. Walking backward in job index (forward in time), each
/// job's own interval serves whatever its earlier intervals left over.
pub fn realize_schedule(
    inst: &ProblemInstance,
    matrix: &ScheduleMatrix,
) -> Result<Realization, SchedulerError> {
    let m = inst.job_count();
    if matrix.job_count() != m {
        return Err(SchedulerError::InvalidInstance(format!(
            "matrix is {}x{}, instance has {m} jobs",
            matrix.job_count(),
            matrix.job_count()
        )));
    }
    if !matrix.is_upper_triangular() {
        return Err(SchedulerError::InvalidInstance(
            "matrix is not upper triangular".into(),
        ));
    }
    if !matrix.fully_utilizes(inst.bandwidth()) {
        return Err(SchedulerError::InvalidInstance(
            "matrix columns do not sum to the bandwidth".into(),
        ));
    }

    let f = inst.speedup();
    let sizes = inst.sizes();
    let mut durations = vec![0.0; m];
    for j in (0..m).rev() {
        let served_later: f64 = (j + 1..m)
            .map(|l| f.eval_raw(matrix.get(j, l)) * durations[l])
            .sum();
        let remaining = sizes[j] - served_later;
        let rate = f.eval_raw(matrix.get(j, j));
        if rate <= 0.0 {
            if remaining > 1e-12 * sizes[j] {
                return Err(SchedulerError::InfeasibleMatrix {
                    interval: j,
                    duration: f64::INFINITY,
                });
            }
            return Err(SchedulerError::InfeasibleMatrix {
                interval: j,
                duration: 0.0,
            });
        }
        let d = remaining / rate;
        if d <= 0.0 {
            return Err(SchedulerError::InfeasibleMatrix {
                interval: j,
                duration: d,
            });
        }
        durations[j] = d;
    }

    let mut completion_times = vec![0.0; m];
    let mut acc = 0.0;
    for j in (0..m).rev() {
        acc += durations[j];
        completion_times[j] = acc;
    }
    let objective = inst
        .weights()
        .iter()
        .zip(&completion_times)
        .map(|(w, t)| w * t)
        .sum();

    Ok(Realization {
        durations,
        completion_times,
        objective,
    })
}

/// A constant-ratio violation found by [`verify_cdr`].
#[derive(Debug, Clone)]
pub enum CdrViolation {
    /// The marginal-rate ratio of a pair drifted across intervals.
    RatioDrift {
        i: usize,
        j: usize,
        interval: usize,
        observed: f64,
        reference: f64,
    },
    /// A starved job's bound against the rate at zero failed.
    ZeroBound {
        i: usize,
        j: usize,
        interval: usize,
        lhs: f64,
        rhs: f64,
    },
}

impl fmt::Display for CdrViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CdrViolation::RatioDrift {
                i,
                j,
                interval,
                observed,
                reference,
            } => write!(
                f,
                "pair ({i},{j}) ratio drifted in interval {interval}: {observed} vs {reference}"
            ),
            CdrViolation::ZeroBound {
                i,
                j,
                interval,
                lhs,
                rhs,
            } => write!(
                f,
                "pair ({i},{j}) zero bound failed in interval {interval}: {lhs} < {rhs}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CdrReport {
    pub violations: Vec<CdrViolation>,
}

impl CdrReport {
    pub fn is_satisfied(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that marginal-rate ratios are constant wherever a pair of jobs both
/// run (within `1e-5` relative), and that starved jobs satisfy the bound
/// `s'(theta_j)/s'(0) >= c_j/c_i - 1e-7` (vacuous for unbounded `s'(0)`).
///
/// When the result carries ratio constants, observed ratios are held against
/// `c_i/c_j`; otherwise each pair's first observation serves as the
/// reference, which checks constancy only.
pub fn verify_cdr(inst: &ProblemInstance, result: &ScheduleResult) -> CdrReport {
    let mut report = CdrReport::default();
    let f = inst.speedup();
    let m = inst.job_count();
    let matrix = &result.matrix;
    let constants = result.cdr_constants.as_deref();
    let deriv_at_zero = f.deriv_raw(0.0);
    let zero_tol = 1e-12 * inst.bandwidth();

    for i in 0..m {
        for j in i + 1..m {
            // Both jobs are unfinished exactly in intervals j..M.
            let mut reference: Option<f64> = constants.map(|c| c[i] / c[j]);
            for interval in j..m {
                let ti = matrix.get(i, interval);
                let tj = matrix.get(j, interval);
                if ti > zero_tol && tj > zero_tol {
                    let observed = f.deriv_raw(ti) / f.deriv_raw(tj);
                    match reference {
                        None => reference = Some(observed),
                        Some(reference) => {
                            if (observed - reference).abs() > 1e-5 * reference.abs() {
                                report.violations.push(CdrViolation::RatioDrift {
                                    i,
                                    j,
                                    interval,
                                    observed,
                                    reference,
                                });
                            }
                        }
                    }
                } else if ti <= zero_tol && tj > zero_tol && deriv_at_zero.is_finite() {
                    if let Some(constants) = constants {
                        let lhs = f.deriv_raw(tj) / deriv_at_zero;
                        let rhs = constants[j] / constants[i];
                        if lhs < rhs - 1e-7 {
                            report.violations.push(CdrViolation::ZeroBound {
                                i,
                                j,
                                interval,
                                lhs,
                                rhs,
                            });
                        }
                    }
                }
            }
        }
    }
    report
}

/// Objective linearity check: `J` against `sum a_i·x_i`.
#[derive(Debug, Clone)]
pub struct LinearityCheck {
    /// `|J - sum a_i·x_i| / J`.
    pub residual: f64,
    pub coefficients: Vec<f64>,
}

pub fn linearity_check(
    inst: &ProblemInstance,
    result: &ScheduleResult,
) -> Result<LinearityCheck, SchedulerError> {
    let coefficients = result
        .coefficients
        .clone()
        .ok_or(SchedulerError::MissingCoefficients)?;
    let predicted: f64 = coefficients
        .iter()
        .zip(inst.sizes())
        .map(|(a, x)| a * x)
        .sum();
    let residual = (result.objective - predicted).abs() / result.objective;
    Ok(LinearityCheck {
        residual,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speedup::SpeedupFamily;

    fn power_instance(b: f64, jobs: &[(f64, f64)], p: f64) -> ProblemInstance {
        let f = SpeedupFunction::power(1.0, p, b).unwrap();
        ProblemInstance::new(
            b,
            jobs.iter()
                .map(|&(size, weight)| Job { size, weight })
                .collect(),
            f,
        )
        .unwrap()
    }

    fn log_instance(b: f64, jobs: &[(f64, f64)]) -> ProblemInstance {
        let f = SpeedupFunction::log(1.0, 1.0, b).unwrap();
        ProblemInstance::new(
            b,
            jobs.iter()
                .map(|&(size, weight)| Job { size, weight })
                .collect(),
            f,
        )
        .unwrap()
    }

    #[test]
    fn single_job_takes_everything() {
        let inst = power_instance(4.0, &[(4.0, 1.0)], 0.5);
        let result = smartfill(&inst).unwrap();
        assert_eq!(result.matrix.get(0, 0), 4.0);
        assert!((result.completion_times[0] - 2.0).abs() < 1e-12);
        assert!((result.objective - 2.0).abs() < 1e-12);
        assert_eq!(result.coefficients.as_deref(), Some(&[0.5][..]));
        assert_eq!(result.cdr_constants.as_deref(), Some(&[1.0][..]));
        // No pairs to check, nothing to drift.
        assert!(verify_cdr(&inst, &result).is_satisfied());
        assert_eq!(linearity_check(&inst, &result).unwrap().residual, 0.0);
    }

    #[test]
    fn two_job_power_matches_analytic_optimum() {
        // For s = theta^p the optimal final-stage share of the newest job is
        // mu* = B(1 - (w1/(w1+w2))^(1/(1-p))); with p = 1/2, B = 4 and equal
        // weights this is 3, and J = w1·x1/s(B) + x2·q(mu*) = 2 + sqrt(3).
        let inst = power_instance(4.0, &[(4.0, 1.0), (2.0, 1.0)], 0.5);
        let result = smartfill(&inst).unwrap();
        assert!(
            (result.matrix.get(1, 1) - 3.0).abs() < 1e-6,
            "mu = {}",
            result.matrix.get(1, 1)
        );
        assert!((result.objective - (2.0 + 3.0f64.sqrt())).abs() < 1e-9);

        let choice = optimize_mu(&inst, 1, &[1.0], &[0.5]).unwrap();
        assert!((choice.mu - 3.0).abs() < 1e-6);
        assert!((choice.coefficient - 3.0f64.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn realize_simple_two_job_matrix() {
        let inst = power_instance(4.0, &[(4.0, 1.0), (2.0, 1.0)], 0.5);
        // Interval 1 (earliest): job 0 gets 0, job 1 gets 4. Interval 0: job 0
        // alone at 4. Job 1 finishes at 2/s(4) = 1; job 0 then needs 4/s(4) = 2.
        let matrix = ScheduleMatrix::from_columns(&[vec![4.0], vec![0.0, 4.0]]);
        let real = realize_schedule(&inst, &matrix).unwrap();
        assert!((real.durations[1] - 1.0).abs() < 1e-12);
        assert!((real.durations[0] - 2.0).abs() < 1e-12);
        assert_eq!(real.completion_times, vec![3.0, 1.0]);
        assert!((real.objective - 4.0).abs() < 1e-12);
    }

    #[test]
    fn realize_rejects_broken_matrices() {
        let inst = power_instance(4.0, &[(4.0, 1.0), (2.0, 1.0)], 0.5);

        let mut lower = ScheduleMatrix::zero(2);
        lower.set(0, 0, 4.0);
        lower.set(1, 0, 0.5);
        lower.set(1, 1, 4.0);
        assert!(matches!(
            realize_schedule(&inst, &lower),
            Err(SchedulerError::InvalidInstance(_))
        ));

        let short = ScheduleMatrix::from_columns(&[vec![4.0], vec![1.0, 1.0]]);
        assert!(matches!(
            realize_schedule(&inst, &short),
            Err(SchedulerError::InvalidInstance(_))
        ));

        // Feasible shape, but job 0 is overserved before its own interval:
        // its early share already covers more than its size.
        let tight = power_instance(4.0, &[(2.0000001, 1.0), (2.0, 1.0)], 0.5);
        let overserve = ScheduleMatrix::from_columns(&[vec![4.0], vec![3.0, 1.0]]);
        assert!(matches!(
            realize_schedule(&tight, &overserve),
            Err(SchedulerError::InfeasibleMatrix { .. })
        ));
    }

    #[test]
    fn work_conservation_shifts_only_the_later_job() {
        // Raising job 0's early rate at fixed column sums leaves T_1 alone and
        // pulls T_0 in.
        let inst = log_instance(10.0, &[(4.0, 1.0), (2.0, 1.0)]);
        let lazy = ScheduleMatrix::from_columns(&[vec![10.0], vec![2.0, 8.0]]);
        let eager = ScheduleMatrix::from_columns(&[vec![10.0], vec![3.0, 7.0]]);
        let a = realize_schedule(&inst, &lazy).unwrap();
        let b = realize_schedule(&inst, &eager).unwrap();
        // Different split of the early interval: job 1 slower, job 0 faster.
        assert!(b.completion_times[1] > a.completion_times[1]);
        assert!(
            b.completion_times[0] - b.completion_times[1]
                < a.completion_times[0] - a.completion_times[1]
        );
    }

    #[test]
    fn smartfill_log_matches_dense_scan() {
        // Independent check of the stage optimizer against a 1e-6-step scan
        // of the quotient.
        let inst = log_instance(10.0, &[(4.0, 1.0), (2.0, 1.0)]);
        let choice = optimize_mu(&inst, 1, &[1.0], &[1.0 / 10.0f64.ln_1p()]).unwrap();

        let f = inst.speedup();
        let a1 = 1.0 / 10.0f64.ln_1p();
        let mut best = (f64::INFINITY, 0.0);
        let n = 10_000_000;
        for i in 1..=n {
            let mu = 10.0 * i as f64 / n as f64;
            let q = (2.0 - a1 * f.eval_raw(10.0 - mu)) / f.eval_raw(mu);
            if q < best.0 {
                best = (q, mu);
            }
        }
        assert!(
            (choice.mu - best.1).abs() < 1e-5,
            "{} vs {}",
            choice.mu,
            best.1
        );
        assert!(choice.coefficient <= best.0 + 1e-12);
    }

    #[test]
    fn extreme_weight_starves_longer_jobs() {
        // With an overwhelming weight on the newest job the quotient is
        // dominated by w/s(mu), minimized at mu = B.
        let f = SpeedupFunction::log(1.0, 1.0, 10.0).unwrap();
        let inst = ProblemInstance::new(
            10.0,
            vec![
                Job {
                    size: 5.0,
                    weight: 1.0,
                },
                Job {
                    size: 1.0,
                    weight: 1e7,
                },
            ],
            f,
        )
        .unwrap();
        let result = smartfill(&inst).unwrap();
        assert_eq!(result.matrix.get(1, 1), 10.0);
        assert_eq!(result.matrix.get(0, 1), 0.0);
        // The ratio chain falls back to the bound against s'(0).
        let c = result.cdr_constants.as_ref().unwrap();
        assert!((c[1] - (1.0 / 11.0)).abs() < 1e-12);
    }

    #[test]
    fn smartfill_satisfies_structure_on_log_instance() {
        let inst = log_instance(
            10.0,
            &[
                (5.0, 0.2),
                (4.0, 0.25),
                (3.0, 1.0 / 3.0),
                (2.0, 0.5),
                (1.0, 1.0),
            ],
        );
        let result = smartfill(&inst).unwrap();
        let m = inst.job_count();

        assert!(result.matrix.is_upper_triangular());
        assert!(result.matrix.fully_utilizes(10.0));
        for j in 0..m - 1 {
            assert!(result.completion_times[j] > result.completion_times[j + 1]);
        }
        let a = result.coefficients.as_ref().unwrap();
        for i in 0..m - 1 {
            assert!(a[i] < a[i + 1], "coefficients not increasing: {a:?}");
        }
        let c = result.cdr_constants.as_ref().unwrap();
        for i in 0..m - 1 {
            assert!(
                c[i] >= c[i + 1] - 1e-12,
                "constants not non-increasing: {c:?}"
            );
        }
        assert!(verify_cdr(&inst, &result).is_satisfied());
        let lin = linearity_check(&inst, &result).unwrap();
        assert!(lin.residual < 1e-8, "linearity residual {}", lin.residual);
    }

    #[test]
    fn equal_column_split_violates_ratio_constancy() {
        let inst = log_instance(10.0, &[(3.0, 1.0), (2.0, 1.0), (1.0, 1.0)]);
        let solved = smartfill(&inst).unwrap();
        let equal = ScheduleMatrix::from_columns(&[
            vec![10.0],
            vec![5.0, 5.0],
            vec![10.0 / 3.0, 10.0 / 3.0, 10.0 / 3.0],
        ]);
        let real = realize_schedule(&inst, &equal).unwrap();
        let candidate = ScheduleResult {
            matrix: equal,
            durations: real.durations,
            completion_times: real.completion_times,
            objective: real.objective,
            coefficients: None,
            cdr_constants: solved.cdr_constants.clone(),
        };
        assert!(!verify_cdr(&inst, &candidate).is_satisfied());
    }

    #[test]
    fn power_schedules_are_strictly_positive() {
        let inst = power_instance(10.0, &[(5.0, 0.2), (3.0, 0.4), (1.0, 1.0)], 0.6);
        let result = smartfill(&inst).unwrap();
        for j in 0..3 {
            for i in 0..=j {
                assert!(
                    result.matrix.get(i, j) > 0.0,
                    "theta[{i}][{j}] = 0 under power speedup"
                );
            }
        }
    }

    #[test]
    fn coefficients_are_size_independent_and_scale_linearly() {
        let base = log_instance(10.0, &[(6.0, 0.5), (3.0, 0.7), (1.5, 1.0)]);
        let other = log_instance(10.0, &[(9.0, 0.5), (4.0, 0.7), (0.5, 1.0)]);
        let scaled = log_instance(10.0, &[(12.0, 0.5), (6.0, 0.7), (3.0, 1.0)]);

        let ra = smartfill(&base).unwrap();
        let rb = smartfill(&other).unwrap();
        let rs = smartfill(&scaled).unwrap();

        let a0 = ra.coefficients.as_ref().unwrap();
        let a1 = rb.coefficients.as_ref().unwrap();
        let a2 = rs.coefficients.as_ref().unwrap();
        for i in 0..3 {
            assert!(
                (a0[i] - a1[i]).abs() <= 1e-7 * a0[i].abs(),
                "a[{i}] differs across sizes"
            );
            assert!(
                (a0[i] - a2[i]).abs() <= 1e-7 * a0[i].abs(),
                "a[{i}] differs under scaling"
            );
        }
        assert!((rs.objective - 2.0 * ra.objective).abs() <= 1e-8 * rs.objective);
    }

    #[test]
    fn normalization_sorts_perturbs_and_validates() {
        let f = SpeedupFunction::power(1.0, 0.5, 4.0).unwrap();
        let inst = ProblemInstance::new(
            4.0,
            vec![
                Job {
                    size: 2.0,
                    weight: 0.6,
                },
                Job {
                    size: 4.0,
                    weight: 0.25,
                },
                Job {
                    size: 2.0,
                    weight: 0.5,
                },
            ],
            f.clone(),
        )
        .unwrap();
        assert!(inst.was_reordered());
        assert!(inst.was_perturbed());
        assert_eq!(inst.reported_sizes(), &[4.0, 2.0, 2.0]);
        assert_eq!(inst.weights(), &[0.25, 0.5, 0.6]);
        assert!(inst.sizes()[1] > inst.sizes()[2]);

        let result = smartfill(&inst).unwrap();
        assert!(result.completion_times[1] > result.completion_times[2]);

        // Decreasing weights on ordered sizes are invalid.
        let bad = ProblemInstance::new(
            4.0,
            vec![
                Job {
                    size: 4.0,
                    weight: 1.0,
                },
                Job {
                    size: 2.0,
                    weight: 0.5,
                },
            ],
            f,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn mixed_sum_instance_solves_via_bisection() {
        let f = SpeedupFunction::sum(
            vec![
                (1.0, SpeedupFamily::Power { a: 1.0, p: 0.5 }),
                (1.0, SpeedupFamily::Log { a: 1.0, p: 1.0 }),
            ],
            6.0,
        )
        .unwrap();
        let inst = ProblemInstance::new(
            6.0,
            vec![
                Job {
                    size: 3.0,
                    weight: 0.5,
                },
                Job {
                    size: 1.0,
                    weight: 1.0,
                },
            ],
            f,
        )
        .unwrap();
        let result = smartfill(&inst).unwrap();
        assert!(result.matrix.fully_utilizes(6.0));
        assert!(verify_cdr(&inst, &result).is_satisfied());
        assert!(linearity_check(&inst, &result).unwrap().residual < 1e-8);
    }
}
