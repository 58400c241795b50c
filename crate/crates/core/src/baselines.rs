//! Comparison policies: heSRPT and equal split.
//!
//! heSRPT is the optimal policy for power-law speedup `a·theta^p`; on that
//! family it coincides with the stagewise solver, so [`hesrpt_power`] simply
//! relabels its output. For other concave functions the policy is applied
//! through a fitted power approximation: [`hesrpt_approx`] computes the
//! allocation matrix as if the speedup were `fit.a · theta^fit.p` and then
//! realizes durations and completion times under the true function.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scheduler::{
    realize_schedule, smartfill, ProblemInstance, ScheduleMatrix, ScheduleResult, SchedulerError,
};
use crate::speedup::{SpeedupError, SpeedupFunction};

/// Grid size for the power fit.
const FIT_GRID: usize = 1000;

/// A power-law stand-in `a·theta^p` for a general concave speedup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFit {
    pub a: f64,
    pub p: f64,
}

impl PowerFit {
    pub fn new(a: f64, p: f64) -> Result<Self, BaselineError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(BaselineError::FitFailure(format!(
                "scale {a} must be positive"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(BaselineError::FitFailure(format!(
                "exponent {p} must be in (0, 1)"
            )));
        }
        Ok(PowerFit { a, p })
    }
}

#[derive(Debug)]
pub enum BaselineError {
    /// The exact heSRPT route needs a power-family speedup.
    NotPowerFamily,
    FitFailure(String),
    Scheduler(SchedulerError),
    Speedup(SpeedupError),
}

impl fmt::Display for BaselineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineError::NotPowerFamily => write!(f, "exact heSRPT requires a power speedup"),
            BaselineError::FitFailure(msg) => write!(f, "power fit failed: {msg}"),
            BaselineError::Scheduler(e) => write!(f, "{e}"),
            BaselineError::Speedup(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BaselineError {}

impl From<SchedulerError> for BaselineError {
    fn from(e: SchedulerError) -> Self {
        BaselineError::Scheduler(e)
    }
}

impl From<SpeedupError> for BaselineError {
    fn from(e: SpeedupError) -> Self {
        BaselineError::Speedup(e)
    }
}

/// heSRPT on its home turf: power speedup, where it is optimal and equal to
/// the stagewise schedule.
pub fn hesrpt_power(inst: &ProblemInstance) -> Result<ScheduleResult, BaselineError> {
    if !inst.speedup().is_power() {
        return Err(BaselineError::NotPowerFamily);
    }
    Ok(smartfill(inst)?)
}

/// Least-squares power fit `a·theta^p` to `s` over 1000 uniform grid points
/// on `(B/1000, B]`.
///
/// For a fixed exponent the optimal scale has a closed form
/// (`a(p) = sum y·t^p / sum t^(2p)`), so the squared error is minimized by a
/// coarse scan over `p` followed by golden-section refinement; `p` is clamped
/// to `(0, 1)`.
pub fn fit_power(f: &SpeedupFunction) -> Result<PowerFit, BaselineError> {
    let b = f.domain_max();
    let points: Vec<f64> = (1..=FIT_GRID)
        .map(|i| b * i as f64 / FIT_GRID as f64)
        .collect();
    let values: Vec<f64> = points.iter().map(|&t| f.eval_raw(t)).collect();
    if let Some(bad) = values.iter().position(|v| *v <= 0.0 || v.is_nan()) {
        return Err(BaselineError::FitFailure(format!(
            "function non-positive at theta = {}",
            points[bad]
        )));
    }

    let scale_for = |p: f64| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&t, &y) in points.iter().zip(&values) {
            let tp = t.powf(p);
            num += y * tp;
            den += tp * tp;
        }
        num / den
    };
    let sse = |p: f64| -> f64 {
        let a = scale_for(p);
        points
            .iter()
            .zip(&values)
            .map(|(&t, &y)| {
                let r = a * t.powf(p) - y;
                r * r
            })
            .sum()
    };

    let mut best_p = 0.5;
    let mut best_sse = f64::INFINITY;
    let coarse = 198;
    for i in 1..coarse {
        let p = i as f64 / coarse as f64;
        let err = sse(p);
        if err < best_sse {
            best_sse = err;
            best_p = p;
        }
    }
    let step = 1.0 / coarse as f64;
    let mut lo = (best_p - step).max(1e-6);
    let mut hi = (best_p + step).min(1.0 - 1e-6);
    let ratio = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = sse(x1);
    let mut f2 = sse(x2);
    while hi - lo > 1e-9 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = sse(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = sse(x2);
        }
    }
    let p = (0.5 * (lo + hi)).clamp(1e-6, 1.0 - 1e-6);
    PowerFit::new(scale_for(p), p)
}

/// Approximation-based heSRPT: schedule as if the speedup were
/// `fit.a·theta^fit.p`, then realize under the true function. The realized
/// schedule keeps full utilization and the triangular shape but no longer
/// carries solver coefficients.
pub fn hesrpt_approx(
    inst: &ProblemInstance,
    fit: &PowerFit,
) -> Result<ScheduleResult, BaselineError> {
    let approx_speedup = SpeedupFunction::power(fit.a, fit.p, inst.bandwidth())?;
    let approx_inst = inst.with_speedup(approx_speedup)?;
    let planned = smartfill(&approx_inst)?;
    let realization = realize_schedule(inst, &planned.matrix)?;
    Ok(ScheduleResult {
        matrix: planned.matrix,
        durations: realization.durations,
        completion_times: realization.completion_times,
        objective: realization.objective,
        coefficients: None,
        cdr_constants: None,
    })
}

/// Sanity baseline: every active job gets an equal share of the bandwidth.
pub fn equal_split(inst: &ProblemInstance) -> Result<ScheduleResult, BaselineError> {
    let b = inst.bandwidth();
    let m = inst.job_count();
    let columns: Vec<Vec<f64>> = (0..m).map(|j| vec![b / (j + 1) as f64; j + 1]).collect();
    let matrix = ScheduleMatrix::from_columns(&columns);
    let realization = realize_schedule(inst, &matrix)?;
    Ok(ScheduleResult {
        matrix,
        durations: realization.durations,
        completion_times: realization.completion_times,
        objective: realization.objective,
        coefficients: None,
        cdr_constants: None,
    })
}
