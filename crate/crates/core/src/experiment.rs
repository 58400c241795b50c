//! Benchmark sweeps comparing the solver against heSRPT, with CSV output.
//!
//! The built-in sweeps share one shape: job counts `M = 10, 20, ..., 100`,
//! bandwidth `B = 10`, sizes `x_i = M - i + 1`, and mean-slowdown weights
//! `w_i = 1/x_i`. They differ in the speedup function and in how the
//! benchmark schedules:
//!
//! - `power_equivalence`: `s = theta^0.5`; heSRPT is exact, so both policies
//!   must coincide.
//! - `log_comparison`: `s = ln(1 + theta)`; heSRPT plans under the pinned
//!   approximation `0.79·theta^0.48`.
//! - `sqrt_comparison`: `s = sqrt(4 + theta) - 2`; heSRPT plans under
//!   `0.26·theta^0.82`.
//!
//! CSV schema (fixed order): `M,policy,J,mean_slowdown,runtime_ms`, where
//! `mean_slowdown = J/M`. Rows are sorted by `(M, policy)` before writing, so
//! concurrent solving never changes the output; all floats are printed with
//! 12 significant digits. `runtime_ms` is wall-clock measurement and is the
//! one column that varies between runs.

use std::fmt;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_power, hesrpt_approx, hesrpt_power, BaselineError, PowerFit};
use crate::scheduler::{smartfill, Job, ProblemInstance, SchedulerError};
use crate::speedup::{SpeedupError, SpeedupSpec};

pub const BUILTIN_IDS: [&str; 3] = ["power_equivalence", "log_comparison", "sqrt_comparison"];

/// How job sizes are generated for a given `M`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SizeRule {
    /// `x_i = M - i + 1`.
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    Uniform,
    InverseSize,
}

/// One benchmark sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub label: String,
    #[serde(default = "default_m_values")]
    pub m_values: Vec<usize>,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_size_rule")]
    pub size_rule: SizeRule,
    #[serde(default = "default_weight_rule")]
    pub weight_rule: WeightRule,
    pub speedup: SpeedupSpec,
    /// Pinned benchmark approximation; fitted on the fly when absent and the
    /// speedup is not already a power function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<PowerFit>,
}

fn default_m_values() -> Vec<usize> {
    (1..=10).map(|i| i * 10).collect()
}

fn default_bandwidth() -> f64 {
    10.0
}

fn default_size_rule() -> SizeRule {
    SizeRule::Linear
}

fn default_weight_rule() -> WeightRule {
    WeightRule::InverseSize
}

impl ExperimentSpec {
    pub fn builtin(id: &str) -> Option<Self> {
        let (label, speedup, approx) = match id {
            "power_equivalence" => (
                "power_equivalence",
                SpeedupSpec::Power { a: 1.0, p: 0.5 },
                None,
            ),
            "log_comparison" => (
                "log_comparison",
                SpeedupSpec::Log { a: 1.0, p: 1.0 },
                Some(PowerFit { a: 0.79, p: 0.48 }),
            ),
            "sqrt_comparison" => (
                "sqrt_comparison",
                SpeedupSpec::ShiftedPower {
                    a: 1.0,
                    z: 4.0,
                    p: 0.5,
                },
                Some(PowerFit { a: 0.26, p: 0.82 }),
            ),
            _ => return None,
        };
        Some(ExperimentSpec {
            label: label.to_string(),
            m_values: default_m_values(),
            bandwidth: default_bandwidth(),
            size_rule: SizeRule::Linear,
            weight_rule: WeightRule::InverseSize,
            speedup,
            approx,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Spec(e.to_string()))
    }

    /// Materializes the instance for one job count.
    pub fn instance(&self, m: usize) -> Result<ProblemInstance, ExperimentError> {
        if m == 0 {
            return Err(ExperimentError::Spec("job count must be positive".into()));
        }
        let sizes: Vec<f64> = match self.size_rule {
            SizeRule::Linear => (0..m).map(|i| (m - i) as f64).collect(),
        };
        let jobs: Vec<Job> = sizes
            .iter()
            .map(|&size| Job {
                size,
                weight: match self.weight_rule {
                    WeightRule::Uniform => 1.0,
                    WeightRule::InverseSize => 1.0 / size,
                },
            })
            .collect();
        let speedup = self.speedup.into_function(self.bandwidth)?;
        Ok(ProblemInstance::new(self.bandwidth, jobs, speedup)?)
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub m: usize,
    pub policy: String,
    pub objective: f64,
    pub mean_slowdown: f64,
    pub runtime_ms: f64,
}

#[derive(Debug)]
pub enum ExperimentError {
    Spec(String),
    Scheduler(SchedulerError),
    Baseline(BaselineError),
    Speedup(SpeedupError),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Spec(msg) => write!(f, "invalid experiment spec: {msg}"),
            ExperimentError::Scheduler(e) => write!(f, "{e}"),
            ExperimentError::Baseline(e) => write!(f, "{e}"),
            ExperimentError::Speedup(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<SchedulerError> for ExperimentError {
    fn from(e: SchedulerError) -> Self {
        ExperimentError::Scheduler(e)
    }
}

impl From<BaselineError> for ExperimentError {
    fn from(e: BaselineError) -> Self {
        ExperimentError::Baseline(e)
    }
}

impl From<SpeedupError> for ExperimentError {
    fn from(e: SpeedupError) -> Self {
        ExperimentError::Speedup(e)
    }
}

fn run_one(spec: &ExperimentSpec, m: usize) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let inst = spec.instance(m)?;
    let mut rows = Vec::with_capacity(2);

    let start = Instant::now();
    let solved = smartfill(&inst)?;
    rows.push(ExperimentRow {
        m,
        policy: "smartfill".to_string(),
        objective: solved.objective,
        mean_slowdown: solved.objective / m as f64,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    });

    let start = Instant::now();
    let benchmark = if inst.speedup().is_power() {
        hesrpt_power(&inst)?
    } else {
        let fit = match &spec.approx {
            Some(fit) => *fit,
            None => fit_power(inst.speedup())?,
        };
        hesrpt_approx(&inst, &fit)?
    };
    rows.push(ExperimentRow {
        m,
        policy: "hesrpt".to_string(),
        objective: benchmark.objective,
        mean_slowdown: benchmark.objective / m as f64,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    });

    Ok(rows)
}

/// Runs the sweep, solving different job counts on separate threads. Rows
/// come back sorted by `(M, policy)`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let results: Mutex<Vec<Result<Vec<ExperimentRow>, ExperimentError>>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for &m in &spec.m_values {
            let results = &results;
            scope.spawn(move || {
                let outcome = run_one(spec, m);
                results.lock().unwrap().push(outcome);
            });
        }
    });

    let mut rows = Vec::new();
    for outcome in results.into_inner().unwrap() {
        rows.extend(outcome?);
    }
    rows.sort_by(|a, b| a.m.cmp(&b.m).then(a.policy.cmp(&b.policy)));
    Ok(rows)
}

/// Formats a float with 12 significant digits.
pub fn format_sig(value: f64) -> String {
    format!("{value:.11e}")
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from("M,policy,J,mean_slowdown,runtime_ms\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3}\n",
            row.m,
            row.policy,
            format_sig(row.objective),
            format_sig(row.mean_slowdown),
            row.runtime_ms
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_specs_encode_the_reference_setup() {
        for id in BUILTIN_IDS {
            let spec = ExperimentSpec::builtin(id).unwrap();
            assert_eq!(spec.m_values, vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
            assert_eq!(spec.bandwidth, 10.0);
            assert_eq!(spec.weight_rule, WeightRule::InverseSize);
        }
        assert!(ExperimentSpec::builtin("nonsense").is_none());

        let inst = ExperimentSpec::builtin("power_equivalence")
            .unwrap()
            .instance(10)
            .unwrap();
        assert_eq!(inst.sizes()[0], 10.0);
        assert_eq!(inst.sizes()[9], 1.0);
        assert!((inst.weights()[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn power_rows_coincide_across_policies() {
        let mut spec = ExperimentSpec::builtin("power_equivalence").unwrap();
        spec.m_values = vec![5, 10];
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].m, pair[1].m);
            let gap = (pair[0].objective - pair[1].objective).abs() / pair[0].objective;
            assert!(gap < 1e-6, "policies diverged at M = {}: {gap}", pair[0].m);
        }
    }

    #[test]
    fn rows_are_sorted_and_csv_is_stable() {
        let mut spec = ExperimentSpec::builtin("log_comparison").unwrap();
        spec.m_values = vec![20, 10];
        let rows = run_experiment(&spec).unwrap();
        let order: Vec<(usize, &str)> = rows.iter().map(|r| (r.m, r.policy.as_str())).collect();
        assert_eq!(
            order,
            vec![
                (10, "hesrpt"),
                (10, "smartfill"),
                (20, "hesrpt"),
                (20, "smartfill")
            ]
        );

        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("M,policy,J,mean_slowdown,runtime_ms"));
        assert_eq!(csv.lines().count(), 5);

        // Identical inputs reproduce every column except the runtime.
        let again = run_experiment(&spec).unwrap();
        let strip = |text: &str| -> Vec<String> {
            text.lines()
                .map(|l| {
                    l.rsplit_once(',')
                        .map(|(head, _)| head.to_string())
                        .unwrap_or_default()
                })
                .collect()
        };
        assert_eq!(strip(&csv), strip(&rows_to_csv(&again)));
    }

    #[test]
    fn custom_spec_round_trips_through_json() {
        let text = r#"{
            "label": "tiny",
            "m_values": [2, 3],
            "bandwidth": 4.0,
            "speedup": {"family": "power", "a": 1.0, "p": 0.5}
        }"#;
        let spec = ExperimentSpec::from_json(text).unwrap();
        assert_eq!(spec.label, "tiny");
        assert_eq!(spec.size_rule, SizeRule::Linear);
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn format_sig_is_twelve_digits() {
        assert_eq!(format_sig(0.136), "1.36000000000e-1");
        assert_eq!(format_sig(123.456), "1.23456000000e2");
    }
}
