//! Randomized self-check suites behind `smartfill verify`.
//!
//! Each suite draws instances from a seeded generator, so runs are
//! reproducible, and checks the properties the solver is supposed to
//! guarantee:
//!
//! - `gwf`: solved budget splits satisfy all allocation constraints, and the
//!   closed-form and bisection paths agree on regular functions.
//! - `oracle`: solver objectives match brute force on two- and three-job
//!   instances.
//! - `cdr`: structural invariants of solved schedules (triangular shape,
//!   full utilization, completion order, constant marginal-rate ratios,
//!   monotone coefficient sequences).
//! - `linearity`: the objective is linear in job sizes with size-independent
//!   coefficients.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::baselines::equal_split;
use crate::gwf::{bisect_waterfill, closed_form_waterfill, gwf_solve, verify_cap, CapInstance};
use crate::oracle::{oracle_m2, oracle_m3};
use crate::scheduler::{linearity_check, smartfill, verify_cdr, Job, ProblemInstance};
use crate::speedup::{SpeedupFamily, SpeedupFunction};

/// Families the generators can draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Power,
    ShiftedPower,
    Log,
    Saturating,
    InvertedShift,
    Sum,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::Power,
        FamilyKind::ShiftedPower,
        FamilyKind::Log,
        FamilyKind::Saturating,
        FamilyKind::InvertedShift,
        FamilyKind::Sum,
    ];

    /// Families with a closed-form water-filling path.
    pub const REGULAR: [FamilyKind; 5] = [
        FamilyKind::Power,
        FamilyKind::ShiftedPower,
        FamilyKind::Log,
        FamilyKind::Saturating,
        FamilyKind::InvertedShift,
    ];

    pub fn parse(name: &str) -> Option<FamilyKind> {
        match name {
            "power" => Some(FamilyKind::Power),
            "shifted_power" => Some(FamilyKind::ShiftedPower),
            "log" => Some(FamilyKind::Log),
            "saturating" => Some(FamilyKind::Saturating),
            "inverted_shift" => Some(FamilyKind::InvertedShift),
            "sum" => Some(FamilyKind::Sum),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Power => "power",
            FamilyKind::ShiftedPower => "shifted_power",
            FamilyKind::Log => "log",
            FamilyKind::Saturating => "saturating",
            FamilyKind::InvertedShift => "inverted_shift",
            FamilyKind::Sum => "sum",
        }
    }
}

fn sample_single_family(kind: FamilyKind, bandwidth: f64, rng: &mut StdRng) -> SpeedupFamily {
    match kind {
        FamilyKind::Power => SpeedupFamily::Power {
            a: rng.gen_range(0.5..3.0),
            p: rng.gen_range(0.25..0.9),
        },
        FamilyKind::ShiftedPower => SpeedupFamily::ShiftedPower {
            a: rng.gen_range(0.5..3.0),
            z: rng.gen_range(0.2..bandwidth),
            p: rng.gen_range(0.25..0.9),
        },
        FamilyKind::Log => SpeedupFamily::Log {
            a: rng.gen_range(0.3..3.0),
            p: rng.gen_range(0.3..3.0),
        },
        FamilyKind::Saturating => SpeedupFamily::Saturating {
            a: rng.gen_range(0.5..2.0),
            z: rng.gen_range(0.5..2.0 * bandwidth),
            p: rng.gen_range(-3.0..-0.5),
        },
        FamilyKind::InvertedShift => SpeedupFamily::InvertedShift {
            a: rng.gen_range(0.5..2.0),
            z: bandwidth * rng.gen_range(1.05..3.0),
            p: rng.gen_range(1.5..3.5),
        },
        FamilyKind::Sum => unreachable!("sum is sampled by sample_speedup"),
    }
}

/// Draws a valid speedup function of the given family on `[0, bandwidth]`.
pub fn sample_speedup(kind: FamilyKind, bandwidth: f64, rng: &mut StdRng) -> SpeedupFunction {
    let family = match kind {
        FamilyKind::Sum => {
            let choices = [
                FamilyKind::Power,
                FamilyKind::Log,
                FamilyKind::ShiftedPower,
                FamilyKind::Saturating,
            ];
            let term_count = rng.gen_range(2..=3);
            let mut terms = Vec::with_capacity(term_count);
            for _ in 0..term_count {
                let inner = choices[rng.gen_range(0..choices.len())];
                terms.push(crate::speedup::SumTerm {
                    coef: rng.gen_range(0.3..1.5),
                    family: sample_single_family(inner, bandwidth, rng),
                });
            }
            SpeedupFamily::Sum(terms)
        }
        other => sample_single_family(other, bandwidth, rng),
    };
    SpeedupFunction::new(family, bandwidth).expect("sampled parameters are in range")
}

/// Draws a budget-split instance with `2..=max_jobs` jobs.
pub fn sample_cap(bandwidth: f64, max_jobs: usize, rng: &mut StdRng) -> CapInstance {
    let k = rng.gen_range(2..=max_jobs.max(2));
    let mut c = Vec::with_capacity(k);
    let mut current = 1.0;
    for _ in 0..k {
        c.push(current);
        current *= rng.gen_range(0.35..1.0);
    }
    let budget = bandwidth * rng.gen_range(0.05..1.0);
    CapInstance::new(budget, c).expect("sampled constants are ordered")
}

/// Draws a scheduling instance with mean-slowdown-style weights.
pub fn sample_instance(
    kind: FamilyKind,
    m: usize,
    bandwidth: f64,
    rng: &mut StdRng,
) -> ProblemInstance {
    let speedup = sample_speedup(kind, bandwidth, rng);
    let mut sizes: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..10.0)).collect();
    sizes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let jobs = sizes
        .into_iter()
        .map(|size| Job {
            size,
            weight: 1.0 / size,
        })
        .collect();
    ProblemInstance::new(bandwidth, jobs, speedup).expect("sampled instance is valid")
}

/// Outcome of one suite: trials attempted and failure descriptions.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.trials - self.failures.len()
    }

    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Budget-split correctness: constraints hold and both solver paths agree.
pub fn gwf_suite(seed: u64, trials: usize, family: Option<FamilyKind>) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x67_77_66);
    let families: Vec<FamilyKind> = family
        .map(|f| vec![f])
        .unwrap_or_else(|| FamilyKind::ALL.to_vec());
    let bandwidth = 10.0;
    let mut failures = Vec::new();
    let mut count = 0;

    for round in 0..trials {
        for &kind in &families {
            count += 1;
            let f = sample_speedup(kind, bandwidth, &mut rng);
            let cap = sample_cap(bandwidth, 8, &mut rng);
            let tag = format!("{} trial {round}", kind.name());

            let solution = match gwf_solve(&f, &cap) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{tag}: solve failed: {e}"));
                    continue;
                }
            };
            let report = verify_cap(&f, &cap, &solution.allocations);
            if !report.is_satisfied() {
                failures.push(format!("{tag}: {}", report.violations[0]));
                continue;
            }
            let sum: f64 = solution.allocations.iter().sum();
            if (sum - cap.budget()).abs() > 1e-9 * cap.budget() {
                failures.push(format!(
                    "{tag}: budget residual {}",
                    (sum - cap.budget()).abs()
                ));
                continue;
            }

            if let Some(desc) = f.regular_descriptor() {
                let closed = closed_form_waterfill(&desc, &cap);
                let bisected = match bisect_waterfill(&f, &cap) {
                    Ok(s) => s,
                    Err(e) => {
                        failures.push(format!("{tag}: bisection failed: {e}"));
                        continue;
                    }
                };
                let drift = closed
                    .allocations
                    .iter()
                    .zip(&bisected.allocations)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if drift > 1e-8 * cap.budget() {
                    failures.push(format!("{tag}: closed form and bisection drift {drift}"));
                }
            }
        }
    }
    SuiteReport {
        name: "gwf".into(),
        trials: count,
        failures,
    }
}

/// Solver-vs-oracle agreement on tiny instances.
pub fn oracle_suite(seed: u64, trials: usize, m: usize, family: Option<FamilyKind>) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x0a_ac_1e);
    let families: Vec<FamilyKind> = family.map(|f| vec![f]).unwrap_or_else(|| {
        vec![
            FamilyKind::Power,
            FamilyKind::Log,
            FamilyKind::ShiftedPower,
            FamilyKind::Sum,
        ]
    });
    let bandwidth = 10.0;
    let mut failures = Vec::new();
    let mut count = 0;

    for round in 0..trials {
        for &kind in &families {
            count += 1;
            let inst = sample_instance(kind, m, bandwidth, &mut rng);
            let tag = format!("{} M={m} trial {round}", kind.name());

            let solved = match smartfill(&inst) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{tag}: solver failed: {e}"));
                    continue;
                }
            };
            let oracle = match m {
                2 => oracle_m2(&inst),
                3 => oracle_m3(&inst),
                _ => {
                    failures.push(format!("{tag}: no oracle for M={m}"));
                    continue;
                }
            };
            let oracle = match oracle {
                Ok(o) => o,
                Err(e) => {
                    failures.push(format!("{tag}: oracle failed: {e}"));
                    continue;
                }
            };

            // The solver may never beat brute force beyond grid slack, and
            // brute force may never beat the solver beyond its resolution.
            if solved.objective > oracle.objective * (1.0 + 1e-6) {
                failures.push(format!(
                    "{tag}: solver {} above oracle {}",
                    solved.objective, oracle.objective
                ));
            } else if oracle.objective > solved.objective * (1.0 + 1e-3) {
                failures.push(format!(
                    "{tag}: oracle {} above solver {} beyond resolution",
                    oracle.objective, solved.objective
                ));
            }
        }
    }
    SuiteReport {
        name: format!("oracle_m{m}"),
        trials: count,
        failures,
    }
}

/// Structural invariants of solved schedules.
pub fn cdr_suite(
    seed: u64,
    trials: usize,
    max_jobs: usize,
    family: Option<FamilyKind>,
) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed ^ 0xcd_00_0d);
    let families: Vec<FamilyKind> = family
        .map(|f| vec![f])
        .unwrap_or_else(|| FamilyKind::ALL.to_vec());
    let bandwidth = 10.0;
    let mut failures = Vec::new();
    let mut count = 0;

    for round in 0..trials {
        for &kind in &families {
            count += 1;
            // Sum-family instances run through nested bisection; keep them
            // small so the suite stays fast.
            let cap_m = if kind == FamilyKind::Sum {
                max_jobs.min(6)
            } else {
                max_jobs
            };
            let m = rng.gen_range(1..=cap_m.max(1));
            let inst = sample_instance(kind, m, bandwidth, &mut rng);
            let tag = format!("{} M={m} trial {round}", kind.name());

            let solved = match smartfill(&inst) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{tag}: solver failed: {e}"));
                    continue;
                }
            };

            if !solved.matrix.is_upper_triangular() {
                failures.push(format!("{tag}: matrix not upper triangular"));
                continue;
            }
            if !solved.matrix.fully_utilizes(bandwidth) {
                failures.push(format!("{tag}: columns do not sum to bandwidth"));
                continue;
            }
            if solved.completion_times.windows(2).any(|w| w[0] <= w[1]) {
                failures.push(format!("{tag}: completion times not strictly decreasing"));
                continue;
            }
            let cdr = verify_cdr(&inst, &solved);
            if !cdr.is_satisfied() {
                failures.push(format!("{tag}: {}", cdr.violations[0]));
                continue;
            }
            let lin = linearity_check(&inst, &solved).expect("solver output carries coefficients");
            if lin.residual >= 1e-8 {
                failures.push(format!("{tag}: linearity residual {}", lin.residual));
                continue;
            }
            let a = solved.coefficients.as_ref().unwrap();
            if a.windows(2).any(|w| w[0] >= w[1]) {
                failures.push(format!(
                    "{tag}: coefficients not strictly increasing: {a:?}"
                ));
                continue;
            }
            let c = solved.cdr_constants.as_ref().unwrap();
            if c.windows(2).any(|w| w[0] < w[1] - 1e-9) {
                failures.push(format!("{tag}: ratio constants increased: {c:?}"));
                continue;
            }
            if kind == FamilyKind::Power {
                let all_positive = (0..m).all(|j| (0..=j).all(|i| solved.matrix.get(i, j) > 0.0));
                if !all_positive {
                    failures.push(format!("{tag}: zero allocation under power speedup"));
                    continue;
                }
            }
            // Equal split is feasible, so it can never beat the optimum.
            if let Ok(eq) = equal_split(&inst) {
                if solved.objective > eq.objective * (1.0 + 1e-9) {
                    failures.push(format!(
                        "{tag}: equal split {} beat the solver {}",
                        eq.objective, solved.objective
                    ));
                }
            }
        }
    }
    SuiteReport {
        name: "cdr".into(),
        trials: count,
        failures,
    }
}

/// Objective linearity: doubling sizes doubles `J` and leaves coefficients
/// alone.
pub fn linearity_suite(seed: u64, trials: usize, family: Option<FamilyKind>) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x11_4e_a1);
    let families: Vec<FamilyKind> = family
        .map(|f| vec![f])
        .unwrap_or_else(|| FamilyKind::REGULAR.to_vec());
    let bandwidth = 10.0;
    let mut failures = Vec::new();
    let mut count = 0;

    for round in 0..trials {
        for &kind in &families {
            count += 1;
            let m = rng.gen_range(2..=8);
            let inst = sample_instance(kind, m, bandwidth, &mut rng);
            let tag = format!("{} M={m} trial {round}", kind.name());

            let doubled_jobs: Vec<Job> = inst
                .reported_sizes()
                .iter()
                .zip(inst.weights())
                .map(|(&size, &weight)| Job {
                    size: 2.0 * size,
                    weight,
                })
                .collect();
            let doubled = ProblemInstance::new(bandwidth, doubled_jobs, inst.speedup().clone())
                .expect("doubling sizes keeps the instance valid");

            let base = match smartfill(&inst) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{tag}: solver failed: {e}"));
                    continue;
                }
            };
            let scaled = match smartfill(&doubled) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{tag}: solver failed on doubled sizes: {e}"));
                    continue;
                }
            };

            if (scaled.objective - 2.0 * base.objective).abs() > 1e-8 * scaled.objective {
                failures.push(format!(
                    "{tag}: doubled objective {} vs 2x{}",
                    scaled.objective, base.objective
                ));
                continue;
            }
            let a0 = base.coefficients.as_ref().unwrap();
            let a1 = scaled.coefficients.as_ref().unwrap();
            let drift = a0
                .iter()
                .zip(a1)
                .map(|(x, y)| (x - y).abs() / x.abs().max(1e-300))
                .fold(0.0f64, f64::max);
            if drift > 1e-7 {
                failures.push(format!("{tag}: coefficients drifted by {drift}"));
            }
        }
    }
    SuiteReport {
        name: "linearity".into(),
        trials: count,
        failures,
    }
}
