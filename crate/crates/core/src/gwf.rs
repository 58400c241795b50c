//! Generalized water filling: splitting a bandwidth budget among jobs under
//! fixed ratios of marginal service rates.
//!
//! The constrained allocation problem takes a budget `b`, a count `k`, and
//! ratio constants `c_1 >= c_2 >= ... >= c_k > 0`. It asks for allocations
//! `theta_1 <= theta_2 <= ... <= theta_k` with `sum theta_i = b` such that
//! for every pair with positive allocations
//!
//! ```text
//! s'(theta_j) / s'(theta_i) = c_j / c_i,
//! ```
//!
//! and for pairs where `theta_i = 0 < theta_j`
//!
//! ```text
//! s'(theta_j) / s'(0) >= c_j / c_i.
//! ```
//!
//! The solution is found by water filling. Pick a strictly decreasing
//! auxiliary function `g(h)` of a scalar level `h` and define per-job filling
//! functions
//!
//! ```text
//!              | 0                      if c_i·g(h) >= s'(0)
//! theta_i(h) = | s'^(-1)(c_i·g(h))      if s'(b) < c_i·g(h) < s'(0)
//!              | b                      if c_i·g(h) <= s'(b)
//! ```
//!
//! Each is continuous and non-decreasing in `h`, so the total
//! `beta(h) = sum theta_i(h)` crosses `b` at exactly one level; allocations at
//! that level solve the problem, and the solution is unique.
//!
//! Two paths solve for the level:
//!
//! - [`closed_form_waterfill`] for functions with a [`RegularDescriptor`]
//!   (`s'(theta) = alpha·(sigma·theta + z)^gamma`). With `g(h) = alpha·h^gamma`
//!   every filling function becomes a capped linear ramp
//!   `theta_i(h) = min(u_i·(h - h_i)^+, b)` with width `u_i = c_i^(1/gamma)`
//!   and bottom height `h_i = sigma·z·c_i^(-1/gamma)`, so `beta` is piecewise
//!   linear and the level is solved exactly on its active segment.
//! - [`bisect_waterfill`] for everything else, using the universally feasible
//!   `g(h) = -h` and bisecting on the level.

use std::fmt;

use crate::speedup::{
    invert_derivative_by_bisection, RegularDescriptor, SpeedupError, SpeedupFunction,
};

/// Budget residual tolerance, relative to the budget.
const BUDGET_TOL: f64 = 1e-9;
/// Bisection stops once `|beta(h) - b| <= LEVEL_TOL * b`.
const LEVEL_TOL: f64 = 1e-10;
/// Relative tolerance on derivative-ratio constraints.
const RATIO_TOL: f64 = 1e-6;
const MAX_BISECT_ITERS: usize = 200;
const MAX_BRACKET_DOUBLINGS: usize = 128;

/// A budget split request: `0 < b <= B` and non-increasing positive constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CapInstance {
    budget: f64,
    constants: Vec<f64>,
}

impl CapInstance {
    pub fn new(budget: f64, constants: Vec<f64>) -> Result<Self, GwfError> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(GwfError::InvalidInstance(format!(
                "budget {budget} must be positive and finite"
            )));
        }
        if constants.is_empty() {
            return Err(GwfError::InvalidInstance(
                "needs at least one ratio constant".into(),
            ));
        }
        for (i, c) in constants.iter().enumerate() {
            if !(*c > 0.0 && c.is_finite()) {
                return Err(GwfError::InvalidInstance(format!(
                    "constant c[{i}] = {c} must be positive"
                )));
            }
            if i > 0 && constants[i - 1] < *c {
                return Err(GwfError::InvalidInstance(format!(
                    "constants must be non-increasing, c[{}] = {} < c[{i}] = {c}",
                    i - 1,
                    constants[i - 1]
                )));
            }
        }
        Ok(CapInstance { budget, constants })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn job_count(&self) -> usize {
        self.constants.len()
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }
}

/// Solved allocations together with the water level that produced them.
///
/// The level is tied to the auxiliary function of the path that solved the
/// instance, so levels from different paths are not comparable; allocations
/// are.
#[derive(Debug, Clone)]
pub struct WaterFillSolution {
    pub level: f64,
    /// Non-decreasing, summing to the budget.
    pub allocations: Vec<f64>,
    /// Indices receiving exactly zero.
    pub zero_set: Vec<usize>,
}

impl WaterFillSolution {
    fn from_allocations(level: f64, allocations: Vec<f64>) -> Self {
        let zero_set = allocations
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == 0.0)
            .map(|(i, _)| i)
            .collect();
        WaterFillSolution {
            level,
            allocations,
            zero_set,
        }
    }
}

#[derive(Debug)]
pub enum GwfError {
    InvalidInstance(String),
    /// Budget exceeds the function's domain.
    BudgetExceedsDomain {
        budget: f64,
        domain_max: f64,
    },
    /// The level search never bracketed the budget; the function is likely
    /// not a valid speedup function.
    BracketFailure {
        doublings: usize,
    },
    Speedup(SpeedupError),
}

impl fmt::Display for GwfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GwfError::InvalidInstance(msg) => write!(f, "invalid allocation instance: {msg}"),
            GwfError::BudgetExceedsDomain { budget, domain_max } => {
                write!(f, "budget {budget} exceeds bandwidth {domain_max}")
            }
            GwfError::BracketFailure { doublings } => {
                write!(f, "no level bracket after {doublings} doublings")
            }
            GwfError::Speedup(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for GwfError {}

impl From<SpeedupError> for GwfError {
    fn from(e: SpeedupError) -> Self {
        GwfError::Speedup(e)
    }
}

/// Solves the budget split. Dispatch: a single job takes the whole budget,
/// regular functions go through the piecewise-linear path, anything else
/// through bisection.
pub fn gwf_solve(f: &SpeedupFunction, cap: &CapInstance) -> Result<WaterFillSolution, GwfError> {
    let b = cap.budget();
    let domain_max = f.domain_max();
    if b > domain_max * (1.0 + 1e-12) {
        return Err(GwfError::BudgetExceedsDomain {
            budget: b,
            domain_max,
        });
    }
    let b = b.min(domain_max);
    if cap.job_count() == 1 {
        // Forced by the budget constraint; the level is the bisection-path
        // boundary at which the single bottle caps out.
        let level = -f.deriv_raw(b) / cap.constants()[0];
        return Ok(WaterFillSolution::from_allocations(level, vec![b]));
    }
    match f.regular_descriptor() {
        Some(desc) => Ok(closed_form_waterfill(&desc, cap)),
        None => bisect_waterfill(f, cap),
    }
}

/// Capped linear bottles for the closed-form path, reusable across budgets
/// that share the same ratio constants.
#[derive(Debug, Clone)]
pub(crate) struct Bottles {
    /// Widths `u_i = c_i^(1/gamma)`.
    widths: Vec<f64>,
    /// Bottom heights `h_i = sigma·z·c_i^(-1/gamma)`, non-increasing in i.
    bottoms: Vec<f64>,
}

impl Bottles {
    pub(crate) fn new(desc: &RegularDescriptor, constants: &[f64]) -> Self {
        let widths = constants.iter().map(|c| c.powf(1.0 / desc.gamma)).collect();
        let bottoms = constants
            .iter()
            .map(|c| desc.sigma * desc.z_shift * c.powf(-1.0 / desc.gamma))
            .collect();
        Bottles { widths, bottoms }
    }

    /// Finds the lowest level where the filled volume reaches `b` and returns
    /// it with the per-bottle volumes.
    ///
    /// `beta` is piecewise linear with two breakpoints per bottle (its bottom
    /// and the level where it caps at `b`); both sequences are monotone in
    /// the job index, so a merge walk visits events in ascending order.
    pub(crate) fn solve(&self, b: f64) -> (f64, Vec<f64>) {
        let k = self.widths.len();
        debug_assert!(k >= 1 && b > 0.0);

        // Event streams, both ascending: bottoms and cap points, walked from
        // the last job (lowest bottom) backward.
        let bottom_at = |idx: usize| self.bottoms[k - 1 - idx];
        let cap_at = |idx: usize| self.bottoms[k - 1 - idx] + b / self.widths[k - 1 - idx];
        let mut next_bottom = 0usize;
        let mut next_cap = 0usize;

        let mut slope = 0.0;
        let mut beta = 0.0;
        let mut h_prev = bottom_at(0);
        let mut level = None;

        while next_cap < k {
            let (h_event, is_bottom) =
                if next_bottom < k && bottom_at(next_bottom) <= cap_at(next_cap) {
                    (bottom_at(next_bottom), true)
                } else {
                    (cap_at(next_cap), false)
                };
            let advance = beta + slope * (h_event - h_prev);
            if advance >= b && slope > 0.0 {
                level = Some(h_prev + (b - beta) / slope);
                break;
            }
            beta = advance;
            if is_bottom {
                slope += self.widths[k - 1 - next_bottom];
                next_bottom += 1;
            } else {
                slope -= self.widths[k - 1 - next_cap];
                next_cap += 1;
            }
            h_prev = h_event;
        }
        // Every bottle capped covers k·b >= b, so the crossing is always
        // found for k >= 2; k = 1 caps exactly at b.
        let level = level.unwrap_or(h_prev);

        let allocations = (0..k)
            .map(|i| (self.widths[i] * (level - self.bottoms[i]).max(0.0)).min(b))
            .collect();
        (level, allocations)
    }
}

/// Piecewise-linear water filling for regular functions.
pub fn closed_form_waterfill(desc: &RegularDescriptor, cap: &CapInstance) -> WaterFillSolution {
    let bottles = Bottles::new(desc, cap.constants());
    let (level, allocations) = bottles.solve(cap.budget());
    WaterFillSolution::from_allocations(level, allocations)
}

/// Level search with `g(h) = -h`, for functions without a closed form.
///
/// The initial upper end sits where the widest bottle caps out
/// (`h = -s'(b)/c_k`, where the filled volume already reaches `b`); the lower
/// end is found by doubling away from it. Bisection then runs until the
/// volume residual drops below `1e-10·b` or 200 iterations.
pub fn bisect_waterfill(
    f: &SpeedupFunction,
    cap: &CapInstance,
) -> Result<WaterFillSolution, GwfError> {
    let b = cap.budget().min(f.domain_max());
    let c = cap.constants();
    let k = c.len();
    let deriv_at_zero = f.deriv_raw(0.0);
    let deriv_at_budget = f.deriv_raw(b);

    let fill_one = |ci: f64, h: f64| -> f64 {
        let target = ci * (-h); // c_i · g(h)
        if target >= deriv_at_zero {
            0.0
        } else if target <= deriv_at_budget {
            b
        } else {
            invert_derivative_by_bisection(f, target, 0.0, b)
        }
    };
    let volume = |h: f64| -> f64 { c.iter().map(|&ci| fill_one(ci, h)).sum() };

    // deriv_at_budget can vanish only for saturated right edges; nudge inward
    // so the doubling has a finite starting magnitude.
    let start_rate = if deriv_at_budget > 0.0 {
        deriv_at_budget
    } else {
        f.deriv_raw(b * (1.0 - 1e-9)).max(f64::MIN_POSITIVE)
    };
    let mut hi = -start_rate / c[k - 1];
    if volume(hi) < b {
        // Round-off at the cap boundary; nudge up until the volume covers b.
        let mut doublings = 0;
        while volume(hi) < b {
            hi *= 0.5;
            doublings += 1;
            if doublings > MAX_BRACKET_DOUBLINGS {
                return Err(GwfError::BracketFailure { doublings });
            }
        }
    }
    let mut lo = hi * 2.0;
    let mut doublings = 0;
    while volume(lo) >= b {
        lo *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(GwfError::BracketFailure { doublings });
        }
    }

    let mut level = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECT_ITERS {
        let v = volume(level);
        if (v - b).abs() <= LEVEL_TOL * b {
            break;
        }
        if v < b {
            lo = level;
        } else {
            hi = level;
        }
        level = 0.5 * (lo + hi);
    }

    let allocations: Vec<f64> = c.iter().map(|&ci| fill_one(ci, level)).collect();
    Ok(WaterFillSolution::from_allocations(level, allocations))
}

/// One constraint violation found by [`verify_cap`].
#[derive(Debug, Clone)]
pub enum CapViolation {
    Budget {
        sum: f64,
        budget: f64,
        residual: f64,
    },
    Ordering {
        index: usize,
        gap: f64,
    },
    Ratio {
        i: usize,
        j: usize,
        expected: f64,
        actual: f64,
        residual: f64,
    },
    ZeroAllocation {
        i: usize,
        j: usize,
        lhs: f64,
        rhs: f64,
    },
}

impl fmt::Display for CapViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapViolation::Budget {
                sum,
                budget,
                residual,
            } => {
                write!(
                    f,
                    "allocations sum to {sum}, budget {budget} (residual {residual:.3e})"
                )
            }
            CapViolation::Ordering { index, gap } => {
                write!(
                    f,
                    "allocation {index} exceeds allocation {} by {gap:.3e}",
                    index + 1
                )
            }
            CapViolation::Ratio {
                i,
                j,
                expected,
                actual,
                residual,
            } => {
                write!(f, "derivative ratio ({j},{i}) = {actual}, expected {expected} (residual {residual:.3e})")
            }
            CapViolation::ZeroAllocation { i, j, lhs, rhs } => {
                write!(
                    f,
                    "zero-allocation bound for ({i},{j}): s'(theta_{j})/s'(0) = {lhs} < {rhs}"
                )
            }
        }
    }
}

/// Residual report over all four constraints.
#[derive(Debug, Clone, Default)]
pub struct CapReport {
    pub violations: Vec<CapViolation>,
}

impl CapReport {
    pub fn is_satisfied(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a candidate allocation against the budget (within `1e-9·b`),
/// ordering, ratio (within `1e-6` relative), and zero-allocation constraints.
pub fn verify_cap(f: &SpeedupFunction, cap: &CapInstance, theta: &[f64]) -> CapReport {
    let mut report = CapReport::default();
    let b = cap.budget();
    let c = cap.constants();
    let k = c.len();
    assert_eq!(theta.len(), k, "allocation count must match the instance");

    let sum: f64 = theta.iter().sum();
    if (sum - b).abs() > BUDGET_TOL * b {
        report.violations.push(CapViolation::Budget {
            sum,
            budget: b,
            residual: (sum - b).abs(),
        });
    }
    for i in 0..k.saturating_sub(1) {
        if theta[i] > theta[i + 1] + BUDGET_TOL * b {
            report.violations.push(CapViolation::Ordering {
                index: i,
                gap: theta[i] - theta[i + 1],
            });
        }
    }

    let zero_tol = 1e-12 * b;
    let deriv_at_zero = f.deriv_raw(0.0);
    for i in 0..k {
        for j in i + 1..k {
            let ti = theta[i];
            let tj = theta[j];
            if ti > zero_tol && tj > zero_tol {
                let expected = c[j] / c[i];
                let actual = f.deriv_raw(tj) / f.deriv_raw(ti);
                let residual = (actual - expected).abs() / expected;
                if residual > RATIO_TOL {
                    report.violations.push(CapViolation::Ratio {
                        i,
                        j,
                        expected,
                        actual,
                        residual,
                    });
                }
            } else if ti <= zero_tol && tj > zero_tol && deriv_at_zero.is_finite() {
                let lhs = f.deriv_raw(tj) / deriv_at_zero;
                let rhs = c[j] / c[i];
                if lhs < rhs * (1.0 - 1e-9) - 1e-12 {
                    report
                        .violations
                        .push(CapViolation::ZeroAllocation { i, j, lhs, rhs });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speedup::SpeedupFamily;

    fn power_half(b: f64) -> SpeedupFunction {
        SpeedupFunction::power(1.0, 0.5, b).unwrap()
    }

    fn log_unit(b: f64) -> SpeedupFunction {
        SpeedupFunction::log(1.0, 1.0, b).unwrap()
    }

    fn power_log_mix(b: f64) -> SpeedupFunction {
        SpeedupFunction::sum(
            vec![
                (1.0, SpeedupFamily::Power { a: 1.0, p: 0.5 }),
                (1.0, SpeedupFamily::Log { a: 1.0, p: 1.0 }),
            ],
            b,
        )
        .unwrap()
    }

    fn assert_alloc(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!(
                (a - e).abs() <= tol,
                "expected {expected:?}, got {actual:?}"
            );
        }
    }

    #[test]
    fn equal_constants_split_evenly() {
        let f = power_half(4.0);
        let cap = CapInstance::new(3.0, vec![1.0, 1.0]).unwrap();
        let sol = gwf_solve(&f, &cap).unwrap();
        assert_alloc(&sol.allocations, &[1.5, 1.5], 1e-10);
        assert!(sol.zero_set.is_empty());

        let cap3 = CapInstance::new(3.0, vec![1.0, 1.0, 1.0]).unwrap();
        let sol3 = bisect_waterfill(&f, &cap3).unwrap();
        assert_alloc(&sol3.allocations, &[1.0, 1.0, 1.0], 1e-9);
    }

    #[test]
    #[allow(clippy::approx_constant)] // eight-digit constant is the test fixture
    fn power_ratio_instance() {
        // c_2/c_1 = 2^(-1/2) forces theta_1/theta_2 = 1/2 under sqrt speedup.
        let f = power_half(4.0);
        let cap = CapInstance::new(3.0, vec![1.0, 0.70710678]).unwrap();
        let sol = gwf_solve(&f, &cap).unwrap();
        assert_alloc(&sol.allocations, &[1.0, 2.0], 1e-7);
        assert!(verify_cap(&f, &cap, &sol.allocations).is_satisfied());

        // The even split violates the ratio constraint.
        let report = verify_cap(&f, &cap, &[1.5, 1.5]);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, CapViolation::Ratio { .. })));
    }

    #[test]
    fn log_starves_the_longer_job() {
        // The equality branch would need theta_1 < 0; the solution parks job 1
        // at zero and the inequality s'(1)/s'(0) = 0.5 >= 0.4 holds.
        let f = log_unit(10.0);
        let cap = CapInstance::new(1.0, vec![1.0, 0.4]).unwrap();
        let sol = gwf_solve(&f, &cap).unwrap();
        assert_alloc(&sol.allocations, &[0.0, 1.0], 1e-9);
        assert_eq!(sol.zero_set, vec![0]);
        assert!(verify_cap(&f, &cap, &sol.allocations).is_satisfied());

        let bis = bisect_waterfill(&f, &cap).unwrap();
        assert_alloc(&bis.allocations, &sol.allocations, 1e-8);
    }

    #[test]
    fn closed_form_and_bisection_agree() {
        let functions = [
            power_half(4.0),
            log_unit(4.0),
            SpeedupFunction::shifted_power(1.0, 2.0, 0.6, 4.0).unwrap(),
            SpeedupFunction::saturating(1.0, 1.0, -1.5, 4.0).unwrap(),
            SpeedupFunction::inverted_shift(1.0, 4.5, 2.0, 4.0).unwrap(),
        ];
        let cap = CapInstance::new(3.0, vec![1.0, 0.9, 0.55]).unwrap();
        for f in &functions {
            let desc = f.regular_descriptor().unwrap();
            let closed = closed_form_waterfill(&desc, &cap);
            let bis = bisect_waterfill(f, &cap).unwrap();
            assert_alloc(&closed.allocations, &bis.allocations, 1e-8 * 3.0);
            let sum: f64 = closed.allocations.iter().sum();
            assert!((sum - 3.0).abs() <= 1e-9 * 3.0);
        }
    }

    #[test]
    fn bisection_handles_mixed_sums() {
        let f = power_log_mix(4.0);
        let cap = CapInstance::new(2.0, vec![1.0, 1.0]).unwrap();
        let sol = gwf_solve(&f, &cap).unwrap();
        assert_alloc(&sol.allocations, &[1.0, 1.0], 1e-9);
        assert!(verify_cap(&f, &cap, &sol.allocations).is_satisfied());
    }

    #[test]
    fn single_job_takes_the_budget() {
        let f = log_unit(10.0);
        let cap = CapInstance::new(7.5, vec![2.0]).unwrap();
        let sol = gwf_solve(&f, &cap).unwrap();
        assert_eq!(sol.allocations, vec![7.5]);
        assert!(sol.zero_set.is_empty());
    }

    #[test]
    fn power_solutions_are_interior() {
        // With an unbounded marginal rate at zero every job drinks.
        let f = power_half(10.0);
        for &(b, ref c) in &[(0.5, vec![1.0, 0.2]), (9.0, vec![1.0, 0.99, 0.5, 0.01])] {
            let cap = CapInstance::new(b, c.clone()).unwrap();
            let sol = gwf_solve(&f, &cap).unwrap();
            assert!(
                sol.zero_set.is_empty(),
                "zero allocations under power: {:?}",
                sol.allocations
            );
            assert!(sol.allocations.iter().all(|&t| t > 0.0));
        }
    }

    #[test]
    fn scaling_constants_leaves_allocations_unchanged() {
        let f = log_unit(10.0);
        let c = vec![1.0, 0.8, 0.33];
        let cap = CapInstance::new(4.0, c.clone()).unwrap();
        let scaled = CapInstance::new(4.0, c.iter().map(|x| x * 37.5).collect()).unwrap();
        let a = gwf_solve(&f, &cap).unwrap();
        let b = gwf_solve(&f, &scaled).unwrap();
        assert_alloc(&a.allocations, &b.allocations, 1e-9);
    }

    #[test]
    fn volume_is_monotone_in_level() {
        let f = power_log_mix(6.0);
        let cap = CapInstance::new(3.0, vec![1.0, 0.6, 0.3]).unwrap();
        let sol = bisect_waterfill(&f, &cap).unwrap();
        // Sample the total fill around the solved level.
        let fill = |h: f64| -> f64 {
            cap.constants()
                .iter()
                .map(|&ci| {
                    let target = ci * (-h);
                    if target >= f.derivative(0.0).unwrap() {
                        0.0
                    } else if target <= f.derivative(3.0).unwrap() {
                        3.0
                    } else {
                        f.derivative_inverse(target).unwrap()
                    }
                })
                .sum()
        };
        let mut prev = 0.0;
        for step in 0..20 {
            let h = sol.level * 2.0 + (step as f64 / 19.0) * (-sol.level * 2.5);
            let v = fill(h);
            assert!(v >= prev - 1e-9, "volume decreased: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn rejects_malformed_instances() {
        assert!(CapInstance::new(0.0, vec![1.0]).is_err());
        assert!(CapInstance::new(1.0, vec![]).is_err());
        assert!(CapInstance::new(1.0, vec![0.5, 1.0]).is_err());
        assert!(CapInstance::new(1.0, vec![1.0, -0.5]).is_err());

        let f = log_unit(2.0);
        let cap = CapInstance::new(3.0, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            gwf_solve(&f, &cap),
            Err(GwfError::BudgetExceedsDomain { .. })
        ));
    }
}
