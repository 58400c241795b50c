//! Brute-force minimizers for tiny instances, used to certify the stagewise
//! solver without sharing any of its code.
//!
//! Both oracles parameterize schedules directly by allocation rates (constant
//! per interval, jobs completing smallest-first, full bandwidth per column)
//! and evaluate completion times by plain work-conservation arithmetic. They
//! call nothing but the speedup function itself: no water filling, no ratio
//! constants, no stage recursion.

use crate::scheduler::{ProblemInstance, SchedulerError};

/// Grid for the two-job scan over the final-job allocation.
const M2_GRID: usize = 100_000;
/// Outer grid (per axis) for the three-job scan.
const M3_OUTER_GRID: usize = 300;
/// Inner grid for the three-job second-interval split.
const M3_INNER_GRID: usize = 10_000;
const REFINE_TOL: f64 = 1e-10;

/// Best objective found and the grid decision that produced it.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub objective: f64,
    /// `[mu]` for two jobs; `[rate_2, rate_1_early, rate_1_mid]` for three.
    pub decision: Vec<f64>,
}

/// Two-job minimizer: scans the rate `mu` granted to the short job over a
/// `1e5`-point grid on `(0, B]` and refines the best bracket by golden
/// section.
pub fn oracle_m2(inst: &ProblemInstance) -> Result<OracleResult, SchedulerError> {
    if inst.job_count() != 2 {
        return Err(SchedulerError::InvalidInstance(format!(
            "two-job oracle got {} jobs",
            inst.job_count()
        )));
    }
    let f = inst.speedup();
    let b = inst.bandwidth();
    let (x0, x1) = (inst.sizes()[0], inst.sizes()[1]);
    let (w0, w1) = (inst.weights()[0], inst.weights()[1]);

    let objective = |mu: f64| -> f64 {
        if !(mu > 0.0 && mu <= b) {
            return f64::INFINITY;
        }
        let t1 = x1 / f.eval_raw(mu);
        let d0 = (x0 - f.eval_raw(b - mu) * t1) / f.eval_raw(b);
        if d0 <= 0.0 {
            return f64::INFINITY;
        }
        w0 * (t1 + d0) + w1 * t1
    };

    let mut best_index = 0;
    let mut best_value = f64::INFINITY;
    for i in 1..=M2_GRID {
        let mu = b * i as f64 / M2_GRID as f64;
        let value = objective(mu);
        if value < best_value {
            best_value = value;
            best_index = i;
        }
    }
    if !best_value.is_finite() {
        return Err(SchedulerError::OptimizerFailure(
            "two-job oracle found no feasible split".into(),
        ));
    }

    let step = b / M2_GRID as f64;
    let lo = if best_index > 1 {
        step * (best_index - 1) as f64
    } else {
        step * 0.5
    };
    let hi = (step * (best_index + 1) as f64).min(b);
    let (mu, value) = golden_min(&objective, lo, hi, REFINE_TOL * b);
    let (mu, value) = if value < best_value {
        (mu, value)
    } else {
        (step * best_index as f64, best_value)
    };
    Ok(OracleResult {
        objective: value,
        decision: vec![mu],
    })
}

/// Three-job minimizer.
///
/// Unknowns: the first-interval rates `(rate_2, rate_1)` (job 0 takes the
/// remainder) on a `300 x 300` grid, and the second-interval rate of job 1 on
/// a `1e4` grid. For a fixed first interval the inner objective is
/// `const + x1_rem · phi(mu)` with `phi` independent of the outer point, so
/// the inner scan is shared: precompute `phi` and its suffix minima once,
/// then look up the best feasible inner point per outer point (feasibility is
/// a threshold on the decreasing ratio `s(B - mu)/s(mu)`, found by binary
/// search). This evaluates exactly the full nested grid. The best grid point
/// is then refined by two sweeps of per-coordinate golden section.
pub fn oracle_m3(inst: &ProblemInstance) -> Result<OracleResult, SchedulerError> {
    if inst.job_count() != 3 {
        return Err(SchedulerError::InvalidInstance(format!(
            "three-job oracle got {} jobs",
            inst.job_count()
        )));
    }
    let f = inst.speedup();
    let b = inst.bandwidth();
    let sizes = inst.sizes();
    let weights = inst.weights();
    let (x0, x1, x2) = (sizes[0], sizes[1], sizes[2]);
    let (w0, w1, w2) = (weights[0], weights[1], weights[2]);
    let rate_full = f.eval_raw(b);

    // Inner grid: phi, the feasibility ratio psi, and suffix minima of phi
    // (ties resolved toward the smaller index).
    let n = M3_INNER_GRID;
    let mut phi = vec![0.0; n + 1];
    let mut psi = vec![0.0; n + 1];
    for q in 1..=n {
        let mu = b * q as f64 / n as f64;
        let s_mu = f.eval_raw(mu);
        let s_rest = f.eval_raw(b - mu);
        phi[q] = (w0 + w1 - w0 * s_rest / rate_full) / s_mu;
        psi[q] = s_rest / s_mu;
    }
    let mut suffix_min = vec![(f64::INFINITY, n); n + 2];
    for q in (1..=n).rev() {
        let (value, index) = suffix_min[q + 1];
        suffix_min[q] = if phi[q] <= value {
            (phi[q], q)
        } else {
            (value, index)
        };
    }
    // First inner index whose feasibility ratio is strictly below `ratio`.
    let feasible_from = |ratio: f64| -> usize {
        let mut lo = 1usize;
        let mut hi = n + 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if psi[mid] < ratio {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    };

    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let outer = M3_OUTER_GRID;
    for i in 1..=outer {
        let rate2 = b * i as f64 / outer as f64;
        let d2 = x2 / f.eval_raw(rate2);
        let weight_term = (w0 + w1 + w2) * d2;
        for j in 0..=(outer - i) {
            let rate1 = b * j as f64 / outer as f64;
            let rate0 = b * (outer - i - j) as f64 / outer as f64;
            let x1_rem = x1 - f.eval_raw(rate1) * d2;
            let x0_rem = x0 - f.eval_raw(rate0) * d2;
            if x1_rem <= 0.0 || x0_rem <= 0.0 {
                continue;
            }
            let from = feasible_from(x0_rem / x1_rem);
            if from > n {
                continue;
            }
            let (phi_min, q) = suffix_min[from];
            let value = weight_term + w0 * x0_rem / rate_full + x1_rem * phi_min;
            if value < best.0 {
                best = (value, rate2, rate1, b * q as f64 / n as f64);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(SchedulerError::OptimizerFailure(
            "three-job oracle found no feasible split".into(),
        ));
    }

    // Full (unfactored) objective for the refinement sweeps.
    let objective = |rate2: f64, rate1: f64, mu: f64| -> f64 {
        if !(rate2 > 0.0 && rate1 >= 0.0 && rate2 + rate1 <= b && mu > 0.0 && mu <= b) {
            return f64::INFINITY;
        }
        let d2 = x2 / f.eval_raw(rate2);
        let x1_rem = x1 - f.eval_raw(rate1) * d2;
        let x0_rem = x0 - f.eval_raw(b - rate2 - rate1) * d2;
        if x1_rem <= 0.0 || x0_rem <= 0.0 {
            return f64::INFINITY;
        }
        let d1 = x1_rem / f.eval_raw(mu);
        let d0 = (x0_rem - f.eval_raw(b - mu) * d1) / rate_full;
        if d1 <= 0.0 || d0 <= 0.0 {
            return f64::INFINITY;
        }
        w0 * (d2 + d1 + d0) + w1 * (d2 + d1) + w2 * d2
    };

    let (mut value, mut rate2, mut rate1, mut mu) = best;
    let outer_step = b / outer as f64;
    let inner_step = b / n as f64;
    for _ in 0..2 {
        let (v, r) = golden_min(
            &|r| objective(r, rate1, mu),
            (rate2 - outer_step).max(outer_step * 1e-3),
            (rate2 + outer_step).min(b),
            REFINE_TOL * b,
        );
        if r < value {
            value = r;
            rate2 = v;
        }
        let (v, r) = golden_min(
            &|r| objective(rate2, r, mu),
            (rate1 - outer_step).max(0.0),
            (rate1 + outer_step).min(b - rate2),
            REFINE_TOL * b,
        );
        if r < value {
            value = r;
            rate1 = v;
        }
        let (v, r) = golden_min(
            &|m| objective(rate2, rate1, m),
            (mu - inner_step).max(inner_step * 1e-3),
            (mu + inner_step).min(b),
            REFINE_TOL * b,
        );
        if r < value {
            value = r;
            mu = v;
        }
    }

    Ok(OracleResult {
        objective: value,
        decision: vec![rate2, rate1, mu],
    })
}

/// Golden-section minimization; returns `(argmin, min)`.
fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{smartfill, Job};
    use crate::speedup::SpeedupFunction;

    fn instance(b: f64, jobs: &[(f64, f64)], f: SpeedupFunction) -> ProblemInstance {
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
    fn two_job_power_agrees_with_solver() {
        let f = SpeedupFunction::power(1.0, 0.5, 4.0).unwrap();
        let inst = instance(4.0, &[(4.0, 1.0), (2.0, 1.0)], f);
        let oracle = oracle_m2(&inst).unwrap();
        let solved = smartfill(&inst).unwrap();
        // Analytic optimum for this instance is 2 + sqrt(3).
        assert!((oracle.objective - (2.0 + 3.0f64.sqrt())).abs() < 1e-7);
        assert!((oracle.objective - solved.objective).abs() / solved.objective < 1e-4);
        assert!(solved.objective <= oracle.objective * (1.0 + 1e-6));
    }

    #[test]
    fn vanishing_second_job_leaves_only_the_first() {
        let f = SpeedupFunction::power(1.0, 0.5, 4.0).unwrap();
        let inst = instance(4.0, &[(4.0, 1.0), (1e-9, 1.0)], f);
        let oracle = oracle_m2(&inst).unwrap();
        assert!(
            (oracle.objective - 4.0 / 2.0).abs() < 1e-6,
            "J = {}",
            oracle.objective
        );
    }

    #[test]
    fn degenerate_weights_move_the_boundary() {
        // The minimizer is invariant under scaling both weights (it only
        // depends on their ratio), so the tiny-weights instance lands on the
        // same split as the unit-weight one.
        let f = SpeedupFunction::power(1.0, 0.5, 4.0).unwrap();
        let tiny = instance(4.0, &[(4.0, 1e-9), (2.0, 1e-9)], f);
        let f2 = SpeedupFunction::power(1.0, 0.5, 4.0).unwrap();
        let unit = instance(4.0, &[(4.0, 1.0), (2.0, 1.0)], f2);
        let a = oracle_m2(&tiny).unwrap();
        let b = oracle_m2(&unit).unwrap();
        assert!((a.decision[0] - b.decision[0]).abs() < 1e-6);

        // Nearly all weight on the short job: it takes nearly everything.
        let f3 = SpeedupFunction::power(1.0, 0.5, 4.0).unwrap();
        let lopsided = instance(4.0, &[(4.0, 1e-6), (2.0, 1.0)], f3);
        let heavy = oracle_m2(&lopsided).unwrap();
        assert!(heavy.decision[0] > 3.9, "mu = {}", heavy.decision[0]);
    }

    #[test]
    fn three_job_log_brackets_solver() {
        let f = SpeedupFunction::log(1.0, 1.0, 10.0).unwrap();
        let inst = instance(10.0, &[(3.0, 1.0 / 3.0), (2.0, 0.5), (1.0, 1.0)], f);
        let oracle = oracle_m3(&inst).unwrap();
        let solved = smartfill(&inst).unwrap();
        assert!(solved.objective <= oracle.objective * (1.0 + 1e-6));
        assert!(oracle.objective <= solved.objective * (1.0 + 1e-3));
    }

    #[test]
    fn three_job_power_brackets_solver() {
        let f = SpeedupFunction::power(1.0, 0.5, 10.0).unwrap();
        let inst = instance(10.0, &[(3.0, 1.0 / 3.0), (2.0, 0.5), (1.0, 1.0)], f);
        let oracle = oracle_m3(&inst).unwrap();
        let solved = smartfill(&inst).unwrap();
        assert!(solved.objective <= oracle.objective * (1.0 + 1e-6));
        assert!(oracle.objective <= solved.objective * (1.0 + 1e-3));
    }

    #[test]
    fn oracle_is_deterministic() {
        let f = SpeedupFunction::log(1.0, 1.0, 10.0).unwrap();
        let inst = instance(10.0, &[(3.0, 1.0 / 3.0), (2.0, 0.5), (1.0, 1.0)], f);
        let a = oracle_m3(&inst).unwrap();
        let b = oracle_m3(&inst).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.decision, b.decision);
    }

    #[test]
    fn oracle_rejects_wrong_size() {
        let f = SpeedupFunction::log(1.0, 1.0, 10.0).unwrap();
        let inst = instance(10.0, &[(3.0, 0.5), (2.0, 0.6), (1.0, 1.0)], f);
        assert!(oracle_m2(&inst).is_err());
        let f2 = SpeedupFunction::log(1.0, 1.0, 10.0).unwrap();
        let two = instance(10.0, &[(3.0, 0.5), (2.0, 1.0)], f2);
        assert!(oracle_m3(&two).is_err());
    }
}
