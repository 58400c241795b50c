//! Concave speedup functions.
//!
//! A speedup function maps allocated bandwidth `theta in [0, B]` to a service
//! rate. Every function here satisfies (and [`SpeedupFunction::validate`]
//! samples for) the model axioms:
//!
//! - `s(0) = 0`
//! - `s` strictly increasing and strictly concave on `[0, B]`
//! - `s'` continuous, positive, strictly decreasing
//!
//! The built-in families and their derivatives:
//!
//! | family          | `s(theta)`                 | `s'(theta)`          | ranges                  |
//! |-----------------|----------------------------|----------------------|-------------------------|
//! | `power`         | `a·theta^p`                | `ap·theta^(p-1)`     | `a>0`, `0<p<1`          |
//! | `shifted_power` | `a(theta+z)^p - az^p`      | `ap·(theta+z)^(p-1)` | `a>0`, `z>=0`, `0<p<1`  |
//! | `log`           | `a·ln(p·theta+1)`          | `a/(theta+1/p)`      | `a>0`, `p>0`            |
//! | `saturating`    | `az^p - a(theta+z)^p`      | `-ap·(theta+z)^(p-1)`| `a>0`, `z>0`, `p<0`     |
//! | `inverted_shift`| `az^p - a(z-theta)^p`      | `ap·(z-theta)^(p-1)` | `a>0`, `z>=B`, `p>1`    |
//! | `sum`           | nonnegative combination    | term-wise            | coefs `>= 0`, one `> 0` |
//!
//! Each single-term family has a derivative of the form
//! `alpha·(sigma·theta + z)^gamma`, captured by [`RegularDescriptor`]. That
//! closed form is what makes the fast water-filling path in [`crate::gwf`]
//! possible; sums of two or more distinct terms have no such form and fall
//! back to bisection.
//!
//! `s'(0)` may be infinite (the power family): it is represented as
//! `f64::INFINITY` and only ever compared against, never used in arithmetic.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Sampling resolution used by [`SpeedupFunction::validate`].
const VALIDATION_GRID: usize = 1000;
/// Tolerance for strictness comparisons during validation.
const STRICTNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SpeedupFamily {
    Power { a: f64, p: f64 },
    ShiftedPower { a: f64, z: f64, p: f64 },
    Log { a: f64, p: f64 },
    Saturating { a: f64, z: f64, p: f64 },
    InvertedShift { a: f64, z: f64, p: f64 },
    Sum(Vec<SumTerm>),
}

/// One term of a nonnegative combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTerm {
    pub coef: f64,
    pub family: SpeedupFamily,
}

/// A validated concave speedup function on `[0, domain_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupFunction {
    family: SpeedupFamily,
    domain_max: f64,
}

/// Closed form of a derivative `s'(theta) = alpha·(sigma·theta + z_shift)^gamma`.
///
/// `sigma` is `+1.0` or `-1.0`; the base `sigma·theta + z_shift` is positive on
/// `[0, B)` for every built-in family, which keeps all arithmetic real. The
/// reflected orientation (`sigma = -1`) covers functions such as
/// `2·theta - theta^2` whose derivative decreases toward the right edge of the
/// domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularDescriptor {
    pub alpha: f64,
    pub gamma: f64,
    pub z_shift: f64,
    pub sigma: f64,
}

impl RegularDescriptor {
    /// `s'(theta)` from the closed form.
    pub fn derivative(&self, theta: f64) -> f64 {
        self.alpha * (self.sigma * theta + self.z_shift).powf(self.gamma)
    }

    /// `s'(0)`; `INFINITY` when `z_shift = 0` with `gamma < 0`.
    pub fn derivative_at_zero(&self) -> f64 {
        self.alpha * self.z_shift.powf(self.gamma)
    }

    /// Solves `s'(theta) = y` exactly.
    pub fn derivative_inverse(&self, y: f64) -> f64 {
        self.sigma * ((y / self.alpha).powf(1.0 / self.gamma) - self.z_shift)
    }
}

#[derive(Debug)]
pub enum SpeedupError {
    /// Family parameters outside their admissible range.
    InvalidParameter {
        family: &'static str,
        message: String,
    },
    /// `theta` outside `[0, domain_max]`.
    Domain { theta: f64, domain_max: f64 },
    /// Requested marginal rate outside `[s'(B), s'(0)]`.
    DerivativeRange { y: f64, lo: f64, hi: f64 },
}

impl fmt::Display for SpeedupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeedupError::InvalidParameter { family, message } => {
                write!(f, "invalid {family} parameters: {message}")
            }
            SpeedupError::Domain { theta, domain_max } => {
                write!(f, "bandwidth {theta} outside [0, {domain_max}]")
            }
            SpeedupError::DerivativeRange { y, lo, hi } => {
                write!(f, "marginal rate {y} outside [{lo}, {hi}]")
            }
        }
    }
}

impl std::error::Error for SpeedupError {}

fn invalid(family: &'static str, message: impl Into<String>) -> SpeedupError {
    SpeedupError::InvalidParameter {
        family,
        message: message.into(),
    }
}

fn check_family(family: &SpeedupFamily) -> Result<(), SpeedupError> {
    match family {
        SpeedupFamily::Power { a, p } => {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(invalid("power", format!("a = {a}, need a > 0")));
            }
            if !(*p > 0.0 && *p < 1.0) {
                return Err(invalid("power", format!("p = {p}, need 0 < p < 1")));
            }
        }
        SpeedupFamily::ShiftedPower { a, z, p } => {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(invalid("shifted_power", format!("a = {a}, need a > 0")));
            }
            if !(*z >= 0.0 && z.is_finite()) {
                return Err(invalid("shifted_power", format!("z = {z}, need z >= 0")));
            }
            if !(*p > 0.0 && *p < 1.0) {
                return Err(invalid("shifted_power", format!("p = {p}, need 0 < p < 1")));
            }
        }
        SpeedupFamily::Log { a, p } => {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(invalid("log", format!("a = {a}, need a > 0")));
            }
            if !(*p > 0.0 && p.is_finite()) {
                return Err(invalid("log", format!("p = {p}, need p > 0")));
            }
        }
        SpeedupFamily::Saturating { a, z, p } => {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(invalid("saturating", format!("a = {a}, need a > 0")));
            }
            if !(*z > 0.0 && z.is_finite()) {
                return Err(invalid("saturating", format!("z = {z}, need z > 0")));
            }
            if *p >= 0.0 || p.is_nan() {
                return Err(invalid("saturating", format!("p = {p}, need p < 0")));
            }
        }
        SpeedupFamily::InvertedShift { a, z, p } => {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(invalid("inverted_shift", format!("a = {a}, need a > 0")));
            }
            if !(*z > 0.0 && z.is_finite()) {
                return Err(invalid("inverted_shift", format!("z = {z}, need z > 0")));
            }
            // z >= B is an axiom matter, caught by validate(): the parabola
            // example 2*theta - theta^2 is legal for B <= 1 and invalid above.
            if !(*p > 1.0 && p.is_finite()) {
                return Err(invalid("inverted_shift", format!("p = {p}, need p > 1")));
            }
        }
        SpeedupFamily::Sum(terms) => {
            if terms.is_empty() {
                return Err(invalid("sum", "needs at least one term"));
            }
            if !terms.iter().any(|t| t.coef > 0.0) {
                return Err(invalid("sum", "needs at least one positive coefficient"));
            }
            for term in terms {
                if !(term.coef >= 0.0 && term.coef.is_finite()) {
                    return Err(invalid(
                        "sum",
                        format!("coefficient {} not in [0, inf)", term.coef),
                    ));
                }
                check_family(&term.family)?;
            }
        }
    }
    Ok(())
}

fn family_eval(family: &SpeedupFamily, t: f64) -> f64 {
    match family {
        SpeedupFamily::Power { a, p } => a * t.powf(*p),
        SpeedupFamily::ShiftedPower { a, z, p } => a * ((t + z).powf(*p) - z.powf(*p)),
        SpeedupFamily::Log { a, p } => a * (p * t).ln_1p(),
        SpeedupFamily::Saturating { a, z, p } => a * (z.powf(*p) - (t + z).powf(*p)),
        SpeedupFamily::InvertedShift { a, z, p } => a * (z.powf(*p) - (z - t).powf(*p)),
        SpeedupFamily::Sum(terms) => terms
            .iter()
            .filter(|term| term.coef > 0.0)
            .map(|term| term.coef * family_eval(&term.family, t))
            .sum(),
    }
}

fn family_deriv(family: &SpeedupFamily, t: f64) -> f64 {
    match family {
        // powf(0, p-1) = INFINITY for p < 1, which is exactly s'(0) here.
        SpeedupFamily::Power { a, p } => a * p * t.powf(p - 1.0),
        SpeedupFamily::ShiftedPower { a, z, p } => a * p * (t + z).powf(p - 1.0),
        SpeedupFamily::Log { a, p } => a * p / (p * t + 1.0),
        SpeedupFamily::Saturating { a, z, p } => -(a * p) * (t + z).powf(p - 1.0),
        SpeedupFamily::InvertedShift { a, z, p } => a * p * (z - t).powf(p - 1.0),
        SpeedupFamily::Sum(terms) => terms
            .iter()
            .filter(|term| term.coef > 0.0)
            .map(|term| term.coef * family_deriv(&term.family, t))
            .sum(),
    }
}

fn family_descriptor(family: &SpeedupFamily) -> Option<RegularDescriptor> {
    match family {
        SpeedupFamily::Power { a, p } => Some(RegularDescriptor {
            alpha: a * p,
            gamma: p - 1.0,
            z_shift: 0.0,
            sigma: 1.0,
        }),
        SpeedupFamily::ShiftedPower { a, z, p } => Some(RegularDescriptor {
            alpha: a * p,
            gamma: p - 1.0,
            z_shift: *z,
            sigma: 1.0,
        }),
        SpeedupFamily::Log { a, p } => Some(RegularDescriptor {
            alpha: *a,
            gamma: -1.0,
            z_shift: 1.0 / p,
            sigma: 1.0,
        }),
        SpeedupFamily::Saturating { a, z, p } => Some(RegularDescriptor {
            alpha: -(a * p),
            gamma: p - 1.0,
            z_shift: *z,
            sigma: 1.0,
        }),
        SpeedupFamily::InvertedShift { a, z, p } => Some(RegularDescriptor {
            alpha: a * p,
            gamma: p - 1.0,
            z_shift: *z,
            sigma: -1.0,
        }),
        SpeedupFamily::Sum(terms) => {
            let mut active = terms.iter().filter(|t| t.coef > 0.0);
            let first = active.next()?;
            if active.next().is_some() {
                // Two or more live terms: s'^(-1) has no closed form.
                return None;
            }
            let inner = family_descriptor(&first.family)?;
            Some(RegularDescriptor {
                alpha: first.coef * inner.alpha,
                ..inner
            })
        }
    }
}

impl SpeedupFunction {
    pub fn new(family: SpeedupFamily, domain_max: f64) -> Result<Self, SpeedupError> {
        if !(domain_max > 0.0 && domain_max.is_finite()) {
            return Err(invalid(
                "speedup",
                format!("domain_max = {domain_max}, need > 0"),
            ));
        }
        check_family(&family)?;
        Ok(SpeedupFunction { family, domain_max })
    }

    pub fn power(a: f64, p: f64, domain_max: f64) -> Result<Self, SpeedupError> {
        Self::new(SpeedupFamily::Power { a, p }, domain_max)
    }

    pub fn shifted_power(a: f64, z: f64, p: f64, domain_max: f64) -> Result<Self, SpeedupError> {
        Self::new(SpeedupFamily::ShiftedPower { a, z, p }, domain_max)
    }

    pub fn log(a: f64, p: f64, domain_max: f64) -> Result<Self, SpeedupError> {
        Self::new(SpeedupFamily::Log { a, p }, domain_max)
    }

    pub fn saturating(a: f64, z: f64, p: f64, domain_max: f64) -> Result<Self, SpeedupError> {
        Self::new(SpeedupFamily::Saturating { a, z, p }, domain_max)
    }

    pub fn inverted_shift(a: f64, z: f64, p: f64, domain_max: f64) -> Result<Self, SpeedupError> {
        Self::new(SpeedupFamily::InvertedShift { a, z, p }, domain_max)
    }

    /// Nonnegative combination of families, sharing one domain.
    pub fn sum(terms: Vec<(f64, SpeedupFamily)>, domain_max: f64) -> Result<Self, SpeedupError> {
        let terms = terms
            .into_iter()
            .map(|(coef, family)| SumTerm { coef, family })
            .collect();
        Self::new(SpeedupFamily::Sum(terms), domain_max)
    }

    pub fn family(&self) -> &SpeedupFamily {
        &self.family
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    /// True for a plain power function `a·theta^p`.
    pub fn is_power(&self) -> bool {
        matches!(self.family, SpeedupFamily::Power { .. })
    }

    fn check_domain(&self, theta: f64) -> Result<f64, SpeedupError> {
        let slack = 1e-9 * self.domain_max;
        if theta < -slack || theta > self.domain_max + slack || theta.is_nan() {
            return Err(SpeedupError::Domain {
                theta,
                domain_max: self.domain_max,
            });
        }
        Ok(theta.clamp(0.0, self.domain_max))
    }

    /// Service rate `s(theta)`.
    pub fn evaluate(&self, theta: f64) -> Result<f64, SpeedupError> {
        Ok(self.eval_raw(self.check_domain(theta)?))
    }

    /// Marginal rate `s'(theta)`; `INFINITY` at zero for power-type functions.
    pub fn derivative(&self, theta: f64) -> Result<f64, SpeedupError> {
        Ok(self.deriv_raw(self.check_domain(theta)?))
    }

    /// Inverse of the marginal rate: the `theta` with `s'(theta) = y`.
    ///
    /// Closed form when a [`RegularDescriptor`] exists, otherwise bisection on
    /// `[0, B]` (valid because `s'` is strictly decreasing) to an absolute
    /// tolerance of `1e-12·B`.
    pub fn derivative_inverse(&self, y: f64) -> Result<f64, SpeedupError> {
        let lo = self.deriv_raw(self.domain_max); // smallest marginal rate
        let hi = self.deriv_raw(0.0);
        if y.is_nan() || y < lo * (1.0 - 1e-9) || (hi.is_finite() && y > hi * (1.0 + 1e-9)) {
            return Err(SpeedupError::DerivativeRange { y, lo, hi });
        }
        if y >= hi {
            return Ok(0.0); // includes y = INFINITY against an infinite s'(0)
        }
        if y <= lo {
            return Ok(self.domain_max);
        }
        if let Some(desc) = self.regular_descriptor() {
            return Ok(desc.derivative_inverse(y).clamp(0.0, self.domain_max));
        }
        Ok(invert_derivative_by_bisection(
            self,
            y,
            0.0,
            self.domain_max,
        ))
    }

    /// Closed-form derivative descriptor, when one exists.
    ///
    /// Present for every single-term family and for sums with exactly one
    /// term carrying a positive coefficient; absent otherwise.
    pub fn regular_descriptor(&self) -> Option<RegularDescriptor> {
        family_descriptor(&self.family)
    }

    /// Samples the model axioms on a uniform grid and reports violations.
    pub fn validate(&self) -> ValidationReport {
        let b = self.domain_max;
        let n = VALIDATION_GRID;
        let thetas: Vec<f64> = (0..n).map(|i| b * i as f64 / (n - 1) as f64).collect();
        let values: Vec<f64> = thetas.iter().map(|&t| self.eval_raw(t)).collect();
        let derivs: Vec<f64> = thetas.iter().map(|&t| self.deriv_raw(t)).collect();

        let scale = values
            .iter()
            .filter(|v| v.is_finite())
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let dscale = derivs
            .iter()
            .filter(|v| v.is_finite())
            .fold(1.0f64, |m, v| m.max(v.abs()));

        let mut violations = Vec::new();

        if values[0].is_nan() || values[0].abs() > STRICTNESS_TOL * scale {
            violations.push(AxiomViolation {
                axiom: Axiom::ZeroAtOrigin,
                theta: 0.0,
                detail: format!("s(0) = {}", values[0]),
            });
        }
        for i in 0..n - 1 {
            let rise = values[i + 1] - values[i];
            if rise.is_nan() || rise <= STRICTNESS_TOL * scale {
                violations.push(AxiomViolation {
                    axiom: Axiom::StrictlyIncreasing,
                    theta: thetas[i + 1],
                    detail: format!(
                        "s({}) = {}, s({}) = {}",
                        thetas[i],
                        values[i],
                        thetas[i + 1],
                        values[i + 1]
                    ),
                });
                break;
            }
        }
        for i in 0..n - 1 {
            // An infinite s'(0) dominates any finite successor; NaN fails the
            // comparison and is reported.
            let strictly_decreasing = if derivs[i].is_infinite() {
                derivs[i + 1].is_finite()
            } else {
                derivs[i] - derivs[i + 1] > STRICTNESS_TOL * dscale
            };
            if !strictly_decreasing {
                violations.push(AxiomViolation {
                    axiom: Axiom::StrictlyConcave,
                    theta: thetas[i + 1],
                    detail: format!(
                        "s'({}) = {}, s'({}) = {}",
                        thetas[i],
                        derivs[i],
                        thetas[i + 1],
                        derivs[i + 1]
                    ),
                });
                break;
            }
        }
        for i in 0..n {
            // The right endpoint may have vanishing slope (saturated families
            // such as 2·theta - theta^2 at theta = 1).
            let ok = if i == n - 1 {
                derivs[i] >= 0.0
            } else {
                derivs[i] > 0.0
            };
            if !ok {
                violations.push(AxiomViolation {
                    axiom: Axiom::PositiveDerivative,
                    theta: thetas[i],
                    detail: format!("s'({}) = {}", thetas[i], derivs[i]),
                });
                break;
            }
        }

        ValidationReport { violations }
    }

    pub(crate) fn eval_raw(&self, theta: f64) -> f64 {
        family_eval(&self.family, theta)
    }

    pub(crate) fn deriv_raw(&self, theta: f64) -> f64 {
        family_deriv(&self.family, theta)
    }
}

/// Monotone bisection for `s'(theta) = y` on `[lo, hi]`.
///
/// Runs to `1e-12·B` absolute and, once the bracket is positive, `1e-12`
/// relative width. The relative phase matters for tiny roots: near zero the
/// marginal rate is extremely sensitive to theta, so an absolute-only stop
/// would leave `s'(theta)` far from `y`. Geometric midpoints keep that phase
/// cheap when the bracket spans orders of magnitude.
pub(crate) fn invert_derivative_by_bisection(
    f: &SpeedupFunction,
    y: f64,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    let abs_tol = 1e-12 * f.domain_max;
    let mut iterations = 0;
    loop {
        let width = hi - lo;
        let abs_done = width <= abs_tol;
        let rel_done = lo > 0.0 && width <= 1e-12 * lo;
        if (abs_done && rel_done) || iterations >= 250 {
            break;
        }
        let mid = if lo > 0.0 && hi > 16.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if f.deriv_raw(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    ZeroAtOrigin,
    StrictlyIncreasing,
    StrictlyConcave,
    PositiveDerivative,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axiom::ZeroAtOrigin => "s(0) = 0",
            Axiom::StrictlyIncreasing => "strictly increasing",
            Axiom::StrictlyConcave => "strictly concave",
            Axiom::PositiveDerivative => "positive derivative",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    /// Witness point where the violation was detected.
    pub theta: f64,
    pub detail: String,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated near theta = {}: {}",
            self.axiom, self.theta, self.detail
        )
    }
}

/// Outcome of sampling the axioms; at most one entry per axiom.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<AxiomViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Serialized form of a speedup function, as embedded in instance files.
///
/// ```json
/// {"family": "log", "a": 1.0, "p": 1.0}
/// {"family": "sum", "terms": [{"coef": 1.0, "f": {"family": "power", "a": 1.0, "p": 0.5}}]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedupSpec {
    Power { a: f64, p: f64 },
    ShiftedPower { a: f64, z: f64, p: f64 },
    Log { a: f64, p: f64 },
    Saturating { a: f64, z: f64, p: f64 },
    InvertedShift { a: f64, z: f64, p: f64 },
    Sum { terms: Vec<TermSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    pub f: Box<SpeedupSpec>,
}

/// Parses a function description from JSON text.
pub fn spec_from_json(text: &str) -> Result<SpeedupSpec, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

impl SpeedupSpec {
    fn to_family(&self) -> SpeedupFamily {
        match self {
            SpeedupSpec::Power { a, p } => SpeedupFamily::Power { a: *a, p: *p },
            SpeedupSpec::ShiftedPower { a, z, p } => SpeedupFamily::ShiftedPower {
                a: *a,
                z: *z,
                p: *p,
            },
            SpeedupSpec::Log { a, p } => SpeedupFamily::Log { a: *a, p: *p },
            SpeedupSpec::Saturating { a, z, p } => SpeedupFamily::Saturating {
                a: *a,
                z: *z,
                p: *p,
            },
            SpeedupSpec::InvertedShift { a, z, p } => SpeedupFamily::InvertedShift {
                a: *a,
                z: *z,
                p: *p,
            },
            SpeedupSpec::Sum { terms } => SpeedupFamily::Sum(
                terms
                    .iter()
                    .map(|t| SumTerm {
                        coef: t.coef,
                        family: t.f.to_family(),
                    })
                    .collect(),
            ),
        }
    }

    /// Builds the runtime function on `[0, domain_max]`.
    pub fn into_function(&self, domain_max: f64) -> Result<SpeedupFunction, SpeedupError> {
        SpeedupFunction::new(self.to_family(), domain_max)
    }

    pub fn from_function(f: &SpeedupFunction) -> Self {
        fn convert(family: &SpeedupFamily) -> SpeedupSpec {
            match family {
                SpeedupFamily::Power { a, p } => SpeedupSpec::Power { a: *a, p: *p },
                SpeedupFamily::ShiftedPower { a, z, p } => SpeedupSpec::ShiftedPower {
                    a: *a,
                    z: *z,
                    p: *p,
                },
                SpeedupFamily::Log { a, p } => SpeedupSpec::Log { a: *a, p: *p },
                SpeedupFamily::Saturating { a, z, p } => SpeedupSpec::Saturating {
                    a: *a,
                    z: *z,
                    p: *p,
                },
                SpeedupFamily::InvertedShift { a, z, p } => SpeedupSpec::InvertedShift {
                    a: *a,
                    z: *z,
                    p: *p,
                },
                SpeedupFamily::Sum(terms) => SpeedupSpec::Sum {
                    terms: terms
                        .iter()
                        .map(|t| TermSpec {
                            coef: t.coef,
                            f: Box::new(convert(&t.family)),
                        })
                        .collect(),
                },
            }
        }
        convert(f.family())
    }
}
