//! Scalar activation functions on interval domains.
//!
//! An [`ActivationSpec`] bundles a function kind with the interval it is
//! certified on, its image over that interval, and the strategy used to invert
//! it. Specs are written as short strings (`sigmoid`, `affine:2,1`,
//! `scale:0.5,0.5:tanh@-10,10~bisect`) and parse back to the same value.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Absolute slack allowed when testing domain membership at the endpoints.
pub const DOMAIN_SLACK: f64 = 1e-12;
/// Inputs to an inverse must clear an open (asymptotic) endpoint by this much.
pub const RANGE_MARGIN: f64 = 1e-15;
/// Derivatives and values at or below this magnitude count as vanishing.
pub const VANISHING_THRESHOLD: f64 = 1e-12;
/// Grid size used for certification when the caller does not pick one.
pub const DEFAULT_GRID: usize = 1001;

// Natural domain of `exp`; keeps every value finite.
const EXP_LIMIT: f64 = 700.0;
// Doublings tried when growing a bisection bracket on an unbounded side.
const MAX_BRACKET_DOUBLINGS: usize = 1100;

/// A closed interval `[lo, hi]` with `lo < hi`. Endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Closed membership with [`DOMAIN_SLACK`] at both ends.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - DOMAIN_SLACK && x <= self.hi + DOMAIN_SLACK
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// The `i`-th of `count` uniformly spaced points, `lo + i·(hi−lo)/(count−1)`.
    pub fn grid_point(&self, i: usize, count: usize) -> f64 {
        debug_assert!(count >= 2 && i < count);
        if i == count - 1 {
            return self.hi;
        }
        self.lo + (i as f64) * (self.hi - self.lo) / ((count - 1) as f64)
    }

    /// Smallest interval containing every value; a single repeated value is
    /// widened by `1e-6·max(1,|v|)` on each side.
    pub fn hull(values: impl IntoIterator<Item = f64>) -> Option<Interval> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !(lo.is_finite() && hi.is_finite()) {
            return None;
        }
        if lo < hi {
            return Some(Interval { lo, hi });
        }
        let pad = 1e-6 * lo.abs().max(1.0);
        Some(Interval {
            lo: lo - pad,
            hi: hi + pad,
        })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_real(self.lo), fmt_real(self.hi))
    }
}

/// Image of an activation's domain. Endpoints that are only approached
/// asymptotically are open; a constant function has `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl ValueRange {
    /// Whether `y` may be passed to an inverse: inside closed ends, and at
    /// least [`RANGE_MARGIN`] away from open ends.
    pub fn admits(&self, y: f64) -> bool {
        if y.is_nan() {
            return false;
        }
        let above = if self.lo_open {
            y - self.lo > RANGE_MARGIN
        } else {
            y >= self.lo
        };
        let below = if self.hi_open {
            self.hi - y > RANGE_MARGIN
        } else {
            y <= self.hi
        };
        above && below
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

impl fmt::Display for ValueRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            fmt_real(self.lo),
            fmt_real(self.hi),
            if self.hi_open { ')' } else { ']' }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
}

/// The function family of an activation.
#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Sigmoid,
    Tanh,
    Identity,
    /// `slope·x + intercept`
    Affine { slope: f64, intercept: f64 },
    Exp,
    Softplus,
    /// `scale·base(x) + shift`
    Scaled {
        scale: f64,
        shift: f64,
        base: Box<Kind>,
    },
}

impl Kind {
    fn value(&self, x: f64) -> f64 {
        match self {
            Kind::Sigmoid => sigmoid(x),
            Kind::Tanh => x.tanh(),
            Kind::Identity => x,
            Kind::Affine { slope, intercept } => slope * x + intercept,
            Kind::Exp => x.exp(),
            Kind::Softplus => {
                if x > 0.0 {
                    x + (-x).exp().ln_1p()
                } else {
                    x.exp().ln_1p()
                }
            }
            Kind::Scaled { scale, shift, base } => scale * base.value(x) + shift,
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            Kind::Sigmoid => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Kind::Tanh => {
                let c = x.cosh();
                1.0 / (c * c)
            }
            Kind::Identity => 1.0,
            Kind::Affine { slope, .. } => *slope,
            Kind::Exp => x.exp(),
            Kind::Softplus => sigmoid(x),
            Kind::Scaled { scale, base, .. } => scale * base.derivative(x),
        }
    }

    // Closed-form inverse; callers guarantee `y` lies in the range.
    fn inverse(&self, y: f64) -> f64 {
        match self {
            Kind::Sigmoid => y.ln() - (-y).ln_1p(),
            Kind::Tanh => y.atanh(),
            Kind::Identity => y,
            Kind::Affine { slope, intercept } => (y - intercept) / slope,
            Kind::Exp => y.ln(),
            // ln(e^y − 1) written to stay finite for large y
            Kind::Softplus => y + (-(-y).exp_m1()).ln(),
            Kind::Scaled { scale, shift, base } => base.inverse((y - shift) / scale),
        }
    }

    fn monotonicity(&self) -> Monotonicity {
        match self {
            Kind::Sigmoid | Kind::Tanh | Kind::Identity | Kind::Exp | Kind::Softplus => {
                Monotonicity::Increasing
            }
            Kind::Affine { slope, .. } => sign_monotonicity(*slope),
            Kind::Scaled { scale, base, .. } => {
                match (sign_monotonicity(*scale), base.monotonicity()) {
                    (Monotonicity::Constant, _) | (_, Monotonicity::Constant) => {
                        Monotonicity::Constant
                    }
                    (a, b) if a == b => Monotonicity::Increasing,
                    _ => Monotonicity::Decreasing,
                }
            }
        }
    }

    fn natural_domain(&self) -> Interval {
        match self {
            Kind::Exp => Interval {
                lo: -EXP_LIMIT,
                hi: EXP_LIMIT,
            },
            Kind::Scaled { base, .. } => base.natural_domain(),
            _ => Interval::REAL,
        }
    }

    // Limit as x → −∞ (`upper == false`) or +∞.
    fn limit(&self, upper: bool) -> f64 {
        let inf = if upper {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        match self {
            Kind::Sigmoid => {
                if upper {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Tanh => {
                if upper {
                    1.0
                } else {
                    -1.0
                }
            }
            Kind::Identity => inf,
            Kind::Affine { slope, intercept } => {
                if *slope == 0.0 {
                    *intercept
                } else {
                    slope * inf
                }
            }
            Kind::Exp => {
                if upper {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Kind::Softplus => {
                if upper {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Kind::Scaled { scale, shift, base } => {
                if *scale == 0.0 {
                    *shift
                } else {
                    scale * base.limit(upper) + shift
                }
            }
        }
    }

    fn write_canonical(&self, out: &mut String) {
        match self {
            Kind::Sigmoid => out.push_str("sigmoid"),
            Kind::Tanh => out.push_str("tanh"),
            Kind::Identity => out.push_str("identity"),
            Kind::Exp => out.push_str("exp"),
            Kind::Softplus => out.push_str("softplus"),
            Kind::Affine { slope, intercept } => {
                out.push_str(&format!("affine:{},{}", fmt_real(*slope), fmt_real(*intercept)))
            }
            Kind::Scaled { scale, shift, base } => {
                out.push_str(&format!("scale:{},{}:", fmt_real(*scale), fmt_real(*shift)));
                base.write_canonical(out);
            }
        }
    }

    fn parse(s: &str) -> Result<Kind> {
        let bad = |msg: &str| Error::InvalidArgument(format!("activation `{s}`: {msg}"));
        match s {
            "sigmoid" => return Ok(Kind::Sigmoid),
            "tanh" => return Ok(Kind::Tanh),
            "identity" => return Ok(Kind::Identity),
            "exp" => return Ok(Kind::Exp),
            "softplus" => return Ok(Kind::Softplus),
            _ => {}
        }
        if let Some(params) = s.strip_prefix("affine:") {
            let (slope, intercept) = parse_pair(params).ok_or_else(|| bad("expected affine:<a>,<b>"))?;
            return Ok(Kind::Affine { slope, intercept });
        }
        if let Some(rest) = s.strip_prefix("scale:") {
            let (params, base) = rest
                .split_once(':')
                .ok_or_else(|| bad("expected scale:<c>,<d>:<base>"))?;
            let (scale, shift) = parse_pair(params).ok_or_else(|| bad("expected scale:<c>,<d>:<base>"))?;
            return Ok(Kind::Scaled {
                scale,
                shift,
                base: Box::new(Kind::parse(base)?),
            });
        }
        Err(bad("unknown kind"))
    }
}

fn sign_monotonicity(v: f64) -> Monotonicity {
    if v > 0.0 {
        Monotonicity::Increasing
    } else if v < 0.0 {
        Monotonicity::Decreasing
    } else {
        Monotonicity::Constant
    }
}

fn parse_pair(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once(',')?;
    let a: f64 = a.trim().parse().ok()?;
    let b: f64 = b.trim().parse().ok()?;
    (a.is_finite() && b.is_finite()).then_some((a, b))
}

/// Shortest decimal literal that parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseStrategy {
    Analytic,
    Bisection,
}

/// An activation function together with its certified domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSpec {
    name: String,
    domain: Interval,
    kind: Kind,
    range: ValueRange,
    inverse_strategy: InverseStrategy,
}

impl ActivationSpec {
    pub fn new(kind: Kind) -> ActivationSpec {
        let domain = kind.natural_domain();
        Self::assemble(kind, domain, InverseStrategy::Analytic)
    }

    pub fn sigmoid() -> ActivationSpec {
        Self::new(Kind::Sigmoid)
    }

    pub fn tanh() -> ActivationSpec {
        Self::new(Kind::Tanh)
    }

    pub fn identity() -> ActivationSpec {
        Self::new(Kind::Identity)
    }

    pub fn exp() -> ActivationSpec {
        Self::new(Kind::Exp)
    }

    pub fn softplus() -> ActivationSpec {
        Self::new(Kind::Softplus)
    }

    pub fn affine(slope: f64, intercept: f64) -> ActivationSpec {
        Self::new(Kind::Affine { slope, intercept })
    }

    /// `scale·base(x) + shift` over the base's domain.
    pub fn scaled(scale: f64, shift: f64, base: &ActivationSpec) -> ActivationSpec {
        let kind = Kind::Scaled {
            scale,
            shift,
            base: Box::new(base.kind.clone()),
        };
        Self::assemble(kind, base.domain, base.inverse_strategy)
    }

    /// Restrict to a sub-interval of the kind's natural domain.
    pub fn with_domain(self, domain: Interval) -> Result<ActivationSpec> {
        let natural = self.kind.natural_domain();
        if domain.lo < natural.lo || domain.hi > natural.hi {
            return Err(Error::InvalidArgument(format!(
                "domain {domain} exceeds the natural domain {natural} of `{}`",
                self.name
            )));
        }
        Ok(Self::assemble(self.kind, domain, self.inverse_strategy))
    }

    pub fn with_inverse_strategy(self, strategy: InverseStrategy) -> ActivationSpec {
        Self::assemble(self.kind, self.domain, strategy)
    }

    fn assemble(kind: Kind, domain: Interval, inverse_strategy: InverseStrategy) -> ActivationSpec {
        let range = compute_range(&kind, &domain);
        let mut name = String::new();
        kind.write_canonical(&mut name);
        if domain != kind.natural_domain() {
            name.push_str(&format!("@{},{}", fmt_real(domain.lo), fmt_real(domain.hi)));
        }
        if inverse_strategy == InverseStrategy::Bisection {
            name.push_str("~bisect");
        }
        ActivationSpec {
            name,
            domain,
            kind,
            range,
            inverse_strategy,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn range(&self) -> ValueRange {
        self.range
    }

    pub fn inverse_strategy(&self) -> InverseStrategy {
        self.inverse_strategy
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.kind.monotonicity()
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                activation: self.name.clone(),
                value: x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            })
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.kind.value(x))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.kind.derivative(x))
    }

    /// Preimage of `y` in the domain, using the configured inverse strategy.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if self.monotonicity() == Monotonicity::Constant {
            return Err(Error::NotInvertible {
                activation: self.name.clone(),
            });
        }
        if !self.range.admits(y) {
            return Err(Error::RangeViolation {
                activation: self.name.clone(),
                value: y,
                range: self.range.to_string(),
            });
        }
        let x = match self.inverse_strategy {
            InverseStrategy::Analytic => self.kind.inverse(y),
            InverseStrategy::Bisection => self.bisect(y),
        };
        Ok(self.domain.clamp(x))
    }

    /// Bisection inverse regardless of the configured strategy.
    pub fn invert_by_bisection(&self, y: f64) -> Result<f64> {
        self.clone()
            .with_inverse_strategy(InverseStrategy::Bisection)
            .invert(y)
    }

    // Bisects h(x) = ±(value(x) − y), oriented to be nondecreasing, down to
    // adjacent floats.
    fn bisect(&self, y: f64) -> f64 {
        let sign = match self.monotonicity() {
            Monotonicity::Decreasing => -1.0,
            _ => 1.0,
        };
        let h = |x: f64| sign * (self.kind.value(x) - y);

        let anchor = self.domain.clamp(0.0);
        let mut lo = self.domain.lo;
        if !lo.is_finite() {
            let mut step = 1.0;
            lo = anchor - step;
            for _ in 0..MAX_BRACKET_DOUBLINGS {
                if h(lo) <= 0.0 {
                    break;
                }
                step *= 2.0;
                lo = anchor - step;
            }
        }
        let mut hi = self.domain.hi;
        if !hi.is_finite() {
            let mut step = 1.0;
            hi = anchor + step;
            for _ in 0..MAX_BRACKET_DOUBLINGS {
                if h(hi) >= 0.0 {
                    break;
                }
                step *= 2.0;
                hi = anchor + step;
            }
        }

        loop {
            let mid = 0.5 * lo + 0.5 * hi;
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if h(lo).abs() <= h(hi).abs() {
            lo
        } else {
            hi
        }
    }
}

fn compute_range(kind: &Kind, domain: &Interval) -> ValueRange {
    let end = |x: f64, upper: bool| {
        if x.is_finite() {
            (kind.value(x), false)
        } else {
            (kind.limit(upper), true)
        }
    };
    let (a, a_open) = end(domain.lo, false);
    let (b, b_open) = end(domain.hi, true);
    match kind.monotonicity() {
        Monotonicity::Decreasing => ValueRange {
            lo: b,
            hi: a,
            lo_open: b_open && b.is_finite(),
            hi_open: a_open && a.is_finite(),
        },
        Monotonicity::Increasing => ValueRange {
            lo: a,
            hi: b,
            lo_open: a_open && a.is_finite(),
            hi_open: b_open && b.is_finite(),
        },
        Monotonicity::Constant => ValueRange {
            lo: a,
            hi: a,
            lo_open: false,
            hi_open: false,
        },
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for ActivationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (s, strategy) = match s.strip_suffix("~bisect") {
            Some(rest) => (rest, InverseStrategy::Bisection),
            None => (s, InverseStrategy::Analytic),
        };
        let (kind_str, domain) = match s.split_once('@') {
            Some((k, d)) => {
                let (lo, hi) = d
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
                    .ok_or_else(|| Error::InvalidArgument(format!("activation `{s}`: bad domain `{d}`")))?;
                (k, Some(Interval::new(lo, hi)?))
            }
            None => (s, None),
        };
        let spec = ActivationSpec::new(Kind::parse(kind_str)?).with_inverse_strategy(strategy);
        match domain {
            Some(d) => spec.with_domain(d),
            None => Ok(spec),
        }
    }
}

/// Which hypothesis a [`CertificationReport`] speaks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifiedProperty {
    DerivativeNonvanishing,
    ValueNonvanishing,
    Monotone,
}

impl fmt::Display for CertifiedProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertifiedProperty::DerivativeNonvanishing => "derivative-nonvanishing",
            CertifiedProperty::ValueNonvanishing => "value-nonvanishing",
            CertifiedProperty::Monotone => "monotone",
        })
    }
}

/// Outcome of a grid-sampled check. A pass is evidence, not a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub passed: bool,
    pub grid_size: usize,
    pub worst_point: f64,
    pub worst_value: f64,
    pub property: CertifiedProperty,
}

fn certification_grid(spec: &ActivationSpec, interval: &Interval, grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid must be at least 2, got {grid}")));
    }
    if !interval.is_finite() || !spec.domain.contains_interval(interval) {
        return Err(Error::InvalidArgument(format!(
            "interval {interval} is not a finite subset of the domain {} of `{}`",
            spec.domain, spec.name
        )));
    }
    Ok(())
}

fn sampled(spec: &ActivationSpec, interval: &Interval, grid: usize, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    (0..grid)
        .map(|i| {
            let x = spec.domain.clamp(interval.grid_point(i, grid));
            (x, f(x))
        })
        .collect()
}

fn smallest_magnitude(samples: &[(f64, f64)]) -> (f64, f64) {
    samples
        .iter()
        .copied()
        .fold((samples[0].0, f64::INFINITY), |best, (x, v)| {
            if v.is_nan() || v.abs() < best.1.abs() || best.1.is_nan() {
                (x, v)
            } else {
                best
            }
        })
}

/// Samples the derivative on `grid` uniform points of `interval`; passes iff
/// every value has the same sign with magnitude above [`VANISHING_THRESHOLD`].
pub fn check_invertible(spec: &ActivationSpec, interval: &Interval, grid: usize) -> Result<CertificationReport> {
    certification_grid(spec, interval, grid)?;
    let samples = sampled(spec, interval, grid, |x| spec.kind.derivative(x));
    let (worst_point, worst_value) = smallest_magnitude(&samples);
    let all_positive = samples.iter().all(|&(_, d)| d > 0.0);
    let all_negative = samples.iter().all(|&(_, d)| d < 0.0);
    Ok(CertificationReport {
        passed: (all_positive || all_negative) && worst_value.abs() > VANISHING_THRESHOLD,
        grid_size: grid,
        worst_point,
        worst_value,
        property: CertifiedProperty::DerivativeNonvanishing,
    })
}

/// Samples the function itself; fails if any value is within
/// [`VANISHING_THRESHOLD`] of zero or adjacent samples change sign.
pub fn check_nonvanishing(spec: &ActivationSpec, interval: &Interval, grid: usize) -> Result<CertificationReport> {
    certification_grid(spec, interval, grid)?;
    let samples = sampled(spec, interval, grid, |x| spec.kind.value(x));
    let (worst_point, worst_value) = smallest_magnitude(&samples);
    let large = samples.iter().all(|&(_, v)| v.abs() > VANISHING_THRESHOLD);
    let sign_change = samples
        .windows(2)
        .any(|w| w[0].1.signum() != w[1].1.signum());
    Ok(CertificationReport {
        passed: large && !sign_change,
        grid_size: grid,
        worst_point,
        worst_value,
        property: CertifiedProperty::ValueNonvanishing,
    })
}
