//! Signal temporal logic: formula AST, surface-syntax parser, signals, and
//! exact boolean satisfaction semantics.
//!
//! Formulas are built from named predicates over signal channels, boolean
//! connectives, and the time-bounded temporal operators `F` (eventually),
//! `G` (globally) and `U` (until). The boolean semantics here is the ground
//! truth that the quantitative semantics in [`crate::robustness`] must agree
//! with in sign.

mod eval;
mod parser;
mod signal;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::sat_bool;
pub use parser::parse_stl;
pub use signal::Signal;

pub(crate) use eval::{index_of_time, window};

/// Errors from parsing, signal construction, and formula evaluation.
#[derive(Debug, Error)]
pub enum StlError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("unknown predicate `{name}` at {line}:{col}")]
    UnknownPredicate { name: String, line: usize, col: usize },
    #[error("invalid interval [{a}, {b}]: bounds must satisfy 0 <= a <= b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid band ({lb}, {ub}): lower bound must be below upper bound")]
    InvalidBand { lb: f64, ub: f64 },
    #[error("channel `{name}` not present in signal")]
    UnknownChannel { name: String },
    #[error("window [{from}, {to}] contains no samples of a signal with {samples} samples")]
    EmptyWindow { from: f64, to: f64, samples: usize },
    #[error("time {t} is outside the signal horizon {horizon}")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("invalid signal: {reason}")]
    InvalidSignal { reason: String },
    #[error("signal csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Closed time interval `[a, b]` in seconds attached to a temporal operator.
///
/// `b` may be infinite, which stands for "up to the signal horizon"; this is
/// how an interval-less `F`/`G` is represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn bounded(a: f64, b: f64) -> Result<Self, StlError> {
        if !a.is_finite() || !b.is_finite() || a < 0.0 || b < a {
            return Err(StlError::InvalidInterval { a, b });
        }
        Ok(Self { a, b })
    }

    /// `[0, horizon)` — the default for `F`/`G` written without an interval.
    pub fn unbounded() -> Self {
        Self { a: 0.0, b: f64::INFINITY }
    }

    pub fn lo(&self) -> f64 {
        self.a
    }

    pub fn hi(&self) -> f64 {
        self.b
    }

    pub fn is_unbounded(&self) -> bool {
        self.b.is_infinite()
    }
}

/// Affine margin of a predicate: positive iff the raw constraint holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginFn {
    /// `x - lb`, positive above the lower bound.
    LowerBound(f64),
    /// `ub - x`, positive below the upper bound.
    UpperBound(f64),
    /// `(ub-lb)/2 - |x - (ub+lb)/2|`, positive strictly inside the band.
    Band(f64, f64),
    /// `c - |x|`, positive while the magnitude stays under the threshold.
    Threshold(f64),
}

impl MarginFn {
    pub fn margin(&self, x: f64) -> f64 {
        match *self {
            MarginFn::LowerBound(lb) => x - lb,
            MarginFn::UpperBound(ub) => ub - x,
            MarginFn::Band(lb, ub) => (ub - lb) / 2.0 - (x - (ub + lb) / 2.0).abs(),
            MarginFn::Threshold(c) => c - x.abs(),
        }
    }

    pub fn validate(&self) -> Result<(), StlError> {
        if let MarginFn::Band(lb, ub) = *self {
            if !(lb < ub) {
                return Err(StlError::InvalidBand { lb, ub });
            }
        }
        Ok(())
    }
}

/// Named atomic proposition: a margin function applied to one signal channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub name: String,
    pub channel: String,
    pub margin: MarginFn,
}

impl Predicate {
    pub fn new(
        name: impl Into<String>,
        channel: impl Into<String>,
        margin: MarginFn,
    ) -> Result<Self, StlError> {
        margin.validate()?;
        Ok(Self { name: name.into(), channel: channel.into(), margin })
    }
}

/// Serialized form of a predicate table entry: channel plus margin kind.
///
/// ```json
/// { "channel": "x", "band": [0.4, 0.6] }
/// { "channel": "f", "threshold": 2.0 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateSpec {
    pub channel: String,
    #[serde(flatten)]
    pub margin: MarginFn,
}

impl PredicateSpec {
    pub fn into_predicate(self, name: &str) -> Result<Predicate, StlError> {
        Predicate::new(name, self.channel, self.margin)
    }
}

/// Axis-aligned box in task space, given per axis as `[lower, upper]` meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub name: String,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl RegionSpec {
    pub fn new(name: impl Into<String>, x: [f64; 2], y: [f64; 2], z: [f64; 2]) -> Result<Self, StlError> {
        let region = Self { name: name.into(), x, y, z };
        region.validate()?;
        Ok(region)
    }

    /// Cube of side `2 * half` centered at `center`.
    pub fn cube(name: impl Into<String>, center: [f64; 3], half: f64) -> Result<Self, StlError> {
        Self::new(
            name,
            [center[0] - half, center[0] + half],
            [center[1] - half, center[1] + half],
            [center[2] - half, center[2] + half],
        )
    }

    pub fn validate(&self) -> Result<(), StlError> {
        for &[lb, ub] in [&self.x, &self.y, &self.z] {
            if !lb.is_finite() || !ub.is_finite() || !(lb < ub) {
                return Err(StlError::InvalidBand { lb, ub });
            }
        }
        Ok(())
    }

    pub fn axis(&self, i: usize) -> [f64; 2] {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| {
            let [lb, ub] = self.axis(i);
            lb < p[i] && p[i] < ub
        })
    }

    /// Distance to the region boundary: Euclidean distance when outside,
    /// negated closest-face distance when inside.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        let mut outside_sq = 0.0;
        let mut inside_min = f64::INFINITY;
        for i in 0..3 {
            let [lb, ub] = self.axis(i);
            let d = (lb - p[i]).max(p[i] - ub);
            if d > 0.0 {
                outside_sq += d * d;
            } else {
                inside_min = inside_min.min((p[i] - lb).min(ub - p[i]));
            }
        }
        if outside_sq > 0.0 {
            outside_sq.sqrt()
        } else {
            -inside_min
        }
    }
}

/// STL formula tree.
#[derive(Debug, Clone, PartialEq)]
pub enum StlFormula {
    Pred(Predicate),
    Not(Box<StlFormula>),
    And(Vec<StlFormula>),
    Or(Vec<StlFormula>),
    Globally(Interval, Box<StlFormula>),
    Eventually(Interval, Box<StlFormula>),
    Until(Interval, Box<StlFormula>, Box<StlFormula>),
}

impl StlFormula {
    pub fn pred(p: Predicate) -> Self {
        StlFormula::Pred(p)
    }

    pub fn not(f: StlFormula) -> Self {
        StlFormula::Not(Box::new(f))
    }

    /// N-ary conjunction; a single child collapses to itself.
    pub fn and(mut children: Vec<StlFormula>) -> Self {
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            StlFormula::And(children)
        }
    }

    pub fn or(mut children: Vec<StlFormula>) -> Self {
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            StlFormula::Or(children)
        }
    }

    pub fn globally(interval: Interval, f: StlFormula) -> Self {
        StlFormula::Globally(interval, Box::new(f))
    }

    pub fn eventually(interval: Interval, f: StlFormula) -> Self {
        StlFormula::Eventually(interval, Box::new(f))
    }

    pub fn until(interval: Interval, lhs: StlFormula, rhs: StlFormula) -> Self {
        StlFormula::Until(interval, Box::new(lhs), Box::new(rhs))
    }

    /// Children of a top-level conjunction, or the formula itself.
    pub fn top_level_clauses(&self) -> &[StlFormula] {
        match self {
            StlFormula::And(children) => children,
            other => std::slice::from_ref(other),
        }
    }

    /// All predicates in the tree, in syntactic order.
    pub fn predicates(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            StlFormula::Pred(p) => out.push(p),
            StlFormula::Not(f) => f.collect_predicates(out),
            StlFormula::And(cs) | StlFormula::Or(cs) => {
                for c in cs {
                    c.collect_predicates(out);
                }
            }
            StlFormula::Globally(_, f) | StlFormula::Eventually(_, f) => f.collect_predicates(out),
            StlFormula::Until(_, lhs, rhs) => {
                lhs.collect_predicates(out);
                rhs.collect_predicates(out);
            }
        }
    }
}

/// Conjunction of the three per-axis band margins describing an axis-aligned
/// region, with predicates named `<region>_<axis>`.
pub fn region_to_formula(
    region: &RegionSpec,
    channels: (&str, &str, &str),
) -> Result<StlFormula, StlError> {
    region.validate()?;
    let chans = [channels.0, channels.1, channels.2];
    let axes = ["x", "y", "z"];
    let mut preds = Vec::with_capacity(3);
    for i in 0..3 {
        if chans[i].is_empty() {
            return Err(StlError::UnknownChannel { name: String::new() });
        }
        let [lb, ub] = region.axis(i);
        preds.push(StlFormula::Pred(Predicate::new(
            format!("{}_{}", region.name, axes[i]),
            chans[i],
            MarginFn::Band(lb, ub),
        )?));
    }
    Ok(StlFormula::And(preds))
}

// Formula printing. Output re-parses to a structurally equal tree given the
// same predicate table.

fn fmt_time(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{}", v as i64)
    } else {
        write!(f, "{v}")
    }
}

fn fmt_interval(iv: &Interval, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if iv.is_unbounded() {
        return Ok(());
    }
    write!(f, "[")?;
    fmt_time(iv.a, f)?;
    write!(f, ",")?;
    fmt_time(iv.b, f)?;
    write!(f, "]")
}

impl StlFormula {
    fn precedence(&self) -> u8 {
        match self {
            StlFormula::Or(_) => 0,
            StlFormula::And(_) => 1,
            _ => 2,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let wrap = self.precedence() < min_prec;
        if wrap {
            write!(f, "(")?;
        }
        match self {
            StlFormula::Pred(p) => write!(f, "{}", p.name)?,
            StlFormula::Not(inner) => {
                write!(f, "not ")?;
                inner.fmt_prec(f, 2)?;
            }
            StlFormula::And(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " and ")?;
                    }
                    c.fmt_prec(f, 2)?;
                }
            }
            StlFormula::Or(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " or ")?;
                    }
                    c.fmt_prec(f, 1)?;
                }
            }
            StlFormula::Globally(iv, inner) => {
                write!(f, "G")?;
                fmt_interval(iv, f)?;
                write!(f, "(")?;
                inner.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            StlFormula::Eventually(iv, inner) => {
                write!(f, "F")?;
                fmt_interval(iv, f)?;
                write!(f, "(")?;
                inner.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            StlFormula::Until(iv, lhs, rhs) => {
                write!(f, "U")?;
                fmt_interval(iv, f)?;
                write!(f, "(")?;
                lhs.fmt_prec(f, 0)?;
                write!(f, ", ")?;
                rhs.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for StlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
