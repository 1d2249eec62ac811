//! Quantitative STL semantics.
//!
//! Two interpretations of the same formula tree:
//!
//! - **Space robustness** — the classical min/max recursion. Used as the
//!   baseline and as the oracle in soundness tests.
//! - **Smooth robustness** — derives every operator from negation and a
//!   smooth, sign-preserving conjunction with sharpness parameter `ν`. The
//!   conjunction recovers `min` as `ν → ∞` and still grades partial progress
//!   at finite `ν`, which is what makes it usable as an optimization reward.
//!
//! Both agree with [`crate::stl::sat_bool`] in sign whenever they are
//! nonzero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{index_of_time, window, Signal, StlError, StlFormula};

#[derive(Debug, Error)]
pub enum RobustnessError {
    #[error(transparent)]
    Eval(#[from] StlError),
    #[error("robustness aggregation over an empty set")]
    EmptyInput,
    #[error("non-finite robustness operand {0}")]
    NonFinite(f64),
    #[error("smoothing exponent must be positive, got {0}")]
    InvalidNu(f64),
}

/// Which quantitative interpretation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Space,
    New,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub semantics: Semantics,
    /// Smoothing exponent ν; only the smooth semantics reads it.
    #[serde(default = "default_nu")]
    pub nu: f64,
}

fn default_nu() -> f64 {
    1.0
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self { semantics: Semantics::New, nu: default_nu() }
    }
}

impl RobustnessConfig {
    pub fn space() -> Self {
        Self { semantics: Semantics::Space, nu: default_nu() }
    }

    pub fn validate(&self) -> Result<(), RobustnessError> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(RobustnessError::InvalidNu(self.nu));
        }
        Ok(())
    }
}

/// Robustness degree; `boundary` flags an exact zero, where the boolean
/// verdict is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessValue {
    pub value: f64,
    pub boundary: bool,
}

impl From<f64> for RobustnessValue {
    fn from(value: f64) -> Self {
        Self { value, boundary: value == 0.0 }
    }
}

/// Classical space robustness of `formula` at time `t`.
pub fn space_robustness(
    formula: &StlFormula,
    signal: &Signal,
    t: f64,
) -> Result<RobustnessValue, RobustnessError> {
    let at = index_of_time(signal, t)?;
    Ok(space_at(formula, signal, at)?.into())
}

/// Smooth robustness of `formula` at time `t` with the configured ν.
pub fn new_robustness(
    formula: &StlFormula,
    signal: &Signal,
    t: f64,
    cfg: &RobustnessConfig,
) -> Result<RobustnessValue, RobustnessError> {
    cfg.validate()?;
    let at = index_of_time(signal, t)?;
    Ok(new_at(formula, signal, at, cfg.nu)?.into())
}

/// Evaluates with whichever semantics `cfg` selects.
pub fn evaluate(
    formula: &StlFormula,
    signal: &Signal,
    t: f64,
    cfg: &RobustnessConfig,
) -> Result<RobustnessValue, RobustnessError> {
    match cfg.semantics {
        Semantics::Space => space_robustness(formula, signal, t),
        Semantics::New => new_robustness(formula, signal, t, cfg),
    }
}

fn space_at(formula: &StlFormula, signal: &Signal, at: usize) -> Result<f64, StlError> {
    match formula {
        StlFormula::Pred(p) => Ok(p.margin.margin(signal.sample(&p.channel, at)?)),
        StlFormula::Not(inner) => Ok(-space_at(inner, signal, at)?),
        StlFormula::And(children) => {
            let mut acc = f64::INFINITY;
            for c in children {
                acc = acc.min(space_at(c, signal, at)?);
            }
            Ok(acc)
        }
        StlFormula::Or(children) => {
            let mut acc = f64::NEG_INFINITY;
            for c in children {
                acc = acc.max(space_at(c, signal, at)?);
            }
            Ok(acc)
        }
        StlFormula::Globally(iv, inner) => {
            let mut acc = f64::INFINITY;
            for j in window(signal, at, iv)? {
                acc = acc.min(space_at(inner, signal, j)?);
            }
            Ok(acc)
        }
        StlFormula::Eventually(iv, inner) => {
            let mut acc = f64::NEG_INFINITY;
            for j in window(signal, at, iv)? {
                acc = acc.max(space_at(inner, signal, j)?);
            }
            Ok(acc)
        }
        StlFormula::Until(iv, lhs, rhs) => {
            // max over witnesses t' of min(rhs at t', min of lhs over [at, t')).
            let mut best = f64::NEG_INFINITY;
            let mut prefix = f64::INFINITY;
            let mut j = at;
            for tp in window(signal, at, iv)? {
                while j < tp {
                    prefix = prefix.min(space_at(lhs, signal, j)?);
                    j += 1;
                }
                best = best.max(space_at(rhs, signal, tp)?.min(prefix));
            }
            Ok(best)
        }
    }
}

fn new_at(
    formula: &StlFormula,
    signal: &Signal,
    at: usize,
    nu: f64,
) -> Result<f64, RobustnessError> {
    match formula {
        StlFormula::Pred(p) => Ok(p.margin.margin(signal.sample(&p.channel, at)?)),
        StlFormula::Not(inner) => Ok(-new_at(inner, signal, at, nu)?),
        StlFormula::And(children) => {
            let values = children
                .iter()
                .map(|c| new_at(c, signal, at, nu))
                .collect::<Result<Vec<_>, _>>()?;
            new_robustness_conj(&values, nu)
        }
        StlFormula::Or(children) => {
            let values = children
                .iter()
                .map(|c| new_at(c, signal, at, nu))
                .collect::<Result<Vec<_>, _>>()?;
            new_disj(&values, nu)
        }
        StlFormula::Globally(iv, inner) => {
            let values = window(signal, at, iv)?
                .map(|j| new_at(inner, signal, j, nu))
                .collect::<Result<Vec<_>, _>>()?;
            new_robustness_conj(&values, nu)
        }
        StlFormula::Eventually(iv, inner) => {
            let values = window(signal, at, iv)?
                .map(|j| new_at(inner, signal, j, nu))
                .collect::<Result<Vec<_>, _>>()?;
            new_disj(&values, nu)
        }
        StlFormula::Until(iv, lhs, rhs) => {
            // Disjunction over witnesses of conj({rhs at t'} ∪ lhs prefix).
            let mut witnesses = Vec::new();
            let mut prefix: Vec<f64> = Vec::new();
            let mut j = at;
            for tp in window(signal, at, iv)? {
                while j < tp {
                    prefix.push(new_at(lhs, signal, j, nu)?);
                    j += 1;
                }
                let mut set = Vec::with_capacity(prefix.len() + 1);
                set.push(new_at(rhs, signal, tp, nu)?);
                set.extend_from_slice(&prefix);
                witnesses.push(new_robustness_conj(&set, nu)?);
            }
            new_disj(&witnesses, nu)
        }
    }
}

/// Smooth conjunction of a robustness set.
///
/// With `ρ_min = min(ρ)` and `ρ̃_i = (ρ_i − ρ_min) / ρ_min`:
///
/// ```text
/// ρ_min < 0:  Σ ρ_min e^{ρ̃_i} e^{ν ρ̃_i} / Σ e^{ν ρ̃_i}
/// ρ_min > 0:  Σ ρ_i e^{−ν ρ̃_i} / Σ e^{−ν ρ̃_i}
/// ρ_min = 0:  0
/// ```
///
/// The result carries the sign of `ρ_min` and tends to `min(ρ)` as `ν → ∞`.
/// Exponents are shifted by their maximum before exponentiation; the zero
/// case triggers only at an exact zero.
pub fn new_robustness_conj(rho: &[f64], nu: f64) -> Result<f64, RobustnessError> {
    if rho.is_empty() {
        return Err(RobustnessError::EmptyInput);
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(RobustnessError::InvalidNu(nu));
    }
    let mut rho_min = f64::INFINITY;
    for &r in rho {
        if !r.is_finite() {
            return Err(RobustnessError::NonFinite(r));
        }
        rho_min = rho_min.min(r);
    }
    if rho_min == 0.0 {
        return Ok(0.0);
    }
    let tilde: Vec<f64> = rho.iter().map(|&r| (r - rho_min) / rho_min).collect();
    if rho_min < 0.0 {
        let shift = tilde.iter().map(|&t| nu * t).fold(f64::NEG_INFINITY, f64::max);
        let num: f64 = tilde.iter().map(|&t| ((1.0 + nu) * t - shift).exp()).sum();
        let den: f64 = tilde.iter().map(|&t| (nu * t - shift).exp()).sum();
        Ok(rho_min * num / den)
    } else {
        let shift = tilde.iter().map(|&t| -nu * t).fold(f64::NEG_INFINITY, f64::max);
        let num: f64 = rho
            .iter()
            .zip(&tilde)
            .map(|(&r, &t)| r * (-nu * t - shift).exp())
            .sum();
        let den: f64 = tilde.iter().map(|&t| (-nu * t - shift).exp()).sum();
        Ok(num / den)
    }
}

/// Smooth disjunction, dual of the conjunction.
pub fn new_disj(rho: &[f64], nu: f64) -> Result<f64, RobustnessError> {
    let negated: Vec<f64> = rho.iter().map(|&r| -r).collect();
    Ok(-new_robustness_conj(&negated, nu)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{Interval, MarginFn, Predicate};
    use indexmap::IndexMap;

    fn one_channel(dt: f64, values: Vec<f64>) -> Signal {
        let mut channels = IndexMap::new();
        channels.insert("s".to_string(), values);
        Signal::new(dt, channels).unwrap()
    }

    fn band(name: &str, lb: f64, ub: f64) -> StlFormula {
        StlFormula::Pred(Predicate::new(name, "s", MarginFn::Band(lb, ub)).unwrap())
    }

    #[test]
    fn predicate_margin_is_the_robustness() {
        let s = one_channel(0.1, vec![0.5; 10]);
        let r = space_robustness(&band("a", 0.4, 0.6), &s, 0.0).unwrap();
        assert!((r.value - 0.1).abs() < 1e-12);
        assert!(!r.boundary);
    }

    #[test]
    fn conj_of_equal_positives_is_the_value() {
        for nu in [0.5, 1.0, 10.0] {
            let v = new_robustness_conj(&[0.3, 0.3, 0.3], nu).unwrap();
            assert!((v - 0.3).abs() < 1e-12, "nu={nu}: {v}");
        }
    }

    #[test]
    fn conj_zero_minimum_is_zero() {
        assert_eq!(new_robustness_conj(&[0.0, 0.5, 1.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn conj_mixed_signs_matches_direct_substitution() {
        // rho = (-1, 1), nu = 1: tilde = (0, -2), so the value is
        // (-1 - e^{-4}) / (1 + e^{-2}).
        let expected = (-1.0 - (-4.0f64).exp()) / (1.0 + (-2.0f64).exp());
        let v = new_robustness_conj(&[-1.0, 1.0], 1.0).unwrap();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        assert!((v + 0.8969).abs() < 1e-4);
    }

    #[test]
    fn conj_tends_to_min_for_large_nu() {
        let v = new_robustness_conj(&[0.2, 0.5], 100.0).unwrap();
        assert!((v - 0.2).abs() <= 1e-3, "{v}");
    }

    #[test]
    fn conj_rejects_bad_input() {
        assert!(matches!(new_robustness_conj(&[], 1.0), Err(RobustnessError::EmptyInput)));
        assert!(matches!(
            new_robustness_conj(&[f64::NAN], 1.0),
            Err(RobustnessError::NonFinite(_))
        ));
        assert!(matches!(
            new_robustness_conj(&[0.1], 0.0),
            Err(RobustnessError::InvalidNu(_))
        ));
    }

    #[test]
    fn conj_is_stable_for_extreme_skew() {
        // Huge spread must not overflow; minimum element keeps weight one.
        let v = new_robustness_conj(&[-1e-9, 1e6], 1.0).unwrap();
        assert!(v.is_finite());
        assert!(v < 0.0);
        let v = new_robustness_conj(&[1e-9, 1e6], 100.0).unwrap();
        assert!(v.is_finite());
        assert!(v > 0.0);
    }

    #[test]
    fn single_predicate_same_under_both_semantics() {
        let s = one_channel(0.1, vec![0.47; 20]);
        let f = band("a", 0.4, 0.6);
        let space = space_robustness(&f, &s, 0.0).unwrap().value;
        let smooth = new_robustness(&f, &s, 0.0, &RobustnessConfig::default()).unwrap().value;
        assert_eq!(space, smooth);
    }

    #[test]
    fn smooth_globally_tracks_min_at_high_nu() {
        let s = one_channel(0.1, (0..30).map(|i| 0.5 + 0.004 * i as f64).collect());
        let f = StlFormula::globally(Interval::unbounded(), band("a", 0.4, 0.7));
        let space = space_robustness(&f, &s, 0.0).unwrap().value;
        let cfg = RobustnessConfig { semantics: Semantics::New, nu: 200.0 };
        let smooth = new_robustness(&f, &s, 0.0, &cfg).unwrap().value;
        assert!((space - smooth).abs() < 5e-3, "space={space} smooth={smooth}");
    }

    #[test]
    fn double_negation_is_exact() {
        let s = one_channel(0.1, vec![0.52; 40]);
        let f = StlFormula::globally(Interval::bounded(0.0, 2.0).unwrap(), band("a", 0.4, 0.6));
        let nn = StlFormula::not(StlFormula::not(f.clone()));
        assert_eq!(
            space_robustness(&f, &s, 0.0).unwrap().value,
            space_robustness(&nn, &s, 0.0).unwrap().value
        );
        let cfg = RobustnessConfig::default();
        assert_eq!(
            new_robustness(&f, &s, 0.0, &cfg).unwrap().value,
            new_robustness(&nn, &s, 0.0, &cfg).unwrap().value
        );
    }

    #[test]
    fn boundary_flag_set_at_exact_zero() {
        let s = one_channel(0.1, vec![0.4; 5]);
        let r = space_robustness(&band("a", 0.4, 0.6), &s, 0.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.boundary);
    }

    #[test]
    fn until_robustness_sign_matches_boolean() {
        let lhs = band("low", 0.4, 0.6);
        let rhs = band("high", 0.8, 1.0);
        let f = StlFormula::until(Interval::bounded(0.0, 4.0).unwrap(), lhs, rhs);
        let sat = one_channel(1.0, vec![0.5, 0.5, 0.5, 0.9, 0.9]);
        let unsat = one_channel(1.0, vec![0.5, 0.1, 0.5, 0.9, 0.9]);
        for (signal, expect_positive) in [(&sat, true), (&unsat, false)] {
            let space = space_robustness(&f, signal, 0.0).unwrap().value;
            let smooth =
                new_robustness(&f, signal, 0.0, &RobustnessConfig::default()).unwrap().value;
            assert_eq!(space > 0.0, expect_positive, "space={space}");
            assert_eq!(smooth > 0.0, expect_positive, "smooth={smooth}");
        }
    }
}
