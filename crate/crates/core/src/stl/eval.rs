//! Window discretization and exact boolean satisfaction.

use super::{Interval, Signal, StlError, StlFormula};

/// Slack for float-to-index conversion, in units of one sample.
const IDX_EPS: f64 = 1e-6;

/// Sample index for an absolute time, which must land on (or very near) a
/// sample inside the horizon.
pub(crate) fn index_of_time(signal: &Signal, t: f64) -> Result<usize, StlError> {
    let idx = (t / signal.dt()).round();
    if !(t >= -IDX_EPS * signal.dt()) || idx as usize > signal.max_index() || !idx.is_finite() {
        return Err(StlError::TimeOutOfRange { t, horizon: signal.horizon() });
    }
    Ok(idx.max(0.0) as usize)
}

/// Sample indices covered by `[t + a, t + b]` at sample `at`: the range
/// `⌈(t+a)/dt⌉ ..= ⌊(t+b)/dt⌋` clamped to the horizon. Clamping to an empty
/// range is an error, not vacuous truth.
pub(crate) fn window(
    signal: &Signal,
    at: usize,
    interval: &Interval,
) -> Result<std::ops::RangeInclusive<usize>, StlError> {
    let dt = signal.dt();
    let k = signal.max_index();
    let lo = at + (interval.lo() / dt - IDX_EPS).ceil().max(0.0) as usize;
    let hi = if interval.is_unbounded() {
        k
    } else {
        let offset = (interval.hi() / dt + IDX_EPS).floor().max(0.0) as usize;
        (at + offset).min(k)
    };
    if lo > hi {
        return Err(StlError::EmptyWindow {
            from: at as f64 * dt + interval.lo(),
            to: at as f64 * dt + interval.hi(),
            samples: signal.len(),
        });
    }
    Ok(lo..=hi)
}

/// Exact boolean satisfaction of `formula` on `signal` at time `t` seconds.
///
/// A predicate is satisfied iff its margin is strictly positive. Windows are
/// evaluated in full (no short-circuit) so that error behavior matches the
/// quantitative semantics on the same inputs.
pub fn sat_bool(formula: &StlFormula, signal: &Signal, t: f64) -> Result<bool, StlError> {
    sat_at(formula, signal, index_of_time(signal, t)?)
}

fn sat_at(formula: &StlFormula, signal: &Signal, at: usize) -> Result<bool, StlError> {
    match formula {
        StlFormula::Pred(p) => Ok(p.margin.margin(signal.sample(&p.channel, at)?) > 0.0),
        StlFormula::Not(inner) => Ok(!sat_at(inner, signal, at)?),
        StlFormula::And(children) => {
            let mut all = true;
            for c in children {
                all &= sat_at(c, signal, at)?;
            }
            Ok(all)
        }
        StlFormula::Or(children) => {
            let mut any = false;
            for c in children {
                any |= sat_at(c, signal, at)?;
            }
            Ok(any)
        }
        StlFormula::Globally(iv, inner) => {
            let mut all = true;
            for j in window(signal, at, iv)? {
                all &= sat_at(inner, signal, j)?;
            }
            Ok(all)
        }
        StlFormula::Eventually(iv, inner) => {
            let mut any = false;
            for j in window(signal, at, iv)? {
                any |= sat_at(inner, signal, j)?;
            }
            Ok(any)
        }
        StlFormula::Until(iv, lhs, rhs) => {
            // lhs must hold at every sample in [at, t') for the witness t'.
            let mut holds = false;
            let mut prefix = true;
            let mut j = at;
            for tp in window(signal, at, iv)? {
                while j < tp {
                    prefix &= sat_at(lhs, signal, j)?;
                    j += 1;
                }
                holds |= prefix && sat_at(rhs, signal, tp)?;
            }
            Ok(holds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{MarginFn, Predicate};
    use indexmap::IndexMap;

    fn constant_signal(value: f64, len: usize, dt: f64) -> Signal {
        let mut channels = IndexMap::new();
        channels.insert("s".to_string(), vec![value; len]);
        Signal::new(dt, channels).unwrap()
    }

    fn band(name: &str, lb: f64, ub: f64) -> StlFormula {
        StlFormula::Pred(Predicate::new(name, "s", MarginFn::Band(lb, ub)).unwrap())
    }

    #[test]
    fn constant_inside_band_globally_true() {
        let s = constant_signal(0.5, 50, 0.1);
        let f = StlFormula::globally(Interval::unbounded(), band("a", 0.4, 0.6));
        assert!(sat_bool(&f, &s, 0.0).unwrap());
    }

    #[test]
    fn constant_outside_band_never_eventually() {
        let s = constant_signal(0.7, 50, 0.1);
        let f = StlFormula::eventually(Interval::unbounded(), band("a", 0.4, 0.6));
        assert!(!sat_bool(&f, &s, 0.0).unwrap());
    }

    #[test]
    fn window_outside_horizon_is_error() {
        let s = constant_signal(0.5, 10, 0.1); // horizon 0.9 s
        let f = StlFormula::globally(Interval::bounded(2.0, 3.0).unwrap(), band("a", 0.4, 0.6));
        assert!(matches!(sat_bool(&f, &s, 0.0), Err(StlError::EmptyWindow { .. })));
    }

    #[test]
    fn window_clamps_to_horizon() {
        let s = constant_signal(0.5, 10, 0.1);
        let w = window(&s, 0, &Interval::bounded(0.5, 5.0).unwrap()).unwrap();
        assert_eq!(w, 5..=9);
    }

    #[test]
    fn window_index_conversion_handles_float_noise() {
        // 0.3 / 0.1 is not exactly 3.0 in binary; the slack must absorb it.
        let s = constant_signal(0.5, 100, 0.1);
        let w = window(&s, 0, &Interval::bounded(0.3, 0.7).unwrap()).unwrap();
        assert_eq!(w, 3..=7);
        let w = window(&s, 13, &Interval::bounded(2.0, 2.0).unwrap()).unwrap();
        assert_eq!(w, 33..=33);
    }

    #[test]
    fn until_requires_prefix() {
        // lhs holds until the dip; rhs becomes true after it.
        let mut channels = IndexMap::new();
        channels.insert("s".to_string(), vec![0.5, 0.5, 0.5, 0.9, 0.9]);
        let s = Signal::new(1.0, channels).unwrap();
        let lhs = band("low", 0.4, 0.6);
        let rhs = band("high", 0.8, 1.0);
        let f = StlFormula::until(Interval::bounded(0.0, 4.0).unwrap(), lhs.clone(), rhs.clone());
        assert!(sat_bool(&f, &s, 0.0).unwrap());

        // break the prefix before rhs is reached
        let mut channels = IndexMap::new();
        channels.insert("s".to_string(), vec![0.5, 0.1, 0.5, 0.9, 0.9]);
        let s = Signal::new(1.0, channels).unwrap();
        let f = StlFormula::until(Interval::bounded(0.0, 4.0).unwrap(), lhs, rhs);
        assert!(!sat_bool(&f, &s, 0.0).unwrap());
    }

    #[test]
    fn time_out_of_range_rejected() {
        let s = constant_signal(0.5, 10, 0.1);
        assert!(sat_bool(&band("a", 0.4, 0.6), &s, 2.0).is_err());
        assert!(sat_bool(&band("a", 0.4, 0.6), &s, -0.5).is_err());
    }
}
