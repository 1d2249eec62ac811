//! The optimization parameter space: which model entries are free, their
//! bounds, and how a flat vector maps back onto a model.

use super::{ModelError, SkillModel};

const AXES: [&str; 3] = ["x", "y", "z"];

/// One optimizable model entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    /// One coordinate of a component position (axis 0..3 = x, y, z).
    MeanCoord { component: usize, axis: usize },
    /// Duration mean of a component, in seconds.
    DurationMean { component: usize },
    /// Raw transition matrix entry, bounded to `[0, 1]`.
    TransitionEntry { from: usize, to: usize },
}

impl ParamKind {
    /// Stable column name used in overlay CSVs: `mean_2_x`, `dur_3`, `a_2_4`.
    pub fn column_name(&self) -> String {
        match *self {
            ParamKind::MeanCoord { component, axis } => {
                format!("mean_{component}_{}", AXES[axis])
            }
            ParamKind::DurationMean { component } => format!("dur_{component}"),
            ParamKind::TransitionEntry { from, to } => format!("a_{from}_{to}"),
        }
    }

    pub fn parse_column(name: &str) -> Option<Self> {
        let parts: Vec<&str> = name.split('_').collect();
        match parts.as_slice() {
            ["mean", c, axis] => Some(ParamKind::MeanCoord {
                component: c.parse().ok()?,
                axis: AXES.iter().position(|a| a == axis)?,
            }),
            ["dur", c] => Some(ParamKind::DurationMean { component: c.parse().ok()? }),
            ["a", i, j] => Some(ParamKind::TransitionEntry {
                from: i.parse().ok()?,
                to: j.parse().ok()?,
            }),
            _ => None,
        }
    }
}

/// Ordered list of free model entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParameterLayout {
    entries: Vec<ParamKind>,
}

impl ParameterLayout {
    pub fn new(entries: Vec<ParamKind>) -> Self {
        Self { entries }
    }

    /// Layout from component index lists: every listed mean contributes its
    /// three coordinates, every listed duration one entry, and every listed
    /// transition pair one raw matrix entry.
    pub fn from_parts(means: &[usize], durations: &[usize], transitions: &[(usize, usize)]) -> Self {
        let mut entries = Vec::new();
        for &component in means {
            for axis in 0..3 {
                entries.push(ParamKind::MeanCoord { component, axis });
            }
        }
        for &component in durations {
            entries.push(ParamKind::DurationMean { component });
        }
        for &(from, to) in transitions {
            entries.push(ParamKind::TransitionEntry { from, to });
        }
        Self { entries }
    }

    /// The banded transition pattern that allows skipping at most one
    /// component at a time: entries `(i, i+1)` and `(i, i+2)`.
    pub fn reduced_transitions(k: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..k.saturating_sub(1) {
            pairs.push((i, i + 1));
            if i + 2 < k {
                pairs.push((i, i + 2));
            }
        }
        pairs
    }

    /// All strictly upper-triangular entries: `k (k - 1) / 2` pairs.
    pub fn full_transitions(k: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                pairs.push((i, j));
            }
        }
        pairs
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParamKind] {
        &self.entries
    }

    pub fn column_names(&self) -> Vec<String> {
        self.entries.iter().map(ParamKind::column_name).collect()
    }

    /// Checks every entry addresses a real model parameter, with no entry
    /// listed twice (duplicates would make application order-dependent).
    pub fn validate(&self, model: &SkillModel) -> Result<(), ModelError> {
        let k = model.k();
        let mut seen = std::collections::HashSet::new();
        for entry in &self.entries {
            let ok = match *entry {
                ParamKind::MeanCoord { component, axis } => component < k && axis < 3,
                ParamKind::DurationMean { component } => component < k,
                ParamKind::TransitionEntry { from, to } => from < k && to < k,
            };
            if !ok {
                return Err(ModelError::LayoutMismatch {
                    reason: format!("entry {} out of range for K = {k}", entry.column_name()),
                });
            }
            if !seen.insert(*entry) {
                return Err(ModelError::LayoutMismatch {
                    reason: format!("entry {} listed twice", entry.column_name()),
                });
            }
        }
        Ok(())
    }

    /// Current model values of the layout's entries (the nominal δ).
    pub fn extract(&self, model: &SkillModel) -> Vec<f64> {
        self.entries
            .iter()
            .map(|entry| match *entry {
                ParamKind::MeanCoord { component, axis } => model.mean(component)[axis],
                ParamKind::DurationMean { component } => model.duration_mean(component),
                ParamKind::TransitionEntry { from, to } => model.transition()[(from, to)],
            })
            .collect()
    }
}

/// Per-entry closed bounds `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ModelError> {
        if lower.len() != upper.len() {
            return Err(ModelError::DimensionMismatch {
                field: "bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&lb, &ub)) in lower.iter().zip(&upper).enumerate() {
            if !lb.is_finite() || !ub.is_finite() || lb > ub {
                return Err(ModelError::OutOfBounds { index: i, value: lb, lower: lb, upper: ub });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// First entry of `values` violating the bounds, if any.
    pub fn check(&self, values: &[f64]) -> Result<(), ModelError> {
        if values.len() != self.len() {
            return Err(ModelError::DimensionMismatch {
                field: "parameter vector",
                expected: self.len(),
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < self.lower[i] || v > self.upper[i] {
                return Err(ModelError::OutOfBounds {
                    index: i,
                    value: v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    /// Concatenates bound blocks (used when several skills share one search
    /// space).
    pub fn concat(blocks: &[Bounds]) -> Bounds {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for b in blocks {
            lower.extend_from_slice(&b.lower);
            upper.extend_from_slice(&b.upper);
        }
        Bounds { lower, upper }
    }
}

/// Variance-derived default bounds for a layout:
///
/// - mean coordinates: `μ ± mean_sigma · √Σ_aa`,
/// - duration means: `[μ^S − σ^S, μ^S + σ^S]`, clipped below at `dt`,
/// - transition entries: `[0, 1]`.
pub fn default_bounds(
    model: &SkillModel,
    layout: &ParameterLayout,
    mean_sigma: f64,
) -> Result<Bounds, ModelError> {
    layout.validate(model)?;
    let mut lower = Vec::with_capacity(layout.len());
    let mut upper = Vec::with_capacity(layout.len());
    for entry in layout.entries() {
        let (lb, ub) = match *entry {
            ParamKind::MeanCoord { component, axis } => {
                let mu = model.mean(component)[axis];
                let sigma = model.covariance(component)[(axis, axis)].sqrt();
                (mu - mean_sigma * sigma, mu + mean_sigma * sigma)
            }
            ParamKind::DurationMean { component } => {
                let mu = model.duration_mean(component);
                let sd = model.duration_std(component);
                let lb = (mu - sd).max(model.dt());
                (lb, (mu + sd).max(lb))
            }
            ParamKind::TransitionEntry { .. } => (0.0, 1.0),
        };
        lower.push(lb);
        upper.push(ub);
    }
    Bounds::new(lower, upper)
}

/// A concrete point in a layout's search space, with its bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
    layout: ParameterLayout,
    bounds: Bounds,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, layout: ParameterLayout, bounds: Bounds) -> Result<Self, ModelError> {
        if layout.len() != bounds.len() {
            return Err(ModelError::DimensionMismatch {
                field: "bounds",
                expected: layout.len(),
                got: bounds.len(),
            });
        }
        bounds.check(&values)?;
        Ok(Self { values, layout, bounds })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }
}

/// Returns a copy of `model` with the layout's entries replaced by `delta`.
/// All other fields are untouched; transition edits stay raw (normalization
/// happens at retrieval).
pub fn apply_parameters(model: &SkillModel, delta: &ParameterVector) -> Result<SkillModel, ModelError> {
    delta.layout.validate(model)?;
    delta.bounds.check(&delta.values)?;
    let mut out = model.clone();
    for (entry, &value) in delta.layout.entries().iter().zip(&delta.values) {
        match *entry {
            ParamKind::MeanCoord { component, axis } => {
                out.means_mut()[component][axis] = value;
            }
            ParamKind::DurationMean { component } => {
                out.duration_means_mut()[component] = value;
            }
            ParamKind::TransitionEntry { from, to } => {
                out.transition_mut()[(from, to)] = value;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::chain_model;
    use crate::model::normalize_transitions;

    fn pv(model: &SkillModel, layout: ParameterLayout, values: Vec<f64>) -> ParameterVector {
        let bounds = default_bounds(model, &layout, 2.0).unwrap();
        ParameterVector::new(values, layout, bounds).unwrap()
    }

    #[test]
    fn empty_layout_is_identity() {
        let m = chain_model(4, 0.1, 8.0, 2.0, 0.1);
        let delta = pv(&m, ParameterLayout::default(), vec![]);
        let out = apply_parameters(&m, &delta).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn mean_shift_touches_only_that_coordinate() {
        let m = chain_model(4, 0.1, 8.0, 2.0, 0.1);
        let layout = ParameterLayout::new(vec![ParamKind::MeanCoord { component: 3, axis: 0 }]);
        let target = m.mean(3).x + 0.05;
        let out = apply_parameters(&m, &pv(&m, layout, vec![target])).unwrap();
        assert_eq!(out.mean(3).x, target);
        assert_eq!(out.mean(3).y, m.mean(3).y);
        assert_eq!(out.mean(2), m.mean(2));
        assert_eq!(out.duration_means(), m.duration_means());
        assert_eq!(m.mean(3).x + 0.05, target, "input model untouched");
    }

    #[test]
    fn transition_edit_is_raw_until_normalized() {
        let m = chain_model(6, 0.1, 12.0, 2.0, 0.1);
        let layout = ParameterLayout::new(vec![ParamKind::TransitionEntry { from: 2, to: 4 }]);
        let out = apply_parameters(&m, &pv(&m, layout, vec![0.9])).unwrap();
        assert_eq!(out.transition()[(2, 4)], 0.9);
        // row 2 now holds (0.8, 0.9); normalization rescales, argmax stays at 4
        let n = normalize_transitions(out.transition()).unwrap();
        assert!((n.row(2).sum() - 1.0).abs() < 1e-12);
        assert!(n[(2, 4)] > n[(2, 3)]);
    }

    #[test]
    fn out_of_bounds_is_refused() {
        let m = chain_model(4, 0.1, 8.0, 2.0, 0.1);
        let layout = ParameterLayout::new(vec![ParamKind::DurationMean { component: 0 }]);
        let bounds = default_bounds(&m, &layout, 2.0).unwrap();
        let err = ParameterVector::new(vec![100.0], layout, bounds).unwrap_err();
        assert!(matches!(err, ModelError::OutOfBounds { index: 0, .. }));
    }

    #[test]
    fn layout_validation_catches_bad_indices_and_duplicates() {
        let m = chain_model(3, 0.1, 6.0, 2.0, 0.1);
        let bad = ParameterLayout::new(vec![ParamKind::DurationMean { component: 7 }]);
        assert!(bad.validate(&m).is_err());
        let dup = ParameterLayout::new(vec![
            ParamKind::MeanCoord { component: 0, axis: 1 },
            ParamKind::MeanCoord { component: 0, axis: 1 },
        ]);
        assert!(dup.validate(&m).is_err());
    }

    #[test]
    fn duration_bound_collapses_when_std_is_zero() {
        let mut m = chain_model(3, 0.1, 6.0, 2.0, 0.1);
        m.duration_stds[1] = 0.0;
        let layout = ParameterLayout::from_parts(&[], &[1], &[]);
        let b = default_bounds(&m, &layout, 2.0).unwrap();
        assert_eq!(b.lower[0], 2.0);
        assert_eq!(b.upper[0], 2.0);
    }

    #[test]
    fn duration_bound_clips_below_at_dt() {
        let mut m = chain_model(3, 0.1, 6.0, 2.0, 0.1);
        m.duration_stds[0] = 5.0;
        let layout = ParameterLayout::from_parts(&[], &[0], &[]);
        let b = default_bounds(&m, &layout, 2.0).unwrap();
        assert_eq!(b.lower[0], 0.1);
        assert_eq!(b.upper[0], 7.0);
    }

    #[test]
    fn transition_bounds_are_the_unit_interval() {
        let m = chain_model(3, 0.1, 6.0, 2.0, 0.1);
        let layout = ParameterLayout::from_parts(&[], &[], &[(0, 1)]);
        let b = default_bounds(&m, &layout, 2.0).unwrap();
        assert_eq!((b.lower[0], b.upper[0]), (0.0, 1.0));
    }

    #[test]
    fn mean_bounds_follow_encoded_variance() {
        // variance 0.01 on the diagonal -> half-width 2 * 0.1 = 0.2
        let m = chain_model(3, 0.1, 6.0, 2.0, 0.1);
        let layout = ParameterLayout::from_parts(&[1], &[], &[]);
        let b = default_bounds(&m, &layout, 2.0).unwrap();
        let mu = m.mean(1).x;
        assert!((b.lower[0] - (mu - 0.2)).abs() < 1e-12);
        assert!((b.upper[0] - (mu + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn apply_is_idempotent() {
        let m = chain_model(4, 0.1, 8.0, 2.0, 0.1);
        let layout = ParameterLayout::from_parts(&[0], &[2], &[(1, 2)]);
        let delta = pv(&m, layout, vec![0.05, -0.02, 0.03, 2.3, 0.4]);
        let once = apply_parameters(&m, &delta).unwrap();
        let twice = apply_parameters(&once, &delta).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn disjoint_layouts_commute() {
        let m = chain_model(4, 0.1, 8.0, 2.0, 0.1);
        let a = pv(&m, ParameterLayout::from_parts(&[0], &[], &[]), vec![0.1, 0.0, -0.1]);
        let b = pv(&m, ParameterLayout::from_parts(&[], &[3], &[]), vec![1.6]);
        let ab = apply_parameters(&apply_parameters(&m, &a).unwrap(), &b).unwrap();
        let ba = apply_parameters(&apply_parameters(&m, &b).unwrap(), &a).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn parameter_counts() {
        // all means for K = 6
        assert_eq!(ParameterLayout::from_parts(&[0, 1, 2, 3, 4, 5], &[], &[]).len(), 18);
        // two means plus all durations
        assert_eq!(ParameterLayout::from_parts(&[0, 1], &[0, 1, 2, 3, 4, 5], &[]).len(), 12);
        // plus the banded transition pattern
        let reduced = ParameterLayout::reduced_transitions(6);
        assert_eq!(reduced.len(), 9);
        assert_eq!(
            ParameterLayout::from_parts(&[0, 1], &[0, 1, 2, 3, 4, 5], &reduced).len(),
            21
        );
        // strictly upper-triangular cap
        assert_eq!(ParameterLayout::full_transitions(6).len(), 15);
    }

    #[test]
    fn reduced_pattern_matches_the_banded_matrix() {
        let pairs = ParameterLayout::reduced_transitions(6);
        let expected = [
            (0, 1), (0, 2),
            (1, 2), (1, 3),
            (2, 3), (2, 4),
            (3, 4), (3, 5),
            (4, 5),
        ];
        assert_eq!(pairs, expected);
    }

    #[test]
    fn column_names_round_trip() {
        let layout = ParameterLayout::from_parts(&[2], &[5], &[(1, 3)]);
        for (name, entry) in layout.column_names().iter().zip(layout.entries()) {
            assert_eq!(ParamKind::parse_column(name), Some(*entry));
        }
        assert_eq!(ParamKind::parse_column("bogus"), None);
        assert_eq!(ParamKind::parse_column("mean_1_w"), None);
    }
}
