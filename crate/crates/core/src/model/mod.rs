//! Hidden semi-Markov skill models and their optimization parameter space.
//!
//! A skill is a sequence of Gaussian components over end-effector positions,
//! each with a duration distribution, linked by a transition matrix. The
//! model deterministically expands into a component schedule
//! ([`SkillModel::state_sequence`]) and from there into a smooth trajectory
//! via linear-quadratic tracking ([`SkillModel::retrieve`]).

mod fit;
mod params;
mod retrieve;

use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{fit_from_demo, Demo, MIN_POSITION_VARIANCE};
pub use params::{default_bounds, Bounds, ParamKind, ParameterLayout, ParameterVector};
pub use retrieve::{RetrievalConfig, Trajectory};

/// Slack for horizon-to-step conversion, in units of one step.
pub(crate) const STEP_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model must have at least one component")]
    NoComponents,
    #[error("field `{field}` has length {got}, expected {expected}")]
    DimensionMismatch { field: &'static str, expected: usize, got: usize },
    #[error("invalid control period dt = {dt}")]
    InvalidTimeStep { dt: f64 },
    #[error("invalid horizon {horizon}; must cover at least one control period")]
    InvalidHorizon { horizon: f64 },
    #[error("covariance of component {component} is not symmetric")]
    NotSymmetric { component: usize },
    #[error("covariance of component {component} is not positive-definite")]
    NotPositiveDefinite { component: usize },
    #[error("duration mean of component {component} must be positive, got {value}")]
    NonPositiveDuration { component: usize, value: f64 },
    #[error("duration std of component {component} must be non-negative, got {value}")]
    NegativeDurationStd { component: usize, value: f64 },
    #[error("duration means sum to {total}, exceeding the horizon {horizon}")]
    DurationsExceedHorizon { total: f64, horizon: f64 },
    #[error("transition entry ({row}, {col}) = {value} is invalid; entries must be finite and >= 0")]
    InvalidTransition { row: usize, col: usize, value: f64 },
    #[error("non-finite value in field `{field}`")]
    NonFinite { field: &'static str },
    #[error("transition graph revisits component {component}")]
    TransitionCycle { component: usize },
    #[error("parameter {index} = {value} outside bounds [{lower}, {upper}]")]
    OutOfBounds { index: usize, value: f64, lower: f64, upper: f64 },
    #[error("layout does not match model: {reason}")]
    LayoutMismatch { reason: String },
    #[error("demonstration has {samples} samples; need at least {needed}")]
    DemoTooShort { samples: usize, needed: usize },
    #[error("linear-quadratic tracking failed: {reason}")]
    TrackingFailed { reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// HSMM skill: `K` Gaussian components with duration statistics, a
/// transition matrix, and the execution grid (`dt`, `horizon`).
///
/// Values are immutable after construction; edits go through
/// [`ParameterVector`] application, which returns a new model.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillModel {
    means: Vec<Vector3<f64>>,
    covariances: Vec<Matrix3<f64>>,
    duration_means: Vec<f64>,
    duration_stds: Vec<f64>,
    transition: DMatrix<f64>,
    dt: f64,
    horizon: f64,
    start: Vector3<f64>,
}

impl SkillModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        means: Vec<Vector3<f64>>,
        covariances: Vec<Matrix3<f64>>,
        duration_means: Vec<f64>,
        duration_stds: Vec<f64>,
        transition: DMatrix<f64>,
        dt: f64,
        horizon: f64,
        start: Vector3<f64>,
    ) -> Result<Self, ModelError> {
        let model = Self {
            means,
            covariances,
            duration_means,
            duration_stds,
            transition,
            dt,
            horizon,
            start,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let k = self.means.len();
        if k == 0 {
            return Err(ModelError::NoComponents);
        }
        for (field, len) in [
            ("covariances", self.covariances.len()),
            ("duration_means", self.duration_means.len()),
            ("duration_stds", self.duration_stds.len()),
            ("transition rows", self.transition.nrows()),
            ("transition cols", self.transition.ncols()),
        ] {
            if len != k {
                return Err(ModelError::DimensionMismatch { field, expected: k, got: len });
            }
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ModelError::InvalidTimeStep { dt: self.dt });
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(ModelError::InvalidHorizon { horizon: self.horizon });
        }
        if self.means.iter().any(|m| !m.iter().all(|v| v.is_finite())) {
            return Err(ModelError::NonFinite { field: "means" });
        }
        if !self.start.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NonFinite { field: "start" });
        }
        for (i, cov) in self.covariances.iter().enumerate() {
            if !cov.iter().all(|v| v.is_finite()) {
                return Err(ModelError::NonFinite { field: "covariances" });
            }
            let asym = (cov - cov.transpose()).abs().max();
            if asym > 1e-9 * cov.abs().max().max(1.0) {
                return Err(ModelError::NotSymmetric { component: i });
            }
            if nalgebra::Cholesky::new(*cov).is_none() {
                return Err(ModelError::NotPositiveDefinite { component: i });
            }
        }
        let mut total = 0.0;
        for i in 0..k {
            let mu = self.duration_means[i];
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(ModelError::NonPositiveDuration { component: i, value: mu });
            }
            let sd = self.duration_stds[i];
            if !(sd >= 0.0) || !sd.is_finite() {
                return Err(ModelError::NegativeDurationStd { component: i, value: sd });
            }
            total += mu;
        }
        if total > self.horizon * (1.0 + 1e-9) {
            return Err(ModelError::DurationsExceedHorizon { total, horizon: self.horizon });
        }
        for i in 0..k {
            for j in 0..k {
                let v = self.transition[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::InvalidTransition { row: i, col: j, value: v });
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn start(&self) -> Vector3<f64> {
        self.start
    }

    pub fn mean(&self, component: usize) -> Vector3<f64> {
        self.means[component]
    }

    pub fn means(&self) -> &[Vector3<f64>] {
        &self.means
    }

    pub fn covariance(&self, component: usize) -> &Matrix3<f64> {
        &self.covariances[component]
    }

    pub fn duration_mean(&self, component: usize) -> f64 {
        self.duration_means[component]
    }

    pub fn duration_means(&self) -> &[f64] {
        &self.duration_means
    }

    pub fn duration_std(&self, component: usize) -> f64 {
        self.duration_stds[component]
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub(crate) fn means_mut(&mut self) -> &mut [Vector3<f64>] {
        &mut self.means
    }

    pub(crate) fn duration_means_mut(&mut self) -> &mut [f64] {
        &mut self.duration_means
    }

    pub(crate) fn transition_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.transition
    }

    /// Number of control steps covering the horizon.
    pub fn total_steps(&self) -> usize {
        ((self.horizon / self.dt - STEP_EPS).ceil().max(1.0)) as usize
    }

    /// Dwell steps for one component: its duration mean rounded to the grid,
    /// at least one step.
    pub fn duration_steps(&self, component: usize) -> usize {
        (self.duration_means[component] / self.dt).round().max(1.0) as usize
    }

    /// Deterministic component schedule as `(component, steps)` segments.
    ///
    /// Starts at component 0 and repeatedly follows the row-wise argmax of
    /// the transition matrix (ties broken toward the lowest index), so the
    /// schedule is invariant under positive row scaling. The walk stops at an
    /// all-zero row or once the horizon is filled; the final segment is
    /// extended to hold the last state up to the horizon. Revisiting a
    /// component is an error.
    pub fn state_sequence(&self) -> Result<Vec<(usize, usize)>, ModelError> {
        let k = self.k();
        let total = self.total_steps();
        let mut visited = vec![false; k];
        let mut segments: Vec<(usize, usize)> = Vec::new();
        let mut current = 0usize;
        let mut filled = 0usize;
        loop {
            if visited[current] {
                return Err(ModelError::TransitionCycle { component: current });
            }
            visited[current] = true;
            let steps = self.duration_steps(current).min(total - filled);
            segments.push((current, steps));
            filled += steps;
            if filled >= total {
                break;
            }
            let row = self.transition.row(current);
            let mut best = 0.0;
            let mut next = None;
            for j in 0..k {
                if row[j] > best {
                    best = row[j];
                    next = Some(j);
                }
            }
            match next {
                Some(j) => current = j,
                None => break, // absorbing row
            }
        }
        if filled < total {
            segments.last_mut().unwrap().1 += total - filled;
        }
        Ok(segments)
    }

    /// Per-step active component over the whole horizon.
    pub fn per_step_states(&self) -> Result<Vec<usize>, ModelError> {
        let segments = self.state_sequence()?;
        let mut states = Vec::with_capacity(self.total_steps());
        for (component, steps) in segments {
            states.extend(std::iter::repeat(component).take(steps));
        }
        Ok(states)
    }

    pub fn read_json_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        let file: SkillModelFile = serde_json::from_str(&text)?;
        file.try_into()
    }

    pub fn write_json_path(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let file = SkillModelFile::from(self);
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }
}

/// Row-normalizes a transition matrix: rows with positive mass are scaled to
/// sum to one, all-zero rows stay zero (absorbing). Negative entries are
/// rejected.
pub fn normalize_transitions(a: &DMatrix<f64>) -> Result<DMatrix<f64>, ModelError> {
    let mut out = a.clone();
    for i in 0..a.nrows() {
        let mut sum = 0.0;
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidTransition { row: i, col: j, value: v });
            }
            sum += v;
        }
        if sum > 0.0 {
            for j in 0..a.ncols() {
                out[(i, j)] /= sum;
            }
        }
    }
    Ok(out)
}

/// On-disk JSON layout of a skill model.
#[derive(Debug, Serialize, Deserialize)]
struct SkillModelFile {
    #[serde(rename = "K")]
    k: usize,
    dt: f64,
    horizon: f64,
    means: Vec<[f64; 3]>,
    covariances: Vec<[[f64; 3]; 3]>,
    duration_means: Vec<f64>,
    duration_stds: Vec<f64>,
    transition: Vec<Vec<f64>>,
    start: [f64; 3],
}

impl TryFrom<SkillModelFile> for SkillModel {
    type Error = ModelError;

    fn try_from(file: SkillModelFile) -> Result<Self, ModelError> {
        let k = file.k;
        if file.means.len() != k {
            return Err(ModelError::DimensionMismatch {
                field: "means",
                expected: k,
                got: file.means.len(),
            });
        }
        if file.transition.len() != k || file.transition.iter().any(|row| row.len() != k) {
            return Err(ModelError::DimensionMismatch {
                field: "transition",
                expected: k,
                got: file.transition.len(),
            });
        }
        let transition =
            DMatrix::from_fn(k, k, |i, j| file.transition[i][j]);
        SkillModel::new(
            file.means.iter().map(|m| Vector3::new(m[0], m[1], m[2])).collect(),
            file.covariances
                .iter()
                .map(|c| Matrix3::from_fn(|i, j| c[i][j]))
                .collect(),
            file.duration_means,
            file.duration_stds,
            transition,
            file.dt,
            file.horizon,
            Vector3::new(file.start[0], file.start[1], file.start[2]),
        )
    }
}

impl From<&SkillModel> for SkillModelFile {
    fn from(m: &SkillModel) -> Self {
        SkillModelFile {
            k: m.k(),
            dt: m.dt,
            horizon: m.horizon,
            means: m.means.iter().map(|v| [v.x, v.y, v.z]).collect(),
            covariances: m
                .covariances
                .iter()
                .map(|c| {
                    [
                        [c[(0, 0)], c[(0, 1)], c[(0, 2)]],
                        [c[(1, 0)], c[(1, 1)], c[(1, 2)]],
                        [c[(2, 0)], c[(2, 1)], c[(2, 2)]],
                    ]
                })
                .collect(),
            duration_means: m.duration_means.clone(),
            duration_stds: m.duration_stds.clone(),
            transition: (0..m.k())
                .map(|i| (0..m.k()).map(|j| m.transition[(i, j)]).collect())
                .collect(),
            start: [m.start.x, m.start.y, m.start.z],
        }
    }
}
