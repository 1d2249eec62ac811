//! Trajectory retrieval: tracking the component-mean reference with a
//! finite-horizon discrete-time linear-quadratic tracker.
//!
//! Each Cartesian axis is a double integrator `p' = p + v dt + u dt²/2,
//! v' = v + u dt`. The reference holds each scheduled component's mean for
//! its dwell, with the start position prepended; the position cost during a
//! component's window is the corresponding diagonal entry of its inverse
//! covariance, so confident components track tightly and diffuse ones
//! loosely.

use std::io;
use std::path::Path;

use nalgebra::{Matrix2, RowVector2, Vector2, Vector3};

use super::{normalize_transitions, ModelError, SkillModel};

/// Knobs for retrieval; `control_cost` is the scalar effort weight `r_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalConfig {
    pub control_cost: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self { control_cost: 1e-2 }
    }
}

/// Executed kinematic trajectory on the model's control grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    positions: Vec<Vector3<f64>>,
    velocities: Vec<Vector3<f64>>,
    states: Vec<usize>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vector3<f64>] {
        &self.velocities
    }

    /// Active component id per sample.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Concatenates trajectories back-to-back on a shared control grid.
    /// Component ids of later pieces are offset so they stay distinct.
    pub fn chain(pieces: &[Trajectory]) -> Result<Trajectory, ModelError> {
        let Some(first) = pieces.first() else {
            return Err(ModelError::TrackingFailed { reason: "nothing to chain".into() });
        };
        let dt = first.dt;
        let mut out = Trajectory {
            dt,
            positions: Vec::new(),
            velocities: Vec::new(),
            states: Vec::new(),
        };
        let mut offset = 0usize;
        for piece in pieces {
            if (piece.dt - dt).abs() > 1e-12 {
                return Err(ModelError::TrackingFailed {
                    reason: format!("control periods differ: {} vs {dt}", piece.dt),
                });
            }
            out.positions.extend_from_slice(&piece.positions);
            out.velocities.extend_from_slice(&piece.velocities);
            out.states.extend(piece.states.iter().map(|&s| s + offset));
            offset += piece.states.iter().copied().max().unwrap_or(0) + 1;
        }
        Ok(out)
    }

    /// Writes `t,x,y,z,vx,vy,vz,state` rows.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["t", "x", "y", "z", "vx", "vy", "vz", "state"])?;
        for i in 0..self.len() {
            let p = self.positions[i];
            let v = self.velocities[i];
            wtr.write_record([
                format!("{}", i as f64 * self.dt),
                format!("{}", p.x),
                format!("{}", p.y),
                format!("{}", p.z),
                format!("{}", v.x),
                format!("{}", v.y),
                format!("{}", v.z),
                format!("{}", self.states[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

impl SkillModel {
    /// Retrieval with default tracking costs.
    pub fn retrieve(&self) -> Result<Trajectory, ModelError> {
        self.retrieve_with(&RetrievalConfig::default())
    }

    /// Normalizes the transition matrix, expands the component schedule, and
    /// tracks the stepwise mean reference axis by axis. Deterministic: equal
    /// models produce bit-identical trajectories.
    pub fn retrieve_with(&self, cfg: &RetrievalConfig) -> Result<Trajectory, ModelError> {
        if !(cfg.control_cost > 0.0) || !cfg.control_cost.is_finite() {
            return Err(ModelError::TrackingFailed {
                reason: format!("control cost must be positive, got {}", cfg.control_cost),
            });
        }
        let normalized = {
            let mut m = self.clone();
            *m.transition_mut() = normalize_transitions(self.transition())?;
            m
        };
        let states = normalized.per_step_states()?;
        let n = states.len();

        // Per-component inverse covariance diagonals as tracking weights.
        let mut weights = Vec::with_capacity(self.k());
        for (i, cov) in self.covariances.iter().enumerate() {
            let inv = cov
                .try_inverse()
                .ok_or(ModelError::NotPositiveDefinite { component: i })?;
            weights.push([inv[(0, 0)], inv[(1, 1)], inv[(2, 2)]]);
        }

        let mut positions = vec![Vector3::zeros(); n];
        let mut velocities = vec![Vector3::zeros(); n];
        for axis in 0..3 {
            let refs: Vec<f64> = (0..n)
                .map(|t| if t == 0 { self.start[axis] } else { self.means[states[t]][axis] })
                .collect();
            let q: Vec<f64> = states.iter().map(|&s| weights[s][axis]).collect();
            let (pos, vel) = lqt_axis(&refs, &q, self.start[axis], self.dt, cfg.control_cost);
            for t in 0..n {
                positions[t][axis] = pos[t];
                velocities[t][axis] = vel[t];
            }
        }
        Ok(Trajectory { dt: self.dt, positions, velocities, states })
    }
}

/// Finite-horizon LQT for one double-integrator axis.
///
/// Minimizes `Σ_t q_t (p_t − r_t)² + r_u Σ_t u_t²` over controls via the
/// backward Riccati recursion with a feedforward term, then rolls the
/// dynamics forward from `(x0, 0)`.
fn lqt_axis(refs: &[f64], q: &[f64], x0: f64, dt: f64, r_u: f64) -> (Vec<f64>, Vec<f64>) {
    let n = refs.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    if n == 1 {
        return (vec![x0], vec![0.0]);
    }
    let a = Matrix2::new(1.0, dt, 0.0, 1.0);
    let b = Vector2::new(0.5 * dt * dt, dt);

    let mut gains: Vec<RowVector2<f64>> = vec![RowVector2::zeros(); n - 1];
    let mut feedforward = vec![0.0; n - 1];

    let cost = |t: usize| Matrix2::new(q[t], 0.0, 0.0, 0.0);
    let target = |t: usize| Vector2::new(q[t] * refs[t], 0.0);

    let mut s = cost(n - 1);
    let mut v = target(n - 1);
    for t in (0..n - 1).rev() {
        let m = r_u + (b.transpose() * s * b)[(0, 0)];
        let k_t = (b.transpose() * s * a) / m;
        let closed = a - b * k_t;
        feedforward[t] = (b.transpose() * v)[(0, 0)] / m;
        gains[t] = k_t;
        let s_next = a.transpose() * s * closed + cost(t);
        s = (s_next + s_next.transpose()) * 0.5;
        v = closed.transpose() * v + target(t);
    }

    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    let mut x = Vector2::new(x0, 0.0);
    positions.push(x[0]);
    velocities.push(x[1]);
    for t in 0..n - 1 {
        let u = -(gains[t] * x)[(0, 0)] + feedforward[t];
        x = a * x + b * u;
        positions.push(x[0]);
        velocities.push(x[1]);
    }
    (positions, velocities)
}
