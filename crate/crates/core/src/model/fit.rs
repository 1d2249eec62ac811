//! Builds a skill model from a single demonstration by uniform segmentation.
//!
//! This is a deliberately simple stand-in for full EM training: split the
//! demonstration into `K` equal-time parts, fit a mean and diagonal
//! covariance per part, take segment lengths as duration means, and wire a
//! left-to-right transition matrix.

use std::io;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::{ModelError, SkillModel};

/// Variance floor (m²) applied per axis so dwell segments still yield a
/// positive-definite covariance. Corresponds to a 0.02 m standard deviation.
pub const MIN_POSITION_VARIANCE: f64 = 4e-4;

/// Uniformly sampled demonstration positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Demo {
    dt: f64,
    points: Vec<Vector3<f64>>,
}

impl Demo {
    pub fn new(dt: f64, points: Vec<Vector3<f64>>) -> Result<Self, ModelError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(ModelError::InvalidTimeStep { dt });
        }
        if points.is_empty() {
            return Err(ModelError::DemoTooShort { samples: 0, needed: 1 });
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(ModelError::NonFinite { field: "demo points" });
        }
        Ok(Self { dt, points })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Reads a CSV with at least `t,x,y,z` columns (extra columns such as
    /// velocities are ignored), inferring `dt` from the time column.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, ModelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| -> Result<usize, ModelError> {
            headers.iter().position(|h| h == name).ok_or_else(|| ModelError::LayoutMismatch {
                reason: format!("demo csv is missing column `{name}`"),
            })
        };
        let (tc, xc, yc, zc) = (col("t")?, col("x")?, col("y")?, col("z")?);
        let mut times = Vec::new();
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64, ModelError> {
                record
                    .get(i)
                    .and_then(|f| f.trim().parse::<f64>().ok())
                    .ok_or_else(|| ModelError::LayoutMismatch {
                        reason: format!("bad numeric field in demo row {}", times.len() + 2),
                    })
            };
            times.push(parse(tc)?);
            points.push(Vector3::new(parse(xc)?, parse(yc)?, parse(zc)?));
        }
        if times.len() < 2 {
            return Err(ModelError::DemoTooShort { samples: times.len(), needed: 2 });
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(ModelError::InvalidTimeStep { dt });
        }
        for (i, &t) in times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(ModelError::LayoutMismatch {
                    reason: format!("non-uniform demo sampling at row {}", i + 2),
                });
            }
        }
        Demo::new(dt, points)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["t", "x", "y", "z"])?;
        for (i, p) in self.points.iter().enumerate() {
            wtr.write_record([
                format!("{}", i as f64 * self.dt),
                format!("{}", p.x),
                format!("{}", p.y),
                format!("{}", p.z),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Fits a `k`-component model to a demonstration.
///
/// Segment `i` covers samples `[i*n/k, (i+1)*n/k)`. Duration means are the
/// segment lengths in seconds with a 25% relative standard deviation; the
/// transition matrix is left-to-right with `A[i][i+1] = 0.8` and
/// `A[i][i+2] = 0.2`. The horizon is the total sampled duration, so duration
/// means sum exactly to it.
pub fn fit_from_demo(demo: &Demo, k: usize) -> Result<SkillModel, ModelError> {
    if k == 0 {
        return Err(ModelError::NoComponents);
    }
    let n = demo.len();
    if n < k {
        return Err(ModelError::DemoTooShort { samples: n, needed: k });
    }
    let mut means = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    let mut duration_means = Vec::with_capacity(k);
    for i in 0..k {
        let lo = i * n / k;
        let hi = (i + 1) * n / k;
        let segment = &demo.points[lo..hi];
        let len = segment.len() as f64;
        let mean = segment.iter().sum::<Vector3<f64>>() / len;
        let mut var = Vector3::zeros();
        for p in segment {
            let d = p - mean;
            var += d.component_mul(&d);
        }
        var /= len;
        means.push(mean);
        covariances.push(Matrix3::from_diagonal(&Vector3::new(
            var.x.max(MIN_POSITION_VARIANCE),
            var.y.max(MIN_POSITION_VARIANCE),
            var.z.max(MIN_POSITION_VARIANCE),
        )));
        duration_means.push(len * demo.dt);
    }
    let duration_stds = duration_means.iter().map(|&d| 0.25 * d).collect();
    let mut transition = DMatrix::zeros(k, k);
    for i in 0..k.saturating_sub(1) {
        transition[(i, i + 1)] = 0.8;
        if i + 2 < k {
            transition[(i, i + 2)] = 0.2;
        }
    }
    SkillModel::new(
        means,
        covariances,
        duration_means,
        duration_stds,
        transition,
        demo.dt,
        n as f64 * demo.dt,
        demo.points[0],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_demo(n: usize, dt: f64) -> Demo {
        let points = (0..n)
            .map(|i| Vector3::new(i as f64 * 0.01, 0.0, 0.5))
            .collect();
        Demo::new(dt, points).unwrap()
    }

    #[test]
    fn straight_line_two_segments_hit_the_centroids() {
        let demo = line_demo(100, 0.05);
        let m = fit_from_demo(&demo, 2).unwrap();
        assert_eq!(m.k(), 2);
        // centroid of samples 0..50 and 50..100
        assert!((m.mean(0).x - 0.245).abs() < 1e-9);
        assert!((m.mean(1).x - 0.745).abs() < 1e-9);
    }

    #[test]
    fn single_component_has_absorbing_row() {
        let demo = line_demo(30, 0.1);
        let m = fit_from_demo(&demo, 1).unwrap();
        assert_eq!(m.k(), 1);
        assert_eq!(m.transition().sum(), 0.0);
    }

    #[test]
    fn durations_partition_the_demo() {
        let demo = line_demo(101, 0.05);
        let m = fit_from_demo(&demo, 6).unwrap();
        let total: f64 = m.duration_means().iter().sum();
        assert!((total - demo.duration()).abs() <= demo.dt() + 1e-9);
        assert!((total - m.horizon()).abs() < 1e-9);
    }

    #[test]
    fn dwell_segments_get_the_variance_floor() {
        let points = vec![Vector3::new(0.3, 0.3, 0.3); 50];
        let demo = Demo::new(0.05, points).unwrap();
        let m = fit_from_demo(&demo, 2).unwrap();
        for c in 0..2 {
            assert_eq!(m.covariance(c)[(0, 0)], MIN_POSITION_VARIANCE);
        }
        // still a valid (SPD) model
        assert!(m.retrieve().is_ok());
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let demo = line_demo(3, 0.1);
        assert!(matches!(
            fit_from_demo(&demo, 6),
            Err(ModelError::DemoTooShort { samples: 3, needed: 6 })
        ));
        assert!(matches!(fit_from_demo(&demo, 0), Err(ModelError::NoComponents)));
    }

    #[test]
    fn left_to_right_transitions() {
        let demo = line_demo(60, 0.1);
        let m = fit_from_demo(&demo, 4).unwrap();
        let a = m.transition();
        assert_eq!(a[(0, 1)], 0.8);
        assert_eq!(a[(0, 2)], 0.2);
        assert_eq!(a[(2, 3)], 0.8);
        assert_eq!(a[(3, 0)], 0.0);
        assert_eq!(a.row(3).sum(), 0.0);
    }

    #[test]
    fn csv_round_trip_ignores_extra_columns() {
        let demo = line_demo(20, 0.05);
        let mut buf = Vec::new();
        demo.write_csv(&mut buf).unwrap();
        let back = Demo::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, demo);

        // trajectory-style csv with velocity columns also parses
        let text = "t,x,y,z,vx,vy,vz,state\n0,0.1,0.2,0.3,0,0,0,0\n0.1,0.2,0.3,0.4,0,0,0,1\n";
        let d = Demo::read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.points()[1], Vector3::new(0.2, 0.3, 0.4));
    }
}
