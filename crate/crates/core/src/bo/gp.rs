//! Gaussian-process surrogate over the unit hypercube.
//!
//! Inputs are normalized to `[0, 1]^d` with the search bounds, outputs are
//! negated (the loop maximizes reward, the surrogate models a minimization
//! objective) and standardized. Hyperparameters come from a small grid
//! scored by log marginal likelihood — deterministic and cheap at the
//! observation counts this loop ever sees.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::model::Bounds;

use super::{BoError, Observation};

/// Length-scale grid, shared across dimensions.
const LENGTH_SCALES: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];
/// Noise-variance grid.
const NOISE_VARIANCES: [f64; 3] = [1e-6, 1e-4, 1e-2];

/// Fitted surrogate. Predictions are in standardized internal units; use
/// [`GpModel::to_reward`] to map a posterior mean back to reward space.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    targets: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    length_scales: Vec<f64>,
    signal_variance: f64,
    noise_variance: f64,
    output_mean: f64,
    output_scale: f64,
    f_best: f64,
}

impl GpModel {
    /// Fits the surrogate to the observations, choosing hyperparameters by
    /// log-marginal-likelihood over the grid.
    pub fn fit(observations: &[Observation], bounds: &Bounds) -> Result<Self, BoError> {
        if observations.is_empty() {
            return Err(BoError::EmptyTrainingSet);
        }
        let dim = bounds.len();
        let inputs: Vec<Vec<f64>> = observations
            .iter()
            .map(|o| normalize(&o.delta, bounds))
            .collect::<Result<_, _>>()?;

        // Internal objective: minimize the negated reward.
        let raw: Vec<f64> = observations.iter().map(|o| -o.reward).collect();
        if let Some(&bad) = raw.iter().find(|v| !v.is_finite()) {
            return Err(BoError::NonFiniteReward(-bad));
        }
        let n = raw.len();
        let output_mean = raw.iter().sum::<f64>() / n as f64;
        let output_scale = if n > 1 {
            let var = raw.iter().map(|v| (v - output_mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            var.sqrt().max(1e-12)
        } else {
            1.0
        };
        let targets =
            DVector::from_iterator(n, raw.iter().map(|v| (v - output_mean) / output_scale));
        let signal_variance = 1.0; // outputs are standardized

        let mut best: Option<(f64, f64, f64, Cholesky<f64, Dyn>)> = None;
        for &ls in &LENGTH_SCALES {
            for &noise in &NOISE_VARIANCES {
                let gram = gram_matrix(&inputs, ls, signal_variance, noise);
                let Some(chol) = cholesky_with_jitter(gram) else {
                    continue;
                };
                let alpha = chol.solve(&targets);
                let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
                let lml = -0.5 * targets.dot(&alpha)
                    - log_det
                    - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
                if best.as_ref().is_none_or(|(b, ..)| lml > *b) {
                    best = Some((lml, ls, noise, chol));
                }
            }
        }
        let Some((_, length_scale, noise_variance, chol)) = best else {
            return Err(BoError::SingularGram);
        };
        let alpha = chol.solve(&targets);
        let f_best = targets.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            inputs,
            targets,
            chol,
            alpha,
            length_scales: vec![length_scale; dim],
            signal_variance,
            noise_variance,
            output_mean,
            output_scale,
            f_best,
        })
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn length_scales(&self) -> &[f64] {
        &self.length_scales
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn output_mean(&self) -> f64 {
        self.output_mean
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Best (lowest) standardized internal objective seen so far.
    pub fn f_best(&self) -> f64 {
        self.f_best
    }

    /// Posterior mean and standard deviation at a unit-cube point, in
    /// standardized internal units. The variance is the latent one (no
    /// observation noise added).
    pub fn predict(&self, point: &[f64]) -> (f64, f64) {
        let k_star = DVector::from_iterator(
            self.inputs.len(),
            self.inputs
                .iter()
                .map(|x| kernel(x, point, self.length_scales[0], self.signal_variance)),
        );
        let mean = k_star.dot(&self.alpha);
        let v = self.chol.solve(&k_star);
        let var = (self.signal_variance - k_star.dot(&v)).max(0.0);
        (mean, var.sqrt())
    }

    /// Maps a standardized internal posterior mean back to reward units.
    pub fn to_reward(&self, internal_mean: f64) -> f64 {
        -(internal_mean * self.output_scale + self.output_mean)
    }

    /// Scales a standardized posterior deviation back to reward units.
    pub fn to_reward_scale(&self, internal_std: f64) -> f64 {
        internal_std * self.output_scale
    }

    /// Standardized residual of the posterior mean at every training input.
    pub fn training_residuals(&self) -> Vec<f64> {
        self.inputs
            .iter()
            .zip(self.targets.iter())
            .map(|(x, &y)| self.predict(x).0 - y)
            .collect()
    }
}

/// Probability of improvement at a unit-cube point: `Φ((f_best − m − ξ)/σ)`
/// for the internal minimization objective. With a degenerate posterior
/// (`σ = 0`) it is 1 when the mean already improves by more than `ξ`, else 0.
pub fn pi_acquisition(gp: &GpModel, point: &[f64], f_best: f64, xi: f64) -> f64 {
    let (mean, std) = gp.predict(point);
    if std < 1e-12 {
        return if mean < f_best - xi { 1.0 } else { 0.0 };
    }
    norm_cdf((f_best - mean - xi) / std)
}

pub(crate) fn normalize(delta: &[f64], bounds: &Bounds) -> Result<Vec<f64>, BoError> {
    if delta.len() != bounds.len() {
        return Err(BoError::DimensionMismatch { expected: bounds.len(), got: delta.len() });
    }
    Ok(delta
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let span = bounds.upper[i] - bounds.lower[i];
            if span <= 0.0 {
                0.5
            } else {
                ((v - bounds.lower[i]) / span).clamp(0.0, 1.0)
            }
        })
        .collect())
}

pub(crate) fn denormalize(point: &[f64], bounds: &Bounds) -> Vec<f64> {
    point
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let v = bounds.lower[i] + u * (bounds.upper[i] - bounds.lower[i]);
            v.clamp(bounds.lower[i], bounds.upper[i])
        })
        .collect()
}

/// Squared-exponential kernel with a shared length scale.
fn kernel(a: &[f64], b: &[f64], length_scale: f64, signal_variance: f64) -> f64 {
    let mut dist_sq = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y) / length_scale;
        dist_sq += d * d;
    }
    signal_variance * (-0.5 * dist_sq).exp()
}

fn gram_matrix(inputs: &[Vec<f64>], ls: f64, signal: f64, noise: f64) -> DMatrix<f64> {
    let n = inputs.len();
    DMatrix::from_fn(n, n, |i, j| {
        let k = kernel(&inputs[i], &inputs[j], ls, signal);
        if i == j {
            k + noise
        } else {
            k
        }
    })
}

/// Cholesky with escalating diagonal jitter; gives up at 1e-2.
fn cholesky_with_jitter(gram: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(gram.clone()) {
        return Some(c);
    }
    let n = gram.nrows();
    let mut jitter = 1e-10;
    while jitter <= 1e-2 {
        let jittered = &gram + DMatrix::identity(n, n) * jitter;
        if let Some(c) = Cholesky::new(jittered) {
            return Some(c);
        }
        jitter *= 10.0;
    }
    None
}

/// Standard normal CDF via the Abramowitz & Stegun rational approximation
/// (absolute error below 7.5e-8, plenty for an acquisition score).
pub fn norm_cdf(x: f64) -> f64 {
    if x < -8.0 {
        return 0.0;
    }
    if x > 8.0 {
        return 1.0;
    }
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    let abs_x = x.abs();
    let t = 1.0 / (1.0 + 0.231_641_9 * abs_x);
    let poly = t
        * (0.319_381_530
            + t * (-0.356_563_782 + t * (1.781_477_937 + t * (-1.821_255_978 + t * 1.330_274_429))));
    let pdf = INV_SQRT_2PI * (-0.5 * abs_x * abs_x).exp();
    let cdf = 1.0 - pdf * poly;
    if x >= 0.0 {
        cdf
    } else {
        1.0 - cdf
    }
}
