//! Optimal crowd-aggregation weights.
//!
//! Minimizes the expected squared error of `C = sum_i w_i X_i` over the
//! probability simplex,
//!
//! ```text
//! f(w) = (w . mu - mu_Y)^2 + w' Sigma w + sigma_Y^2
//! ```
//!
//! with `X` independent of `Y`. On the simplex `w . mu - mu_Y = w . (mu - mu_Y 1)`,
//! so the solver works with centered means; this makes the argmin invariant
//! to a common shift of the means and the criterion.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CrowdWeights;

const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// First and second moments of the decision-makers' estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentModel {
    pub means: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub criterion_mean: f64,
    #[serde(default)]
    pub criterion_variance: f64,
}

impl MomentModel {
    /// Independent decision-makers with the given means and variances.
    pub fn independent(means: Vec<f64>, variances: &[f64], criterion_mean: f64) -> Result<Self> {
        let n = variances.len();
        let covariance = (0..n)
            .map(|i| (0..n).map(|j| if i == j { variances[i] } else { 0.0 }).collect())
            .collect();
        let model = Self {
            means,
            covariance,
            criterion_mean,
            criterion_variance: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Shape, symmetry and diagonal checks. Does not test definiteness; see
    /// [`MomentModel::check_psd`].
    pub fn validate(&self) -> Result<()> {
        let n = self.means.len();
        if n == 0 {
            return Err(Error::EmptyInput("moment model means"));
        }
        if self.covariance.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.covariance.len(),
            });
        }
        for row in &self.covariance {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        let finite = self
            .means
            .iter()
            .chain(self.covariance.iter().flatten())
            .all(|v| v.is_finite());
        if !finite || !self.criterion_mean.is_finite() || !self.criterion_variance.is_finite() {
            return Err(Error::InvalidParameter(
                "moment model contains non-finite values".into(),
            ));
        }
        if self.criterion_variance < 0.0 {
            return Err(Error::InvalidParameter("criterion variance must be nonnegative".into()));
        }
        for i in 0..n {
            if self.covariance[i][i] < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "covariance diagonal entry {i} is negative"
                )));
            }
            for j in 0..i {
                if (self.covariance[i][j] - self.covariance[j][i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidParameter(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| 0.5 * (self.covariance[i][j] + self.covariance[j][i]))
    }

    /// Rejects covariances with an eigenvalue below `-tolerance * max(1, |lambda_max|)`.
    pub fn check_psd(&self) -> Result<()> {
        self.validate()?;
        let eig = SymmetricEigen::new(self.covariance_matrix());
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 * scale {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
        }
        Ok(())
    }

    fn centered_means(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.means.iter().map(|m| m - self.criterion_mean))
    }

    /// Per-decision-maker expected squared error `(mu_i - mu_Y)^2 + Sigma_ii + sigma_Y^2`.
    pub fn individual_errors(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let b = self.means[i] - self.criterion_mean;
                b * b + self.covariance[i][i] + self.criterion_variance
            })
            .collect()
    }
}

/// `E[(C - Y)^2]` for weights `w` under the model.
pub fn expected_crowd_sq_error(weights: &CrowdWeights, model: &MomentModel) -> Result<f64> {
    model.validate()?;
    if weights.len() != model.dim() {
        return Err(Error::LengthMismatch {
            expected: model.dim(),
            found: weights.len(),
        });
    }
    let w = DVector::from_column_slice(weights.as_slice());
    Ok(objective(&w, &model.centered_means(), &model.covariance_matrix()) + model.criterion_variance)
}

fn objective(w: &DVector<f64>, centered: &DVector<f64>, sigma: &DMatrix<f64>) -> f64 {
    let bias = w.dot(centered);
    bias * bias + w.dot(&(sigma * w))
}

fn gradient(w: &DVector<f64>, centered: &DVector<f64>, sigma: &DMatrix<f64>) -> DVector<f64> {
    centered * (2.0 * w.dot(centered)) + sigma * w * 2.0
}

/// Euclidean projection onto the probability simplex by the sorted-threshold
/// method.
pub fn project_to_simplex(v: &[f64]) -> Result<CrowdWeights> {
    if v.is_empty() {
        return Err(Error::EmptyInput("vector to project"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("cannot project non-finite values".into()));
    }
    Ok(CrowdWeights::from_projection(project_raw(v)))
}

fn project_raw(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|x| (x - tau).max(0.0)).collect();
    // remove the residual rounding from the sum
    let total = crate::numeric::sum(w.iter().copied());
    if total > 0.0 {
        for x in &mut w {
            *x /= total;
        }
    }
    w
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `||w - P(w - grad f(w) / L)||_inf * L` falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalWeights {
    pub weights: CrowdWeights,
    pub objective: f64,
    pub uniform_objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn power_iteration(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    // perturb so the start vector is not orthogonal to the top eigenvector
    for (i, x) in v.iter_mut().enumerate() {
        *x += 1e-3 * (i as f64 + 1.0) / n as f64;
    }
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mv = m * &v;
        let norm = mv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&mv);
        v = mv / norm;
        if (next - lambda).abs() <= 1e-12 * next.abs().max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // the Rayleigh quotient under-estimates; pad it
    lambda.max(m.diagonal().max()) * 1.01
}

fn kkt_residual(w: &DVector<f64>, grad: &DVector<f64>, lipschitz: f64) -> f64 {
    let step = 1.0 / lipschitz;
    let trial: Vec<f64> = (w - grad * step).iter().copied().collect();
    let projected = DVector::from_vec(project_raw(&trial));
    (w - projected).amax() * lipschitz
}

/// Projected gradient descent with backtracking, started from uniform
/// weights. Flat directions of the objective are never moved along, so among
/// tied optima the one reached from the uniform vector is returned.
pub fn optimal_weights(model: &MomentModel, options: SolverOptions) -> Result<OptimalWeights> {
    model.validate()?;
    model.check_psd()?;
    let n = model.dim();
    let centered = model.centered_means();
    let sigma = model.covariance_matrix();
    let uniform = DVector::from_element(n, 1.0 / n as f64);
    let uniform_objective = objective(&uniform, &centered, &sigma) + model.criterion_variance;

    let hessian = (&centered * centered.transpose() + &sigma) * 2.0;
    let mut lipschitz = power_iteration(&hessian);
    if !(lipschitz > 0.0) {
        // zero objective: every point is optimal
        return Ok(OptimalWeights {
            weights: CrowdWeights::from_projection(uniform.iter().copied().collect()),
            objective: uniform_objective,
            uniform_objective,
            iterations: 0,
            kkt_residual: 0.0,
        });
    }

    let mut w = uniform.clone();
    let mut f = objective(&w, &centered, &sigma);
    let mut residual = f64::INFINITY;
    for iteration in 0..options.max_iterations {
        let grad = gradient(&w, &centered, &sigma);
        residual = kkt_residual(&w, &grad, lipschitz);
        let scale = 1.0 + f.abs();
        if residual <= options.tolerance * scale {
            return Ok(OptimalWeights {
                weights: CrowdWeights::from_projection(w.iter().copied().collect()),
                objective: f + model.criterion_variance,
                uniform_objective,
                iterations: iteration,
                kkt_residual: residual,
            });
        }
        // backtracking on the projected step
        let mut step = 1.0 / lipschitz;
        loop {
            let trial: Vec<f64> = (&w - &grad * step).iter().copied().collect();
            let candidate = DVector::from_vec(project_raw(&trial));
            let delta = &candidate - &w;
            let f_candidate = objective(&candidate, &centered, &sigma);
            let bound = f + grad.dot(&delta) + delta.norm_squared() / (2.0 * step);
            if f_candidate <= bound + 1e-15 * scale || step < 1e-30 {
                if delta.amax() == 0.0 {
                    // fixed point of the projected step at machine precision
                    return Ok(OptimalWeights {
                        weights: CrowdWeights::from_projection(w.iter().copied().collect()),
                        objective: f + model.criterion_variance,
                        uniform_objective,
                        iterations: iteration + 1,
                        kkt_residual: residual,
                    });
                }
                w = candidate;
                f = f_candidate;
                break;
            }
            step *= 0.5;
            lipschitz = lipschitz.max(1.0 / step);
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        residual,
        objective: f + model.criterion_variance,
        weights: w.iter().copied().collect(),
    })
}
