//! L2-regularized logistic regression fitted by gradient descent or Newton.
//!
//! The objective is the mean log-loss plus `lambda / 2 * ||w||^2` with
//! `lambda = 1 / (C * n)`; the bias is never penalized.

use serde::{Deserialize, Serialize};

use super::hyper::{Assignment, AssignmentExt};
use super::ModelError;
use crate::data::Dataset;

const GD_MAX_ITER: usize = 5000;
const GD_TOL: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Gd,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub c: f64,
    pub penalty: Penalty,
    pub solver: Solver,
}

impl LogisticParams {
    pub fn from_assignment(a: &Assignment) -> Result<Self, ModelError> {
        let c = a.float("C")?;
        if !(c > 0.0) {
            return Err(ModelError::Hyper(format!("C must be positive, got {c}")));
        }
        let penalty = match a.text("penalty")? {
            "l2" => Penalty::L2,
            "none" => Penalty::None,
            other => return Err(ModelError::Hyper(format!("unknown penalty `{other}`"))),
        };
        let solver = match a.text("solver")? {
            "gd" => Solver::Gd,
            "newton" => Solver::Newton,
            other => return Err(ModelError::Hyper(format!("unknown solver `{other}`"))),
        };
        Ok(LogisticParams { c, penalty, solver })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// Penalized mean log-loss over a fixed dataset; parameters are packed as
/// `[w_1, .., w_d, bias]`.
pub struct Objective<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [u8], lambda: f64) -> Self {
        Objective { x, y, lambda }
    }

    pub fn for_params(data: &'a Dataset, params: &LogisticParams) -> Self {
        let lambda = match params.penalty {
            Penalty::L2 => 1.0 / (params.c * data.len() as f64),
            Penalty::None => 0.0,
        };
        Objective::new(&data.matrix, &data.labels, lambda)
    }

    fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    fn logit(theta: &[f64], x: &[f64]) -> f64 {
        let d = x.len();
        theta[d] + theta[..d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let d = self.dim();
        let n = self.y.len() as f64;
        let data: f64 = self
            .x
            .iter()
            .zip(self.y)
            .map(|(x, &y)| {
                let z = Self::logit(theta, x);
                // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
                softplus(z) - f64::from(y) * z
            })
            .sum::<f64>()
            / n;
        let reg: f64 = theta[..d].iter().map(|w| w * w).sum::<f64>() * self.lambda / 2.0;
        data + reg
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let n = self.y.len() as f64;
        let mut g = vec![0.0; d + 1];
        for (x, &y) in self.x.iter().zip(self.y) {
            let r = sigmoid(Self::logit(theta, x)) - f64::from(y);
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += r * xj;
            }
            g[d] += r;
        }
        g.iter_mut().for_each(|v| *v /= n);
        for j in 0..d {
            g[j] += self.lambda * theta[j];
        }
        g
    }

    fn hessian(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let n = self.y.len() as f64;
        let mut h = vec![vec![0.0; d + 1]; d + 1];
        for x in self.x {
            let p = sigmoid(Self::logit(theta, x));
            let s = p * (1.0 - p);
            for a in 0..=d {
                let xa = if a == d { 1.0 } else { x[a] };
                for b in 0..=a {
                    let xb = if b == d { 1.0 } else { x[b] };
                    h[a][b] += s * xa * xb;
                }
            }
        }
        for a in 0..=d {
            for b in 0..=a {
                h[a][b] /= n;
                h[b][a] = h[a][b];
            }
            if a < d {
                h[a][a] += self.lambda;
            }
            h[a][a] += 1e-10;
        }
        h
    }

    /// Upper bound on the curvature, used as the inverse of the GD step.
    pub fn lipschitz_bound(&self) -> f64 {
        let max_norm = self.x.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>() + 1.0).fold(0.0, f64::max);
        0.25 * max_norm + self.lambda
    }
}

/// Result of a fit, with the objective value after every iteration.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub converged: bool,
    pub loss_trace: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn unpack(theta: Vec<f64>) -> LogisticModel {
    let mut weights = theta;
    let bias = weights.pop().unwrap_or(0.0);
    LogisticModel { weights, bias }
}

/// Fixed-step gradient descent with step `1 / lipschitz_bound`.
pub fn fit_gradient_descent(obj: &Objective<'_>, max_iter: usize) -> LogisticFit {
    let step = 1.0 / obj.lipschitz_bound();
    let mut theta = vec![0.0; obj.dim() + 1];
    let mut trace = vec![obj.loss(&theta)];
    let mut converged = false;
    for _ in 0..max_iter {
        let g = obj.gradient(&theta);
        if inf_norm(&g) < GD_TOL {
            converged = true;
            break;
        }
        theta.iter_mut().zip(&g).for_each(|(t, gi)| *t -= step * gi);
        trace.push(obj.loss(&theta));
    }
    LogisticFit { model: unpack(theta), converged, loss_trace: trace }
}

/// Damped Newton iterations with Armijo backtracking.
pub fn fit_newton(obj: &Objective<'_>, max_iter: usize) -> LogisticFit {
    let mut theta = vec![0.0; obj.dim() + 1];
    let mut loss = obj.loss(&theta);
    let mut trace = vec![loss];
    let mut converged = false;
    for _ in 0..max_iter {
        let g = obj.gradient(&theta);
        if inf_norm(&g) < NEWTON_TOL {
            converged = true;
            break;
        }
        let Some(delta) = cholesky_solve(obj.hessian(&theta), &g) else {
            break;
        };
        let slope: f64 = g.iter().zip(&delta).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let candidate: Vec<f64> = theta.iter().zip(&delta).map(|(th, d)| th - t * d).collect();
            let cand_loss = obj.loss(&candidate);
            if cand_loss <= loss - 1e-4 * t * slope {
                theta = candidate;
                loss = cand_loss;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        trace.push(loss);
        if !accepted {
            // no descent available at machine precision
            converged = inf_norm(&g) < 1e-6;
            break;
        }
    }
    LogisticFit { model: unpack(theta), converged, loss_trace: trace }
}

fn cholesky_solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= a[j][k] * a[j][k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let l_jj = diag.sqrt();
        a[j][j] = l_jj;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / l_jj;
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| a[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / a[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / a[i][i];
    }
    Some(x)
}

pub fn fit(data: &Dataset, params: &LogisticParams) -> LogisticFit {
    let obj = Objective::for_params(data, params);
    match params.solver {
        Solver::Gd => fit_gradient_descent(&obj, GD_MAX_ITER),
        Solver::Newton => fit_newton(&obj, NEWTON_MAX_ITER),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;

    fn separable() -> Dataset {
        let mut matrix = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..10 {
            matrix.push(vec![0.0]);
            labels.push(0);
            matrix.push(vec![1.0]);
            labels.push(1);
        }
        Dataset::new(FeatureSchema::generic(1), matrix, labels).unwrap()
    }

    fn params(solver: Solver, penalty: Penalty) -> LogisticParams {
        LogisticParams { c: 1.0, penalty, solver }
    }

    #[test]
    fn separable_set_is_fit_exactly() {
        let data = separable();
        for solver in [Solver::Gd, Solver::Newton] {
            let fit = fit(&data, &params(solver, Penalty::L2));
            for (x, &y) in data.matrix.iter().zip(&data.labels) {
                assert_eq!(u8::from(fit.model.predict_proba(x) >= 0.5), y, "{solver:?}");
            }
        }
    }

    #[test]
    fn zero_model_sits_on_the_threshold() {
        let m = LogisticModel { weights: vec![0.0; 3], bias: 0.0 };
        assert_eq!(m.predict_proba(&[1.0, -2.0, 3.0]), 0.5);
    }

    #[test]
    fn solvers_agree_on_a_regularized_problem() {
        let matrix: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from((i * 7) % 5 < 2)).collect();
        let data = Dataset::new(FeatureSchema::generic(2), matrix, labels).unwrap();
        let p = LogisticParams { c: 0.5, penalty: Penalty::L2, solver: Solver::Gd };
        let gd = fit(&data, &p);
        let nt = fit(&data, &LogisticParams { solver: Solver::Newton, ..p });
        assert!(gd.converged && nt.converged);
        for (a, b) in gd.model.weights.iter().zip(&nt.model.weights) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn cholesky_solves_small_system() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = cholesky_solve(a, &[2.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && x[1].abs() < 1e-12);
    }
}
