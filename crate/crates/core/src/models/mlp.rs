//! Multi-layer perceptron with a single sigmoid output unit.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::hyper::{positive_usize, Assignment, AssignmentExt};
use super::logistic::sigmoid;
use super::ModelError;
use crate::data::Dataset;
use crate::rng::{rng_from, Rng};

const BATCH_SIZE: usize = 200;
const N_ITER_NO_CHANGE: usize = 10;
const MOMENTUM: f64 = 0.9;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Logistic,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Logistic => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlpSolver {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearningRate {
    Constant,
    InvScaling,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub solver: MlpSolver,
    pub alpha: f64,
    pub learning_rate: LearningRate,
    pub learning_rate_init: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl MlpParams {
    pub fn from_assignment(a: &Assignment) -> Result<Self, ModelError> {
        let hidden = a.int_list("hidden_layer_sizes")?;
        if hidden.is_empty() || hidden.iter().any(|&h| h < 1) {
            return Err(ModelError::Hyper(format!("invalid hidden_layer_sizes {hidden:?}")));
        }
        let activation = match a.text("activation")? {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            "logistic" => Activation::Logistic,
            other => return Err(ModelError::Hyper(format!("unknown activation `{other}`"))),
        };
        let solver = match a.text("solver")? {
            "sgd" => MlpSolver::Sgd,
            "adam" => MlpSolver::Adam,
            other => return Err(ModelError::Hyper(format!("unknown solver `{other}`"))),
        };
        let learning_rate = match a.text("learning_rate")? {
            "constant" => LearningRate::Constant,
            "invscaling" => LearningRate::InvScaling,
            "adaptive" => LearningRate::Adaptive,
            other => return Err(ModelError::Hyper(format!("unknown learning_rate `{other}`"))),
        };
        let learning_rate_init = a.float("learning_rate_init")?;
        if !(learning_rate_init > 0.0) {
            return Err(ModelError::Hyper("learning_rate_init must be positive".into()));
        }
        Ok(MlpParams {
            hidden_layer_sizes: hidden.into_iter().map(|h| h as usize).collect(),
            activation,
            solver,
            alpha: a.float("alpha")?.max(0.0),
            learning_rate,
            learning_rate_init,
            tol: a.float("tol")?.max(0.0),
            max_iter: positive_usize(a, "max_iter")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

impl Mlp {
    fn init(sizes: &[usize], activation: Activation, rng: &mut Rng) -> Self {
        let factor = if activation == Activation::Logistic { 2.0 } else { 6.0 };
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = (factor / (inputs + outputs) as f64).sqrt();
                Layer {
                    weights: (0..inputs * outputs).map(|_| rng.random_range(-bound..bound)).collect(),
                    bias: (0..outputs).map(|_| rng.random_range(-bound..bound)).collect(),
                    inputs,
                    outputs,
                }
            })
            .collect();
        Mlp { layers, activation }
    }

    /// Activations of every layer; the last holds the output probability.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let input = acts.last().expect("input activations");
            let out: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    let z = layer.bias[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
                    if li == last {
                        sigmoid(z)
                    } else {
                        self.activation.apply(z)
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.forward(x).last().expect("output layer")[0]
    }

    fn weight_norm(&self) -> f64 {
        self.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum()
    }

    /// Mean cross-entropy plus L2 term over `batch`; accumulates gradients.
    fn batch_gradient(&self, data: &Dataset, batch: &[usize], alpha: f64, grads: &mut [Layer]) -> f64 {
        for g in grads.iter_mut() {
            g.weights.iter_mut().for_each(|v| *v = 0.0);
            g.bias.iter_mut().for_each(|v| *v = 0.0);
        }
        let m = batch.len() as f64;
        let mut loss = 0.0;
        for &i in batch {
            let acts = self.forward(&data.matrix[i]);
            let p = acts.last().expect("output")[0].clamp(1e-12, 1.0 - 1e-12);
            let y = f64::from(data.labels[i]);
            loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
            let mut delta = vec![acts.last().expect("output")[0] - y];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grads[li];
                for o in 0..layer.outputs {
                    g.bias[o] += delta[o];
                    for (k, v) in input.iter().enumerate() {
                        g.weights[o * layer.inputs + k] += delta[o] * v;
                    }
                }
                if li > 0 {
                    delta = (0..layer.inputs)
                        .map(|k| {
                            let back: f64 = (0..layer.outputs).map(|o| layer.weights[o * layer.inputs + k] * delta[o]).sum();
                            back * self.activation.derivative(input[k])
                        })
                        .collect();
                }
            }
        }
        for (g, layer) in grads.iter_mut().zip(&self.layers) {
            for (gw, w) in g.weights.iter_mut().zip(&layer.weights) {
                *gw = *gw / m + alpha * w / m;
            }
            g.bias.iter_mut().for_each(|b| *b /= m);
        }
        loss / m + alpha * 0.5 * self.weight_norm() / m
    }
}

#[derive(Debug, Clone)]
pub struct MlpFit {
    pub model: Mlp,
    pub converged: bool,
    pub epochs: usize,
}

struct Moments {
    first: Vec<Layer>,
    second: Vec<Layer>,
    steps: i32,
}

pub fn fit(data: &Dataset, params: &MlpParams, seed: u64) -> MlpFit {
    let mut rng = rng_from(seed, &[0]);
    let mut sizes = vec![data.n_features()];
    sizes.extend(&params.hidden_layer_sizes);
    sizes.push(1);
    let mut model = Mlp::init(&sizes, params.activation, &mut rng);
    let zeros = || -> Vec<Layer> {
        model
            .layers
            .iter()
            .map(|l| Layer { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()], ..l.clone() })
            .collect()
    };
    let mut grads = zeros();
    let mut moments = Moments { first: zeros(), second: zeros(), steps: 0 };

    let n = data.len();
    let batch_size = BATCH_SIZE.min(n).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut lr = params.learning_rate_init;
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;
    let mut converged = false;
    let mut epochs = 0;

    for epoch in 0..params.max_iter {
        epochs = epoch + 1;
        order.shuffle(&mut rng);
        if params.solver == MlpSolver::Sgd && params.learning_rate == LearningRate::InvScaling {
            lr = params.learning_rate_init / ((epoch + 1) as f64).sqrt();
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(batch_size) {
            let loss = model.batch_gradient(data, batch, params.alpha, &mut grads);
            epoch_loss += loss * batch.len() as f64;
            apply_update(&mut model, &grads, &mut moments, params.solver, lr);
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() {
            break;
        }
        if epoch_loss > best_loss - params.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        best_loss = best_loss.min(epoch_loss);
        if stale >= N_ITER_NO_CHANGE {
            if params.solver == MlpSolver::Sgd && params.learning_rate == LearningRate::Adaptive && lr > 1e-6 {
                lr /= 5.0;
                stale = 0;
            } else {
                converged = true;
                break;
            }
        }
    }
    MlpFit { model, converged, epochs }
}

fn apply_update(model: &mut Mlp, grads: &[Layer], m: &mut Moments, solver: MlpSolver, lr: f64) {
    match solver {
        MlpSolver::Sgd => {
            for ((layer, g), v) in model.layers.iter_mut().zip(grads).zip(m.first.iter_mut()) {
                for ((w, gw), vw) in layer.weights.iter_mut().zip(&g.weights).zip(v.weights.iter_mut()) {
                    *vw = MOMENTUM * *vw - lr * gw;
                    *w += *vw;
                }
                for ((b, gb), vb) in layer.bias.iter_mut().zip(&g.bias).zip(v.bias.iter_mut()) {
                    *vb = MOMENTUM * *vb - lr * gb;
                    *b += *vb;
                }
            }
        }
        MlpSolver::Adam => {
            m.steps += 1;
            let t = m.steps;
            let step = lr * (1.0 - ADAM_BETA2.powi(t)).sqrt() / (1.0 - ADAM_BETA1.powi(t));
            let update = |p: &mut f64, g: f64, m1: &mut f64, m2: &mut f64| {
                *m1 = ADAM_BETA1 * *m1 + (1.0 - ADAM_BETA1) * g;
                *m2 = ADAM_BETA2 * *m2 + (1.0 - ADAM_BETA2) * g * g;
                *p -= step * *m1 / (m2.sqrt() + ADAM_EPS);
            };
            for (((layer, g), m1), m2) in model.layers.iter_mut().zip(grads).zip(m.first.iter_mut()).zip(m.second.iter_mut())
            {
                for i in 0..layer.weights.len() {
                    update(&mut layer.weights[i], g.weights[i], &mut m1.weights[i], &mut m2.weights[i]);
                }
                for i in 0..layer.bias.len() {
                    update(&mut layer.bias[i], g.bias[i], &mut m1.bias[i], &mut m2.bias[i]);
                }
            }
        }
    }
}
