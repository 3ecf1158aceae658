//! Feed-forward regressor mapping feature rows to 2D coordinates, used to
//! place compounds that were not part of the original t-SNE fit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trust::pearson;
use super::{DrError, EmbeddingMatrix, Projection2D, Representation};

pub const PROJECTOR_FORMAT: &str = "molscape.projector";
pub const PROJECTOR_VERSION: u32 = 1;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `h`.
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - h * h,
            Activation::Sigmoid => h * (1.0 - h),
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> DenseLayer {
        DenseLayer { inputs, outputs, activation, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn glorot(inputs: usize, outputs: usize, activation: Activation, rng: &mut ChaCha8Rng) -> DenseLayer {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        DenseLayer { inputs, outputs, activation, weights, bias: vec![0.0; outputs] }
    }

    /// Pre-activations, skipping zero inputs.
    fn pre_activation(&self, x: &[f64], nonzero: &[usize], z: &mut Vec<f64>) {
        z.clear();
        for o in 0..self.outputs {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = self.bias[o];
            for &i in nonzero {
                acc += w[i] * x[i];
            }
            z.push(acc);
        }
    }
}

/// Gradient of the loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGradient {
    fn zeros_like(layer: &DenseLayer) -> LayerGradient {
        LayerGradient { weights: vec![0.0; layer.weights.len()], bias: vec![0.0; layer.bias.len()] }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|v| *v = 0.0);
        self.bias.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectorConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    /// One rate per dense layer, output layer last. A hidden layer's rate
    /// drops its outputs during training; the output layer's rate is not applied.
    pub dropout: Vec<f64>,
    pub learning_rate: f64,
    pub patience: usize,
    /// Smallest drop in mean squared error, in target units, that counts as progress.
    pub min_delta: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for ProjectorConfig {
    fn default() -> Self {
        ProjectorConfig {
            hidden_layers: vec![100, 10],
            activation: Activation::Relu,
            dropout: vec![0.25, 0.15, 0.1],
            learning_rate: 1e-4,
            patience: 70,
            min_delta: 0.005,
            batch_size: 32,
            max_epochs: 5000,
            seed: 0,
        }
    }
}

impl ProjectorConfig {
    fn preset(hidden: [usize; 2], activation: Activation, patience: usize) -> ProjectorConfig {
        ProjectorConfig { hidden_layers: hidden.to_vec(), activation, patience, ..ProjectorConfig::default() }
    }

    /// Settings used for the ~900-compound transporter dataset.
    pub fn large_dataset(representation: Representation) -> ProjectorConfig {
        match representation {
            Representation::Ecfp => Self::preset([100, 10], Activation::Relu, 70),
            Representation::Path => Self::preset([100, 10], Activation::Relu, 130),
            Representation::Descriptors => Self::preset([200, 20], Activation::Relu, 120),
            Representation::Embeddings => Self::preset([100, 10], Activation::Relu, 50),
        }
    }

    /// Settings used for the ~120-compound receptor dataset.
    pub fn small_dataset(representation: Representation) -> ProjectorConfig {
        match representation {
            Representation::Ecfp => Self::preset([50, 10], Activation::Relu, 70),
            Representation::Path => Self::preset([50, 10], Activation::Relu, 70),
            Representation::Descriptors => Self::preset([200, 50], Activation::Tanh, 100),
            Representation::Embeddings => Self::preset([50, 10], Activation::Sigmoid, 70),
        }
    }

    fn validate(&self) -> Result<(), DrError> {
        if self.dropout.len() != self.hidden_layers.len() + 1 {
            return Err(DrError::Config(format!(
                "{} dropout rates for {} dense layers",
                self.dropout.len(),
                self.hidden_layers.len() + 1
            )));
        }
        if self.dropout.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(DrError::Config("dropout rates must lie in [0, 1)".into()));
        }
        if self.hidden_layers.contains(&0) || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(DrError::Config("layer widths, batch size and learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: usize,
    pub stopped_early: bool,
    /// Mean training loss per epoch, on standardized targets.
    pub loss_trace: Vec<f64>,
    /// Lowest training loss without dropout, the early-stopping monitor.
    pub best_loss: f64,
    /// Per-axis Pearson r between predictions and targets on the training rows.
    pub pearson: [f64; 2],
}

/// Trained network: input width `d`, hidden layers, linear output of width 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProjectorDocument", into = "ProjectorDocument")]
pub struct ParametricProjector {
    pub representation: Representation,
    layers: Vec<DenseLayer>,
    pub training: ProjectorConfig,
}

#[derive(Serialize, Deserialize)]
struct ProjectorDocument {
    format: String,
    version: u32,
    representation: Representation,
    layers: Vec<DenseLayer>,
    training: ProjectorConfig,
}

impl From<ParametricProjector> for ProjectorDocument {
    fn from(p: ParametricProjector) -> Self {
        ProjectorDocument {
            format: PROJECTOR_FORMAT.to_string(),
            version: PROJECTOR_VERSION,
            representation: p.representation,
            layers: p.layers,
            training: p.training,
        }
    }
}

impl TryFrom<ProjectorDocument> for ParametricProjector {
    type Error = DrError;

    fn try_from(doc: ProjectorDocument) -> Result<Self, Self::Error> {
        if doc.format != PROJECTOR_FORMAT {
            return Err(DrError::Document(format!("unexpected format `{}`", doc.format)));
        }
        if doc.version != PROJECTOR_VERSION {
            return Err(DrError::Document(format!("unsupported version {}", doc.version)));
        }
        ParametricProjector::from_layers(doc.representation, doc.layers, doc.training)
    }
}

impl ParametricProjector {
    /// Assembles a projector, checking that layer shapes chain together,
    /// the output width is 2 and every weight is finite.
    pub fn from_layers(
        representation: Representation,
        layers: Vec<DenseLayer>,
        training: ProjectorConfig,
    ) -> Result<ParametricProjector, DrError> {
        let Some(last) = layers.last() else {
            return Err(DrError::Document("no layers".into()));
        };
        if last.outputs != 2 || last.activation != Activation::Linear {
            return Err(DrError::Document("output layer must be linear with width 2".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(DrError::Document(format!("layer {k} has inconsistent parameter counts")));
            }
            if k > 0 && layers[k - 1].outputs != l.inputs {
                return Err(DrError::Document(format!("layer {k} input width does not match layer {}", k - 1)));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(DrError::Document(format!("layer {k} has non-finite parameters")));
            }
        }
        Ok(ParametricProjector { representation, layers, training })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    /// Deterministic forward pass (no dropout).
    pub fn project(&self, row: &[f64]) -> Result<[f64; 2], DrError> {
        if row.len() != self.input_width() {
            return Err(DrError::WidthMismatch { expected: self.input_width(), got: row.len() });
        }
        if row.iter().any(|v| v.is_nan()) {
            return Err(DrError::NonFinite("input row".into()));
        }
        let out = forward(&self.layers, row, None).output;
        Ok([out[0], out[1]])
    }

    /// Projects every row of `matrix`.
    pub fn project_matrix(&self, matrix: &EmbeddingMatrix) -> Result<Projection2D, DrError> {
        let coords = matrix.iter_rows().map(|r| self.project(r)).collect::<Result<Vec<_>, _>>()?;
        Projection2D::new(matrix.representation, super::ProjectionSource::Parametric, matrix.ids().to_vec(), coords)
    }

    /// Mean squared error over `inputs` and its gradient, without dropout.
    pub fn loss_and_gradient(&self, inputs: &[&[f64]], targets: &[[f64; 2]]) -> (f64, Vec<LayerGradient>) {
        let mut grads: Vec<LayerGradient> = self.layers.iter().map(LayerGradient::zeros_like).collect();
        let mut loss = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            loss += backprop(&self.layers, x, t, None, &mut grads);
        }
        let scale = 1.0 / inputs.len() as f64;
        for g in grads.iter_mut() {
            g.weights.iter_mut().chain(g.bias.iter_mut()).for_each(|v| *v *= scale);
        }
        (loss * scale, grads)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("projector serializes")
    }

    pub fn from_json(text: &str) -> Result<ParametricProjector, DrError> {
        serde_json::from_str(text).map_err(|e| DrError::Document(e.to_string()))
    }
}

struct Forward {
    /// Input to every layer after dropout, then the network output.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

fn nonzero_indices(x: &[f64]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
}

/// `masks[l]` scales the input of layer `l` (inverted dropout).
fn forward(layers: &[DenseLayer], x: &[f64], masks: Option<&[Vec<f64>]>) -> Forward {
    let mut activations = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut input = x.to_vec();
    for (l, layer) in layers.iter().enumerate() {
        if let Some(m) = masks {
            input.iter_mut().zip(&m[l]).for_each(|(v, s)| *v *= s);
        }
        let nz = nonzero_indices(&input);
        let mut z = Vec::with_capacity(layer.outputs);
        layer.pre_activation(&input, &nz, &mut z);
        let h: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
        activations.push(input);
        pre.push(z);
        input = h;
    }
    Forward { activations, pre, output: input }
}

/// Accumulates the per-sample gradient of `mean_k (out_k - t_k)^2` into
/// `grads` and returns that loss.
fn backprop(
    layers: &[DenseLayer],
    x: &[f64],
    target: &[f64; 2],
    masks: Option<&[Vec<f64>]>,
    grads: &mut [LayerGradient],
) -> f64 {
    let f = forward(layers, x, masks);
    let mut delta: Vec<f64> = f.output.iter().zip(target).map(|(o, t)| o - t).collect();
    let loss = delta.iter().map(|d| d * d).sum::<f64>() / 2.0;
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let a = &f.activations[l];
        let nz = nonzero_indices(a);
        let g = &mut grads[l];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.bias[o] += d;
            let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for &i in &nz {
                row[i] += d * a[i];
            }
        }
        if l == 0 {
            break;
        }
        let prev = &layers[l - 1];
        let mut next = vec![0.0; layer.inputs];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (n, wi) in next.iter_mut().zip(w) {
                *n += d * wi;
            }
        }
        for (i, n) in next.iter_mut().enumerate() {
            if let Some(m) = masks {
                *n *= m[l][i];
            }
            let z = f.pre[l - 1][i];
            *n *= prev.activation.derivative(z, prev.activation.apply(z));
        }
        delta = next;
    }
    loss
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Standardizer {
        let rows: Vec<&[f64]> = rows.collect();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            mean.iter_mut().zip(r.iter()).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; dim];
        for r in &rows {
            for (k, v) in r.iter().enumerate() {
                var[k] += (v - mean[k]).powi(2) / n;
            }
        }
        let scale = var.iter().map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

struct Adam {
    m: Vec<LayerGradient>,
    v: Vec<LayerGradient>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(layers: &[DenseLayer], lr: f64) -> Adam {
        let zeros = || layers.iter().map(LayerGradient::zeros_like).collect();
        Adam { m: zeros(), v: zeros(), t: 0, lr }
    }

    fn step(&mut self, layers: &mut [DenseLayer], grads: &[LayerGradient]) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        let lr = self.lr * c2.sqrt() / c1;
        for (l, layer) in layers.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[l], &mut self.v[l]);
            adam_update(&mut layer.weights, &grads[l].weights, &mut m.weights, &mut v.weights, lr);
            adam_update(&mut layer.bias, &grads[l].bias, &mut m.bias, &mut v.bias, lr);
        }
    }
}

fn adam_update(params: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64) {
    for i in 0..params.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
        params[i] -= lr * m[i] / (v[i].sqrt() + ADAM_EPSILON);
    }
}

fn dropout_masks(layers: &[DenseLayer], rates: &[f64], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    // The input of layer l is the output of layer l - 1; the feature row is never dropped.
    layers
        .iter()
        .zip(std::iter::once(&0.0).chain(rates))
        .map(|(layer, &p)| {
            let keep = 1.0 / (1.0 - p);
            (0..layer.inputs).map(|_| if p > 0.0 && rng.random::<f64>() < p { 0.0 } else { keep }).collect()
        })
        .collect()
}

/// Trains a projector from `matrix` rows to the `target` coordinates.
///
/// Inputs and targets are standardized during training; the affine maps are
/// folded into the first and last layers afterwards, so the returned network
/// consumes raw rows and emits target-scale coordinates.
pub fn train_projector(
    matrix: &EmbeddingMatrix,
    target: &Projection2D,
    config: &ProjectorConfig,
) -> Result<(ParametricProjector, TrainingReport), DrError> {
    config.validate()?;
    if matrix.ids() != target.ids() {
        return Err(DrError::Shape("target rows are not aligned with the matrix".into()));
    }
    let n = matrix.rows();
    let dim = matrix.dim();
    let xs = Standardizer::fit(matrix.iter_rows(), dim);
    let ys = Standardizer::fit(target.coords().iter().map(|c| c.as_slice()), 2);
    let inputs: Vec<Vec<f64>> = matrix.iter_rows().map(|r| xs.apply(r)).collect();
    let targets: Vec<[f64; 2]> = target
        .coords()
        .iter()
        .map(|c| {
            let s = ys.apply(c);
            [s[0], s[1]]
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut widths = vec![dim];
    widths.extend(&config.hidden_layers);
    let mut layers: Vec<DenseLayer> =
        widths.windows(2).map(|w| DenseLayer::glorot(w[0], w[1], config.activation, &mut rng)).collect();
    layers.push(DenseLayer::glorot(*widths.last().unwrap(), 2, Activation::Linear, &mut rng));

    let mut adam = Adam::new(&layers, config.learning_rate);
    let mut grads: Vec<LayerGradient> = layers.iter().map(LayerGradient::zeros_like).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_trace = Vec::new();
    // min_delta applies to the squared error of target-scale coordinates.
    let min_delta = config.min_delta / ((ys.scale[0].powi(2) + ys.scale[1].powi(2)) / 2.0);
    let mut best = f64::INFINITY;
    let mut wait = 0;
    let mut stopped_early = false;
    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.iter_mut().for_each(LayerGradient::clear);
            let mut batch_loss = 0.0;
            for &i in batch {
                let masks = dropout_masks(&layers, &config.dropout, &mut rng);
                batch_loss += backprop(&layers, &inputs[i], &targets[i], Some(&masks), &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grads.iter_mut() {
                g.weights.iter_mut().chain(g.bias.iter_mut()).for_each(|v| *v *= scale);
            }
            adam.step(&mut layers, &grads);
            epoch_loss += batch_loss;
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() {
            return Err(DrError::Diverged { last_finite: loss_trace.last().copied().unwrap_or(f64::NAN) });
        }
        loss_trace.push(epoch_loss);
        // Dropout makes the epoch loss too noisy to monitor.
        let clean = inputs
            .iter()
            .zip(&targets)
            .map(|(x, t)| {
                let o = forward(&layers, x, None).output;
                ((o[0] - t[0]).powi(2) + (o[1] - t[1]).powi(2)) / 2.0
            })
            .sum::<f64>()
            / n as f64;
        if clean < best - min_delta {
            best = clean;
            wait = 0;
        } else {
            wait += 1;
            if wait >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }

    fold_standardization(&mut layers, &xs, &ys);
    let projector = ParametricProjector::from_layers(matrix.representation, layers, config.clone())?;
    let predicted = projector.project_matrix(matrix)?;
    let axis = |k: usize, c: &[[f64; 2]]| c.iter().map(|p| p[k]).collect::<Vec<f64>>();
    let r = |k: usize| pearson(&axis(k, predicted.coords()), &axis(k, target.coords())).unwrap_or(0.0);
    let report =
        TrainingReport { epochs: loss_trace.len(), stopped_early, best_loss: best, loss_trace, pearson: [r(0), r(1)] };
    Ok((projector, report))
}

fn fold_standardization(layers: &mut [DenseLayer], xs: &Standardizer, ys: &Standardizer) {
    let first = &mut layers[0];
    for o in 0..first.outputs {
        let row = &mut first.weights[o * first.inputs..(o + 1) * first.inputs];
        let mut shift = 0.0;
        for (i, w) in row.iter_mut().enumerate() {
            *w /= xs.scale[i];
            shift += *w * xs.mean[i];
        }
        first.bias[o] -= shift;
    }
    let last = layers.last_mut().unwrap();
    for o in 0..2 {
        for w in &mut last.weights[o * last.inputs..(o + 1) * last.inputs] {
            *w *= ys.scale[o];
        }
        last.bias[o] = last.bias[o] * ys.scale[o] + ys.mean[o];
    }
}
