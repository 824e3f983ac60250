//! Branched dense feed-forward classifier.
//!
//! Input rows are cut into contiguous slices, one per branch; each branch runs
//! through its own ReLU layer stack, the branch outputs are concatenated into
//! a trunk stack, and a final dense layer feeds a softmax over the classes.
//! Dropout uses inverted scaling (masks scaled by 1/(1-rate)) and is active
//! during training only. Training is single-threaded and bitwise
//! deterministic for a fixed seed.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    RmsProp,
}

/// One hidden layer: width and the dropout rate applied after its activation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    #[serde(default)]
    pub dropout: f64,
}

/// A branch consumes one contiguous input slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub input_start: usize,
    pub input_len: usize,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Input slices with their layer stacks; empty means one passthrough
    /// branch over the whole input.
    pub branches: Vec<BranchSpec>,
    pub trunk: Vec<LayerSpec>,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl MlpConfig {
    /// Single-branch config without hidden layers: softmax regression.
    pub fn softmax_regression(input_width: usize, seed: u64) -> Self {
        MlpConfig {
            branches: vec![BranchSpec {
                input_start: 0,
                input_len: input_width,
                layers: Vec::new(),
            }],
            trunk: Vec::new(),
            optimizer: Optimizer::Adam,
            learning_rate: 0.05,
            epochs: 100,
            batch_size: usize::MAX,
            seed,
        }
    }

    pub fn input_width(&self) -> usize {
        self.branches.iter().map(|b| b.input_len).sum()
    }

    fn validate(&self, feature_width: usize) -> Result<Vec<BranchSpec>, PredictorError> {
        let branches = if self.branches.is_empty() {
            vec![BranchSpec {
                input_start: 0,
                input_len: feature_width,
                layers: Vec::new(),
            }]
        } else {
            self.branches.clone()
        };
        let mut sorted = branches.clone();
        sorted.sort_by_key(|b| b.input_start);
        let mut cursor = 0;
        for b in &sorted {
            if b.input_start != cursor || b.input_len == 0 {
                return Err(PredictorError::InvalidConfig(format!(
                    "branch slices must partition the input; got start {} len {} at offset {}",
                    b.input_start, b.input_len, cursor
                )));
            }
            cursor += b.input_len;
        }
        if cursor != feature_width {
            return Err(PredictorError::DimensionMismatch(format!(
                "branch slices cover {cursor} columns but rows have {feature_width}"
            )));
        }
        for spec in sorted.iter().flat_map(|b| &b.layers).chain(&self.trunk) {
            if spec.width == 0 {
                return Err(PredictorError::InvalidConfig("layer width must be >= 1".into()));
            }
            if !(0.0..1.0).contains(&spec.dropout) {
                return Err(PredictorError::InvalidConfig(format!(
                    "dropout {} outside [0, 1)",
                    spec.dropout
                )));
            }
        }
        if self.batch_size == 0 {
            return Err(PredictorError::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(sorted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    /// Row-major out_dim x in_dim.
    w: Vec<f64>,
    b: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
}

impl Dense {
    fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / (in_dim as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        Dense {
            w,
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.clone();
        for (o, out_val) in out.iter_mut().enumerate() {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            *out_val += row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

/// A trained classifier: layer weights plus the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    branches: Vec<BranchSpec>,
    branch_layers: Vec<Vec<Dense>>,
    trunk_layers: Vec<Dense>,
    output: Dense,
    pub classes: usize,
    /// Class index -> label, when trained via a labeled matrix.
    pub class_labels: Option<Vec<String>>,
    pub history: Vec<EpochStats>,
}

/// Per-layer forward caches used by backprop.
struct ForwardCache {
    /// Per layer (branch layers flattened in branch order, then trunk):
    /// the layer input and the post-ReLU pre-dropout activation.
    inputs: Vec<Vec<f64>>,
    activations: Vec<Vec<f64>>,
    /// Dropout scale per unit (1/(1-rate) kept, 0.0 dropped, 1.0 inactive).
    masks: Vec<Vec<f64>>,
    trunk_input: Vec<f64>,
    output_input: Vec<f64>,
    probs: Vec<f64>,
}

struct Gradients {
    layers: Vec<(Vec<f64>, Vec<f64>)>, // (dW, db) per hidden layer
    output: (Vec<f64>, Vec<f64>),
}

impl MlpModel {
    fn hidden_layers(&self) -> Vec<&Dense> {
        self.branch_layers
            .iter()
            .flat_map(|ls| ls.iter())
            .chain(self.trunk_layers.iter())
            .collect()
    }

    /// Parameter vectors in a fixed order: each hidden layer's weights then
    /// bias, branch layers first, trunk after, output layer last.
    fn param_count(&self) -> usize {
        2 * (self.hidden_layers().len() + 1)
    }

    fn param_mut(&mut self, slot: usize) -> &mut Vec<f64> {
        let layer = slot / 2;
        let weights = slot % 2 == 0;
        let branch_total: usize = self.branch_layers.iter().map(Vec::len).sum();
        let dense = if layer < branch_total {
            self.branch_layers
                .iter_mut()
                .flat_map(|ls| ls.iter_mut())
                .nth(layer)
                .expect("layer slot in range")
        } else if layer < branch_total + self.trunk_layers.len() {
            &mut self.trunk_layers[layer - branch_total]
        } else {
            &mut self.output
        };
        if weights {
            &mut dense.w
        } else {
            &mut dense.b
        }
    }

    fn init(config: &MlpConfig, branches: Vec<BranchSpec>, classes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut branch_layers = Vec::with_capacity(branches.len());
        let mut concat_width = 0;
        for branch in &branches {
            let mut layers = Vec::with_capacity(branch.layers.len());
            let mut width = branch.input_len;
            for spec in &branch.layers {
                layers.push(Dense::init(width, spec.width, &mut rng));
                width = spec.width;
            }
            concat_width += width;
            branch_layers.push(layers);
        }
        let mut trunk_layers = Vec::with_capacity(config.trunk.len());
        let mut width = concat_width;
        for spec in &config.trunk {
            trunk_layers.push(Dense::init(width, spec.width, &mut rng));
            width = spec.width;
        }
        let output = Dense::init(width, classes, &mut rng);
        MlpModel {
            config: config.clone(),
            branches,
            branch_layers,
            trunk_layers,
            output,
            classes,
            class_labels: None,
            history: Vec::new(),
        }
    }

    /// Forward pass. `dropout_rng` enables training-mode dropout.
    fn forward(&self, row: &[f64], mut dropout_rng: Option<&mut ChaCha8Rng>) -> ForwardCache {
        let mut inputs = Vec::new();
        let mut activations = Vec::new();
        let mut masks = Vec::new();
        let mut concat = Vec::new();
        for (branch, layers) in self.branches.iter().zip(&self.branch_layers) {
            let mut a: Vec<f64> =
                row[branch.input_start..branch.input_start + branch.input_len].to_vec();
            for (dense, spec) in layers.iter().zip(&branch.layers) {
                let input = a.clone();
                let z = dense.forward(&input);
                let act: Vec<f64> = z.into_iter().map(|v| v.max(0.0)).collect();
                let mask = draw_mask(act.len(), spec.dropout, &mut dropout_rng);
                a = act.iter().zip(&mask).map(|(v, m)| v * m).collect();
                inputs.push(input);
                activations.push(act);
                masks.push(mask);
            }
            concat.extend_from_slice(&a);
        }
        let trunk_input = concat.clone();
        let mut a = concat;
        for (dense, spec) in self.trunk_layers.iter().zip(&self.config.trunk) {
            let input = a.clone();
            let z = dense.forward(&input);
            let act: Vec<f64> = z.into_iter().map(|v| v.max(0.0)).collect();
            let mask = draw_mask(act.len(), spec.dropout, &mut dropout_rng);
            a = act.iter().zip(&mask).map(|(v, m)| v * m).collect();
            inputs.push(input);
            activations.push(act);
            masks.push(mask);
        }
        let output_input = a;
        let logits = self.output.forward(&output_input);
        let probs = softmax(&logits);
        ForwardCache {
            inputs,
            activations,
            masks,
            trunk_input,
            output_input,
            probs,
        }
    }

    /// Backprop of the cross-entropy loss for one sample.
    fn backward(&self, cache: &ForwardCache, target: usize) -> Gradients {
        let n_hidden = cache.inputs.len();
        let mut grads = Gradients {
            layers: self
                .hidden_layers()
                .iter()
                .map(|d| (vec![0.0; d.w.len()], vec![0.0; d.b.len()]))
                .collect(),
            output: (
                vec![0.0; self.output.w.len()],
                vec![0.0; self.output.b.len()],
            ),
        };

        // softmax + cross-entropy: dL/dlogit = p - onehot
        let mut d_logits = cache.probs.clone();
        d_logits[target] -= 1.0;
        for (o, d) in d_logits.iter().enumerate() {
            for (i, x) in cache.output_input.iter().enumerate() {
                grads.output.0[o * self.output.in_dim + i] = d * x;
            }
            grads.output.1[o] = *d;
        }
        let mut d_after: Vec<f64> = (0..self.output.in_dim)
            .map(|i| {
                d_logits
                    .iter()
                    .enumerate()
                    .map(|(o, d)| d * self.output.w[o * self.output.in_dim + i])
                    .sum()
            })
            .collect();

        // trunk layers, backwards
        let hidden: Vec<&Dense> = self.hidden_layers();
        let trunk_count = self.trunk_layers.len();
        let mut layer_idx = n_hidden;
        for _ in 0..trunk_count {
            layer_idx -= 1;
            d_after = backprop_layer(
                hidden[layer_idx],
                &cache.inputs[layer_idx],
                &cache.activations[layer_idx],
                &cache.masks[layer_idx],
                &d_after,
                &mut grads.layers[layer_idx],
            );
        }

        // split the concat gradient among branches
        let d_concat = d_after;
        if trunk_count == 0 {
            debug_assert_eq!(d_concat.len(), cache.trunk_input.len());
        }
        let mut branch_layer_base = 0;
        let mut offset = 0;
        for (branch, layers) in self.branches.iter().zip(&self.branch_layers) {
            let out_width = layers
                .last()
                .map(|d| d.out_dim)
                .unwrap_or(branch.input_len);
            let mut d: Vec<f64> = d_concat[offset..offset + out_width].to_vec();
            offset += out_width;
            for k in (0..layers.len()).rev() {
                let idx = branch_layer_base + k;
                d = backprop_layer(
                    hidden[idx],
                    &cache.inputs[idx],
                    &cache.activations[idx],
                    &cache.masks[idx],
                    &d,
                    &mut grads.layers[idx],
                );
            }
            branch_layer_base += layers.len();
        }
        grads
    }

    /// Class probabilities per row; dropout disabled.
    pub fn predict_proba(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, PredictorError> {
        let width: usize = self.branches.iter().map(|b| b.input_len).sum();
        features
            .iter()
            .map(|row| {
                if row.len() != width {
                    return Err(PredictorError::DimensionMismatch(format!(
                        "row has {} columns, model expects {width}",
                        row.len()
                    )));
                }
                Ok(self.forward(row, None).probs)
            })
            .collect()
    }

    /// Mean cross-entropy without dropout.
    pub fn loss(&self, features: &[Vec<f64>], targets: &[usize]) -> f64 {
        if features.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for (row, &target) in features.iter().zip(targets) {
            let cache = self.forward(row, None);
            total += -cache.probs[target].max(1e-300).ln();
        }
        total / features.len() as f64
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("model serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, PredictorError> {
        serde_json::from_value(value.clone())
            .map_err(|e| PredictorError::DimensionMismatch(format!("bad model JSON: {e}")))
    }
}

fn draw_mask(len: usize, rate: f64, rng: &mut Option<&mut ChaCha8Rng>) -> Vec<f64> {
    match rng {
        Some(rng) if rate > 0.0 => {
            let keep = 1.0 / (1.0 - rate);
            (0..len)
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                .collect()
        }
        _ => vec![1.0; len],
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Accumulate dW/db for one layer and return the gradient w.r.t. its input.
fn backprop_layer(
    dense: &Dense,
    input: &[f64],
    activation: &[f64],
    mask: &[f64],
    d_output: &[f64],
    grad: &mut (Vec<f64>, Vec<f64>),
) -> Vec<f64> {
    // d wrt pre-activation: through dropout scale, then ReLU gate
    let d_z: Vec<f64> = d_output
        .iter()
        .zip(mask)
        .zip(activation)
        .map(|((d, m), a)| if *a > 0.0 { d * m } else { 0.0 })
        .collect();
    for (o, dz) in d_z.iter().enumerate() {
        for (i, x) in input.iter().enumerate() {
            grad.0[o * dense.in_dim + i] += dz * x;
        }
        grad.1[o] += dz;
    }
    (0..dense.in_dim)
        .map(|i| {
            d_z.iter()
                .enumerate()
                .map(|(o, dz)| dz * dense.w[o * dense.in_dim + i])
                .sum()
        })
        .collect()
}

/// Adam / RMSprop moment buffers, one slot per parameter vector.
/// Standard defaults: beta1 = 0.9, beta2 = 0.999, rho = 0.9, eps = 1e-8.
struct OptimizerState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl OptimizerState {
    fn new(shapes: &[usize]) -> Self {
        OptimizerState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn begin_step(&mut self) {
        self.t += 1;
    }

    fn apply(&mut self, kind: Optimizer, lr: f64, slot: usize, param: &mut [f64], grad: &[f64]) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const RHO: f64 = 0.9;
        const EPS: f64 = 1e-8;
        let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
        match kind {
            Optimizer::Adam => {
                for i in 0..param.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                    let m_hat = m[i] / (1.0 - BETA1.powi(self.t));
                    let v_hat = v[i] / (1.0 - BETA2.powi(self.t));
                    param[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
                }
            }
            Optimizer::RmsProp => {
                for i in 0..param.len() {
                    v[i] = RHO * v[i] + (1.0 - RHO) * grad[i] * grad[i];
                    param[i] -= lr * grad[i] / (v[i].sqrt() + EPS);
                }
            }
        }
    }
}

/// Train with the configured optimizer, snapshotting the epoch with the best
/// validation loss (train loss when the validation set is empty). Returns the
/// snapshot; deterministic for a fixed seed.
pub fn train(
    features: &[Vec<f64>],
    targets: &[usize],
    config: &MlpConfig,
    validation: (&[Vec<f64>], &[usize]),
) -> Result<MlpModel, PredictorError> {
    let width = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| PredictorError::DimensionMismatch("empty training set".into()))?;
    if features.len() != targets.len() {
        return Err(PredictorError::DimensionMismatch(format!(
            "{} rows vs {} targets",
            features.len(),
            targets.len()
        )));
    }
    if features.iter().any(|r| r.len() != width)
        || validation.0.iter().any(|r| r.len() != width)
    {
        return Err(PredictorError::DimensionMismatch(
            "ragged feature rows".into(),
        ));
    }
    let branches = config.validate(width)?;
    let classes = targets
        .iter()
        .chain(validation.1)
        .max()
        .map_or(0, |&m| m + 1)
        .max(2);

    let mut model = MlpModel::init(config, branches, classes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));

    let shapes: Vec<usize> = (0..model.param_count())
        .map(|slot| model.param_mut(slot).len())
        .collect();
    let mut opt = OptimizerState::new(&shapes);

    let select_loss = |m: &MlpModel| {
        if validation.0.is_empty() {
            m.loss(features, targets)
        } else {
            m.loss(validation.0, validation.1)
        }
    };
    let mut best = model.clone();
    let mut best_loss = select_loss(&model);

    let n = features.len();
    let batch = config.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let mut grad_sum: Vec<(Vec<f64>, Vec<f64>)> = model
                .hidden_layers()
                .iter()
                .map(|d| (vec![0.0; d.w.len()], vec![0.0; d.b.len()]))
                .collect();
            let mut out_sum = (
                vec![0.0; model.output.w.len()],
                vec![0.0; model.output.b.len()],
            );
            for &idx in chunk {
                let cache = model.forward(&features[idx], Some(&mut rng));
                let grads = model.backward(&cache, targets[idx]);
                for (sum, g) in grad_sum.iter_mut().zip(&grads.layers) {
                    add_into(&mut sum.0, &g.0);
                    add_into(&mut sum.1, &g.1);
                }
                add_into(&mut out_sum.0, &grads.output.0);
                add_into(&mut out_sum.1, &grads.output.1);
            }
            let scale = 1.0 / chunk.len() as f64;
            for (w, b) in grad_sum.iter_mut() {
                scale_into(w, scale);
                scale_into(b, scale);
            }
            scale_into(&mut out_sum.0, scale);
            scale_into(&mut out_sum.1, scale);

            let grads_flat: Vec<&Vec<f64>> = grad_sum
                .iter()
                .flat_map(|(w, b)| [w, b])
                .chain([&out_sum.0, &out_sum.1])
                .collect();
            opt.begin_step();
            for (slot, grad) in grads_flat.into_iter().enumerate() {
                let mut param = std::mem::take(model.param_mut(slot));
                opt.apply(config.optimizer, config.learning_rate, slot, &mut param, grad);
                *model.param_mut(slot) = param;
            }
        }

        let train_loss = model.loss(features, targets);
        if !train_loss.is_finite() {
            return Err(PredictorError::NonFiniteLoss { epoch });
        }
        let validation_loss = if validation.0.is_empty() {
            train_loss
        } else {
            model.loss(validation.0, validation.1)
        };
        model.history.push(EpochStats {
            epoch,
            train_loss,
            validation_loss,
        });
        if validation_loss < best_loss {
            best_loss = validation_loss;
            best = model.clone();
            best.history = Vec::new();
        }
    }
    best.history = model.history;
    Ok(best)
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

fn scale_into(acc: &mut [f64], s: f64) {
    for a in acc.iter_mut() {
        *a *= s;
    }
}

/// Compare analytic gradients against central finite differences for every
/// parameter; returns the maximum relative error. Dropout is disabled.
pub fn gradient_check(
    config: &MlpConfig,
    features: &[Vec<f64>],
    targets: &[usize],
) -> Result<f64, PredictorError> {
    gradient_check_impl(config, features, targets, false)
}

/// Negative-control variant: with `train_mode_dropout`, the analytic pass
/// draws dropout masks while the numeric pass does not, so a config with any
/// dropout must report a large error.
pub fn gradient_check_with_dropout(
    config: &MlpConfig,
    features: &[Vec<f64>],
    targets: &[usize],
) -> Result<f64, PredictorError> {
    gradient_check_impl(config, features, targets, true)
}

fn gradient_check_impl(
    config: &MlpConfig,
    features: &[Vec<f64>],
    targets: &[usize],
    train_mode_dropout: bool,
) -> Result<f64, PredictorError> {
    const H: f64 = 1e-5;
    let width = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| PredictorError::DimensionMismatch("empty batch".into()))?;
    let branches = config.validate(width)?;
    let classes = targets.iter().max().map_or(0, |&m| m + 1).max(2);
    let mut model = MlpModel::init(config, branches, classes);

    // analytic mean gradient over the batch
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut grad_sum: Vec<(Vec<f64>, Vec<f64>)> = model
        .hidden_layers()
        .iter()
        .map(|d| (vec![0.0; d.w.len()], vec![0.0; d.b.len()]))
        .collect();
    let mut out_sum = (
        vec![0.0; model.output.w.len()],
        vec![0.0; model.output.b.len()],
    );
    for (row, &target) in features.iter().zip(targets) {
        let cache = model.forward(row, if train_mode_dropout { Some(&mut rng) } else { None });
        let grads = model.backward(&cache, target);
        for (sum, g) in grad_sum.iter_mut().zip(&grads.layers) {
            add_into(&mut sum.0, &g.0);
            add_into(&mut sum.1, &g.1);
        }
        add_into(&mut out_sum.0, &grads.output.0);
        add_into(&mut out_sum.1, &grads.output.1);
    }
    let scale = 1.0 / features.len() as f64;
    for (w, b) in grad_sum.iter_mut() {
        scale_into(w, scale);
        scale_into(b, scale);
    }
    scale_into(&mut out_sum.0, scale);
    scale_into(&mut out_sum.1, scale);

    let analytic: Vec<Vec<f64>> = grad_sum
        .iter()
        .flat_map(|(w, b)| [w.clone(), b.clone()])
        .chain([out_sum.0.clone(), out_sum.1.clone()])
        .collect();

    // numeric: nudge every parameter and re-evaluate the dropout-free loss
    let mut max_rel = 0.0f64;
    for slot in 0..model.param_count() {
        let len = model.param_mut(slot).len();
        for i in 0..len {
            let original = model.param_mut(slot)[i];
            model.param_mut(slot)[i] = original + H;
            let plus = model.loss(features, targets);
            model.param_mut(slot)[i] = original - H;
            let minus = model.loss(features, targets);
            model.param_mut(slot)[i] = original;
            let numeric = (plus - minus) / (2.0 * H);
            let a = analytic[slot][i];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}
