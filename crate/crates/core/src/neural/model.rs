use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::encode::{EncodedSet, FeatureEncoding};
use super::layers::{Activation, Conv1d, Dense, Dropout, Layer};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::game::{Action, MixedStrategy};
use crate::seed::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Mlp { hidden: Vec<usize> },
    Cnn { conv_layers: usize, filters: usize, width: usize, fc: Vec<usize> },
}

impl Architecture {
    pub fn default_mlp() -> Self {
        Architecture::Mlp { hidden: vec![512, 512] }
    }

    pub fn default_cnn() -> Self {
        Architecture::Cnn { conv_layers: 2, filters: 64, width: 5, fc: vec![256] }
    }

    /// Shortest history the architecture accepts.
    pub fn min_k(&self) -> usize {
        match self {
            Architecture::Mlp { .. } => 1,
            Architecture::Cnn { conv_layers, width, .. } => conv_layers * width.saturating_sub(1) + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub encoding: FeatureEncoding,
    pub dropout: f64,
}

pub const DEFAULT_DROPOUT: f64 = 0.3;

impl ModelSpec {
    pub fn mlp(encoding: FeatureEncoding) -> Self {
        Self { architecture: Architecture::default_mlp(), encoding, dropout: DEFAULT_DROPOUT }
    }

    pub fn cnn(encoding: FeatureEncoding) -> Self {
        Self { architecture: Architecture::default_cnn(), encoding, dropout: DEFAULT_DROPOUT }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.dropout)));
        }
        if self.encoding.k == 0 {
            return Err(Error::Config("history length k must be at least 1".into()));
        }
        let min = self.architecture.min_k();
        if self.encoding.k < min {
            return Err(Error::Config(format!("k = {} is below the minimum {min} for this convolutional network", self.encoding.k)));
        }
        match &self.architecture {
            Architecture::Mlp { hidden } | Architecture::Cnn { fc: hidden, .. } if hidden.contains(&0) => {
                Err(Error::Config("layer widths must be positive".into()))
            }
            Architecture::Cnn { conv_layers: 0, .. } | Architecture::Cnn { filters: 0, .. } | Architecture::Cnn { width: 0, .. } => {
                Err(Error::Config("convolution layers, filters and width must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    fn build_layers(&self) -> Vec<Layer> {
        let enc = self.encoding;
        let mut layers = Vec::new();
        let mut size = enc.dim();
        let dropout = |layers: &mut Vec<Layer>, size: usize| {
            if self.dropout > 0.0 {
                layers.push(Layer::Dropout(Dropout { rate: self.dropout, size }));
            }
        };
        let hidden = match &self.architecture {
            Architecture::Mlp { hidden } => hidden.clone(),
            Architecture::Cnn { conv_layers, filters, width, fc } => {
                let (mut ch, mut len) = (enc.channels(), enc.k);
                for _ in 0..*conv_layers {
                    let c = Conv1d::new(ch, *filters, *width, len, enc.appendix(), Activation::Relu);
                    len = c.out_len();
                    ch = *filters;
                    layers.push(Layer::Conv1d(c));
                }
                size = ch * len + enc.appendix();
                fc.clone()
            }
        };
        for h in hidden {
            layers.push(Layer::Dense(Dense::new(size, h, Activation::Relu)));
            dropout(&mut layers, h);
            size = h;
        }
        layers.push(Layer::Dense(Dense::new(size, 2, Activation::Identity)));
        layers
    }
}

/// Two-way softmax; returns the probability of action 0.
pub fn softmax2(z0: f64, z1: f64) -> (f64, f64) {
    let m = z0.max(z1);
    let (e0, e1) = ((z0 - m).exp(), (z1 - m).exp());
    let s = e0 + e1;
    (e0 / s, e1 / s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub layers: Vec<Layer>,
}

/// Activations and dropout masks of one forward pass.
struct Trace {
    acts: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
}

impl Model {
    /// Fan-in scaled uniform initialization, biases zero.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut layers = spec.build_layers();
        let mut rng = seed::rng(seed);
        let last = layers.len() - 1;
        for (i, layer) in layers.iter_mut().enumerate() {
            let (fan_in, w) = match layer {
                Layer::Dense(d) => (d.inputs, &mut d.weights),
                Layer::Conv1d(c) => (c.in_channels * c.width, &mut c.weights),
                Layer::Dropout(_) => continue,
            };
            let gain = if i == last { 3.0 } else { 6.0 };
            let bound = (gain / fan_in as f64).sqrt();
            w.iter_mut().for_each(|v| *v = rng.gen_range(-bound..bound));
        }
        Ok(Self { spec, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.encoding.dim()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.params().iter().map(|p| vec![0.0; p.len()]).collect()
    }

    fn trace(&self, x: &[f64], batch: usize, mut rng: Option<&mut Rng>) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut masks = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for layer in &self.layers {
            let mut mask = Vec::new();
            let y = layer.forward(acts.last().unwrap(), batch, rng.as_deref_mut(), &mut mask);
            acts.push(y);
            masks.push(mask);
        }
        Trace { acts, masks }
    }

    fn check_input(&self, x: &[f64]) -> Result<usize> {
        let d = self.input_dim();
        if !x.len().is_multiple_of(d) {
            return Err(Error::Contract(format!("input of {} values is not a multiple of feature size {d}", x.len())));
        }
        Ok(x.len() / d)
    }

    /// Raw logits for a row-major batch.
    pub fn logits(&self, x: &[f64], rng: Option<&mut Rng>) -> Result<Vec<f64>> {
        let batch = self.check_input(x)?;
        Ok(self.trace(x, batch, rng).acts.pop().unwrap())
    }

    /// Forecasts for a `[batch, dim]` tensor. Dropout is active only when a
    /// training rng is supplied.
    pub fn forward(&self, input: &Tensor, train: Option<&mut Rng>) -> Result<Vec<MixedStrategy>> {
        if input.shape().len() != 2 || input.shape()[1] != self.input_dim() {
            return Err(Error::Contract(format!("expected input shape [batch, {}], got {:?}", self.input_dim(), input.shape())));
        }
        let z = self.logits(input.data(), train)?;
        Ok(z.chunks_exact(2).map(|z| MixedStrategy::saturating(softmax2(z[0], z[1]).0)).collect())
    }

    /// Inference over a whole encoded set, in fixed-size chunks.
    pub fn predict_set(&self, set: &EncodedSet) -> Result<Vec<MixedStrategy>> {
        if set.dim != self.input_dim() {
            return Err(Error::Contract(format!("set has {} features, model expects {}", set.dim, self.input_dim())));
        }
        let mut out = Vec::with_capacity(set.len());
        for chunk in set.features.chunks(256 * set.dim.max(1)) {
            let z = self.logits(chunk, None)?;
            out.extend(z.chunks_exact(2).map(|z| MixedStrategy::saturating(softmax2(z[0], z[1]).0)));
        }
        Ok(out)
    }

    /// Mean cross-entropy against soft targets (probability of action 0) and
    /// its gradient with respect to every parameter, in [`Self::params`]
    /// order. Also returns the gradient with respect to the input.
    pub fn loss_and_grad_soft(&self, x: &[f64], target_p0: &[f64], rng: Option<&mut Rng>) -> Result<(f64, Vec<Vec<f64>>, Vec<f64>)> {
        let batch = self.check_input(x)?;
        if batch == 0 || batch != target_p0.len() {
            return Err(Error::Contract(format!("batch of {batch} inputs with {} targets", target_p0.len())));
        }
        let mut tr = self.trace(x, batch, rng);
        let z = tr.acts.pop().unwrap();
        let inv = 1.0 / batch as f64;
        let mut loss = 0.0;
        let mut g = vec![0.0; z.len()];
        for (b, zb) in z.chunks_exact(2).enumerate() {
            let y0 = target_p0[b];
            let m = zb[0].max(zb[1]);
            let lse = m + ((zb[0] - m).exp() + (zb[1] - m).exp()).ln();
            loss -= y0 * (zb[0] - lse) + (1.0 - y0) * (zb[1] - lse);
            let (p0, p1) = softmax2(zb[0], zb[1]);
            g[2 * b] = (p0 - y0) * inv;
            g[2 * b + 1] = (p1 - (1.0 - y0)) * inv;
        }
        let mut grads = self.zero_grads();
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut o = 0;
        for l in &self.layers {
            offsets.push(o);
            o += l.params().len();
        }
        let mut y = z;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &tr.acts[i];
            let np = layer.params().len();
            let slot = &mut grads[offsets[i]..offsets[i] + np];
            g = layer.backward(x, &y, g, &tr.masks[i], batch, slot, true).unwrap();
            y = std::mem::take(&mut tr.acts[i]);
        }
        Ok((loss * inv, grads, g))
    }

    /// [`Self::loss_and_grad_soft`] with one-hot targets.
    pub fn loss_and_grad(&self, x: &[f64], targets: &[Action], rng: Option<&mut Rng>) -> Result<(f64, Vec<Vec<f64>>)> {
        let p0: Vec<f64> = targets.iter().map(|a| 1.0 - a.as_f64()).collect();
        let (loss, grads, _) = self.loss_and_grad_soft(x, &p0, rng)?;
        Ok((loss, grads))
    }

    /// Loss with one-hot targets, plus the sign (`> 0`) of every hidden
    /// activation; two patterns differ only if some ReLU changed side.
    pub(crate) fn loss_and_pattern(&self, x: &[f64], targets: &[Action], rng: Option<&mut Rng>) -> Result<(f64, Vec<bool>)> {
        let batch = self.check_input(x)?;
        if batch == 0 || batch != targets.len() {
            return Err(Error::Contract(format!("batch of {batch} inputs with {} targets", targets.len())));
        }
        let mut tr = self.trace(x, batch, rng);
        let z = tr.acts.pop().unwrap();
        let mut loss = 0.0;
        for (zb, &t) in z.chunks_exact(2).zip(targets) {
            let m = zb[0].max(zb[1]);
            let lse = m + ((zb[0] - m).exp() + (zb[1] - m).exp()).ln();
            loss -= zb[t.index()] - lse;
        }
        let pattern = tr.acts[1..].iter().flatten().map(|&v| v > 0.0).collect();
        Ok((loss / batch as f64, pattern))
    }

    /// Mean cross-entropy without gradients (inference mode).
    pub fn mean_loss(&self, set: &EncodedSet) -> Result<f64> {
        let preds = self.predict_set(set)?;
        let mut total = 0.0;
        for (p, &y) in preds.iter().zip(&set.targets) {
            total -= p.prob(y).max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / set.len().max(1) as f64)
    }
}
