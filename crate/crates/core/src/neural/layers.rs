//! Batched layers over row-major `[batch, features]` buffers.
//!
//! Convolutions read their input as channel-major `[channel][time]` and may
//! carry `passthrough` trailing features (the payoff-matrix appendix) that are
//! copied to the end of the output untouched.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tensor::{axpy, dot};
use crate::seed::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

/// Propagates NaN, unlike `f64::max`.
#[inline]
fn relu(v: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Samples processed together in the dense kernels.
const BLOCK: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// `[inputs][outputs]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { inputs, outputs, activation, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64], batch: usize, y: &mut [f64]) {
        let (ni, no) = (self.inputs, self.outputs);
        for b0 in (0..batch).step_by(BLOCK) {
            let b1 = (b0 + BLOCK).min(batch);
            for b in b0..b1 {
                y[b * no..(b + 1) * no].copy_from_slice(&self.bias);
            }
            for (i, w) in self.weights.chunks_exact(no).enumerate() {
                for b in b0..b1 {
                    let xi = x[b * ni + i];
                    if xi != 0.0 {
                        axpy(&mut y[b * no..(b + 1) * no], xi, w);
                    }
                }
            }
        }
        if self.activation == Activation::Relu {
            y.iter_mut().for_each(|v| *v = relu(*v));
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn backward(&self, x: &[f64], y: &[f64], gy: &mut [f64], batch: usize, gw: &mut [f64], gb: &mut [f64], gx: Option<&mut [f64]>) {
        let (ni, no) = (self.inputs, self.outputs);
        if self.activation == Activation::Relu {
            for (g, &v) in gy.iter_mut().zip(y) {
                if v <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        for g in gy.chunks_exact(no) {
            axpy(gb, 1.0, g);
        }
        for b0 in (0..batch).step_by(BLOCK) {
            let b1 = (b0 + BLOCK).min(batch);
            for (i, w) in gw.chunks_exact_mut(no).enumerate() {
                for b in b0..b1 {
                    let xi = x[b * ni + i];
                    if xi != 0.0 {
                        axpy(w, xi, &gy[b * no..(b + 1) * no]);
                    }
                }
            }
        }
        if let Some(gx) = gx {
            for b in 0..batch {
                let g = &gy[b * no..(b + 1) * no];
                for (i, w) in self.weights.chunks_exact(no).enumerate() {
                    gx[b * ni + i] = dot(w, g);
                }
            }
        }
    }
}

/// Valid-padded, stride-1 temporal convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub width: usize,
    pub in_len: usize,
    pub passthrough: usize,
    pub activation: Activation,
    /// `[in_channel * width + offset][out_channel]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn new(in_channels: usize, out_channels: usize, width: usize, in_len: usize, passthrough: usize, activation: Activation) -> Self {
        Self {
            in_channels,
            out_channels,
            width,
            in_len,
            passthrough,
            activation,
            weights: vec![0.0; in_channels * width * out_channels],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn out_len(&self) -> usize {
        self.in_len + 1 - self.width
    }

    fn in_size(&self) -> usize {
        self.in_channels * self.in_len + self.passthrough
    }

    fn out_size(&self) -> usize {
        self.out_channels * self.out_len() + self.passthrough
    }

    fn forward(&self, x: &[f64], batch: usize, y: &mut [f64]) {
        let (oc, ol, il) = (self.out_channels, self.out_len(), self.in_len);
        let mut acc = vec![0.0; oc];
        for b in 0..batch {
            let xs = &x[b * self.in_size()..(b + 1) * self.in_size()];
            let ys = &mut y[b * self.out_size()..(b + 1) * self.out_size()];
            for t in 0..ol {
                acc.copy_from_slice(&self.bias);
                for c in 0..self.in_channels {
                    for j in 0..self.width {
                        let v = xs[c * il + t + j];
                        if v != 0.0 {
                            let row = (c * self.width + j) * oc;
                            axpy(&mut acc, v, &self.weights[row..row + oc]);
                        }
                    }
                }
                for (o, &a) in acc.iter().enumerate() {
                    ys[o * ol + t] = if self.activation == Activation::Relu { relu(a) } else { a };
                }
            }
            ys[oc * ol..].copy_from_slice(&xs[self.in_channels * il..]);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn backward(&self, x: &[f64], y: &[f64], gy: &[f64], batch: usize, gw: &mut [f64], gb: &mut [f64], mut gx: Option<&mut [f64]>) {
        let (oc, ol, il) = (self.out_channels, self.out_len(), self.in_len);
        let (isz, osz) = (self.in_size(), self.out_size());
        let mut g = vec![0.0; oc];
        for b in 0..batch {
            let xs = &x[b * isz..(b + 1) * isz];
            let ys = &y[b * osz..(b + 1) * osz];
            let gys = &gy[b * osz..(b + 1) * osz];
            let mut gxs = gx.as_deref_mut().map(|gx| &mut gx[b * isz..(b + 1) * isz]);
            if let Some(gxs) = gxs.as_deref_mut() {
                gxs.fill(0.0);
                gxs[self.in_channels * il..].copy_from_slice(&gys[oc * ol..]);
            }
            for t in 0..ol {
                for o in 0..oc {
                    let active = self.activation == Activation::Identity || ys[o * ol + t] > 0.0;
                    g[o] = if active { gys[o * ol + t] } else { 0.0 };
                }
                axpy(gb, 1.0, &g);
                for c in 0..self.in_channels {
                    for j in 0..self.width {
                        let xi = c * il + t + j;
                        let row = (c * self.width + j) * oc;
                        let v = xs[xi];
                        if v != 0.0 {
                            axpy(&mut gw[row..row + oc], v, &g);
                        }
                        if let Some(gxs) = gxs.as_deref_mut() {
                            gxs[xi] += dot(&self.weights[row..row + oc], &g);
                        }
                    }
                }
            }
        }
    }
}

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)` at train time.
#[derive(Clone, Debug, PartialEq)]
pub struct Dropout {
    pub rate: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    Dropout(Dropout),
}

impl Layer {
    pub fn input_size(&self) -> usize {
        match self {
            Layer::Dense(d) => d.inputs,
            Layer::Conv1d(c) => c.in_size(),
            Layer::Dropout(d) => d.size,
        }
    }

    pub fn output_size(&self) -> usize {
        match self {
            Layer::Dense(d) => d.outputs,
            Layer::Conv1d(c) => c.out_size(),
            Layer::Dropout(d) => d.size,
        }
    }

    /// Trainable buffers in declared order (weights, then bias).
    pub fn params(&self) -> Vec<&[f64]> {
        match self {
            Layer::Dense(d) => vec![&d.weights, &d.bias],
            Layer::Conv1d(c) => vec![&c.weights, &c.bias],
            Layer::Dropout(_) => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        match self {
            Layer::Dense(d) => vec![&mut d.weights, &mut d.bias],
            Layer::Conv1d(c) => vec![&mut c.weights, &mut c.bias],
            Layer::Dropout(_) => vec![],
        }
    }

    /// Forward pass. `rng` switches dropout on and receives the mask.
    pub(crate) fn forward(&self, x: &[f64], batch: usize, rng: Option<&mut Rng>, mask: &mut Vec<f64>) -> Vec<f64> {
        let mut y = vec![0.0; batch * self.output_size()];
        match self {
            Layer::Dense(d) => d.forward(x, batch, &mut y),
            Layer::Conv1d(c) => c.forward(x, batch, &mut y),
            Layer::Dropout(d) => match rng {
                Some(rng) if d.rate > 0.0 => {
                    let keep = 1.0 / (1.0 - d.rate);
                    mask.clear();
                    mask.extend((0..x.len()).map(|_| if rng.gen::<f64>() < d.rate { 0.0 } else { keep }));
                    for ((yi, xi), m) in y.iter_mut().zip(x).zip(mask.iter()) {
                        *yi = xi * m;
                    }
                }
                _ => {
                    mask.clear();
                    y.copy_from_slice(x);
                }
            },
        }
        y
    }

    /// Accumulates parameter gradients into `grads` and returns the input
    /// gradient when `want_input_grad`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        x: &[f64],
        y: &[f64],
        mut gy: Vec<f64>,
        mask: &[f64],
        batch: usize,
        grads: &mut [Vec<f64>],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let mut gx = want_input_grad.then(|| vec![0.0; batch * self.input_size()]);
        match self {
            Layer::Dense(d) => {
                let (gw, gb) = grads.split_at_mut(1);
                d.backward(x, y, &mut gy, batch, &mut gw[0], &mut gb[0], gx.as_deref_mut());
            }
            Layer::Conv1d(c) => {
                let (gw, gb) = grads.split_at_mut(1);
                c.backward(x, y, &gy, batch, &mut gw[0], &mut gb[0], gx.as_deref_mut());
            }
            Layer::Dropout(_) => {
                if let Some(gx) = gx.as_deref_mut() {
                    if mask.is_empty() {
                        gx.copy_from_slice(&gy);
                    } else {
                        for ((g, &m), &o) in gx.iter_mut().zip(mask).zip(&gy) {
                            *g = o * m;
                        }
                    }
                }
            }
        }
        gx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_output_length() {
        let c1 = Conv1d::new(2, 64, 5, 20, 0, Activation::Relu);
        let c2 = Conv1d::new(64, 64, 5, c1.out_len(), 0, Activation::Relu);
        assert_eq!(c2.out_len(), 12);
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut c = Conv1d::new(2, 3, 2, 4, 1, Activation::Identity);
        c.weights = (0..c.weights.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        c.bias = vec![0.1, -0.2, 0.3];
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut y = vec![0.0; 3 * 3 + 1];
        c.forward(&x, 1, &mut y);
        for o in 0..3 {
            for t in 0..3 {
                let mut want = c.bias[o];
                for ch in 0..2 {
                    for j in 0..2 {
                        want += x[ch * 4 + t + j] * c.weights[(ch * 2 + j) * 3 + o];
                    }
                }
                assert!((y[o * 3 + t] - want).abs() < 1e-14);
            }
        }
        assert_eq!(y[9], x[8]);
    }

    #[test]
    fn dropout_linear_probe_expectation() {
        // E over masks of (probe . dropout(x)) equals probe . x
        let x: Vec<f64> = (0..16).map(|i| 1.0 + i as f64 * 0.25).collect();
        let probe: Vec<f64> = (0..16).map(|i| (i as f64).cos()).collect();
        let layer = Layer::Dropout(Dropout { rate: 0.3, size: 16 });
        let mut rng = crate::seed::rng(5);
        let mut mask = Vec::new();
        let want = dot(&probe, &x);
        let trials = 40_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..trials {
            let y = layer.forward(&x, 1, Some(&mut rng), &mut mask);
            let v = dot(&probe, &y);
            sum += v;
            sq += v * v;
        }
        let mean = sum / trials as f64;
        let sd = ((sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * sd, "mean {mean} want {want} sd {sd}");
        let eval = layer.forward(&x, 1, None, &mut mask);
        assert_eq!(eval, x);
    }
}
