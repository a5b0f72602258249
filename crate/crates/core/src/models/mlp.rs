use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Samples;
use crate::seeding;

/// Dense layer, `weights` row-major with one row per output unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    fn forward(&self, a: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
                self.bias[o] + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }
}

/// Fully connected network: ReLU hidden layers, softmax output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl Mlp {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn random<R: Rng>(sizes: &[usize], rng: &mut R) -> Mlp {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                Layer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out)
                        .map(|_| rng.gen_range(-limit..=limit))
                        .collect(),
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        Mlp { layers }
    }

    pub(super) fn fit(
        data: &Samples,
        hidden: &[usize],
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
        seed: u64,
    ) -> Mlp {
        let mut rng = seeding::rng(seed);
        let mut sizes = vec![data.n_features()];
        sizes.extend_from_slice(hidden);
        sizes.push(data.n_classes);
        let mut net = Mlp::random(&sizes, &mut rng);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut xb = Vec::with_capacity(batch_size);
        let mut yb = Vec::with_capacity(batch_size);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch_size) {
                xb.clear();
                yb.clear();
                xb.extend(chunk.iter().map(|&i| data.x[i].as_slice()));
                yb.extend(chunk.iter().map(|&i| data.y[i]));
                let (_, grad) = net.loss_and_gradient(&xb, &yb);
                net.step(&grad, learning_rate);
            }
        }
        net
    }

    fn step(&mut self, grad: &[Layer], lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(grad) {
            for (w, d) in l.weights.iter_mut().zip(&g.weights) {
                *w -= lr * d;
            }
            for (b, d) in l.bias.iter_mut().zip(&g.bias) {
                *b -= lr * d;
            }
        }
    }

    /// Pre-activations of every layer; the last entry holds the logits.
    fn forward_all(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let z = if k == 0 {
                layer.forward(v)
            } else {
                let a: Vec<f64> = zs[k - 1].iter().map(|x| x.max(0.0)).collect();
                layer.forward(&a)
            };
            zs.push(z);
        }
        zs
    }

    pub fn logits(&self, v: &[f64]) -> Vec<f64> {
        self.forward_all(v).pop().unwrap_or_default()
    }

    pub fn probabilities(&self, v: &[f64]) -> Vec<f64> {
        softmax(&self.logits(v))
    }

    /// Mean cross-entropy over the batch and its gradient, laid out like
    /// the network's layers.
    pub fn loss_and_gradient(&self, x: &[&[f64]], y: &[usize]) -> (f64, Vec<Layer>) {
        let mut grad: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.n_in, l.n_out))
            .collect();
        let mut loss = 0.0;
        for (v, &label) in x.iter().zip(y) {
            let zs = self.forward_all(v);
            let logits = zs.last().expect("at least one layer");
            loss += log_sum_exp(logits) - logits[label];
            let mut delta = softmax(logits);
            delta[label] -= 1.0;
            for k in (0..self.layers.len()).rev() {
                let input: Vec<f64> = if k == 0 {
                    v.to_vec()
                } else {
                    zs[k - 1].iter().map(|z| z.max(0.0)).collect()
                };
                let layer = &self.layers[k];
                let g = &mut grad[k];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    for (gw, a) in g.weights[o * layer.n_in..(o + 1) * layer.n_in]
                        .iter_mut()
                        .zip(&input)
                    {
                        *gw += d * a;
                    }
                }
                if k > 0 {
                    delta = (0..layer.n_in)
                        .map(|i| {
                            if zs[k - 1][i] <= 0.0 {
                                return 0.0;
                            }
                            (0..layer.n_out)
                                .map(|o| layer.weights[o * layer.n_in + i] * delta[o])
                                .sum()
                        })
                        .collect();
                }
            }
        }
        let scale = 1.0 / x.len() as f64;
        for g in &mut grad {
            g.weights.iter_mut().for_each(|w| *w *= scale);
            g.bias.iter_mut().for_each(|b| *b *= scale);
        }
        (loss * scale, grad)
    }

    /// All weights and biases, layer by layer.
    pub fn parameters(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_parameters(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("parameter vector too short");
            }
        }
    }

    pub(super) fn is_consistent(&self, n_features: usize, n_classes: usize) -> bool {
        let Some(first) = self.layers.first() else {
            return false;
        };
        first.n_in == n_features
            && self.layers.last().is_some_and(|l| l.n_out == n_classes)
            && self.layers.windows(2).all(|w| w[0].n_out == w[1].n_in)
            && self
                .layers
                .iter()
                .all(|l| l.weights.len() == l.n_in * l.n_out && l.bias.len() == l.n_out)
    }
}

pub fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}
