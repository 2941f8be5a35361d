//! Fully connected ReLU network with hand-written backpropagation.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::checkpoint;
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::numerics::{DenseArray, Rng};
use crate::optim::ParamGroup;

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed)
}

/// One affine map `y = W x + b`, with `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    inputs: usize,
    outputs: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl Linear {
    pub fn new(inputs: usize, outputs: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        ensure_len(inputs * outputs, weight.len())?;
        ensure_len(outputs, bias.len())?;
        ensure_finite(&weight, "layer weight")?;
        ensure_finite(&bias, "layer bias")?;
        Ok(Self {
            inputs,
            outputs,
            weight,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn apply(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(batch * self.outputs);
        for row in x.chunks_exact(self.inputs) {
            for (o, b) in self.bias.iter().enumerate() {
                let w = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                out.push(b + w.iter().zip(row).map(|(w, x)| w * x).sum::<f64>());
            }
        }
        out
    }
}

/// Cached layer inputs and pre-activations from one forward pass. Backward
/// takes it by value, so each tape is used at most once.
#[derive(Debug)]
pub struct ForwardTape {
    model_id: u64,
    generation: u64,
    batch: usize,
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardTape {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// ReLU on every hidden layer, linear output.
#[derive(Debug)]
pub struct MlpModel {
    layers: Vec<Linear>,
    id: u64,
    generation: u64,
}

impl Clone for MlpModel {
    // A clone is a distinct model: tapes of the original must not feed it.
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            id: fresh_id(),
            generation: 0,
        }
    }
}

impl PartialEq for MlpModel {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl MlpModel {
    /// He-uniform weights `U(−√(6/fan_in), √(6/fan_in))`, zero biases.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::param(format!("layer sizes {sizes:?} need at least two positive entries")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let weight = (0..fan_in * fan_out).map(|_| rng.uniform(-limit, limit)).collect();
                Linear::new(fan_in, fan_out, weight, vec![0.0; fan_out])
            })
            .collect::<Result<_>>()?;
        Self::from_layers(layers)
    }

    /// Regression network: 1 → 50 → 50 → 50 → 50 → 1, five linear layers.
    pub fn regression(rng: &mut Rng) -> Result<Self> {
        Self::new(&[1, 50, 50, 50, 50, 1], rng)
    }

    pub fn from_layers(layers: Vec<Linear>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension {
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        Ok(Self {
            layers,
            id: fresh_id(),
            generation: 0,
        })
    }

    pub fn empty() -> Self {
        Self {
            layers: Vec::new(),
            id: fresh_id(),
            generation: 0,
        }
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.layers.first().map(|l| l.inputs)
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layers.last().map(|l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Group-ordered parameter slices: `layer0.weight, layer0.bias, ...`.
    pub fn parameters(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    /// Overwrites group `index` (same ordering as [`parameters`](Self::parameters)).
    /// Outstanding tapes become stale.
    pub fn set_parameter(&mut self, index: usize, values: &[f64]) -> Result<()> {
        let layer = self
            .layers
            .get_mut(index / 2)
            .ok_or_else(|| Error::param(format!("no parameter group {index}")))?;
        let target = if index % 2 == 0 { &mut layer.weight } else { &mut layer.bias };
        ensure_len(target.len(), values.len())?;
        ensure_finite(values, "model parameters")?;
        target.copy_from_slice(values);
        self.generation += 1;
        Ok(())
    }

    /// Copies optimizer group values back into the layers.
    pub fn load_groups(&mut self, groups: &[ParamGroup]) -> Result<()> {
        ensure_len(2 * self.layers.len(), groups.len())?;
        for (i, g) in groups.iter().enumerate() {
            self.set_parameter(i, g.values.as_slice())?;
        }
        Ok(())
    }

    /// `x` is row-major `batch × input_dim`; returns row-major `batch × output_dim`.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardTape)> {
        let first = self
            .layers
            .first()
            .ok_or_else(|| Error::param("forward through a model with no layers"))?;
        ensure_finite(x, "model input")?;
        if x.len() % first.inputs != 0 {
            return Err(Error::Dimension {
                expected: first.inputs * (x.len() / first.inputs + 1),
                got: x.len(),
            });
        }
        let batch = x.len() / first.inputs;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&current, batch);
            let next = if i == last { z.clone() } else { z.iter().map(|&z| z.max(0.0)).collect() };
            inputs.push(std::mem::replace(&mut current, next));
            pre_activations.push(z);
        }
        let tape = ForwardTape {
            model_id: self.id,
            generation: self.generation,
            batch,
            inputs,
            pre_activations,
        };
        Ok((current, tape))
    }

    /// Gradients of the scalar batch loss, in group order, given
    /// `∂L/∂ŷ` laid out like the forward output.
    pub fn backward(&self, tape: ForwardTape, loss_grad: &[f64]) -> Result<Vec<DenseArray>> {
        if tape.model_id != self.id {
            return Err(Error::StaleTape("tape was recorded on a different model"));
        }
        if tape.generation != self.generation {
            return Err(Error::StaleTape("parameters changed since the forward pass"));
        }
        if tape.len() != self.layers.len() {
            return Err(Error::StaleTape("tape length differs from layer count"));
        }
        let batch = tape.batch;
        let out_dim = self.output_dim().unwrap_or(0);
        ensure_len(batch * out_dim, loss_grad.len())?;
        ensure_finite(loss_grad, "loss gradient")?;

        let last = self.layers.len() - 1;
        let mut grads = vec![DenseArray::zeros(vec![0]); 2 * self.layers.len()];
        let mut delta = loss_grad.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if i != last {
                // ReLU subgradient is 0 at exactly 0.
                for (d, z) in delta.iter_mut().zip(&tape.pre_activations[i]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &tape.inputs[i];
            let (n_in, n_out) = (layer.inputs, layer.outputs);
            let mut gw = vec![0.0; n_in * n_out];
            let mut gb = vec![0.0; n_out];
            let mut upstream = vec![0.0; batch * n_in];
            for b in 0..batch {
                let x = &input[b * n_in..(b + 1) * n_in];
                let up = &mut upstream[b * n_in..(b + 1) * n_in];
                for o in 0..n_out {
                    let d = delta[b * n_out + o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let w = &layer.weight[o * n_in..(o + 1) * n_in];
                    let gw_row = &mut gw[o * n_in..(o + 1) * n_in];
                    for k in 0..n_in {
                        gw_row[k] += d * x[k];
                        up[k] += d * w[k];
                    }
                }
            }
            grads[2 * i] = DenseArray::new(vec![n_out, n_in], gw)?;
            grads[2 * i + 1] = DenseArray::from_vec(gb);
            delta = upstream;
        }
        Ok(grads)
    }

    const MAGIC: &'static [u8; 4] = b"ATMM";
    const VERSION: u8 = 1;

    /// Layout: layer count, the size chain, then each layer's weight and bias.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut f = vec![self.layers.len() as f64];
        if let Some(first) = self.layers.first() {
            f.push(first.inputs as f64);
        }
        f.extend(self.layers.iter().map(|l| l.outputs as f64));
        for l in &self.layers {
            f.extend_from_slice(&l.weight);
            f.extend_from_slice(&l.bias);
        }
        checkpoint::encode(Self::MAGIC, Self::VERSION, 0, &f)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (_, f) = checkpoint::decode(Self::MAGIC, Self::VERSION, bytes)?;
        let n = checkpoint::as_count(*f.first().unwrap_or(&-1.0), "layer count")?;
        if n == 0 {
            return Ok(Self::empty());
        }
        let sizes = f
            .get(1..n + 2)
            .ok_or_else(|| Error::Checkpoint("size chain truncated".into()))?
            .iter()
            .map(|&s| checkpoint::as_count(s, "layer size"))
            .collect::<Result<Vec<_>>>()?;
        let mut rest = &f[n + 2..];
        let mut layers = Vec::with_capacity(n);
        for w in sizes.windows(2) {
            let (nw, nb) = (w[0] * w[1], w[1]);
            if rest.len() < nw + nb {
                return Err(Error::Checkpoint("parameter block truncated".into()));
            }
            let layer = Linear::new(w[0], w[1], rest[..nw].to_vec(), rest[nw..nw + nb].to_vec())
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            layers.push(layer);
            rest = &rest[nw + nb..];
        }
        if !rest.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing values", rest.len())));
        }
        Self::from_layers(layers)
    }
}

/// Mean of `(ŷ − y)²` over every element, with gradient `2(ŷ − y)/N`.
pub fn mse_loss(y_hat: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    ensure_len(y.len(), y_hat.len())?;
    if y.is_empty() {
        return Err(Error::param("mse of an empty batch"));
    }
    let n = y.len() as f64;
    let mut loss = 0.0;
    let grad = y_hat
        .iter()
        .zip(y)
        .map(|(p, t)| {
            let r = p - t;
            loss += r * r;
            2.0 * r / n
        })
        .collect();
    Ok((loss / n, grad))
}
