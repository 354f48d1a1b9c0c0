//! Fully connected Q-network with ReLU hidden layers, hand-written
//! backpropagation and an Adam optimizer.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::environment::uniform;
use crate::error::IoError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MEQCDQN1";

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape `(inputs, outputs)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let weights = Array2::from_shape_fn((inputs, outputs), |_| uniform(rng, -bound, bound));
        let bias = Array1::from_shape_fn(outputs, |_| uniform(rng, -bound, bound));
        Self { weights, bias }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }
}

/// Gradients with the same layout as the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// `Q(s, .) = value_scale * net(s)`. The scale keeps raw outputs near unit
/// magnitude when costs are large.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub layers: Vec<Dense>,
    pub value_scale: f64,
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        value_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        let layers = dims
            .windows(2)
            .map(|w| Dense::new(w[0], w[1], rng))
            .collect();
        Self {
            layers,
            value_scale,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weights.ncols()).unwrap_or(0)
    }

    /// Layer widths including input and output.
    pub fn architecture(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.weights.ncols()));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Unscaled outputs for a batch of rows.
    fn raw_forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if i < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        h
    }

    /// Q-values for a batch of rows.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        self.raw_forward(x) * self.value_scale
    }

    pub fn q_values(&self, obs: &[f64]) -> Vec<f64> {
        let x = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).expect("observation row");
        self.forward(&x).row(0).to_vec()
    }

    /// Mean squared temporal-difference error in scaled units,
    /// `mean_i (net(s_i)[a_i] - y_i / value_scale)^2`, and its gradient.
    pub fn loss_and_grad(
        &self,
        states: &Array2<f64>,
        actions: &[usize],
        targets: &[f64],
    ) -> (f64, Gradients) {
        let n = states.nrows();
        assert_eq!(actions.len(), n);
        assert_eq!(targets.len(), n);
        let last = self.layers.len() - 1;
        // Forward, keeping every layer's input.
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = states.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h);
            inputs.push(h);
            h = if i < last { z.mapv(|v| v.max(0.0)) } else { z };
        }
        let mut delta = Array2::<f64>::zeros(h.raw_dim());
        let mut loss = 0.0;
        for (i, (&a, &y)) in actions.iter().zip(targets).enumerate() {
            let err = h[[i, a]] - y / self.value_scale;
            loss += err * err;
            delta[[i, a]] = 2.0 * err / n as f64;
        }
        loss /= n as f64;

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = &inputs[i];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights.t());
                // ReLU derivative of the previous layer's output, which is `input`.
                back.zip_mut_with(input, |d, &act| {
                    if act <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(Dense {
                weights: gw,
                bias: gb,
            });
        }
        grads.reverse();
        (loss, Gradients { layers: grads })
    }

    pub fn copy_from(&mut self, other: &QNetwork) {
        assert_eq!(
            self.architecture(),
            other.architecture(),
            "architecture mismatch"
        );
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            dst.weights.assign(&src.weights);
            dst.bias.assign(&src.bias);
        }
        self.value_scale = other.value_scale;
    }

    /// Parameters layer by layer, each layer's weights (row-major,
    /// `inputs x outputs`) followed by its bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut it = params.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = *it.next().unwrap();
            }
            for b in l.bias.iter_mut() {
                *b = *it.next().unwrap();
            }
        }
    }

    /// 16-byte header (`MEQCDQN1`, layer count as little-endian u64)
    /// followed by [`QNetwork::flat_params`] as little-endian f64.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&(self.layers.len() as u64).to_le_bytes())?;
        for p in self.flat_params() {
            w.write_all(&p.to_le_bytes())?;
        }
        w.flush()
    }

    /// Load parameters into a network of the same architecture.
    pub fn read_checkpoint<R: Read>(&mut self, mut r: R) -> Result<(), IoError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| IoError::Checkpoint(format!("short header: {e}")))?;
        if &header[..8] != CHECKPOINT_MAGIC {
            return Err(IoError::Checkpoint("bad magic".into()));
        }
        let layers = u64::from_le_bytes(header[8..].try_into().unwrap());
        if layers != self.layers.len() as u64 {
            return Err(IoError::Checkpoint(format!(
                "checkpoint has {layers} layers, network has {}",
                self.layers.len()
            )));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)
            .map_err(|e| IoError::Checkpoint(e.to_string()))?;
        if body.len() != self.param_count() * 8 {
            return Err(IoError::Checkpoint(format!(
                "expected {} parameters, found {} bytes",
                self.param_count(),
                body.len()
            )));
        }
        let params: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.set_flat_params(&params);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        let file = std::fs::File::create(path).map_err(|source| IoError::Write {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_checkpoint(std::io::BufWriter::new(file))
            .map_err(|source| IoError::Write {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn load(&mut self, path: &Path) -> Result<(), IoError> {
        let file = std::fs::File::open(path).map_err(|source| IoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.read_checkpoint(std::io::BufReader::new(file))
    }
}

/// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl Adam {
    pub fn new(net: &QNetwork, lr: f64) -> Self {
        let zeros = |l: &Dense| Dense {
            weights: Array2::zeros(l.weights.raw_dim()),
            bias: Array1::zeros(l.bias.raw_dim()),
        };
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: net.layers.iter().map(zeros).collect(),
            v: net.layers.iter().map(zeros).collect(),
        }
    }

    pub fn step(&mut self, net: &mut QNetwork, grads: &Gradients) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let lr = self.lr;
        let eps = self.eps;
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            };
            ndarray::Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}
