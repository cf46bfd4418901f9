//! Minimal dense neural-network substrate shared by actors and critics:
//! batched forward pass, exact reverse-mode backpropagation, Adam, and a
//! self-describing checkpoint format.
//!
//! Everything is `f64`. Weights are stored input-major (`w[i * out + o]`) so
//! the batched kernels run as contiguous row operations.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged batch");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed via pre-activation `z` and activation `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// One dense layer: `a = act(x W + b)` with `W` stored `[in][out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Parameters of a dense multi-layer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Per-layer gradients mirroring [`MlpParams`].
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            weights: params.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: params.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }
}

/// Cached activations from a forward pass, consumed by `backward`.
pub struct ForwardCache {
    /// Layer inputs: activations[0] is the network input, activations[l+1]
    /// the output of layer l.
    activations: Vec<Matrix>,
    /// Pre-activation values per layer.
    preacts: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("non-empty cache")
    }
}

impl MlpParams {
    /// Build an MLP with the given layer sizes. Hidden layers use
    /// `hidden_act`, the last layer `output_act`. Weights and biases
    /// initialize uniformly in +-1/sqrt(fan_in).
    pub fn new(
        dims: &[usize],
        hidden_act: Activation,
        output_act: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(dims.len() >= 2, "need at least one layer");
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(idx, pair)| {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                let bound = 1.0 / (in_dim as f64).sqrt();
                let act = if idx + 2 == dims.len() { output_act } else { hidden_act };
                Layer {
                    in_dim,
                    out_dim,
                    weights: (0..in_dim * out_dim)
                        .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound)
                        .collect(),
                    bias: (0..out_dim).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound).collect(),
                    activation: act,
                }
            })
            .collect();
        Self { layers }
    }

    /// Scale the final layer's parameters, e.g. to start an actor near the
    /// neutral policy.
    pub fn scale_output_layer(&mut self, factor: f64) {
        if let Some(last) = self.layers.last_mut() {
            for w in &mut last.weights {
                *w *= factor;
            }
            for b in &mut last.bias {
                *b *= factor;
            }
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().expect("non-empty").in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    /// Forward pass over a batch. Panics on an input width mismatch.
    pub fn forward_batch(&self, input: &Matrix) -> ForwardCache {
        assert_eq!(
            input.cols,
            self.in_dim(),
            "input width {} does not match first layer input {}",
            input.cols,
            self.in_dim()
        );
        let batch = input.rows;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut preacts = Vec::with_capacity(self.layers.len());
        activations.push(input.clone());

        for layer in &self.layers {
            let x = activations.last().unwrap();
            let mut z = Matrix::zeros(batch, layer.out_dim);
            for b in 0..batch {
                let x_row = x.row(b);
                let z_row = z.row_mut(b);
                z_row.copy_from_slice(&layer.bias);
                for (i, &xi) in x_row.iter().enumerate() {
                    let w_row = &layer.weights[i * layer.out_dim..(i + 1) * layer.out_dim];
                    for (zo, &w) in z_row.iter_mut().zip(w_row) {
                        *zo += xi * w;
                    }
                }
            }
            let mut a = Matrix::zeros(batch, layer.out_dim);
            for (av, &zv) in a.data.iter_mut().zip(&z.data) {
                *av = layer.activation.apply(zv);
            }
            preacts.push(z);
            activations.push(a);
        }
        ForwardCache { activations, preacts }
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let cache = self.forward_batch(&Matrix::from_rows(&[input.to_vec()]));
        cache.output().row(0).to_vec()
    }

    /// Exact reverse-mode gradients. `output_grad` holds d(scalar)/d(output)
    /// per batch row; parameter gradients come back summed over the batch,
    /// and the input gradient per row.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> (MlpGrads, Matrix) {
        let batch = output_grad.rows;
        assert_eq!(output_grad.cols, self.out_dim(), "output grad width mismatch");
        assert_eq!(cache.activations[0].rows, batch, "cache/grad batch mismatch");

        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = output_grad.clone();

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.preacts[l];
            let a = &cache.activations[l + 1];
            // delta <- delta (.) act'(z)
            for ((dv, &zv), &av) in delta.data.iter_mut().zip(&z.data).zip(&a.data) {
                *dv *= layer.activation.derivative(zv, av);
            }

            let x = &cache.activations[l];
            let dw = &mut grads.weights[l];
            let db = &mut grads.bias[l];
            for b in 0..batch {
                let x_row = x.row(b);
                let d_row = delta.row(b);
                for (o, &dv) in d_row.iter().enumerate() {
                    db[o] += dv;
                }
                for (i, &xi) in x_row.iter().enumerate() {
                    let dw_row = &mut dw[i * layer.out_dim..(i + 1) * layer.out_dim];
                    for (dwo, &dv) in dw_row.iter_mut().zip(d_row) {
                        *dwo += xi * dv;
                    }
                }
            }

            // Input gradient for the next stage down.
            let mut next_delta = Matrix::zeros(batch, layer.in_dim);
            for b in 0..batch {
                let d_row = delta.row(b);
                let nd_row = next_delta.row_mut(b);
                for (i, nd) in nd_row.iter_mut().enumerate() {
                    let w_row = &layer.weights[i * layer.out_dim..(i + 1) * layer.out_dim];
                    *nd = w_row.iter().zip(d_row).map(|(&w, &d)| w * d).sum();
                }
            }
            delta = next_delta;
        }
        (grads, delta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let mut file = std::fs::File::create(path).map_err(CheckpointError::Io)?;
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            buf.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
            buf.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
            buf.push(layer.activation.tag());
        }
        for layer in &self.layers {
            for w in layer.weights.iter().chain(&layer.bias) {
                buf.extend_from_slice(&w.to_le_bytes());
            }
        }
        file.write_all(&buf).map_err(CheckpointError::Io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let mut file = std::fs::File::open(path).map_err(CheckpointError::Io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(CheckpointError::Io)?;
        let mut cursor = 0usize;

        let take = |cursor: &mut usize, n: usize| -> Result<&[u8], CheckpointError> {
            let end = *cursor + n;
            let slice = bytes.get(*cursor..end).ok_or(CheckpointError::Corrupt("truncated file"))?;
            *cursor = end;
            Ok(slice)
        };

        if take(&mut cursor, 4)? != MAGIC {
            return Err(CheckpointError::Corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let num_layers = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let mut shapes = Vec::with_capacity(num_layers);
        for _ in 0..num_layers {
            let in_dim = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
            let out_dim = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
            let act = Activation::from_tag(take(&mut cursor, 1)?[0])
                .ok_or(CheckpointError::Corrupt("unknown activation tag"))?;
            shapes.push((in_dim, out_dim, act));
        }
        let mut layers = Vec::with_capacity(num_layers);
        for (in_dim, out_dim, act) in shapes {
            let read_f64s = |n: usize, cursor: &mut usize| -> Result<Vec<f64>, CheckpointError> {
                let raw = take(cursor, n * 8)?;
                Ok(raw
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect())
            };
            let weights = read_f64s(in_dim * out_dim, &mut cursor)?;
            let bias = read_f64s(out_dim, &mut cursor)?;
            layers.push(Layer {
                in_dim,
                out_dim,
                weights,
                bias,
                activation: act,
            });
        }
        if cursor != bytes.len() {
            return Err(CheckpointError::Corrupt("trailing bytes"));
        }
        if layers.is_empty() {
            return Err(CheckpointError::Corrupt("no layers"));
        }
        Ok(Self { layers })
    }
}

const MAGIC: &[u8; 4] = b"MLPC";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CheckpointError {
    Io(std::io::Error),
    VersionMismatch { found: u32, expected: u32 },
    Corrupt(&'static str),
}

impl std::fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CheckpointError::Io(e) => write!(f, "checkpoint i/o error: {e}"),
            CheckpointError::VersionMismatch { found, expected } => {
                write!(f, "checkpoint version {found}, this build reads {expected}")
            }
            CheckpointError::Corrupt(what) => write!(f, "corrupt checkpoint: {what}"),
        }
    }
}

impl std::error::Error for CheckpointError {}

/// Adam optimizer state for one parameter set.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_bias: Vec<Vec<f64>>,
    v_bias: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &MlpParams, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m_weights: params.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            v_weights: params.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            m_bias: params.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            v_bias: params.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }
}

fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bias1: f64,
    bias2: f64,
) {
    for (((p, &g), mi), vi) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *mi = beta1 * *mi + (1.0 - beta1) * g;
        *vi = beta2 * *vi + (1.0 - beta2) * g * g;
        let m_hat = *mi / bias1;
        let v_hat = *vi / bias2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One Adam step with bias correction; increments the step counter.
pub fn adam_step(params: &mut MlpParams, grads: &MlpGrads, state: &mut AdamState) {
    state.step += 1;
    let bias1 = 1.0 - state.beta1.powi(state.step as i32);
    let bias2 = 1.0 - state.beta2.powi(state.step as i32);
    for (l, layer) in params.layers.iter_mut().enumerate() {
        adam_update(
            &mut layer.weights,
            &grads.weights[l],
            &mut state.m_weights[l],
            &mut state.v_weights[l],
            state.learning_rate,
            state.beta1,
            state.beta2,
            state.epsilon,
            bias1,
            bias2,
        );
        adam_update(
            &mut layer.bias,
            &grads.bias[l],
            &mut state.m_bias[l],
            &mut state.v_bias[l],
            state.learning_rate,
            state.beta1,
            state.beta2,
            state.epsilon,
            bias1,
            bias2,
        );
    }
}

/// Blend target parameters toward online ones: `t <- rate*o + (1-rate)*t`.
pub fn soft_update(online: &MlpParams, target: &mut MlpParams, rate: f64) {
    debug_assert!((0.0..=1.0).contains(&rate));
    for (ol, tl) in online.layers.iter().zip(&mut target.layers) {
        for (o, t) in ol.weights.iter().zip(&mut tl.weights) {
            *t = rate * o + (1.0 - rate) * *t;
        }
        for (o, t) in ol.bias.iter().zip(&mut tl.bias) {
            *t = rate * o + (1.0 - rate) * *t;
        }
    }
}
