//! Linear and MLP function approximators with exact backpropagation.
//!
//! Both the regressor and the rejector are instances of the same machinery:
//! a chain of dense layers with ReLU between them and a single linear output.
//! `backward` computes the exact gradient of `sum_i upstream_i * output_i`,
//! which composes with any per-example loss derivative supplied as upstream.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Mlp,
}

/// Architecture description. Hidden layers apply to the MLP kind only; the
/// output dimension is always 1 and the activation is always ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    #[serde(default)]
    pub hidden_dims: Vec<usize>,
}

/// The default MLP topology: input -> 20 -> 30 -> 10 -> 1.
pub const DEFAULT_HIDDEN_DIMS: [usize; 3] = [20, 30, 10];

impl ModelSpec {
    pub fn linear(input_dim: usize) -> Self {
        ModelSpec { kind: ModelKind::Linear, input_dim, hidden_dims: Vec::new() }
    }

    pub fn mlp(input_dim: usize, hidden_dims: Vec<usize>) -> Self {
        ModelSpec { kind: ModelKind::Mlp, input_dim, hidden_dims }
    }

    pub fn default_mlp(input_dim: usize) -> Self {
        ModelSpec::mlp(input_dim, DEFAULT_HIDDEN_DIMS.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Invalid { what: "model spec", reason: "input_dim must be > 0".into() });
        }
        if self.kind == ModelKind::Linear && !self.hidden_dims.is_empty() {
            return Err(Error::Invalid {
                what: "model spec",
                reason: "a linear model takes no hidden layers".into(),
            });
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(Error::Invalid { what: "model spec", reason: "hidden dims must be > 0".into() });
        }
        Ok(())
    }

    /// (fan_in, fan_out) of every layer, chaining input through hidden to 1.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims.push((fan_in, 1));
        dims
    }
}

/// One dense layer: weights stored (fan_in x fan_out) row-major, bias per
/// output unit. Also reused as the gradient / moment container since the
/// shapes are identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros_like(fan_in: usize, fan_out: usize) -> Layer {
        Layer { weights: Matrix::zeros(fan_in, fan_out), bias: vec![0.0; fan_out] }
    }
}

/// Concrete parameters of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub layers: Vec<Layer>,
}

/// Per-parameter values with the same shapes as a [`ModelParams`].
pub type ModelGrads = Vec<Layer>;

/// A regressor h and a rejector r over the same input space. Acceptance is
/// decided by the sign of r: predict when r(x) > 0, reject otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcRPair {
    pub h: ModelParams,
    pub r: ModelParams,
}

impl RcRPair {
    pub fn new(h: ModelParams, r: ModelParams) -> Result<Self> {
        if h.spec.input_dim != r.spec.input_dim {
            return Err(Error::DimensionMismatch {
                context: "pair input dims",
                expected: h.spec.input_dim,
                actual: r.spec.input_dim,
            });
        }
        Ok(RcRPair { h, r })
    }

    /// Predict and decide for one example: (prediction, accept).
    pub fn decide(&self, x: &[f64]) -> Result<(f64, bool)> {
        let h = self.h.eval_one(x)?;
        let r = self.r.eval_one(x)?;
        Ok((h, r > 0.0))
    }
}

/// Kaiming-uniform initialization: weights from U(-b, b) with b = sqrt(6 / fan_in),
/// biases zero. Draw order is layer by layer, row-major, so a given seed
/// always produces bit-identical parameters.
pub fn init_params(spec: &ModelSpec, rng: &mut Rng) -> Result<ModelParams> {
    spec.validate()?;
    let mut layers = Vec::new();
    for (fan_in, fan_out) in spec.layer_dims() {
        let bound = (6.0 / fan_in as f64).sqrt();
        let mut weights = Matrix::zeros(fan_in, fan_out);
        for v in weights.as_mut_slice() {
            *v = rng.uniform(-bound, bound)?;
        }
        layers.push(Layer { weights, bias: vec![0.0; fan_out] });
    }
    Ok(ModelParams { spec: spec.clone(), layers })
}

/// Activations recorded by [`forward`]; consumed by [`backward`].
///
/// `activations[0]` is the input batch, `activations[l]` the post-ReLU output
/// of hidden layer l. The final linear output is not needed for the backward
/// pass and is returned separately.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Matrix>,
}

impl ModelParams {
    /// Evaluate a single example.
    pub fn eval_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.spec.input_dim,
                actual: x.len(),
            });
        }
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let fan_out = layer.bias.len();
            let mut next = layer.bias.clone();
            for (i, &v) in current.iter().enumerate() {
                let w_row = layer.weights.row(i);
                for j in 0..fan_out {
                    next[j] += v * w_row[j];
                }
            }
            if l != last {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            current = next;
        }
        Ok(current[0])
    }
}

/// Batched forward pass: returns the n x 1 outputs and the activation record
/// needed for an exact backward pass.
pub fn forward(params: &ModelParams, x_batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
    if x_batch.cols() != params.spec.input_dim {
        return Err(Error::DimensionMismatch {
            context: "forward input",
            expected: params.spec.input_dim,
            actual: x_batch.cols(),
        });
    }
    let n = x_batch.rows();
    let last = params.layers.len() - 1;
    let mut activations: Vec<Matrix> = Vec::with_capacity(params.layers.len());
    activations.push(x_batch.clone());
    let mut output = None;
    for (l, layer) in params.layers.iter().enumerate() {
        let prev = activations.last().unwrap();
        let mut z = prev.matmul(&layer.weights)?;
        for i in 0..n {
            for (v, &b) in z.row_mut(i).iter_mut().zip(&layer.bias) {
                *v += b;
            }
        }
        if l == last {
            output = Some(z);
        } else {
            for v in z.as_mut_slice() {
                *v = v.max(0.0);
            }
            activations.push(z);
        }
    }
    Ok((output.unwrap(), ForwardCache { activations }))
}

/// Exact gradients of `sum_i upstream[i] * output[i]` with respect to every
/// parameter. The ReLU subgradient at 0 is 0.
pub fn backward(params: &ModelParams, cache: &ForwardCache, upstream: &Matrix) -> Result<ModelGrads> {
    let n_layers = params.layers.len();
    if cache.activations.len() != n_layers {
        return Err(Error::DimensionMismatch {
            context: "forward cache",
            expected: n_layers,
            actual: cache.activations.len(),
        });
    }
    let n = cache.activations[0].rows();
    if upstream.rows() != n || upstream.cols() != 1 {
        return Err(Error::ShapeMismatch {
            left_rows: upstream.rows(),
            left_cols: upstream.cols(),
            right_rows: n,
            right_cols: 1,
        });
    }
    for (layer, act) in params.layers.iter().zip(&cache.activations) {
        if act.cols() != layer.weights.rows() {
            return Err(Error::DimensionMismatch {
                context: "cache/params layer width",
                expected: layer.weights.rows(),
                actual: act.cols(),
            });
        }
    }

    let mut grads: ModelGrads = params
        .layers
        .iter()
        .map(|l| Layer::zeros_like(l.weights.rows(), l.weights.cols()))
        .collect();

    // delta starts as the upstream signal on the linear output.
    let mut delta = upstream.clone();
    for l in (0..n_layers).rev() {
        let input = &cache.activations[l];
        let grad = &mut grads[l];
        let fan_out = params.layers[l].bias.len();
        // Weight and bias gradients: input^T . delta and column sums of delta.
        for i in 0..n {
            let d_row = delta.row(i);
            let in_row = input.row(i);
            for (k, &a) in in_row.iter().enumerate() {
                let g_row = grad.weights.row_mut(k);
                for (g, &d) in g_row.iter_mut().zip(d_row) {
                    *g += a * d;
                }
            }
            for (b, &d) in grad.bias.iter_mut().zip(d_row) {
                *b += d;
            }
        }
        let _ = fan_out;
        if l > 0 {
            // Propagate: delta_prev = (delta . W^T) masked by ReLU activity.
            let weights = &params.layers[l].weights;
            let mut prev = Matrix::zeros(n, weights.rows());
            for i in 0..n {
                let d_row = delta.row(i);
                let prev_row = prev.row_mut(i);
                let act_row = input.row(i);
                for k in 0..weights.rows() {
                    if act_row[k] > 0.0 {
                        let w_row = weights.row(k);
                        let mut acc = 0.0;
                        for (w, d) in w_row.iter().zip(d_row) {
                            acc += w * d;
                        }
                        prev_row[k] = acc;
                    }
                }
            }
            delta = prev;
        }
    }
    Ok(grads)
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"RCM1";

impl ModelParams {
    /// Write a self-describing binary checkpoint. The float payload is raw
    /// little-endian IEEE 754 bits, so a round trip is bit-exact.
    pub fn save_binary(&self, mut writer: impl Write) -> Result<()> {
        writer.write_all(CHECKPOINT_MAGIC)?;
        writer.write_all(&[match self.spec.kind {
            ModelKind::Linear => 0u8,
            ModelKind::Mlp => 1u8,
        }])?;
        writer.write_all(&(self.spec.input_dim as u64).to_le_bytes())?;
        writer.write_all(&(self.spec.hidden_dims.len() as u64).to_le_bytes())?;
        for &h in &self.spec.hidden_dims {
            writer.write_all(&(h as u64).to_le_bytes())?;
        }
        for layer in &self.layers {
            for &v in layer.weights.as_slice() {
                writer.write_all(&v.to_le_bytes())?;
            }
            for &v in &layer.bias {
                writer.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load_binary(mut reader: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::BadCheckpoint("wrong magic bytes".into()));
        }
        let mut byte = [0u8; 1];
        reader.read_exact(&mut byte)?;
        let kind = match byte[0] {
            0 => ModelKind::Linear,
            1 => ModelKind::Mlp,
            other => return Err(Error::BadCheckpoint(format!("unknown model kind {other}"))),
        };
        let mut u64_buf = [0u8; 8];
        let mut read_u64 = |reader: &mut dyn Read| -> Result<u64> {
            reader.read_exact(&mut u64_buf)?;
            Ok(u64::from_le_bytes(u64_buf))
        };
        let input_dim = read_u64(&mut reader)? as usize;
        let n_hidden = read_u64(&mut reader)? as usize;
        if n_hidden > 1024 {
            return Err(Error::BadCheckpoint(format!("implausible hidden layer count {n_hidden}")));
        }
        let mut hidden_dims = Vec::with_capacity(n_hidden);
        for _ in 0..n_hidden {
            hidden_dims.push(read_u64(&mut reader)? as usize);
        }
        let spec = ModelSpec { kind, input_dim, hidden_dims };
        spec.validate().map_err(|e| Error::BadCheckpoint(e.to_string()))?;
        let mut f64_buf = [0u8; 8];
        let mut layers = Vec::new();
        for (fan_in, fan_out) in spec.layer_dims() {
            let mut weights = Matrix::zeros(fan_in, fan_out);
            for v in weights.as_mut_slice() {
                reader.read_exact(&mut f64_buf)?;
                *v = f64::from_le_bytes(f64_buf);
            }
            let mut bias = vec![0.0; fan_out];
            for v in &mut bias {
                reader.read_exact(&mut f64_buf)?;
                *v = f64::from_le_bytes(f64_buf);
            }
            layers.push(Layer { weights, bias });
        }
        Ok(ModelParams { spec, layers })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl RcRPair {
    pub fn save_binary_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.h.save_binary(&mut file)?;
        self.r.save_binary(&mut file)?;
        Ok(())
    }

    pub fn load_binary_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let h = ModelParams::load_binary(&mut file)?;
        let r = ModelParams::load_binary(&mut file)?;
        RcRPair::new(h, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_init_shapes_and_zero_bias() {
        let spec = ModelSpec::linear(3);
        let params = init_params(&spec, &mut Rng::new(0)).unwrap();
        assert_eq!(params.layers.len(), 1);
        assert_eq!(params.layers[0].weights.rows(), 3);
        assert_eq!(params.layers[0].weights.cols(), 1);
        assert_eq!(params.layers[0].bias, vec![0.0]);
        let bound = (6.0f64 / 3.0).sqrt();
        for &w in params.layers[0].weights.as_slice() {
            assert!(w.abs() <= bound);
        }
    }

    #[test]
    fn default_mlp_topology() {
        let spec = ModelSpec::default_mlp(8);
        let params = init_params(&spec, &mut Rng::new(0)).unwrap();
        let dims: Vec<(usize, usize)> = params
            .layers
            .iter()
            .map(|l| (l.weights.rows(), l.weights.cols()))
            .collect();
        assert_eq!(dims, vec![(8, 20), (20, 30), (30, 10), (10, 1)]);
    }

    #[test]
    fn init_deterministic() {
        let spec = ModelSpec::default_mlp(4);
        let a = init_params(&spec, &mut Rng::new(42)).unwrap();
        let b = init_params(&spec, &mut Rng::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_input_dim_rejected() {
        assert!(init_params(&ModelSpec::linear(0), &mut Rng::new(0)).is_err());
    }

    #[test]
    fn linear_forward_hand_value() {
        let spec = ModelSpec::linear(2);
        let mut params = init_params(&spec, &mut Rng::new(0)).unwrap();
        params.layers[0].weights = Matrix::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        params.layers[0].bias = vec![3.0];
        let x = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let (out, _) = forward(&params, &x).unwrap();
        assert_eq!(out.get(0, 0), 6.0);
        assert_eq!(params.eval_one(&[1.0, 1.0]).unwrap(), 6.0);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let spec = ModelSpec::mlp(3, vec![4, 2]);
        let mut params = init_params(&spec, &mut Rng::new(1)).unwrap();
        for layer in &mut params.layers {
            layer.weights.as_mut_slice().fill(0.0);
            layer.bias.fill(0.0);
        }
        let x = Matrix::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.0, -1.0]).unwrap();
        let (out, _) = forward(&params, &x).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn batch_forward_matches_per_example() {
        let spec = ModelSpec::mlp(5, vec![7, 3]);
        let params = init_params(&spec, &mut Rng::new(3)).unwrap();
        let mut rng = Rng::new(4);
        let x = Matrix::from_vec(
            9,
            5,
            (0..45).map(|_| rng.uniform(-2.0, 2.0).unwrap()).collect(),
        )
        .unwrap();
        let (out, _) = forward(&params, &x).unwrap();
        for i in 0..9 {
            let single = params.eval_one(x.row(i)).unwrap();
            assert!((out.get(i, 0) - single).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_bad_width() {
        let spec = ModelSpec::linear(3);
        let params = init_params(&spec, &mut Rng::new(0)).unwrap();
        let x = Matrix::zeros(2, 4);
        assert!(forward(&params, &x).is_err());
    }

    #[test]
    fn batch_order_equivariance() {
        let spec = ModelSpec::mlp(4, vec![6]);
        let params = init_params(&spec, &mut Rng::new(5)).unwrap();
        let mut rng = Rng::new(6);
        let x = Matrix::from_vec(
            6,
            4,
            (0..24).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect(),
        )
        .unwrap();
        let perm = [3usize, 0, 5, 1, 4, 2];
        let permuted = x.take_rows(&perm);
        let (out, _) = forward(&params, &x).unwrap();
        let (out_p, _) = forward(&params, &permuted).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(out_p.get(i, 0), out.get(p, 0));
        }
    }

    #[test]
    fn linear_backward_hand_values() {
        let spec = ModelSpec::linear(2);
        let params = init_params(&spec, &mut Rng::new(0)).unwrap();
        let x = Matrix::from_vec(1, 2, vec![3.0, -4.0]).unwrap();
        let (_, cache) = forward(&params, &x).unwrap();
        let upstream = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let grads = backward(&params, &cache, &upstream).unwrap();
        assert_eq!(grads[0].weights.as_slice(), &[3.0, -4.0]);
        assert_eq!(grads[0].bias, vec![1.0]);
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let spec = ModelSpec::mlp(3, vec![5]);
        let params = init_params(&spec, &mut Rng::new(7)).unwrap();
        let x = Matrix::from_vec(4, 3, vec![1.0; 12]).unwrap();
        let (_, cache) = forward(&params, &x).unwrap();
        let upstream = Matrix::zeros(4, 1);
        let grads = backward(&params, &cache, &upstream).unwrap();
        for layer in &grads {
            assert!(layer.weights.as_slice().iter().all(|&g| g == 0.0));
            assert!(layer.bias.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn backward_rejects_mismatched_cache() {
        let spec_a = ModelSpec::mlp(3, vec![5]);
        let spec_b = ModelSpec::mlp(3, vec![6]);
        let params_a = init_params(&spec_a, &mut Rng::new(1)).unwrap();
        let params_b = init_params(&spec_b, &mut Rng::new(1)).unwrap();
        let x = Matrix::from_vec(2, 3, vec![1.0; 6]).unwrap();
        let (_, cache_b) = forward(&params_b, &x).unwrap();
        let upstream = Matrix::zeros(2, 1);
        assert!(backward(&params_a, &cache_b, &upstream).is_err());
    }

    /// Finite-difference oracle over every parameter of a small random MLP.
    #[test]
    fn backward_matches_finite_differences() {
        let spec = ModelSpec::mlp(3, vec![4, 3]);
        let params = init_params(&spec, &mut Rng::new(11)).unwrap();
        let mut rng = Rng::new(12);
        let x = Matrix::from_vec(
            5,
            3,
            (0..15).map(|_| rng.uniform(-1.5, 1.5).unwrap()).collect(),
        )
        .unwrap();
        let upstream_vals: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0).unwrap()).collect();
        let upstream = Matrix::from_vec(5, 1, upstream_vals.clone()).unwrap();

        let objective = |p: &ModelParams| -> f64 {
            let (out, _) = forward(p, &x).unwrap();
            out.as_slice()
                .iter()
                .zip(&upstream_vals)
                .map(|(o, u)| o * u)
                .sum()
        };

        let (_, cache) = forward(&params, &x).unwrap();
        let grads = backward(&params, &cache, &upstream).unwrap();

        let h = 1e-6;
        for l in 0..params.layers.len() {
            let n_w = params.layers[l].weights.as_slice().len();
            for idx in 0..n_w {
                let mut plus = params.clone();
                plus.layers[l].weights.as_mut_slice()[idx] += h;
                let mut minus = params.clone();
                minus.layers[l].weights.as_mut_slice()[idx] -= h;
                let numeric = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let analytic = grads[l].weights.as_slice()[idx];
                let scale = analytic.abs().max(numeric.abs());
                assert!(
                    (analytic - numeric).abs() <= 1e-5 * scale + 1e-7,
                    "layer {l} weight {idx}: {analytic} vs {numeric}"
                );
            }
            for idx in 0..params.layers[l].bias.len() {
                let mut plus = params.clone();
                plus.layers[l].bias[idx] += h;
                let mut minus = params.clone();
                minus.layers[l].bias[idx] -= h;
                let numeric = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let analytic = grads[l].bias[idx];
                let scale = analytic.abs().max(numeric.abs());
                assert!(
                    (analytic - numeric).abs() <= 1e-5 * scale + 1e-7,
                    "layer {l} bias {idx}: {analytic} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn empty_hidden_mlp_equals_linear() {
        let mlp_spec = ModelSpec::mlp(4, vec![]);
        let lin_spec = ModelSpec::linear(4);
        let a = init_params(&mlp_spec, &mut Rng::new(9)).unwrap();
        let b = init_params(&lin_spec, &mut Rng::new(9)).unwrap();
        let mut rng = Rng::new(10);
        let x = Matrix::from_vec(
            8,
            4,
            (0..32).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect(),
        )
        .unwrap();
        let (out_a, _) = forward(&a, &x).unwrap();
        let (out_b, _) = forward(&b, &x).unwrap();
        assert_eq!(out_a.as_slice(), out_b.as_slice());
    }

    #[test]
    fn binary_checkpoint_bit_exact() {
        let spec = ModelSpec::default_mlp(6);
        let params = init_params(&spec, &mut Rng::new(21)).unwrap();
        let mut buf = Vec::new();
        params.save_binary(&mut buf).unwrap();
        let back = ModelParams::load_binary(buf.as_slice()).unwrap();
        assert_eq!(params, back);
        for (a, b) in params.layers.iter().zip(&back.layers) {
            for (x, y) in a.weights.as_slice().iter().zip(b.weights.as_slice()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn json_checkpoint_value_exact() {
        let spec = ModelSpec::mlp(2, vec![3]);
        let params = init_params(&spec, &mut Rng::new(22)).unwrap();
        let text = params.to_json().unwrap();
        let back = ModelParams::from_json(&text).unwrap();
        for (a, b) in params.layers.iter().zip(&back.layers) {
            for (x, y) in a.weights.as_slice().iter().zip(b.weights.as_slice()) {
                assert!((x - y).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn pair_checkpoint_round_trip() {
        let h = init_params(&ModelSpec::default_mlp(3), &mut Rng::new(1)).unwrap();
        let r = init_params(&ModelSpec::default_mlp(3), &mut Rng::new(2)).unwrap();
        let pair = RcRPair::new(h, r).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        pair.save_binary_file(file.path()).unwrap();
        let back = RcRPair::load_binary_file(file.path()).unwrap();
        assert_eq!(pair, back);
    }

    #[test]
    fn bad_checkpoint_rejected() {
        let err = ModelParams::load_binary(&b"NOPE"[..]).unwrap_err();
        assert!(matches!(err, Error::BadCheckpoint(_)));
    }
}
