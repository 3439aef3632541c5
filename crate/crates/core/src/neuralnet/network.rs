//! Checkpoint: an architecture plus its learned parameters, with the
//! forward pass, backpropagation, and TNSC+JSON persistence.
//!
//! ReLU activates every convolutional and fully connected layer; the output
//! layer is a plain linear map producing logits.

use super::arch::{parse_architecture, LayerSpec, NetworkSpec, Shape};
use super::layers;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Per-layer parameter slot, aligned with `NetworkSpec::layers`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamEntry {
    None,
    WeightBias { weight: Tensor, bias: Tensor },
}

/// Parameters, gradients, and optimizer state all share this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub entries: Vec<ParamEntry>,
}

impl ParamSet {
    pub fn zeros_like(&self) -> ParamSet {
        let entries = self
            .entries
            .iter()
            .map(|e| match e {
                ParamEntry::None => ParamEntry::None,
                ParamEntry::WeightBias { weight, bias } => ParamEntry::WeightBias {
                    weight: Tensor::zeros(weight.dims()),
                    bias: Tensor::zeros(bias.dims()),
                },
            })
            .collect();
        ParamSet { entries }
    }

    /// `self += other`, entry by entry. Shapes must match.
    pub fn accumulate(&mut self, other: &ParamSet) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            if let (
                ParamEntry::WeightBias { weight, bias },
                ParamEntry::WeightBias {
                    weight: ow,
                    bias: ob,
                },
            ) = (a, b)
            {
                for (x, y) in weight.data_mut().iter_mut().zip(ow.data()) {
                    *x += y;
                }
                for (x, y) in bias.data_mut().iter_mut().zip(ob.data()) {
                    *x += y;
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            if let ParamEntry::WeightBias { weight, bias } = e {
                for v in weight.data_mut() {
                    *v *= factor;
                }
                for v in bias.data_mut() {
                    *v *= factor;
                }
            }
        }
    }

    /// Flatten to (name, tensor) pairs in layer order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if let ParamEntry::WeightBias { weight, bias } = e {
                out.push((format!("layer{i}.weight"), weight));
                out.push((format!("layer{i}.bias"), bias));
            }
        }
        out
    }
}

/// Architecture plus learned parameters and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub params: ParamSet,
    pub rng_seed: u64,
    pub epoch: usize,
    pub config_hash: String,
}

type WeightBiasDims = Option<(Vec<usize>, Vec<usize>)>;

/// Expected (weight dims, bias dims) per layer, from shape inference.
fn param_shapes(spec: &NetworkSpec) -> Result<Vec<WeightBiasDims>> {
    let shapes = spec.shape_chain()?;
    let mut out = Vec::with_capacity(spec.layers.len());
    for (i, layer) in spec.layers.iter().enumerate() {
        let entry = match *layer {
            LayerSpec::Conv { field, depth, .. } => {
                let Shape::Map { c: cin, .. } = shapes[i - 1] else {
                    return Err(Error::Shape("conv without a map input".into()));
                };
                Some((vec![field, field, cin, depth], vec![depth]))
            }
            LayerSpec::FullyConnected { units } => {
                let n_in = shapes[i - 1].len();
                Some((vec![units, n_in], vec![units]))
            }
            LayerSpec::Output { classes } => {
                let n_in = shapes[i - 1].len();
                Some((vec![classes, n_in], vec![classes]))
            }
            _ => None,
        };
        out.push(entry);
    }
    Ok(out)
}

impl Checkpoint {
    /// Fresh parameters: conv weights from N(0, 0.01), fully connected
    /// weights from N(0, 1/sqrt(fan_in)), all biases zero. Values are drawn
    /// in layer order from a ChaCha stream seeded with `seed`.
    pub fn init(spec: NetworkSpec, seed: u64, config_hash: &str) -> Result<Checkpoint> {
        let shapes = param_shapes(&spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::with_capacity(spec.layers.len());
        for (layer, shape) in spec.layers.iter().zip(&shapes) {
            let entry = match shape {
                None => ParamEntry::None,
                Some((w_dims, b_dims)) => {
                    let std = match layer {
                        LayerSpec::Conv { .. } => 0.01,
                        _ => {
                            let fan_in = *w_dims.last().unwrap() as f64;
                            1.0 / fan_in.sqrt()
                        }
                    };
                    let normal = Normal::new(0.0, std).expect("std is positive");
                    let n: usize = w_dims.iter().product();
                    let data: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                    ParamEntry::WeightBias {
                        weight: Tensor::from_vec(w_dims, data)?,
                        bias: Tensor::zeros(b_dims),
                    }
                }
            };
            entries.push(entry);
        }
        Ok(Checkpoint {
            spec,
            params: ParamSet { entries },
            rng_seed: seed,
            epoch: 0,
            config_hash: config_hash.to_string(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.spec.n_classes()
    }

    /// Width of the last fully connected layer before the output — the
    /// embedding dimension. Falls back to the flattened input width for
    /// architectures without an F layer.
    pub fn embedding_width(&self) -> usize {
        let shapes = self.spec.shape_chain().expect("validated at construction");
        for (layer, shape) in self.spec.layers.iter().zip(&shapes).rev() {
            if matches!(layer, LayerSpec::FullyConnected { .. }) {
                return shape.len();
            }
        }
        shapes[shapes.len() - 2].len()
    }
}

/// Activations of every layer for one input, input included at index 0.
pub struct ForwardPass {
    pub activations: Vec<Tensor>,
}

impl ForwardPass {
    pub fn logits(&self) -> &Tensor {
        self.activations.last().expect("non-empty network")
    }

    /// Activation of the last fully connected layer (post-ReLU).
    pub fn embedding(&self, spec: &NetworkSpec) -> Option<&Tensor> {
        spec.layers
            .iter()
            .rposition(|l| matches!(l, LayerSpec::FullyConnected { .. }))
            .map(|i| &self.activations[i])
    }
}

/// Run the network, retaining every layer's output for backward passes and
/// embedding extraction.
pub fn forward(net: &Checkpoint, x: &Tensor) -> Result<ForwardPass> {
    let (h, w, c) = net.spec.input_shape;
    if x.dims() != [h, w, c] {
        return Err(Error::Shape(format!(
            "input shape {:?} does not match network input {:?}",
            x.dims(),
            (h, w, c)
        )));
    }
    let mut activations: Vec<Tensor> = Vec::with_capacity(net.spec.layers.len());
    for (i, layer) in net.spec.layers.iter().enumerate() {
        let out = match (layer, &net.params.entries[i]) {
            (LayerSpec::Input, _) => x.clone(),
            (LayerSpec::Conv { stride, pad, .. }, ParamEntry::WeightBias { weight, bias }) => {
                let pre = layers::conv2d(&activations[i - 1], weight, bias, *stride, *pad)?;
                layers::relu(&pre)
            }
            (LayerSpec::Lrn { n, k, alpha, beta }, _) => {
                layers::lrn(&activations[i - 1], *n, *k, *alpha, *beta)?
            }
            (LayerSpec::MaxPool { window, stride }, _) => {
                layers::max_pool(&activations[i - 1], *window, *stride)?
            }
            (LayerSpec::FullyConnected { .. }, ParamEntry::WeightBias { weight, bias }) => {
                let pre = layers::fully_connected(&activations[i - 1], weight, bias)?;
                layers::relu(&pre)
            }
            (LayerSpec::Output { .. }, ParamEntry::WeightBias { weight, bias }) => {
                layers::fully_connected(&activations[i - 1], weight, bias)?
            }
            _ => return Err(Error::Shape(format!("layer {i}: missing parameters"))),
        };
        activations.push(out);
    }
    Ok(ForwardPass { activations })
}

/// Backpropagate `loss_grad` (gradient w.r.t. the logits) through the
/// network, returning parameter gradients and the gradient at the input.
pub fn backward(
    net: &Checkpoint,
    pass: &ForwardPass,
    loss_grad: &Tensor,
) -> Result<(ParamSet, Tensor)> {
    let n_layers = net.spec.layers.len();
    if pass.activations.len() != n_layers {
        return Err(Error::Shape("activations do not match architecture".into()));
    }
    let mut grads = net.params.zeros_like();
    let mut cur = loss_grad.clone();

    for i in (1..n_layers).rev() {
        let input = &pass.activations[i - 1];
        cur = match (&net.spec.layers[i], &net.params.entries[i]) {
            (LayerSpec::Conv { stride, pad, .. }, ParamEntry::WeightBias { weight, .. }) => {
                let dpre = layers::relu_backward(&pass.activations[i], &cur);
                let (dx, dw, db) = layers::conv2d_backward(input, weight, &dpre, *stride, *pad)?;
                grads.entries[i] = ParamEntry::WeightBias {
                    weight: dw,
                    bias: db,
                };
                dx
            }
            (LayerSpec::Lrn { n, k, alpha, beta }, _) => {
                layers::lrn_backward(input, &cur, *n, *k, *alpha, *beta)?
            }
            (LayerSpec::MaxPool { window, stride }, _) => {
                layers::max_pool_backward(input, &cur, *window, *stride)?
            }
            (LayerSpec::FullyConnected { .. }, ParamEntry::WeightBias { weight, .. }) => {
                let dpre = layers::relu_backward(&pass.activations[i], &cur);
                let (dx, dw, db) = layers::fully_connected_backward(input, weight, &dpre)?;
                grads.entries[i] = ParamEntry::WeightBias {
                    weight: dw,
                    bias: db,
                };
                Tensor::from_vec(input.dims(), dx.into_data())?
            }
            (LayerSpec::Output { .. }, ParamEntry::WeightBias { weight, .. }) => {
                let (dx, dw, db) = layers::fully_connected_backward(input, weight, &cur)?;
                grads.entries[i] = ParamEntry::WeightBias {
                    weight: dw,
                    bias: db,
                };
                Tensor::from_vec(input.dims(), dx.into_data())?
            }
            (LayerSpec::Input, _) => unreachable!("input layer has index 0"),
            _ => return Err(Error::Shape(format!("layer {i}: missing parameters"))),
        };
    }
    Ok((grads, cur))
}

/// Loss and parameter gradients for one labeled example.
pub fn example_gradients(net: &Checkpoint, x: &Tensor, label: usize) -> Result<(f64, ParamSet)> {
    let pass = forward(net, x)?;
    let (loss, loss_grad) = layers::softmax_cross_entropy(pass.logits(), label)?;
    let (grads, _) = backward(net, &pass, &loss_grad)?;
    Ok((loss, grads))
}

/// Gradient of the cross-entropy loss for `target_label` w.r.t. the input.
pub fn input_gradient(net: &Checkpoint, x: &Tensor, target_label: usize) -> Result<Tensor> {
    let pass = forward(net, x)?;
    let (_, loss_grad) = layers::softmax_cross_entropy(pass.logits(), target_label)?;
    let (_, dx) = backward(net, &pass, &loss_grad)?;
    Ok(dx)
}

// ---------------------------------------------------------------------------
// Persistence: TNSC container + JSON header
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointMeta {
    arch: String,
    input_shape: (usize, usize, usize),
    n_classes: usize,
    rng_seed: u64,
    epoch: usize,
    config_hash: String,
    param_names: Vec<String>,
    optimizer_state: Vec<String>,
}

/// Write `<stem>.tnsc` (parameters, plus momentum as `momentum.*` entries)
/// and `<stem>.json` (everything needed to rebuild the architecture).
pub fn save_checkpoint(ckpt: &Checkpoint, stem: &Path, momentum: Option<&ParamSet>) -> Result<()> {
    let mut entries: Vec<crate::tnsr::NamedTensor> = Vec::new();
    for (name, t) in ckpt.params.named() {
        entries.push((name, t.dims().to_vec(), t.data().to_vec()));
    }
    let mut optimizer_state = Vec::new();
    if let Some(vel) = momentum {
        for (name, t) in vel.named() {
            let name = format!("momentum.{name}");
            optimizer_state.push(name.clone());
            entries.push((name, t.dims().to_vec(), t.data().to_vec()));
        }
    }
    let meta = CheckpointMeta {
        arch: ckpt.spec.arch.clone(),
        input_shape: ckpt.spec.input_shape,
        n_classes: ckpt.n_classes(),
        rng_seed: ckpt.rng_seed,
        epoch: ckpt.epoch,
        config_hash: ckpt.config_hash.clone(),
        param_names: ckpt.params.named().into_iter().map(|(n, _)| n).collect(),
        optimizer_state,
    };
    crate::tnsr::write_tnsc(&stem.with_extension("tnsc"), &entries)?;
    std::fs::write(
        stem.with_extension("json"),
        serde_json::to_string_pretty(&meta).expect("serializable"),
    )?;
    Ok(())
}

/// Load a checkpoint saved by [`save_checkpoint`], validating every
/// parameter shape against shape inference.
pub fn load_checkpoint(stem: &Path) -> Result<Checkpoint> {
    let meta_text = std::fs::read_to_string(stem.with_extension("json"))?;
    let meta: CheckpointMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Data(format!("checkpoint header: {e}")))?;
    let spec = parse_architecture(&meta.arch, meta.input_shape, meta.n_classes)?;
    let expected = param_shapes(&spec)?;

    let raw = crate::tnsr::read_tnsc(&stem.with_extension("tnsc"))?;
    let lookup: std::collections::HashMap<String, (Vec<usize>, Vec<f64>)> =
        raw.into_iter().map(|(n, d, v)| (n, (d, v))).collect();

    let mut entries = Vec::with_capacity(spec.layers.len());
    for (i, shape) in expected.iter().enumerate() {
        match shape {
            None => entries.push(ParamEntry::None),
            Some((w_dims, b_dims)) => {
                let weight = fetch(&lookup, &format!("layer{i}.weight"), w_dims)?;
                let bias = fetch(&lookup, &format!("layer{i}.bias"), b_dims)?;
                entries.push(ParamEntry::WeightBias { weight, bias });
            }
        }
    }
    Ok(Checkpoint {
        spec,
        params: ParamSet { entries },
        rng_seed: meta.rng_seed,
        epoch: meta.epoch,
        config_hash: meta.config_hash,
    })
}

fn fetch(
    lookup: &std::collections::HashMap<String, (Vec<usize>, Vec<f64>)>,
    name: &str,
    dims: &[usize],
) -> Result<Tensor> {
    let (got_dims, data) = lookup
        .get(name)
        .ok_or_else(|| Error::Data(format!("checkpoint missing tensor `{name}`")))?;
    if got_dims != dims {
        return Err(Error::Shape(format!(
            "checkpoint tensor `{name}` has dims {got_dims:?}, expected {dims:?}"
        )));
    }
    Tensor::from_vec(dims, data.clone())
}
