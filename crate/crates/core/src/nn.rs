//! MLP models, parameter flattening, the Adam optimizer, and learning-rate
//! schedules.
//!
//! All trainable parameters of a model flatten into a single [`ParamVector`]
//! of length `k` with a stable layout, which is what the weight-selection
//! machinery operates on. Checkpoints are a small versioned text format:
//! architecture header plus one hex-encoded `f64` per line, so round trips
//! are bit-exact.

use crate::autodiff::{Array, AutodiffError, Bindings, Graph, GradientMap, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("a model needs at least one layer")]
    EmptyLayers,

    #[error("layer sizes must be positive, got {0}")]
    NonPositiveSize(usize),

    #[error("{count} activations supplied for {layers} layers")]
    ActivationCount { count: usize, layers: usize },

    #[error("parameter vector length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite gradient entry at index {0}")]
    NonFiniteGradient(usize),

    #[error("negative learning rate {0}")]
    NegativeRate(f64),

    #[error("schedule step {t} exceeds total steps {total}")]
    ScheduleRange { t: u64, total: u64 },

    #[error("linear decay needs total_steps >= 1")]
    EmptySchedule,

    #[error("graph error: {0}")]
    Graph(#[from] AutodiffError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

/// Per-layer activation tag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    /// `x` for positive inputs, `slope * x` otherwise.
    LeakyRelu(f64),
    Tanh,
    /// No nonlinearity; used for logit and generator output layers.
    Linear,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::LeakyRelu(s) => write!(f, "leaky_relu:{s}"),
            Activation::Tanh => write!(f, "tanh"),
            Activation::Linear => write!(f, "linear"),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, NnError> {
        if s == "tanh" {
            Ok(Activation::Tanh)
        } else if s == "linear" {
            Ok(Activation::Linear)
        } else if let Some(slope) = s.strip_prefix("leaky_relu:") {
            slope
                .parse::<f64>()
                .map(Activation::LeakyRelu)
                .map_err(|e| NnError::Checkpoint(format!("bad slope {slope:?}: {e}")))
        } else {
            Err(NnError::Checkpoint(format!("unknown activation {s:?}")))
        }
    }
}

// ---------------------------------------------------------------------------
// ParamVector
// ---------------------------------------------------------------------------

/// Flattened concatenation of all trainable parameters of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Slice descriptor mapping one flattened segment back to a layer tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutEntry {
    pub offset: usize,
    pub len: usize,
    pub shape: Vec<usize>,
}

/// Stable description of how a model flattens: per-layer weight then bias,
/// layers in order, weights row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpLayout {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub seed: u64,
    pub entries: Vec<LayoutEntry>,
}

impl MlpLayout {
    pub fn param_count(&self) -> usize {
        self.entries.iter().map(|e| e.len).sum()
    }
}

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Layer {
    weight: Array, // [out, in]
    bias: Array,   // [out]
    activation: Activation,
}

/// Fully connected network over 2-D batches `[n, in] -> [n, out]`.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<Layer>,
    sizes: Vec<usize>,
    seed: u64,
}

/// Node handles returned when an [`Mlp`] is recorded into a [`Graph`]:
/// the output node, the parameter leaves in flatten order, and each layer's
/// pre-activation node (useful for probing how close a state sits to an
/// activation kink).
#[derive(Clone, Debug)]
pub struct MlpGraphHandles {
    pub output: NodeId,
    pub params: Vec<NodeId>,
    pub preactivations: Vec<NodeId>,
}

impl Mlp {
    /// Seeded initialization: weights uniform in
    /// `[-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out))]`,
    /// biases zero. Draws come from one `ChaCha8` stream in layer order,
    /// row-major within a layer, so a seed pins every bit of the model.
    pub fn init(sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::EmptyLayers);
        }
        if let Some(&bad) = sizes.iter().find(|&&s| s == 0) {
            return Err(NnError::NonPositiveSize(bad));
        }
        let n_layers = sizes.len() - 1;
        if activations.len() != n_layers {
            return Err(NnError::ActivationCount {
                count: activations.len(),
                layers: n_layers,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| bound * (2.0 * rng.gen::<f64>() - 1.0))
                .collect();
            layers.push(Layer {
                weight: Array::matrix(fan_out, fan_in, data).expect("sized above"),
                bias: Array::zeros(&[fan_out]),
                activation: activations[l],
            });
        }
        Ok(Mlp {
            layers,
            sizes: sizes.to_vec(),
            seed,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn layout(&self) -> MlpLayout {
        let mut entries = Vec::new();
        let mut offset = 0;
        for layer in &self.layers {
            for tensor in [&layer.weight, &layer.bias] {
                entries.push(LayoutEntry {
                    offset,
                    len: tensor.len(),
                    shape: tensor.shape().to_vec(),
                });
                offset += tensor.len();
            }
        }
        MlpLayout {
            sizes: self.sizes.clone(),
            activations: self.activations(),
            seed: self.seed,
            entries,
        }
    }

    /// Concatenates all parameters: per layer weight (row-major) then bias.
    pub fn flatten(&self) -> ParamVector {
        let mut data = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            data.extend_from_slice(layer.weight.data());
            data.extend_from_slice(layer.bias.data());
        }
        ParamVector(data)
    }

    /// Rebuilds a model from a layout and a flat vector.
    pub fn from_flat(layout: &MlpLayout, v: &ParamVector) -> Result<Self, NnError> {
        let mut model = Mlp::init(&layout.sizes, &layout.activations, layout.seed)?;
        model.set_from_flat(v)?;
        Ok(model)
    }

    /// Overwrites all parameters from a flat vector in layout order.
    pub fn set_from_flat(&mut self, v: &ParamVector) -> Result<(), NnError> {
        let expected = self.param_count();
        if v.len() != expected {
            return Err(NnError::LengthMismatch {
                expected,
                got: v.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for tensor in [&mut layer.weight, &mut layer.bias] {
                let len = tensor.len();
                tensor
                    .data_mut()
                    .copy_from_slice(&v.0[offset..offset + len]);
                offset += len;
            }
        }
        Ok(())
    }

    /// Records this model's forward computation onto `graph`, reading the
    /// batch from `input` (`[n, in]`). With `trainable` the parameters become
    /// gradient-carrying leaves; otherwise they are plain inputs, which is
    /// how a frozen discriminator participates in a generator update.
    pub fn build_graph(
        &self,
        graph: &mut Graph,
        input: NodeId,
        trainable: bool,
    ) -> Result<MlpGraphHandles, NnError> {
        let mut params = Vec::with_capacity(self.layers.len() * 2);
        let mut preactivations = Vec::with_capacity(self.layers.len());
        let mut h = input;
        for layer in &self.layers {
            let w = if trainable {
                graph.param(layer.weight.shape())
            } else {
                graph.input(layer.weight.shape())
            };
            let b = if trainable {
                graph.param(layer.bias.shape())
            } else {
                graph.input(layer.bias.shape())
            };
            let mm = graph.matmul(h, w, true)?;
            let z = graph.add_bias(mm, b)?;
            preactivations.push(z);
            h = match layer.activation {
                Activation::LeakyRelu(slope) => graph.leaky_relu(z, slope),
                Activation::Tanh => graph.tanh(z),
                Activation::Linear => z,
            };
            params.push(w);
            params.push(b);
        }
        Ok(MlpGraphHandles {
            output: h,
            params,
            preactivations,
        })
    }

    /// Binds this model's current parameter values to the leaves produced by
    /// [`Mlp::build_graph`].
    pub fn bind_params(&self, bindings: &mut Bindings, handles: &MlpGraphHandles) {
        let mut it = handles.params.iter();
        for layer in &self.layers {
            bindings.set(*it.next().expect("handle arity"), layer.weight.clone());
            bindings.set(*it.next().expect("handle arity"), layer.bias.clone());
        }
    }

    /// Plain forward evaluation of a batch. Goes through the same graph
    /// kernels as training so the arithmetic is identical.
    pub fn apply(&self, x: &Array) -> Result<Array, NnError> {
        let mut graph = Graph::new();
        let input = graph.input(x.shape());
        let handles = self.build_graph(&mut graph, input, false)?;
        let mut bindings = Bindings::new();
        bindings.set(input, x.clone());
        self.bind_params(&mut bindings, &handles);
        let eval = graph.forward(&bindings)?;
        Ok(eval.value(handles.output).clone())
    }

    // -- checkpoint io ------------------------------------------------------

    /// Writes the versioned text checkpoint: header lines followed by one
    /// hex-encoded `f64` per parameter in flatten order.
    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "awgan-mlp v1")?;
        writeln!(
            w,
            "sizes: {}",
            self.sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        )?;
        writeln!(
            w,
            "activations: {}",
            self.activations()
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        )?;
        writeln!(w, "seed: {}", self.seed)?;
        let flat = self.flatten();
        writeln!(w, "params: {}", flat.len())?;
        for v in flat.as_slice() {
            writeln!(w, "{:016x}", v.to_bits())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let mut next = || -> Result<String, NnError> {
            lines
                .next()
                .ok_or_else(|| NnError::Checkpoint("truncated file".into()))?
                .map_err(NnError::Io)
        };
        let magic = next()?;
        if magic != "awgan-mlp v1" {
            return Err(NnError::Checkpoint(format!("bad magic {magic:?}")));
        }
        let sizes_line = next()?;
        let sizes: Vec<usize> = sizes_line
            .strip_prefix("sizes: ")
            .ok_or_else(|| NnError::Checkpoint("missing sizes".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| NnError::Checkpoint(format!("{e}"))))
            .collect::<Result<_, _>>()?;
        let act_line = next()?;
        let activations: Vec<Activation> = act_line
            .strip_prefix("activations: ")
            .ok_or_else(|| NnError::Checkpoint("missing activations".into()))?
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        let seed: u64 = next()?
            .strip_prefix("seed: ")
            .ok_or_else(|| NnError::Checkpoint("missing seed".into()))?
            .parse()
            .map_err(|e| NnError::Checkpoint(format!("{e}")))?;
        let count: usize = next()?
            .strip_prefix("params: ")
            .ok_or_else(|| NnError::Checkpoint("missing params".into()))?
            .parse()
            .map_err(|e| NnError::Checkpoint(format!("{e}")))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next()?;
            let bits = u64::from_str_radix(line.trim(), 16)
                .map_err(|e| NnError::Checkpoint(format!("bad value {line:?}: {e}")))?;
            data.push(f64::from_bits(bits));
        }
        let mut model = Mlp::init(&sizes, &activations, seed)?;
        model.set_from_flat(&ParamVector(data))?;
        Ok(model)
    }
}

/// Flattens a backward sweep's per-leaf gradients into layout order, using
/// the same parameter ordering as [`Mlp::flatten`].
pub fn flatten_gradient(map: &GradientMap, handles: &MlpGraphHandles) -> ParamVector {
    let mut data = Vec::new();
    for leaf in &handles.params {
        let g = map
            .get(*leaf)
            .expect("every parameter leaf has a gradient entry");
        data.extend_from_slice(g.data());
    }
    ParamVector(data)
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

/// Update direction for one optimizer step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

/// Bias-corrected Adam moments for one parameter vector.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One in-place Adam update of `params` along `grad`.
pub fn adam_step(
    params: &mut ParamVector,
    grad: &ParamVector,
    state: &mut AdamState,
    lr: f64,
    direction: Direction,
) -> Result<(), NnError> {
    if grad.len() != params.len() || state.m.len() != params.len() {
        return Err(NnError::LengthMismatch {
            expected: params.len(),
            got: grad.len(),
        });
    }
    if lr < 0.0 {
        return Err(NnError::NegativeRate(lr));
    }
    if let Some(i) = grad.0.iter().position(|v| !v.is_finite()) {
        return Err(NnError::NonFiniteGradient(i));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    let sign = match direction {
        Direction::Ascend => 1.0,
        Direction::Descend => -1.0,
    };
    for i in 0..params.len() {
        let g = grad.0[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params.0[i] += sign * lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// One plain gradient step, the `sgd` optimizer option.
pub fn sgd_step(
    params: &mut ParamVector,
    grad: &ParamVector,
    lr: f64,
    direction: Direction,
) -> Result<(), NnError> {
    if grad.len() != params.len() {
        return Err(NnError::LengthMismatch {
            expected: params.len(),
            got: grad.len(),
        });
    }
    if lr < 0.0 {
        return Err(NnError::NegativeRate(lr));
    }
    if let Some(i) = grad.0.iter().position(|v| !v.is_finite()) {
        return Err(NnError::NonFiniteGradient(i));
    }
    let sign = match direction {
        Direction::Ascend => 1.0,
        Direction::Descend => -1.0,
    };
    for (p, g) in params.0.iter_mut().zip(grad.0.iter()) {
        *p += sign * lr * g;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Learning-rate schedule
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrMode {
    Constant,
    LinearDecay,
}

/// `constant`: always the base rate. `linear-decay`: `base * (1 - t / total)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub base: f64,
    pub total_steps: u64,
    pub mode: LrMode,
}

impl LrSchedule {
    pub fn constant(base: f64) -> Self {
        LrSchedule {
            base,
            total_steps: u64::MAX,
            mode: LrMode::Constant,
        }
    }

    pub fn linear(base: f64, total_steps: u64) -> Result<Self, NnError> {
        if total_steps == 0 {
            return Err(NnError::EmptySchedule);
        }
        Ok(LrSchedule {
            base,
            total_steps,
            mode: LrMode::LinearDecay,
        })
    }

    pub fn rate_at(&self, t: u64) -> Result<f64, NnError> {
        if t > self.total_steps {
            return Err(NnError::ScheduleRange {
                t,
                total: self.total_steps,
            });
        }
        Ok(match self.mode {
            LrMode::Constant => self.base,
            LrMode::LinearDecay => self.base * (1.0 - t as f64 / self.total_steps as f64),
        })
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
