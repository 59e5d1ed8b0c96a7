//! Parameters and forward pass of the embed → convolution stack → readout
//! network, optionally with a shared GRU after every convolution.

use rand::Rng as _;

use super::config::{Activation, LayerKind, NetworkConfig, Readout};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{Graph, Signal};
use crate::matrix::Matrix;
use crate::rng::{self, Rng};

/// Fully connected map `x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Option<Matrix>,
}

/// Weights `Θ₀..Θ_K` of one convolution layer, each `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub kind: LayerKind,
    pub weights: Vec<Matrix>,
}

/// Shared GRU cell. `w_*` act on the new input, `u_*` on the hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_z: Matrix,
    pub u_z: Matrix,
    pub b_z: Matrix,
    pub w_r: Matrix,
    pub u_r: Matrix,
    pub b_r: Matrix,
    pub w_h: Matrix,
    pub u_h: Matrix,
    pub b_h: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub embed: Vec<Dense>,
    pub layers: Vec<LayerParams>,
    pub gru: Option<GruParams>,
    pub readout: Vec<Dense>,
}

fn uniform_matrix(rows: usize, cols: usize, bound: f64, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// Weight uniform in `±1/sqrt(fan_in)`.
fn init_weight(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Matrix {
    uniform_matrix(fan_in, fan_out, 1.0 / (fan_in as f64).sqrt(), rng)
}

fn init_mlp(widths: &[usize], bias: bool, rng: &mut Rng) -> Vec<Dense> {
    widths
        .windows(2)
        .map(|w| Dense {
            weight: init_weight(w[0], w[1], rng),
            bias: bias.then(|| uniform_matrix(1, w[1], 1.0 / (w[0] as f64).sqrt(), rng)),
        })
        .collect()
}

impl LayerParams {
    pub fn init(kind: LayerKind, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        Self {
            kind,
            weights: (0..kind.num_weights())
                .map(|_| init_weight(fan_in, fan_out, rng))
                .collect(),
        }
    }

    pub fn num_weights(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum()
    }
}

impl GruParams {
    pub fn init(width: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (width as f64).sqrt();
        let mut m = || uniform_matrix(width, width, bound, rng);
        let (w_z, u_z, w_r, u_r, w_h, u_h) = (m(), m(), m(), m(), m(), m());
        let mut b = || uniform_matrix(1, width, bound, rng);
        let (b_z, b_r, b_h) = (b(), b(), b());
        Self {
            w_z,
            u_z,
            b_z,
            w_r,
            u_r,
            b_r,
            w_h,
            u_h,
            b_h,
        }
    }

    fn tensors(&self) -> [&Matrix; 9] {
        [
            &self.w_z, &self.u_z, &self.b_z, &self.w_r, &self.u_r, &self.b_r, &self.w_h, &self.u_h,
            &self.b_h,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 9] {
        [
            &mut self.w_z,
            &mut self.u_z,
            &mut self.b_z,
            &mut self.w_r,
            &mut self.u_r,
            &mut self.b_r,
            &mut self.w_h,
            &mut self.u_h,
            &mut self.b_h,
        ]
    }
}

impl NetworkParams {
    /// Seeded initialization from `config.seed`.
    pub fn init(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::seeded(config.seed);
        let h = config.hidden;

        let mut embed_widths = vec![config.in_channels];
        embed_widths.extend(&config.embed_hidden);
        embed_widths.push(h);
        let embed = init_mlp(&embed_widths, config.bias, &mut rng);

        let layers = (0..config.depth)
            .map(|_| LayerParams::init(config.layer, h, h, &mut rng))
            .collect();
        let gru = config.use_gru.then(|| GruParams::init(h, &mut rng));

        let mut readout_widths = vec![h];
        readout_widths.extend(&config.readout_hidden);
        readout_widths.push(config.out_channels);
        let readout = init_mlp(&readout_widths, config.bias, &mut rng);

        Ok(Self {
            embed,
            layers,
            gru,
            readout,
        })
    }

    /// Every tensor in a fixed order: embed, layers, GRU, readout.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for d in &self.embed {
            out.push(&d.weight);
            out.extend(d.bias.as_ref());
        }
        for l in &self.layers {
            out.extend(l.weights.iter());
        }
        if let Some(g) = &self.gru {
            out.extend(g.tensors());
        }
        for d in &self.readout {
            out.push(&d.weight);
            out.extend(d.bias.as_ref());
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for d in &mut self.embed {
            out.push(&mut d.weight);
            out.extend(d.bias.as_mut());
        }
        for l in &mut self.layers {
            out.extend(l.weights.iter_mut());
        }
        if let Some(g) = &mut self.gru {
            out.extend(g.tensors_mut());
        }
        for d in &mut self.readout {
            out.push(&mut d.weight);
            out.extend(d.bias.as_mut());
        }
        out
    }

    /// Total number of scalar parameters.
    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|m| m.rows() * m.cols()).sum()
    }

    /// Replaces all tensors, checking shapes against the current layout.
    pub fn load_tensors(&mut self, tensors: Vec<Matrix>) -> Result<()> {
        let mut slots = self.tensors_mut();
        if slots.len() != tensors.len() {
            return Err(Error::Format(format!(
                "expected {} tensors, found {}",
                slots.len(),
                tensors.len()
            )));
        }
        for (i, (slot, t)) in slots.iter_mut().zip(tensors).enumerate() {
            if slot.shape() != t.shape() {
                return Err(Error::Format(format!(
                    "tensor {i}: expected {:?}, found {:?}",
                    slot.shape(),
                    t.shape()
                )));
            }
            **slot = t;
        }
        Ok(())
    }

    fn check_layout(&self, config: &NetworkConfig) -> Result<()> {
        let ok = self.layers.len() == config.depth
            && self.layers.iter().all(|l| {
                l.kind == config.layer
                    && l.weights.len() == config.layer.num_weights()
                    && l.weights.iter().all(|w| w.shape() == (config.hidden, config.hidden))
            })
            && self.gru.is_some() == config.use_gru
            && self.embed.first().is_some_and(|d| d.weight.rows() == config.in_channels)
            && self.readout.last().is_some_and(|d| d.weight.cols() == config.out_channels);
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter("parameters do not match the network configuration".into()))
        }
    }
}

struct DenseVars {
    weight: Var,
    bias: Option<Var>,
}

struct GruVars {
    w_z: Var,
    u_z: Var,
    b_z: Var,
    w_r: Var,
    u_r: Var,
    b_r: Var,
    w_h: Var,
    u_h: Var,
    b_h: Var,
}

/// Parameters registered on a tape, mirroring [`NetworkParams`].
pub struct BoundParams {
    embed: Vec<DenseVars>,
    layers: Vec<Vec<Var>>,
    gru: Option<GruVars>,
    readout: Vec<DenseVars>,
}

impl NetworkParams {
    /// Registers every tensor on `tape`, as trainable leaves or as constants.
    pub fn bind(&self, tape: &mut Tape<'_>, trainable: bool) -> BoundParams {
        let mut leaf = |m: &Matrix| {
            if trainable {
                tape.param(m.clone())
            } else {
                tape.constant(m.clone())
            }
        };
        let dense = |ds: &[Dense], leaf: &mut dyn FnMut(&Matrix) -> Var| -> Vec<DenseVars> {
            ds.iter()
                .map(|d| DenseVars {
                    weight: leaf(&d.weight),
                    bias: d.bias.as_ref().map(&mut *leaf),
                })
                .collect()
        };
        let embed = dense(&self.embed, &mut leaf);
        let layers = self
            .layers
            .iter()
            .map(|l| l.weights.iter().map(&mut leaf).collect())
            .collect();
        let gru = self.gru.as_ref().map(|g| GruVars {
            w_z: leaf(&g.w_z),
            u_z: leaf(&g.u_z),
            b_z: leaf(&g.b_z),
            w_r: leaf(&g.w_r),
            u_r: leaf(&g.u_r),
            b_r: leaf(&g.b_r),
            w_h: leaf(&g.w_h),
            u_h: leaf(&g.u_h),
            b_h: leaf(&g.b_h),
        });
        let readout = dense(&self.readout, &mut leaf);
        BoundParams {
            embed,
            layers,
            gru,
            readout,
        }
    }
}

/// Activations recorded during a forward pass.
pub struct Trace {
    pub input: Var,
    pub embedded: Var,
    pub layers: Vec<Var>,
    pub output: Var,
}

fn activate(tape: &mut Tape<'_>, act: Activation, x: Var) -> Var {
    match act {
        Activation::Identity => x,
        Activation::Relu => tape.relu(x),
    }
}

/// Adds a `1 x C` bias row to every row of `x` as `x + 1 b`.
fn add_bias(tape: &mut Tape<'_>, x: Var, bias: Var) -> Result<Var> {
    let ones = tape.constant(Matrix::filled(x.rows(), 1, 1.0));
    let rows = tape.matmul(ones, bias)?;
    tape.add(x, rows)
}

fn dense_forward(tape: &mut Tape<'_>, d: &DenseVars, x: Var) -> Result<Var> {
    let y = tape.matmul(x, d.weight)?;
    match d.bias {
        Some(b) => add_bias(tape, y, b),
        None => Ok(y),
    }
}

/// Dense layers with the activation between (not after) them.
fn mlp_forward(tape: &mut Tape<'_>, layers: &[DenseVars], act: Activation, mut x: Var) -> Result<Var> {
    for (i, d) in layers.iter().enumerate() {
        x = dense_forward(tape, d, x)?;
        if i + 1 < layers.len() {
            x = activate(tape, act, x);
        }
    }
    Ok(x)
}

/// K-order convolution by repeated aggregation: `Σ_t (A^t x) Θ_t`, or
/// `(A x + x) Θ` for the vanilla kernel.
pub fn layer_forward<'g>(
    tape: &mut Tape<'g>,
    kind: LayerKind,
    weights: &[Var],
    graph: &'g Graph,
    x: Var,
) -> Result<Var> {
    if weights.len() != kind.num_weights() {
        return Err(Error::Parameter(format!(
            "{kind} layer needs {} weights, got {}",
            kind.num_weights(),
            weights.len()
        )));
    }
    if let LayerKind::Vanilla = kind {
        let ax = tape.aggregate(graph, x)?;
        let sum = tape.add(ax, x)?;
        return tape.matmul(sum, weights[0]);
    }
    let mut y = tape.matmul(x, weights[0])?;
    let mut hop = x;
    for &w in &weights[1..] {
        hop = tape.aggregate(graph, hop)?;
        let term = tape.matmul(hop, w)?;
        y = tape.add(y, term)?;
    }
    Ok(y)
}

/// `h' = (1 - z) ⊙ n + z ⊙ h` with
/// `z = σ(x W_z + h U_z + b_z)`, `r = σ(x W_r + h U_r + b_r)`,
/// `n = tanh(x W_h + (r ⊙ h) U_h + b_h)`.
fn gru_forward(tape: &mut Tape<'_>, g: &GruVars, x: Var, h: Var) -> Result<Var> {
    let gate = |tape: &mut Tape<'_>, w: Var, u: Var, b: Var, hidden: Var| -> Result<Var> {
        let xw = tape.matmul(x, w)?;
        let hu = tape.matmul(hidden, u)?;
        let s = tape.add(xw, hu)?;
        add_bias(tape, s, b)
    };
    let z_pre = gate(tape, g.w_z, g.u_z, g.b_z, h)?;
    let z = tape.sigmoid(z_pre);
    let r_pre = gate(tape, g.w_r, g.u_r, g.b_r, h)?;
    let r = tape.sigmoid(r_pre);
    let rh = tape.hadamard(r, h)?;
    let n_pre = gate(tape, g.w_h, g.u_h, g.b_h, rh)?;
    let n = tape.tanh(n_pre);
    let keep = tape.one_minus(z);
    let fresh = tape.hadamard(keep, n)?;
    let carried = tape.hadamard(z, h)?;
    tape.add(fresh, carried)
}

/// Full forward pass on one graph.
///
/// Embed, then `depth` convolutions each followed by the activation (or,
/// with the GRU enabled, `GRU(ReLU(conv), previous)`), then the readout.
pub fn network_forward<'g>(
    tape: &mut Tape<'g>,
    config: &NetworkConfig,
    params: &BoundParams,
    graph: &'g Graph,
    x: &Signal,
) -> Result<Trace> {
    if x.cols() != config.in_channels || x.rows() != graph.num_nodes() {
        return Err(Error::shape(
            "network_forward",
            format!("{}x{}", graph.num_nodes(), config.in_channels),
            format!("{}x{}", x.rows(), x.cols()),
        ));
    }
    let input = tape.constant(x.clone());
    let embedded = mlp_forward(tape, &params.embed, config.activation, input)?;

    let mut h = embedded;
    let mut layers = Vec::with_capacity(params.layers.len());
    for weights in &params.layers {
        let conv = layer_forward(tape, config.layer, weights, graph, h)?;
        h = match &params.gru {
            Some(g) => {
                let fresh = tape.relu(conv);
                gru_forward(tape, g, fresh, h)?
            }
            None => activate(tape, config.activation, conv),
        };
        layers.push(h);
    }

    let pooled = match config.readout {
        Readout::NodeMlp => h,
        Readout::GraphSum => tape.sum_rows(h),
    };
    let output = mlp_forward(tape, &params.readout, config.activation, pooled)?;
    Ok(Trace {
        input,
        embedded,
        layers,
        output,
    })
}

/// Forward pass outside of training; returns the output signal.
pub fn predict(config: &NetworkConfig, params: &NetworkParams, graph: &Graph, x: &Signal) -> Result<Signal> {
    params.check_layout(config)?;
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, false);
    let trace = network_forward(&mut tape, config, &bound, graph, x)?;
    Ok(tape.value(trace.output).clone())
}

/// Input, embedding, every layer output and the final output, in order.
pub fn activations(
    config: &NetworkConfig,
    params: &NetworkParams,
    graph: &Graph,
    x: &Signal,
) -> Result<Vec<(String, Signal)>> {
    params.check_layout(config)?;
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, false);
    let trace = network_forward(&mut tape, config, &bound, graph, x)?;
    let mut out = vec![
        ("input".to_string(), tape.value(trace.input).clone()),
        ("embed".to_string(), tape.value(trace.embedded).clone()),
    ];
    for (i, v) in trace.layers.iter().enumerate() {
        out.push((format!("layer_{}", i + 1), tape.value(*v).clone()));
    }
    out.push(("output".to_string(), tape.value(trace.output).clone()));
    Ok(out)
}

/// Loss and per-tensor gradients for one sample under mean absolute error.
pub fn loss_and_grads(
    config: &NetworkConfig,
    params: &NetworkParams,
    graph: &Graph,
    x: &Signal,
    y: &Signal,
) -> Result<(f64, Vec<Matrix>)> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, true);
    let trace = network_forward(&mut tape, config, &bound, graph, x)?;
    let target = tape.constant(y.clone());
    let loss = tape.mae_loss(trace.output, target)?;
    let value = tape.value(loss)[(0, 0)];
    let grads = tape.backward(loss)?.into_param_grads(&tape);
    Ok((value, grads))
}

/// Largest entrywise disagreement between backpropagated and central
/// finite-difference gradients of the MAE loss, relative to
/// `max(|analytic|, |numeric|, 1e-3)`.
pub fn gradient_check(
    config: &NetworkConfig,
    params: &NetworkParams,
    graph: &Graph,
    x: &Signal,
    y: &Signal,
    h: f64,
) -> Result<f64> {
    let (_, analytic) = loss_and_grads(config, params, graph, x, y)?;
    let loss_at = |p: &NetworkParams| -> Result<f64> {
        let pred = predict(config, p, graph, x)?;
        super::train::mae(&pred, y)
    };
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (t, grad) in analytic.iter().enumerate() {
        for i in 0..grad.as_slice().len() {
            let orig = probe.tensors()[t].as_slice()[i];
            probe.tensors_mut()[t].as_mut_slice()[i] = orig + h;
            let up = loss_at(&probe)?;
            probe.tensors_mut()[t].as_mut_slice()[i] = orig - h;
            let down = loss_at(&probe)?;
            probe.tensors_mut()[t].as_mut_slice()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = grad.as_slice()[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
        }
    }
    Ok(worst)
}
