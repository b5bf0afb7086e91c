//! The trainable node classifier: spectral filter layers with a residual
//! connection, wrapped between an input MLP and a linear readout.
//!
//! The forward pipeline is
//!
//! ```text
//! X → dropout₁ → W_in → relu → dropout₂ → H
//!   → [ per filter layer:  σ( U diag(V_P θ) Uᵀ H W ) + H ]
//!   → dropout₁ → W_out → logits
//! ```
//!
//! Every forward pass records a tape (see [`crate::tape`]) so gradients,
//! Jacobian-vector products, and vector-Jacobian products all come from the
//! same recorded operations.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{identity_filter_coeffs, BasisKind, BasisMatrix, MAX_ORDER};
use crate::error::{CoreError, Result};
use crate::spectral::SpectralDecomposition;
use crate::tape::{NodeId, Tape};

/// Activation applied inside each filter layer. Both choices are
/// 1-Lipschitz; the default model keeps the filter layer linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterActivation {
    Identity,
    Relu,
}

impl FilterActivation {
    /// Lipschitz constant α of the activation.
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterActivation::Identity => "identity",
            FilterActivation::Relu => "relu",
        }
    }
}

impl fmt::Display for FilterActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterActivation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(FilterActivation::Identity),
            "relu" => Ok(FilterActivation::Relu),
            other => Err(format!("unknown activation '{other}' (expected identity|relu)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    /// Polynomial order K of every filter layer.
    pub order: usize,
    pub basis: BasisKind,
    /// Number of stacked spectral filter layers (≥ 1).
    pub filter_layers: usize,
    pub activation: FilterActivation,
    /// Dropout on the input features and after the filter block.
    pub dropout_input: f64,
    /// Dropout on the hidden features after the first relu.
    pub dropout_hidden: f64,
    /// Weight of the energy-weighted filter penalty.
    pub lambda_ew: f64,
    /// Clip logits to `[-b, b]` inside the training loss. Exists to honor
    /// the bounded-surrogate assumption of the gap bound; off by default.
    pub clip_logits: Option<f64>,
    /// Apply the energy penalty to the raw input spectrum instead of the
    /// filter input spectrum.
    pub ew_on_raw_features: bool,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, num_classes: usize, basis: BasisKind, order: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            num_classes,
            order,
            basis,
            filter_layers: 1,
            activation: FilterActivation::Identity,
            dropout_input: 0.0,
            dropout_hidden: 0.0,
            lambda_ew: 0.0,
            clip_logits: None,
            ew_on_raw_features: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.num_classes == 0 {
            return Err(CoreError::InvalidConfig("dimensions must be positive".into()));
        }
        if self.filter_layers == 0 {
            return Err(CoreError::InvalidConfig("filter_layers must be ≥ 1".into()));
        }
        if self.order > MAX_ORDER {
            return Err(CoreError::OrderTooLarge(self.order, MAX_ORDER));
        }
        for (name, p) in [("dropout_input", self.dropout_input), ("dropout_hidden", self.dropout_hidden)] {
            if !(0.0..1.0).contains(&p) {
                return Err(CoreError::InvalidConfig(format!("{name} must be in [0, 1), got {p}")));
            }
        }
        if self.lambda_ew < 0.0 || !self.lambda_ew.is_finite() {
            return Err(CoreError::InvalidConfig(format!(
                "lambda_ew must be ≥ 0, got {}",
                self.lambda_ew
            )));
        }
        Ok(())
    }
}

/// Adam moment estimates, aligned with [`ModelParams::tensors`].
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<Array2<f64>>,
    pub v: Vec<Array2<f64>>,
    pub step: u64,
}

/// All learnable tensors plus optimizer state.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub w_in: Array2<f64>,
    /// Filter coefficients θ per layer, stored (K+1)×1.
    pub thetas: Vec<Array2<f64>>,
    pub w_mid: Vec<Array2<f64>>,
    pub w_out: Array2<f64>,
    pub adam: AdamState,
}

impl ModelParams {
    /// Learnable tensors in a fixed order: w_in, θ per layer, W per layer,
    /// w_out. Gradients, optimizer state, and checkpoints share this order.
    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut v: Vec<&Array2<f64>> = Vec::with_capacity(2 + 2 * self.thetas.len());
        v.push(&self.w_in);
        v.extend(self.thetas.iter());
        v.extend(self.w_mid.iter());
        v.push(&self.w_out);
        v
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = vec!["w_in".to_string()];
        names.extend((0..self.thetas.len()).map(|l| format!("theta{l}")));
        names.extend((0..self.w_mid.len()).map(|l| format!("w_mid{l}")));
        names.push("w_out".to_string());
        names
    }

    pub fn num_tensors(&self) -> usize {
        2 + self.thetas.len() + self.w_mid.len()
    }

    /// θ of layer `l` as a flat vector.
    pub fn theta_vec(&self, l: usize) -> Array1<f64> {
        self.thetas[l].column(0).to_owned()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// Gradients shaped like the model parameters (same tensor order).
#[derive(Debug, Clone)]
pub struct Grads {
    pub tensors: Vec<Array2<f64>>,
}

/// Initialize parameters from the config seed.
///
/// Weights are uniform in ±1/√fan_in. Filter coefficients start at the
/// identity-propagation filter g(λ)=λ when the basis admits one at this
/// order, otherwise small uniform noise.
pub fn init_model(config: &ModelConfig) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut uniform = |rows: usize, cols: usize, bound: f64| {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
    };

    let w_in = uniform(config.input_dim, config.hidden_dim, 1.0 / (config.input_dim as f64).sqrt());
    let hidden_bound = 1.0 / (config.hidden_dim as f64).sqrt();
    let mut w_mid = Vec::with_capacity(config.filter_layers);
    for _ in 0..config.filter_layers {
        w_mid.push(uniform(config.hidden_dim, config.hidden_dim, hidden_bound));
    }
    let w_out = uniform(config.hidden_dim, config.num_classes, hidden_bound);

    let mut thetas = Vec::with_capacity(config.filter_layers);
    for _ in 0..config.filter_layers {
        let theta = match identity_filter_coeffs(config.basis, config.order) {
            Some(coeffs) => {
                Array2::from_shape_vec((config.order + 1, 1), coeffs).expect("coeff shape")
            }
            None => uniform(config.order + 1, 1, 0.1),
        };
        thetas.push(theta);
    }

    let shapes: Vec<(usize, usize)> = {
        let mut s = vec![w_in.dim()];
        s.extend(thetas.iter().map(|t| t.dim()));
        s.extend(w_mid.iter().map(|t| t.dim()));
        s.push(w_out.dim());
        s
    };
    let adam = AdamState {
        m: shapes.iter().map(|&d| Array2::zeros(d)).collect(),
        v: shapes.iter().map(|&d| Array2::zeros(d)).collect(),
        step: 0,
    };

    Ok(ModelParams {
        w_in,
        thetas,
        w_mid,
        w_out,
        adam,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A recorded forward pass through the full model.
pub struct ForwardPass {
    pub tape: Tape,
    pub logits: NodeId,
    /// The input to the first filter layer (hidden features).
    pub filter_input: NodeId,
    /// Frequency response nodes `V_P θ^(l)` per filter layer.
    pub responses: Vec<NodeId>,
    pub w_in_node: NodeId,
    pub theta_nodes: Vec<NodeId>,
    pub w_mid_nodes: Vec<NodeId>,
    pub w_out_node: NodeId,
}

fn check_shapes(
    params: &ModelParams,
    config: &ModelConfig,
    decomp: &SpectralDecomposition,
    vp: &BasisMatrix,
    x: &Array2<f64>,
) -> Result<()> {
    let n = decomp.num_nodes();
    if x.nrows() != n {
        return Err(CoreError::SignalRowMismatch { rows: x.nrows(), n });
    }
    if vp.num_rows() != n {
        return Err(CoreError::SignalRowMismatch {
            rows: vp.num_rows(),
            n,
        });
    }
    if vp.order() != config.order || vp.kind() != config.basis {
        return Err(CoreError::InvalidConfig(format!(
            "basis matrix is {} order {}, config wants {} order {}",
            vp.kind(),
            vp.order(),
            config.basis,
            config.order
        )));
    }
    if x.ncols() != config.input_dim {
        return Err(CoreError::ShapeMismatch {
            context: "features",
            lhs: x.dim(),
            rhs: (n, config.input_dim),
        });
    }
    if params.w_in.dim() != (config.input_dim, config.hidden_dim)
        || params.w_out.dim() != (config.hidden_dim, config.num_classes)
        || params.thetas.len() != config.filter_layers
        || params.w_mid.len() != config.filter_layers
        || params.thetas.iter().any(|t| t.dim() != (config.order + 1, 1))
        || params.w_mid.iter().any(|w| w.dim() != (config.hidden_dim, config.hidden_dim))
    {
        return Err(CoreError::InvalidConfig("parameter shapes do not match the config".into()));
    }
    Ok(())
}

/// Run the model forward, recording the tape.
///
/// In `Eval` mode dropout is the identity and `rng` is untouched; in
/// `Train` mode dropout masks are drawn from `rng` (inverted dropout, so
/// eval needs no rescaling).
pub fn forward<R: Rng>(
    params: &ModelParams,
    config: &ModelConfig,
    decomp: &SpectralDecomposition,
    vp: &BasisMatrix,
    x: &Array2<f64>,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardPass> {
    check_shapes(params, config, decomp, vp, x)?;
    let train = mode == Mode::Train;

    let mut tape = Tape::new();
    let x_node = tape.constant(x.clone());
    let x_in = if train {
        tape.dropout(x_node, config.dropout_input, rng)
    } else {
        x_node
    };
    let w_in_node = tape.param(params.w_in.clone());
    let pre = tape.matmul(x_in, w_in_node)?;
    let activated = tape.relu(pre);
    let filter_input = if train {
        tape.dropout(activated, config.dropout_hidden, rng)
    } else {
        activated
    };

    let u = tape.constant(decomp.eigenvectors().clone());
    let ut = tape.constant(decomp.eigenvectors().t().to_owned());
    let vp_node = tape.constant(vp.values().clone());

    let mut theta_nodes = Vec::with_capacity(config.filter_layers);
    let mut w_mid_nodes = Vec::with_capacity(config.filter_layers);
    let mut responses = Vec::with_capacity(config.filter_layers);
    let mut h = filter_input;
    for layer in 0..config.filter_layers {
        let theta = tape.param(params.thetas[layer].clone());
        let response = tape.matmul(vp_node, theta)?;
        let h_hat = tape.matmul(ut, h)?;
        let scaled = tape.row_scale(h_hat, response)?;
        let back = tape.matmul(u, scaled)?;
        let w_mid = tape.param(params.w_mid[layer].clone());
        let filtered = tape.matmul(back, w_mid)?;
        let post = match config.activation {
            FilterActivation::Identity => filtered,
            FilterActivation::Relu => tape.relu(filtered),
        };
        h = tape.add(post, h)?;
        if !tape.value(h).iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite { layer });
        }
        theta_nodes.push(theta);
        w_mid_nodes.push(w_mid);
        responses.push(response);
    }

    let h_out = if train {
        tape.dropout(h, config.dropout_input, rng)
    } else {
        h
    };
    let w_out_node = tape.param(params.w_out.clone());
    let logits = tape.matmul(h_out, w_out_node)?;
    if !tape.value(logits).iter().all(|v| v.is_finite()) {
        return Err(CoreError::NonFinite {
            layer: config.filter_layers,
        });
    }

    Ok(ForwardPass {
        tape,
        logits,
        filter_input,
        responses,
        w_in_node,
        theta_nodes,
        w_mid_nodes,
        w_out_node,
    })
}

/// Components of the training loss.
#[derive(Debug, Clone, Copy)]
pub struct LossParts {
    pub total: f64,
    pub cross_entropy: f64,
    /// Value of the energy penalty (0 when `lambda_ew` is 0).
    pub energy_ratio: f64,
}

/// Training loss and parameter gradients on a node subset.
///
/// Loss is the mean softmax cross-entropy over `mask` plus
/// `lambda_ew · R` where `R = ‖diag(V_P θ⁰) Ĥ‖_F² / ‖Ĥ‖_F²` and `Ĥ` is the
/// spectrum of the first filter layer's input, treated as a constant so the
/// penalty only steers the filter coefficients. A zero-energy input defines
/// `R = 0`.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_grads<R: Rng>(
    params: &ModelParams,
    config: &ModelConfig,
    decomp: &SpectralDecomposition,
    vp: &BasisMatrix,
    x: &Array2<f64>,
    labels: &[usize],
    mask: &[usize],
    rng: &mut R,
) -> Result<(LossParts, Grads)> {
    let mut pass = forward(params, config, decomp, vp, x, Mode::Train, rng)?;
    let ce = pass
        .tape
        .softmax_cross_entropy(pass.logits, labels, mask, config.clip_logits)?;

    let mut energy_ratio = 0.0;
    let loss_node = if config.lambda_ew > 0.0 {
        let penalty_input = if config.ew_on_raw_features {
            decomp.gft_forward(x)?
        } else {
            decomp.gft_forward(pass.tape.value(pass.filter_input))?
        };
        let denom: f64 = penalty_input.iter().map(|v| v * v).sum();
        if denom > 0.0 {
            let spectrum = pass.tape.constant(penalty_input);
            let filtered = pass.tape.row_scale(spectrum, pass.responses[0])?;
            let ratio = pass.tape.squared_frobenius_ratio(filtered, denom);
            energy_ratio = pass.tape.scalar(ratio);
            pass.tape.add_scaled(ce, ratio, config.lambda_ew)?
        } else {
            ce
        }
    } else {
        ce
    };

    let grads_by_node = pass
        .tape
        .backward(loss_node, Array2::from_elem((1, 1), 1.0));
    let mut param_nodes = vec![pass.w_in_node];
    param_nodes.extend(&pass.theta_nodes);
    param_nodes.extend(&pass.w_mid_nodes);
    param_nodes.push(pass.w_out_node);

    let tensors = param_nodes
        .iter()
        .map(|&id| {
            grads_by_node[id]
                .clone()
                .unwrap_or_else(|| Array2::zeros(pass.tape.value(id).dim()))
        })
        .collect();

    Ok((
        LossParts {
            total: pass.tape.scalar(loss_node),
            cross_entropy: pass.tape.scalar(ce),
            energy_ratio,
        },
        Grads { tensors },
    ))
}

/// Eval-mode loss and accuracy on one or more node subsets, from a single
/// forward pass. Losses are plain (unclipped) cross-entropy.
pub fn evaluate(
    params: &ModelParams,
    config: &ModelConfig,
    decomp: &SpectralDecomposition,
    vp: &BasisMatrix,
    x: &Array2<f64>,
    labels: &[usize],
    masks: &[&[usize]],
) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut pass = forward(params, config, decomp, vp, x, Mode::Eval, &mut rng)?;
    let logits = pass.tape.value(pass.logits).clone();
    let mut out = Vec::with_capacity(masks.len());
    for &mask in masks {
        let loss_node = pass
            .tape
            .softmax_cross_entropy(pass.logits, labels, mask, None)?;
        let loss = pass.tape.scalar(loss_node);
        let correct = mask
            .iter()
            .filter(|&&r| argmax_row(&logits, r) == labels[r])
            .count();
        out.push((loss, correct as f64 / mask.len() as f64));
    }
    Ok(out)
}

fn argmax_row(m: &Array2<f64>, row: usize) -> usize {
    let r = m.row(row);
    let mut best = 0usize;
    let mut best_val = r[0];
    for (i, &v) in r.iter().enumerate().skip(1) {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

/// The stack of filter layers alone: no residual, no dropout, no MLP
/// wrapper. This is the map whose Jacobian the stability bound speaks
/// about; the probe input is the only differentiable leaf.
pub struct FilterCorePass {
    pub tape: Tape,
    pub input: NodeId,
    pub output: NodeId,
}

impl FilterCorePass {
    /// Jacobian-vector product `J·v` at the recorded point.
    pub fn jvp(&self, v: &Array2<f64>) -> Array2<f64> {
        self.tape.tangents(&[(self.input, v.clone())])[self.output]
            .clone()
            .expect("output depends on input")
    }

    /// Vector-Jacobian product `Jᵀ·v` at the recorded point.
    pub fn vjp(&self, v: &Array2<f64>) -> Array2<f64> {
        self.tape.backward(self.output, v.clone())[self.input]
            .clone()
            .expect("input requires grad")
    }

    pub fn output_dim(&self) -> (usize, usize) {
        self.tape.value(self.output).dim()
    }
}

/// Record the filter core `X ↦ σ(U diag(V_Pθ^(l)) Uᵀ · … · X W^(l))` at the
/// point `x` (n×hidden).
pub fn filter_core_forward(
    params: &ModelParams,
    config: &ModelConfig,
    decomp: &SpectralDecomposition,
    vp: &BasisMatrix,
    x: &Array2<f64>,
) -> Result<FilterCorePass> {
    let n = decomp.num_nodes();
    if x.nrows() != n {
        return Err(CoreError::SignalRowMismatch { rows: x.nrows(), n });
    }
    if x.ncols() != config.hidden_dim {
        return Err(CoreError::ShapeMismatch {
            context: "filter core input",
            lhs: x.dim(),
            rhs: (n, config.hidden_dim),
        });
    }

    let mut tape = Tape::new();
    let input = tape.param(x.clone());
    let u = tape.constant(decomp.eigenvectors().clone());
    let ut = tape.constant(decomp.eigenvectors().t().to_owned());

    let mut h = input;
    for layer in 0..config.filter_layers {
        let response = vp.response(&params.theta_vec(layer));
        let r_node = tape.constant(
            Array2::from_shape_vec((n, 1), response.to_vec()).expect("response shape"),
        );
        let h_hat = tape.matmul(ut, h)?;
        let scaled = tape.row_scale(h_hat, r_node)?;
        let back = tape.matmul(u, scaled)?;
        let w = tape.constant(params.w_mid[layer].clone());
        let filtered = tape.matmul(back, w)?;
        h = match config.activation {
            FilterActivation::Identity => filtered,
            FilterActivation::Relu => tape.relu(filtered),
        };
    }
    Ok(FilterCorePass {
        tape,
        input,
        output: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianDirection {
    Jvp,
    Vjp,
}

/// Apply the filter-core Jacobian (or its transpose) to a direction.
pub fn jacobian_apply(
    params: &ModelParams,
    config: &ModelConfig,
    decomp: &SpectralDecomposition,
    vp: &BasisMatrix,
    x: &Array2<f64>,
    v: &Array2<f64>,
    direction: JacobianDirection,
) -> Result<Array2<f64>> {
    let pass = filter_core_forward(params, config, decomp, vp, x)?;
    let expected = match direction {
        JacobianDirection::Jvp => x.dim(),
        JacobianDirection::Vjp => pass.output_dim(),
    };
    if v.dim() != expected {
        return Err(CoreError::ShapeMismatch {
            context: "jacobian direction",
            lhs: v.dim(),
            rhs: expected,
        });
    }
    Ok(match direction {
        JacobianDirection::Jvp => pass.jvp(v),
        JacobianDirection::Vjp => pass.vjp(v),
    })
}
