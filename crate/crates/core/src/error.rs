use thiserror::Error;

/// Errors produced by graph construction, decomposition, and model evaluation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("edge ({0}, {1}) has an endpoint outside [0, {2})")]
    EdgeOutOfRange(usize, usize, usize),

    #[error("self-loop ({0}, {0}) not permitted (enable self-loops explicitly)")]
    SelfLoop(usize),

    #[error("feature matrix has {rows} rows, expected {n}")]
    FeatureRowMismatch { rows: usize, n: usize },

    #[error("label vector has length {len}, expected {n}")]
    LabelLenMismatch { len: usize, n: usize },

    #[error("label {label} at node {node} outside [0, {classes})")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        classes: usize,
    },

    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),

    #[error("matrix is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {delta:.3e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("matrix contains a non-finite entry at ({0}, {1})")]
    NonFiniteEntry(usize, usize),

    #[error("eigensolver failed to deflate index {index} within the iteration budget (off-diagonal residual {residual:.3e})")]
    EigenNoConvergence { index: usize, residual: f64 },

    #[error("eigendecomposition check failed: {check} = {value:.3e} exceeds {limit:.1e}")]
    DecompositionCheck {
        check: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("eigenvalue {value} outside [-1-{tol:.0e}, 1+{tol:.0e}]")]
    EigenvalueOutOfRange { value: f64, tol: f64 },

    #[error("signal has {rows} rows but the decomposition is over {n} nodes")]
    SignalRowMismatch { rows: usize, n: usize },

    #[error("polynomial order {0} exceeds the supported maximum {1}")]
    OrderTooLarge(usize, usize),

    #[error("basis argument {0} outside [-1-1e-9, 1+1e-9]")]
    ArgumentOutOfDomain(f64),

    #[error("eigenvalue grid is empty")]
    EmptyGrid,

    #[error("shape mismatch in {context}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        context: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("non-finite values produced at filter layer {layer}")]
    NonFinite { layer: usize },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("node mask is empty")]
    EmptyMask,

    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("bound inputs invalid: {0}")]
    InvalidBoundInputs(String),

    #[error("power iteration on the Jacobian did not converge: last two estimates differ by {gap:.3e} ({a:.6e} vs {b:.6e})")]
    JacobianNoConvergence { gap: f64, a: f64, b: f64 },

    #[error("Monte-Carlo estimator needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("function set is empty")]
    EmptyFunctionSet,

    #[error("checkpoint decode failed: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
