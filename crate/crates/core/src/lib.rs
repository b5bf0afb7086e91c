//! Polynomial spectral graph filters over multiple bases, a small
//! fixed-topology autodiff engine for training transductive node
//! classifiers, and the machinery to compute generalization and stability
//! bounds from measured quantities.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`graph`] — undirected graphs and the normalized adjacency `Â`.
//! 2. [`eigen`]/[`spectral`] — dense symmetric eigendecomposition and the
//!    graph Fourier transform.
//! 3. [`basis`] — Monomial/Chebyshev/Legendre/Bernstein evaluation,
//!    amplification profiles, and the generalized Vandermonde matrix.
//! 4. [`tape`]/[`model`]/[`adam`]/[`train`] — the residual spectral-filter
//!    classifier and its full-batch training loop.
//! 5. [`bounds`] — complexity, gap, and Jacobian bounds plus the measured
//!    quantities they are validated against.
//! 6. [`checkpoint`] — a self-describing binary snapshot of config,
//!    tensors, and optimizer state.
//!
//! Everything is deterministic given explicit seeds: the eigensolver has a
//! fixed sign convention, initialization and dropout are driven by seeded
//! generators, and power iterations start from fixed seeds.

pub mod adam;
pub mod basis;
pub mod bounds;
pub mod checkpoint;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod tape;
pub mod train;

pub use basis::{
    amplification_profile, eval_basis, vandermonde, BasisFamily, BasisKind, BasisMatrix,
};
pub use bounds::{
    bound_report, gap_bound, gc_bound_linear, gc_bound_nonlinear, gc_monte_carlo,
    jacobian_norm_bound, spectral_energy, true_jacobian_norm, BoundInputs, BoundReport,
    BoundSettings,
};
pub use error::{CoreError, Result};
pub use graph::{build_normalized_adjacency, Graph};
pub use model::{
    forward, init_model, jacobian_apply, loss_and_grads, FilterActivation, JacobianDirection,
    Mode, ModelConfig, ModelParams,
};
pub use spectral::{eigendecompose, gft, GftDirection, SpectralDecomposition};
pub use train::{train, TrainConfig, TrainResult};
