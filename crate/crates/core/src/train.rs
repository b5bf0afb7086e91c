//! Full-batch transductive training with early stopping on validation
//! accuracy.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adam::adam_step;
use crate::basis::BasisMatrix;
use crate::error::{CoreError, Result};
use crate::linalg::{l2, spectral_norm};
use crate::model::{evaluate, init_model, loss_and_grads, ModelConfig, ModelParams};
use crate::spectral::SpectralDecomposition;

/// Optimizer and stopping settings. Defaults match the bound-measurement
/// protocol: lr 0.01, weight decay 1e-5, up to 500 epochs, stop after 100
/// epochs without validation improvement.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            weight_decay: 1e-5,
            max_epochs: 500,
            patience: 100,
        }
    }
}

/// Norms of the trained tensors, measured at the best checkpoint. The
/// per-filter-layer entries are the constants every bound consumes.
#[derive(Debug, Clone)]
pub struct MeasuredNorms {
    /// Spectral norm of each filter-layer weight matrix.
    pub w_spectral: Vec<f64>,
    /// Euclidean norm of each filter-layer coefficient vector.
    pub theta_l2: Vec<f64>,
    /// Spectral norms of the wrapper layers (not part of the filter stack).
    pub w_in_spectral: f64,
    pub w_out_spectral: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub train_loss: f64,
    pub val_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// `test_loss - train_loss` at the best-validation checkpoint.
    pub gap: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub measured: MeasuredNorms,
}

/// Train a model and return metrics at the best-validation checkpoint,
/// together with the restored parameters.
///
/// Checkpoint selection tracks the best validation accuracy, ties broken
/// by lower validation loss. Identical inputs produce identical results:
/// initialization and dropout are both driven by `config.seed`.
#[allow(clippy::too_many_arguments)]
pub fn train(
    config: &ModelConfig,
    tcfg: &TrainConfig,
    decomp: &SpectralDecomposition,
    vp: &BasisMatrix,
    features: &Array2<f64>,
    labels: &[usize],
    train_idx: &[usize],
    val_idx: &[usize],
    test_idx: &[usize],
) -> Result<(TrainResult, ModelParams)> {
    if train_idx.is_empty() || val_idx.is_empty() || test_idx.is_empty() {
        return Err(CoreError::EmptyMask);
    }
    let mut params = init_model(config)?;
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1));

    let mut best_params = params.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut epochs_since_improve = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 1..=tcfg.max_epochs {
        epochs_run = epoch;
        let (parts, grads) = loss_and_grads(
            &params,
            config,
            decomp,
            vp,
            features,
            labels,
            train_idx,
            &mut dropout_rng,
        )?;
        if !parts.total.is_finite() {
            return Err(CoreError::Divergence { epoch });
        }
        adam_step(&mut params, &grads, tcfg.learning_rate, tcfg.weight_decay);
        if !params.all_finite() {
            return Err(CoreError::Divergence { epoch });
        }

        let val = evaluate(&params, config, decomp, vp, features, labels, &[val_idx])?;
        let (val_loss, val_acc) = val[0];
        let improved = val_acc > best_acc || (val_acc == best_acc && val_loss < best_loss);
        if improved {
            best_acc = val_acc;
            best_loss = val_loss;
            best_epoch = epoch;
            best_params = params.clone();
            epochs_since_improve = 0;
        } else {
            epochs_since_improve += 1;
            if epochs_since_improve >= tcfg.patience {
                break;
            }
        }
    }

    let metrics = evaluate(
        &best_params,
        config,
        decomp,
        vp,
        features,
        labels,
        &[train_idx, val_idx, test_idx],
    )?;
    let (train_loss, train_acc) = metrics[0];
    let (val_loss, val_acc) = metrics[1];
    let (test_loss, test_acc) = metrics[2];

    let measured = MeasuredNorms {
        w_spectral: best_params.w_mid.iter().map(spectral_norm).collect(),
        theta_l2: (0..best_params.thetas.len())
            .map(|l| l2(&best_params.theta_vec(l)))
            .collect(),
        w_in_spectral: spectral_norm(&best_params.w_in),
        w_out_spectral: spectral_norm(&best_params.w_out),
    };

    Ok((
        TrainResult {
            train_loss,
            val_loss,
            test_loss,
            train_acc,
            val_acc,
            test_acc,
            gap: test_loss - train_loss,
            epochs_run,
            best_epoch,
            measured,
        },
        best_params,
    ))
}
