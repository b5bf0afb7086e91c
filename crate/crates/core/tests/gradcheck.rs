//! Reverse-mode gradients against central finite differences.
//!
//! The finite-difference oracle re-runs the full loss with a perturbed
//! parameter entry and identical RNG state, so dropout masks match between
//! the two loss evaluations of each difference.

use gftbench_core::basis::{vandermonde, BasisFamily, BasisKind};
use gftbench_core::graph::{build_normalized_adjacency, Graph};
use gftbench_core::model::{init_model, loss_and_grads, FilterActivation, ModelConfig, ModelParams};
use gftbench_core::spectral::{eigendecompose, SpectralDecomposition};
use gftbench_core::BasisMatrix;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

struct Instance {
    decomp: SpectralDecomposition,
    vp: BasisMatrix,
    x: Array2<f64>,
    labels: Vec<usize>,
    mask: Vec<usize>,
}

fn instance(seed: u64, kind: BasisKind, order: usize) -> Instance {
    let n = 20usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.2 {
                edges.push((i, j));
            }
        }
    }
    let x = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0f64));
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3usize)).collect();
    let graph = Graph::new(n, edges, x.clone(), labels.clone()).unwrap();
    let ahat = build_normalized_adjacency(&graph).unwrap();
    let decomp = eigendecompose(&ahat).unwrap();
    let vp = vandermonde(kind, order, decomp.eigenvalues()).unwrap();
    let mask: Vec<usize> = (0..n).step_by(2).collect();
    Instance {
        decomp,
        vp,
        x,
        labels,
        mask,
    }
}

fn tensor_mut(params: &mut ModelParams, idx: usize) -> &mut Array2<f64> {
    let layers = params.thetas.len();
    if idx == 0 {
        &mut params.w_in
    } else if idx <= layers {
        &mut params.thetas[idx - 1]
    } else if idx <= 2 * layers {
        &mut params.w_mid[idx - 1 - layers]
    } else {
        &mut params.w_out
    }
}

/// Check AD gradients entry-by-entry. `skip_tensors` names tensor indices
/// whose finite difference is invalid by construction (the detached
/// penalty input depends on them through the forward pass, but the
/// gradient deliberately ignores that path).
fn run_gradcheck(cfg: &ModelConfig, inst: &Instance, rng_seed: u64, skip_tensors: &[usize]) {
    let params = init_model(cfg).unwrap();
    let base_rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let loss_of = |p: &ModelParams| -> f64 {
        let mut rng = base_rng.clone();
        let (parts, _) = loss_and_grads(
            p,
            cfg,
            &inst.decomp,
            &inst.vp,
            &inst.x,
            &inst.labels,
            &inst.mask,
            &mut rng,
        )
        .unwrap();
        parts.total
    };

    let mut rng = base_rng.clone();
    let (_, grads) = loss_and_grads(
        &params,
        cfg,
        &inst.decomp,
        &inst.vp,
        &inst.x,
        &inst.labels,
        &inst.mask,
        &mut rng,
    )
    .unwrap();

    let num_tensors = params.num_tensors();
    for t in 0..num_tensors {
        if skip_tensors.contains(&t) {
            continue;
        }
        let dim = grads.tensors[t].dim();
        for i in 0..dim.0 {
            for j in 0..dim.1 {
                let mut plus = params.clone();
                tensor_mut(&mut plus, t)[(i, j)] += FD_STEP;
                let mut minus = params.clone();
                tensor_mut(&mut minus, t)[(i, j)] -= FD_STEP;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * FD_STEP);
                let ad = grads.tensors[t][(i, j)];
                let scale = ad.abs().max(fd.abs()).max(1e-6);
                assert!(
                    (ad - fd).abs() / scale <= REL_TOL,
                    "tensor {t} entry ({i},{j}): ad={ad:.9e} fd={fd:.9e}"
                );
            }
        }
    }
}

#[test]
fn plain_cross_entropy_five_seeds() {
    for seed in 0..5u64 {
        let kind = BasisKind::new(BasisFamily::ALL[seed as usize % 4]);
        let inst = instance(100 + seed, kind, 3);
        let mut cfg = ModelConfig::new(4, 6, 3, kind, 3);
        cfg.seed = seed;
        run_gradcheck(&cfg, &inst, 900 + seed, &[]);
    }
}

#[test]
fn energy_penalty_on_raw_features_all_params() {
    let kind = BasisKind::new(BasisFamily::Chebyshev);
    let inst = instance(42, kind, 4);
    let mut cfg = ModelConfig::new(4, 6, 3, kind, 4);
    cfg.lambda_ew = 0.7;
    cfg.ew_on_raw_features = true;
    cfg.seed = 9;
    run_gradcheck(&cfg, &inst, 901, &[]);
}

#[test]
fn energy_penalty_on_hidden_features_detaches_input_path() {
    // The penalty treats the hidden spectrum as constant, so w_in (tensor 0)
    // has no finite-difference counterpart; every other tensor must match.
    let kind = BasisKind::new(BasisFamily::Bernstein);
    let inst = instance(43, kind, 4);
    let mut cfg = ModelConfig::new(4, 6, 3, kind, 4);
    cfg.lambda_ew = 0.5;
    cfg.seed = 10;
    run_gradcheck(&cfg, &inst, 902, &[0]);
}

#[test]
fn dropout_and_relu_filter_layers() {
    let kind = BasisKind::new(BasisFamily::Legendre);
    let inst = instance(44, kind, 2);
    let mut cfg = ModelConfig::new(4, 5, 3, kind, 2);
    cfg.dropout_input = 0.3;
    cfg.dropout_hidden = 0.25;
    cfg.filter_layers = 2;
    cfg.activation = FilterActivation::Relu;
    cfg.seed = 11;
    run_gradcheck(&cfg, &inst, 903, &[]);
}

#[test]
fn clipped_logits_variant() {
    let kind = BasisKind::rescaled(BasisFamily::Monomial);
    let inst = instance(45, kind, 3);
    let mut cfg = ModelConfig::new(4, 6, 3, kind, 3);
    // A tight band so some logits actually clip.
    cfg.clip_logits = Some(0.4);
    cfg.seed = 12;
    run_gradcheck(&cfg, &inst, 904, &[]);
}
