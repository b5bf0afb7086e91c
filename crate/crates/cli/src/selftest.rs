//! Built-in invariant suites: everything runs from fixed seeds on
//! synthetic inputs, so `gftbench selftest` needs no dataset and produces
//! byte-identical output on every run.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gftbench_core::basis::{
    amplification_profile, default_grid, eval_basis, vandermonde, BasisFamily, BasisKind,
};
use gftbench_core::bounds::{
    gap_bound, gaussian_conversion_constant, gc_bound_linear, gc_bound_nonlinear, gc_monte_carlo,
    jacobian_norm_bound, true_jacobian_norm, BoundInputs,
};
use gftbench_core::graph::{build_normalized_adjacency, Graph};
use gftbench_core::linalg::spectral_norm;
use gftbench_core::model::{init_model, loss_and_grads, ModelConfig, ModelParams};
use gftbench_core::spectral::eigendecompose;
use gftbench_core::train::{train, TrainConfig};
use gftbench_harness::sbm::{generate_sbm, SbmParams};
use gftbench_harness::split::make_split;

type Check = (&'static str, fn() -> Result<(), String>);

const CHECKS: &[Check] = &[
    ("basis_values", basis_values),
    ("basis_endpoint_maxima", basis_endpoint_maxima),
    ("profile_midpoint", profile_midpoint),
    ("bernstein_partition_of_unity", bernstein_partition_of_unity),
    ("eigen_path_graph", eigen_path_graph),
    ("eigen_random_invariants", eigen_random_invariants),
    ("gft_round_trip", gft_round_trip),
    ("gradient_check", gradient_check),
    ("filter_equivalence", filter_equivalence),
    ("activation_contraction", activation_contraction),
    ("complexity_mc_invariance", complexity_mc_invariance),
    ("bound_ordering", bound_ordering),
    ("gap_bound_arithmetic", gap_bound_arithmetic),
    ("jacobian_soundness", jacobian_soundness),
    ("split_stratification", split_stratification),
    ("sbm_determinism", sbm_determinism),
    ("training_determinism", training_determinism),
];

pub fn run_all() -> (String, bool) {
    let mut out = String::new();
    let mut failures = 0usize;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => writeln!(out, "ok   {name}").unwrap(),
            Err(msg) => {
                failures += 1;
                writeln!(out, "FAIL {name}: {msg}").unwrap();
            }
        }
    }
    writeln!(
        out,
        "selftest: {}/{} checks passed",
        CHECKS.len() - failures,
        CHECKS.len()
    )
    .unwrap();
    (out, failures == 0)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges, Array2::zeros((n, 1)), vec![0; n]).unwrap()
}

fn basis_values() -> Result<(), String> {
    let cheb = eval_basis(BasisKind::new(BasisFamily::Chebyshev), 3, 0.5).unwrap();
    ensure(cheb == vec![1.0, 0.5, -0.5, -1.0], format!("chebyshev {cheb:?}"))?;
    let bern = eval_basis(BasisKind::new(BasisFamily::Bernstein), 2, 0.0).unwrap();
    ensure(bern == vec![0.25, 0.5, 0.25], format!("bernstein {bern:?}"))?;
    let leg = eval_basis(BasisKind::new(BasisFamily::Legendre), 2, 1.0).unwrap();
    ensure(leg == vec![1.0, 1.0, 1.0], format!("legendre {leg:?}"))?;
    let mono = eval_basis(BasisKind::new(BasisFamily::Monomial), 2, 0.5).unwrap();
    ensure(mono == vec![1.0, 0.5, 0.25], format!("monomial {mono:?}"))
}

fn basis_endpoint_maxima() -> Result<(), String> {
    let grid = default_grid();
    for family in BasisFamily::ALL {
        for k in [5usize, 10, 20] {
            let kind = BasisKind::new(family);
            let p = amplification_profile(kind, k, &grid, false).unwrap();
            let max = p.iter().cloned().fold(f64::MIN, f64::max);
            let endpoint = kind.endpoint_amplification(k);
            ensure(
                (max - endpoint).abs() < 1e-10,
                format!("{family} K={k}: {max} vs {endpoint}"),
            )?;
        }
    }
    Ok(())
}

fn profile_midpoint() -> Result<(), String> {
    let grid = default_grid();
    let p = amplification_profile(BasisKind::new(BasisFamily::Chebyshev), 10, &grid, true).unwrap();
    let mid = p[grid.len() / 2];
    ensure(
        (mid - 6.0 / 11.0).abs() < 1e-12,
        format!("normalized midpoint {mid}"),
    )
}

fn bernstein_partition_of_unity() -> Result<(), String> {
    for i in 0..=100 {
        let x = -1.0 + 0.02 * i as f64;
        let vals = eval_basis(BasisKind::new(BasisFamily::Bernstein), 10, x).unwrap();
        let sum: f64 = vals.iter().sum();
        ensure((sum - 1.0).abs() <= 1e-12, format!("sum {sum} at x={x}"))?;
    }
    Ok(())
}

fn eigen_path_graph() -> Result<(), String> {
    let g = Graph::new(3, vec![(0, 1), (1, 2)], Array2::zeros((3, 1)), vec![0; 3]).unwrap();
    let d = eigendecompose(&build_normalized_adjacency(&g).unwrap()).unwrap();
    let vals = d.eigenvalues();
    ensure(
        (vals[0] + 1.0).abs() < 1e-10 && vals[1].abs() < 1e-10 && (vals[2] - 1.0).abs() < 1e-10,
        format!("spectrum {:?}", vals.to_vec()),
    )
}

fn eigen_random_invariants() -> Result<(), String> {
    for seed in 0..5u64 {
        let n = 30 + 10 * seed as usize;
        let g = random_graph(n, 0.12, seed);
        let ahat = build_normalized_adjacency(&g).unwrap();
        let d1 = eigendecompose(&ahat).map_err(|e| e.to_string())?;
        ensure(d1.residual() <= 1e-8, format!("residual {}", d1.residual()))?;
        let d2 = eigendecompose(&ahat).unwrap();
        ensure(
            d1.eigenvectors().as_slice() == d2.eigenvectors().as_slice(),
            "decomposition not bit-identical across calls",
        )?;
    }
    Ok(())
}

fn gft_round_trip() -> Result<(), String> {
    let g = random_graph(40, 0.15, 77);
    let d = eigendecompose(&build_normalized_adjacency(&g).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let x = Array2::from_shape_fn((40, 5), |_| rng.random_range(-2.0..2.0f64));
    let xf = d.gft_forward(&x).unwrap();
    let back = d.gft_inverse(&xf).unwrap();
    let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(err < 1e-10, format!("round trip err {err}"))?;
    let f1: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let f2: f64 = xf.iter().map(|v| v * v).sum::<f64>().sqrt();
    ensure((f1 - f2).abs() < 1e-10, format!("norms {f1} vs {f2}"))
}

fn tiny_instance(
    seed: u64,
    kind: BasisKind,
    order: usize,
) -> (
    gftbench_core::SpectralDecomposition,
    gftbench_core::BasisMatrix,
    Array2<f64>,
    Vec<usize>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 12usize;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.3 {
                edges.push((i, j));
            }
        }
    }
    let x = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0f64));
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3usize)).collect();
    let g = Graph::new(n, edges, x.clone(), labels.clone()).unwrap();
    let d = eigendecompose(&build_normalized_adjacency(&g).unwrap()).unwrap();
    let vp = vandermonde(kind, order, d.eigenvalues()).unwrap();
    (d, vp, x, labels)
}

fn gradient_check() -> Result<(), String> {
    let kind = BasisKind::new(BasisFamily::Chebyshev);
    let (decomp, vp, x, labels) = tiny_instance(5, kind, 3);
    let mut cfg = ModelConfig::new(4, 5, 3, kind, 3);
    cfg.lambda_ew = 0.4;
    cfg.ew_on_raw_features = true;
    cfg.seed = 2;
    let params = init_model(&cfg).unwrap();
    let mask: Vec<usize> = (0..12).step_by(2).collect();

    let loss_of = |p: &ModelParams| {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        loss_and_grads(p, &cfg, &decomp, &vp, &x, &labels, &mask, &mut rng)
            .unwrap()
            .0
            .total
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, grads) =
        loss_and_grads(&params, &cfg, &decomp, &vp, &x, &labels, &mask, &mut rng).unwrap();

    let h = 1e-5;
    // Spot-check every tensor through one representative entry plus the
    // full θ vector.
    for (t, g) in grads.tensors.iter().enumerate() {
        let (i, j) = (0, 0);
        let mut plus = params.clone();
        let mut minus = params.clone();
        {
            let tp = match t {
                0 => &mut plus.w_in,
                1 => &mut plus.thetas[0],
                2 => &mut plus.w_mid[0],
                _ => &mut plus.w_out,
            };
            tp[(i, j)] += h;
            let tm = match t {
                0 => &mut minus.w_in,
                1 => &mut minus.thetas[0],
                2 => &mut minus.w_mid[0],
                _ => &mut minus.w_out,
            };
            tm[(i, j)] -= h;
        }
        let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
        let ad = g[(i, j)];
        let scale = ad.abs().max(fd.abs()).max(1e-6);
        ensure(
            (ad - fd).abs() / scale <= 1e-4,
            format!("tensor {t}: ad {ad} vs fd {fd}"),
        )?;
    }
    Ok(())
}

fn filter_equivalence() -> Result<(), String> {
    // Spatial route via matrix recurrences vs the spectral route.
    let n = 12usize;
    let g = random_graph(n, 0.3, 91);
    let ahat = build_normalized_adjacency(&g).unwrap();
    let decomp = eigendecompose(&ahat).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let h = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0f64));

    for family in BasisFamily::ALL {
        let kind = BasisKind::new(family);
        let order = 5usize;
        let vp = vandermonde(kind, order, decomp.eigenvalues()).unwrap();
        let theta = Array1::from_shape_fn(order + 1, |_| rng.random_range(-1.0..1.0f64));

        // Spectral: U diag(Vθ) Uᵀ H.
        let response = vp.response(&theta);
        let mut scaled = decomp.eigenvectors().t().dot(&h);
        for (i, mut row) in scaled.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|v| v * response[i]);
        }
        let spectral = decomp.eigenvectors().dot(&scaled);

        // Spatial: Σ θ_k P_k(Â) H with matrix recurrences.
        let polys = matrix_basis(kind, order, &ahat);
        let mut filter = Array2::<f64>::zeros((n, n));
        for (k, p) in polys.iter().enumerate() {
            filter += &(theta[k] * p);
        }
        let spatial = filter.dot(&h);

        let err = (&spatial - &spectral)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(err < 1e-8, format!("{family}: max err {err:.3e}"))?;
    }
    Ok(())
}

fn matrix_basis(kind: BasisKind, order: usize, a: &Array2<f64>) -> Vec<Array2<f64>> {
    let n = a.nrows();
    let eye = Array2::<f64>::eye(n);
    let mut polys: Vec<Array2<f64>> = Vec::with_capacity(order + 1);
    match kind.family {
        BasisFamily::Monomial => {
            let mut p = eye.clone();
            for _ in 0..=order {
                polys.push(p.clone());
                p = p.dot(a);
            }
        }
        BasisFamily::Chebyshev => {
            polys.push(eye.clone());
            polys.push(a.clone());
            for k in 1..order {
                let next = 2.0 * a.dot(&polys[k]) - &polys[k - 1];
                polys.push(next);
            }
        }
        BasisFamily::Legendre => {
            polys.push(eye.clone());
            polys.push(a.clone());
            for k in 1..order {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * a.dot(&polys[k]) - kf * &polys[k - 1]) / (kf + 1.0);
                polys.push(next);
            }
        }
        BasisFamily::Bernstein => {
            let t = (a + &eye) / 2.0;
            let q = &eye - &t;
            let mut t_pows = vec![eye.clone()];
            let mut q_pows = vec![eye.clone()];
            for k in 1..=order {
                t_pows.push(t_pows[k - 1].dot(&t));
                q_pows.push(q_pows[k - 1].dot(&q));
            }
            let mut binom = 1.0f64;
            for k in 0..=order {
                if k > 0 {
                    binom *= (order - k + 1) as f64 / k as f64;
                }
                polys.push(binom * &t_pows[k].dot(&q_pows[order - k]));
            }
        }
    }
    polys
}

fn activation_contraction() -> Result<(), String> {
    let g = random_graph(16, 0.25, 300);
    let d = eigendecompose(&build_normalized_adjacency(&g).unwrap()).unwrap();
    let u = d.eigenvectors();
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    for trial in 0..1000 {
        let x = Array2::from_shape_fn((16, 3), |_| rng.random_range(-3.0..3.0f64));
        let y = Array2::from_shape_fn((16, 3), |_| rng.random_range(-3.0..3.0f64));
        let tau = |z: &Array2<f64>| u.t().dot(&u.dot(z).mapv(|v| v.max(0.0)));
        let num = {
            let diff = tau(&x) - tau(&y);
            diff.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        let den = {
            let diff = &x - &y;
            diff.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        ensure(
            num <= den + 1e-12,
            format!("trial {trial}: {num} > {den}"),
        )?;
    }
    Ok(())
}

fn complexity_mc_invariance() -> Result<(), String> {
    let g = random_graph(24, 0.2, 310);
    let d = eigendecompose(&build_normalized_adjacency(&g).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(311);
    let outputs: Vec<Array1<f64>> = (0..8)
        .map(|_| Array1::from_shape_fn(24, |_| rng.random_range(-1.0..1.0f64)))
        .collect();
    let transformed: Vec<Array1<f64>> = outputs
        .iter()
        .map(|f| {
            let m = Array2::from_shape_vec((24, 1), f.to_vec()).unwrap();
            let t = d.gft_forward(&m).unwrap();
            Array1::from_iter(t.column(0).iter().cloned())
        })
        .collect();
    let a = gc_monte_carlo(&outputs, 4000, 1).unwrap();
    let b = gc_monte_carlo(&transformed, 4000, 2).unwrap();
    let se = (a.std_error * a.std_error + b.std_error * b.std_error).sqrt();
    ensure(
        (a.estimate - b.estimate).abs() <= 3.0 * se,
        format!("{} vs {} (3se {})", a.estimate, b.estimate, 3.0 * se),
    )
}

fn bound_ordering() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(320);
    for trial in 0..100 {
        let n = rng.random_range(3..40usize);
        let layers = rng.random_range(1..4usize);
        let inputs = BoundInputs {
            row_norms: Array1::from_shape_fn(n, |_| rng.random_range(0.05..3.0f64)),
            two_inf_norm: 0.0,
            energy: Array1::from_shape_fn(n, |_| rng.random_range(0.0..2.0f64)),
            alpha: 1.0,
            c_w: (0..layers).map(|_| rng.random_range(0.2..2.0)).collect(),
            c_theta: (0..layers).map(|_| rng.random_range(0.2..2.0)).collect(),
            num_labeled: 1.max(n / 2),
            delta: 0.05,
            c1: 1.0,
            c2: 1.0,
        };
        let inputs = BoundInputs {
            two_inf_norm: inputs.row_norms.iter().cloned().fold(0.0, f64::max),
            ..inputs
        };
        let nl = gc_bound_nonlinear(&inputs).unwrap();
        let lin = gc_bound_linear(&inputs).unwrap();
        ensure(
            lin <= nl.bound / (n as f64).sqrt() * (1.0 + 1e-12),
            format!("trial {trial}: {lin} vs {}", nl.bound / (n as f64).sqrt()),
        )?;
        let product = nl.weight_term * nl.spectral_term;
        let rel = if nl.bound == 0.0 {
            product.abs()
        } else {
            (product - nl.bound).abs() / nl.bound
        };
        ensure(rel <= 1e-12, format!("decomposition rel err {rel}"))?;
    }
    Ok(())
}

fn gap_bound_arithmetic() -> Result<(), String> {
    let inputs = BoundInputs {
        row_norms: Array1::ones(100),
        two_inf_norm: 1.0,
        energy: Array1::ones(100),
        alpha: 1.0,
        c_w: vec![1.0],
        c_theta: vec![1.0],
        num_labeled: 50,
        delta: 0.05,
        c1: 0.0,
        c2: 0.0,
    };
    let g = gap_bound(1.0, &inputs).unwrap();
    let expect = 4.0 * gaussian_conversion_constant();
    ensure(
        (g.complexity - expect).abs() < 1e-12 && g.total() == g.complexity,
        format!("complexity term {} vs {expect}", g.complexity),
    )
}

fn jacobian_soundness() -> Result<(), String> {
    let kind = BasisKind::new(BasisFamily::Chebyshev);
    let (decomp, vp, _, _) = tiny_instance(42, kind, 4);
    let mut cfg = ModelConfig::new(4, 5, 3, kind, 4);
    cfg.seed = 7;
    let params = init_model(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let point = Array2::from_shape_fn((12, 5), |_| rng.random_range(-1.0..1.0f64));

    let sigma = true_jacobian_norm(&params, &cfg, &decomp, &vp, &point).map_err(|e| e.to_string())?;
    let response = vp.response(&params.theta_vec(0));
    let peak = response.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let closed = spectral_norm(&params.w_mid[0]) * peak;
    ensure(
        (sigma - closed).abs() <= 1e-6 * closed,
        format!("power iteration {sigma} vs closed form {closed}"),
    )?;

    let inputs = BoundInputs {
        row_norms: vp.row_norms().clone(),
        two_inf_norm: vp.two_inf_norm(),
        energy: Array1::ones(12),
        alpha: 1.0,
        c_w: vec![spectral_norm(&params.w_mid[0])],
        c_theta: vec![gftbench_core::linalg::l2(&params.theta_vec(0))],
        num_labeled: 6,
        delta: 0.05,
        c1: 1.0,
        c2: 1.0,
    };
    let bound = jacobian_norm_bound(&inputs).unwrap();
    ensure(
        sigma <= bound * (1.0 + 1e-9),
        format!("unsound: {sigma} > {bound}"),
    )
}

fn split_stratification() -> Result<(), String> {
    let labels: Vec<usize> = (0..150).map(|i| i / 50).collect();
    let split = make_split(&labels, 10, 0.35, 4).map_err(|e| e.to_string())?;
    ensure(
        split.train_idx.len() == 30 && split.val_idx.len() == 42 && split.test_idx.len() == 78,
        format!(
            "sizes {}/{}/{}",
            split.train_idx.len(),
            split.val_idx.len(),
            split.test_idx.len()
        ),
    )?;
    let again = make_split(&labels, 10, 0.35, 4).unwrap();
    ensure(split == again, "split not deterministic")
}

fn sbm_determinism() -> Result<(), String> {
    let params = SbmParams {
        blocks: 2,
        per_block: 3,
        p_in: 1.0,
        p_out: 0.0,
        feature_dim: 2,
        signal_strength: 1.0,
        seed: 5,
    };
    let g = generate_sbm(&params).unwrap();
    ensure(
        g.edges() == [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)],
        "extreme-probability SBM is not two disjoint triangles",
    )?;
    let g2 = generate_sbm(&params).unwrap();
    ensure(g.features() == g2.features(), "SBM features not deterministic")
}

fn training_determinism() -> Result<(), String> {
    let graph = generate_sbm(&SbmParams {
        blocks: 2,
        per_block: 15,
        p_in: 0.3,
        p_out: 0.05,
        feature_dim: 4,
        signal_strength: 1.5,
        seed: 20,
    })
    .unwrap();
    let ahat = build_normalized_adjacency(&graph).unwrap();
    let decomp = eigendecompose(&ahat).unwrap();
    let kind = BasisKind::new(BasisFamily::Chebyshev);
    let vp = vandermonde(kind, 3, decomp.eigenvalues()).unwrap();
    let split = make_split(graph.labels(), 5, 0.35, 0).unwrap();
    let mut cfg = ModelConfig::new(4, 8, 2, kind, 3);
    cfg.seed = 3;
    let tcfg = TrainConfig {
        max_epochs: 60,
        patience: 25,
        ..TrainConfig::default()
    };
    let run = || {
        train(
            &cfg,
            &tcfg,
            &decomp,
            &vp,
            graph.features(),
            graph.labels(),
            &split.train_idx,
            &split.val_idx,
            &split.test_idx,
        )
        .map(|(r, _)| r)
    };
    let a = run().map_err(|e| e.to_string())?;
    let b = run().map_err(|e| e.to_string())?;
    ensure(
        a.test_loss.to_bits() == b.test_loss.to_bits()
            && a.gap.to_bits() == b.gap.to_bits()
            && a.epochs_run == b.epochs_run,
        "training results differ across identical runs",
    )?;
    ensure(
        a.train_acc >= 0.9,
        format!("train accuracy {} below 0.9", a.train_acc),
    )?;
    ensure(a.gap == a.test_loss - a.train_loss, "gap identity violated")
}
