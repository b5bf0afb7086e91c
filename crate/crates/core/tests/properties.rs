//! Property tests for the basis, transform, and contraction invariants.

use gftbench_core::basis::{eval_basis, BasisFamily, BasisKind};
use gftbench_core::graph::{build_normalized_adjacency, Graph};
use gftbench_core::spectral::eigendecompose;
use ndarray::Array2;
use proptest::prelude::*;

fn arb_x() -> impl Strategy<Value = f64> {
    -1.0..=1.0f64
}

proptest! {
    #[test]
    fn bernstein_partition_of_unity(x in arb_x(), order in 0usize..=20) {
        let vals = eval_basis(BasisKind::new(BasisFamily::Bernstein), order, x).unwrap();
        let sum: f64 = vals.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {sum} at x={x}, K={order}");
    }

    #[test]
    fn chebyshev_and_legendre_bounded_by_one(x in arb_x(), order in 0usize..=20) {
        for family in [BasisFamily::Chebyshev, BasisFamily::Legendre] {
            let vals = eval_basis(BasisKind::new(family), order, x).unwrap();
            for (k, v) in vals.iter().enumerate() {
                prop_assert!(v.abs() <= 1.0 + 1e-12, "{family} P_{k}({x}) = {v}");
            }
        }
    }

    #[test]
    fn rescaled_is_unrescaled_over_divisor(x in arb_x(), order in 0usize..=12) {
        for family in BasisFamily::ALL {
            let plain = eval_basis(BasisKind::new(family), order, x).unwrap();
            let scaled = eval_basis(BasisKind::rescaled(family), order, x).unwrap();
            let d = BasisKind::rescaled(family).rescale_divisor(order);
            for (p, s) in plain.iter().zip(scaled.iter()) {
                prop_assert!((p / d - s).abs() <= 1e-15 * p.abs().max(1.0));
            }
        }
    }
}

/// Random connected-ish graph strategy: node count and an edge bitmask.
fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (3usize..24).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let len = pairs.len();
        (Just(n), Just(pairs), proptest::collection::vec(any::<bool>(), len)).prop_map(
            |(n, pairs, mask)| {
                let edges: Vec<(usize, usize)> = pairs
                    .into_iter()
                    .zip(mask)
                    .filter_map(|(e, keep)| keep.then_some(e))
                    .collect();
                (n, edges)
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gft_round_trip_and_isometry((n, edges) in arb_graph(), seed in any::<u64>()) {
        use rand::Rng;
        use rand::SeedableRng;
        let graph = Graph::new(n, edges, Array2::zeros((n, 1)), vec![0; n]).unwrap();
        let ahat = build_normalized_adjacency(&graph).unwrap();
        let decomp = eigendecompose(&ahat).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-5.0..5.0f64));
        let xf = decomp.gft_forward(&x).unwrap();
        let back = decomp.gft_inverse(&xf).unwrap();

        let round_trip = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(round_trip < 1e-10);

        let f_orig: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let f_spec: f64 = xf.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((f_orig - f_spec).abs() < 1e-10 * f_orig.max(1.0));
    }

    #[test]
    fn transformed_relu_is_nonexpansive((n, edges) in arb_graph(), seed in any::<u64>()) {
        use rand::Rng;
        use rand::SeedableRng;
        // τ(Z) = Uᵀ relu(U Z) must be 1-Lipschitz in Frobenius norm.
        let graph = Graph::new(n, edges, Array2::zeros((n, 1)), vec![0; n]).unwrap();
        let ahat = build_normalized_adjacency(&graph).unwrap();
        let decomp = eigendecompose(&ahat).unwrap();
        let u = decomp.eigenvectors();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, 4), |_| rng.random_range(-3.0..3.0f64));
        let y = Array2::from_shape_fn((n, 4), |_| rng.random_range(-3.0..3.0f64));

        let tau = |z: &Array2<f64>| u.t().dot(&u.dot(z).mapv(|v| v.max(0.0)));
        let num: f64 = {
            let d = tau(&x) - tau(&y);
            d.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        let den: f64 = {
            let d = &x - &y;
            d.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        prop_assert!(num <= den + 1e-12, "{num} > {den}");
    }

    #[test]
    fn checkpoint_round_trips(seed in any::<u64>(), layers in 1usize..3, order in 1usize..6) {
        use gftbench_core::checkpoint::{decode_checkpoint, encode_checkpoint};
        use gftbench_core::model::{init_model, ModelConfig};
        let mut cfg = ModelConfig::new(3, 4, 2, BasisKind::new(BasisFamily::Legendre), order);
        cfg.filter_layers = layers;
        cfg.seed = seed;
        let params = init_model(&cfg).unwrap();
        let bytes = encode_checkpoint(&cfg, &params);
        let (cfg2, params2) = decode_checkpoint(&bytes).unwrap();
        prop_assert_eq!(cfg2.seed, seed);
        prop_assert_eq!(cfg2.filter_layers, layers);
        for (a, b) in params.tensors().iter().zip(params2.tensors().iter()) {
            prop_assert_eq!(a.as_slice().unwrap(), b.as_slice().unwrap());
        }
    }
}
