//! Small dense linear-algebra helpers shared across the crate.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

/// Largest singular value by power iteration on `MᵀM`.
///
/// The start vector is drawn from a fixed seed, so the result is
/// deterministic for a given input. Converges when the relative change of
/// the estimate drops below 1e-10 (or after 10000 iterations). A zero
/// matrix yields 0.
pub fn spectral_norm(m: &Array2<f64>) -> f64 {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut v = Array1::from_shape_fn(cols, |_| rng.random_range(-1.0..1.0f64));
    let norm = l2(&v);
    if norm == 0.0 {
        return 0.0;
    }
    v.mapv_inplace(|x| x / norm);

    let mut sigma = 0.0f64;
    for _ in 0..POWER_MAX_ITERS {
        let w = m.dot(&v);
        let new_sigma = l2(&w);
        if new_sigma == 0.0 {
            return 0.0;
        }
        let z = m.t().dot(&w);
        let zn = l2(&z);
        if zn == 0.0 {
            return new_sigma;
        }
        v = z / zn;
        if (new_sigma - sigma).abs() <= POWER_TOL * new_sigma {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}

pub fn l2(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Inner product of two matrices viewed as flat vectors.
pub fn flat_dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
