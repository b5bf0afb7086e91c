//! Adam with decoupled weight decay.

use crate::model::{Grads, ModelParams};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// One bias-corrected Adam step over every parameter tensor.
///
/// Weight decay is decoupled: `lr·wd·param` is subtracted directly rather
/// than folded into the moment estimates, so decay acts identically on
/// every tensor regardless of gradient history.
pub fn adam_step(params: &mut ModelParams, grads: &Grads, lr: f64, weight_decay: f64) {
    adam_step_with(params, grads, lr, weight_decay, BETA1, BETA2, EPSILON)
}

pub fn adam_step_with(
    params: &mut ModelParams,
    grads: &Grads,
    lr: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    params.adam.step += 1;
    let t = params.adam.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    let ModelParams {
        w_in,
        thetas,
        w_mid,
        w_out,
        adam,
    } = params;
    let mut tensors: Vec<&mut ndarray::Array2<f64>> = Vec::new();
    tensors.push(w_in);
    tensors.extend(thetas.iter_mut());
    tensors.extend(w_mid.iter_mut());
    tensors.push(w_out);
    debug_assert_eq!(tensors.len(), grads.tensors.len());

    for (i, tensor) in tensors.into_iter().enumerate() {
        let g = &grads.tensors[i];
        let m = &mut adam.m[i];
        let v = &mut adam.v[i];
        for ((p, &gv), (mv, vv)) in tensor
            .iter_mut()
            .zip(g.iter())
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mv = beta1 * *mv + (1.0 - beta1) * gv;
            *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            let old = *p;
            *p = old - lr * m_hat / (v_hat.sqrt() + eps) - lr * weight_decay * old;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, BasisKind};
    use crate::model::{init_model, ModelConfig};
    use ndarray::Array2;

    fn params_and_zero_grads() -> (crate::model::ModelParams, Grads) {
        let cfg = ModelConfig::new(3, 4, 2, BasisKind::new(BasisFamily::Monomial), 2);
        let params = init_model(&cfg).unwrap();
        let grads = Grads {
            tensors: params
                .tensors()
                .iter()
                .map(|t| Array2::zeros(t.dim()))
                .collect(),
        };
        (params, grads)
    }

    #[test]
    fn zero_grads_without_decay_leave_params_unchanged() {
        let (mut params, grads) = params_and_zero_grads();
        let before: Vec<Array2<f64>> = params.tensors().iter().map(|t| (*t).clone()).collect();
        adam_step(&mut params, &grads, 0.01, 0.0);
        for (b, a) in before.iter().zip(params.tensors()) {
            assert_eq!(b.as_slice().unwrap(), a.as_slice().unwrap());
        }
        assert_eq!(params.adam.step, 1);
    }

    #[test]
    fn zero_grads_with_decay_shrink_params() {
        let (mut params, grads) = params_and_zero_grads();
        let before: Vec<Array2<f64>> = params.tensors().iter().map(|t| (*t).clone()).collect();
        let lr = 0.1;
        let wd = 0.5;
        adam_step(&mut params, &grads, lr, wd);
        for (b, a) in before.iter().zip(params.tensors()) {
            for (x, y) in b.iter().zip(a.iter()) {
                assert!((y - x * (1.0 - lr * wd)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn first_step_moves_by_roughly_lr_times_sign() {
        let (mut params, mut grads) = params_and_zero_grads();
        let g = 0.37;
        for t in grads.tensors.iter_mut() {
            t.fill(g);
        }
        let before = params.w_in.clone();
        let lr = 0.01;
        adam_step(&mut params, &grads, lr, 0.0);
        // Bias correction makes m̂ = g and v̂ = g² on step 1, so the update
        // is lr·g/(|g| + ε) ≈ lr·sign(g).
        for (x, y) in before.iter().zip(params.w_in.iter()) {
            let delta = y - x;
            assert!((delta + lr).abs() < 1e-6, "delta {delta}");
        }
    }
}
