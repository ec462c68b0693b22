//! Scalar reference recurrence and finite-difference gradient check.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weakseg::fine_model::{loss_and_gradient, Chunk, GruParams};

pub const EPS: f64 = 1e-4;
pub const MAX_REL_ERR: f64 = 1e-4;
/// Gradients below this magnitude are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar reference: plain loops over the recurrence, softmax per frame.
pub fn reference_forward(p: &GruParams, x: ArrayView2<'_, f32>) -> Vec<Vec<f64>> {
    let (d, h, s) = (p.input_dim(), p.hidden_dim(), p.num_outputs());
    let mut state = vec![0.0; h];
    let mut out = Vec::new();
    for row in x.rows() {
        let affine = |w: &Array2<f64>, u: &Array2<f64>, b: &ndarray::Array1<f64>, hv: &[f64], j: usize| {
            let mut v = b[j];
            for i in 0..d {
                v += row[i] as f64 * w[[i, j]];
            }
            for i in 0..h {
                v += hv[i] * u[[i, j]];
            }
            v
        };
        let z: Vec<f64> = (0..h).map(|j| sigmoid(affine(&p.w_z, &p.u_z, &p.b_z, &state, j))).collect();
        let r: Vec<f64> = (0..h).map(|j| sigmoid(affine(&p.w_r, &p.u_r, &p.b_r, &state, j))).collect();
        let rh: Vec<f64> = (0..h).map(|i| r[i] * state[i]).collect();
        let c: Vec<f64> = (0..h).map(|j| affine(&p.w_h, &p.u_h, &p.b_h, &rh, j).tanh()).collect();
        state = (0..h).map(|j| (1.0 - z[j]) * state[j] + z[j] * c[j]).collect();
        let logits: Vec<f64> = (0..s)
            .map(|k| p.b_out[k] + (0..h).map(|i| state[i] * p.w_out[[i, k]]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z_sum: f64 = e.iter().sum();
        out.push(e.iter().map(|v| v / z_sum).collect());
    }
    out
}

pub fn window(rng: &mut ChaCha8Rng, t: usize, d: usize) -> Array2<f32> {
    Array2::from_shape_fn((t, d), |_| rng.gen_range(-1.0f32..1.0))
}


/// Largest relative error between the analytic gradient and central
/// differences, with the parameter it occurs at.
pub fn max_gradient_error(seed: u64) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = GruParams::random(3, 4, 3, 0.5, &mut rng);
    // a length-5 window plus shorter ones exercising the padded batch path
    let windows: Vec<Array2<f32>> = [5, 3, 5, 1].iter().map(|&t| window(&mut rng, t, 3)).collect();
    let chunks: Vec<Chunk<'_>> = windows
        .iter()
        .enumerate()
        .map(|(i, w)| Chunk {
            frames: w.view(),
            target: i % 3,
        })
        .collect();
    let (_, grad) = loss_and_gradient(&params, &chunks).unwrap();
    let analytic: Vec<Vec<f64>> = grad.tensors().iter().map(|t| t.to_vec()).collect();

    let mut worst = (0.0, String::new());
    for (ti, name) in GruParams::NAMES.iter().enumerate() {
        for (k, &exact) in analytic[ti].iter().enumerate() {
            let orig = params.tensors()[ti][k];
            params.tensors_mut()[ti][k] = orig + EPS;
            let (plus, _) = loss_and_gradient(&params, &chunks).unwrap();
            params.tensors_mut()[ti][k] = orig - EPS;
            let (minus, _) = loss_and_gradient(&params, &chunks).unwrap();
            params.tensors_mut()[ti][k] = orig;
            let numeric = (plus - minus) / (2.0 * EPS);
            let a = exact;
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            if rel >= worst.0 {
                worst = (rel, format!("{name}[{k}]"));
            }
        }
    }
    worst
}
