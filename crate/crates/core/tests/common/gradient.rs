//! Central finite-difference oracle for network gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xcsf_ae::neural::Network;

use super::examples::{FD_STEP, GRAD_REL_TOL};

/// Gradients smaller than this are compared on an absolute scale.
pub const GRAD_FLOOR: f64 = 1e-4;

pub struct GradientReport {
    pub networks: usize,
    pub compared: usize,
    pub max_rel_error: f64,
    pub masked: usize,
    pub masked_nonzero: usize,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRAD_REL_TOL && self.masked_nonzero == 0
    }
}

fn loss(net: &Network, x: &[f64], t: &[f64]) -> f64 {
    let o = net.forward(x).unwrap();
    0.5 * o.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

fn set(net: &mut Network, layer: usize, bias: bool, k: usize, v: f64) {
    let l = &mut *net.layers_mut()[layer];
    if bias {
        l.biases[k] = v;
    } else {
        l.weights[k] = v;
    }
}

/// Draws `count` networks with up to 5 inputs, 1 to 3 hidden units and
/// random masks, and compares every analytic gradient with a central
/// difference of the half squared-error loss.
pub fn check(count: usize, seed: u64) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientReport {
        networks: count,
        compared: 0,
        max_rel_error: 0.0,
        masked: 0,
        masked_nonzero: 0,
    };
    for _ in 0..count {
        let n_in = rng.random_range(1..=5);
        let h = rng.random_range(1..=3);
        let n_out = rng.random_range(1..=5);
        let mut net = Network::new(n_in, h, n_out, 1.0, 1e-4, &mut rng);
        for layer in net.layers_mut() {
            for b in &mut layer.biases {
                *b = rng.random_range(-1.0..1.0);
            }
            for k in 0..layer.mask.len() {
                if rng.random_bool(0.3) {
                    layer.mask[k] = false;
                    layer.weights[k] = 0.0;
                }
            }
        }
        let x: Vec<f64> = (0..n_in).map(|_| rng.random()).collect();
        let t: Vec<f64> = (0..n_out).map(|_| rng.random()).collect();
        let g = net.gradients(&x, &t).unwrap();
        let analytic = [
            (0, false, &g.hidden_weights),
            (0, true, &g.hidden_biases),
            (1, false, &g.output_weights),
            (1, true, &g.output_biases),
        ];
        for (layer_idx, bias, grads) in analytic {
            for (k, &a) in grads.iter().enumerate() {
                let layer = net.layers()[layer_idx];
                if !bias && !layer.mask[k] {
                    report.masked += 1;
                    if a != 0.0 {
                        report.masked_nonzero += 1;
                    }
                    continue;
                }
                let orig = if bias { layer.biases[k] } else { layer.weights[k] };
                set(&mut net, layer_idx, bias, k, orig + FD_STEP);
                let up = loss(&net, &x, &t);
                set(&mut net, layer_idx, bias, k, orig - FD_STEP);
                let down = loss(&net, &x, &t);
                set(&mut net, layer_idx, bias, k, orig);
                let fd = (up - down) / (2.0 * FD_STEP);
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(GRAD_FLOOR);
                report.max_rel_error = report.max_rel_error.max(rel);
                report.compared += 1;
            }
        }
    }
    report
}
