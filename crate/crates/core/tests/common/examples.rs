//! Worked examples for every operation, as named checks shared by the
//! regular test suite and the acceptance report.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xcsf_ae::data::{self, CutoutSpec, Dataset, ImageShape};
use xcsf_ae::experiment::{self, Corruption, Experiment, ReconstructOptions, CHECKPOINT_FILE, METRICS_FILE};
use xcsf_ae::metrics::{self, auc_simpson, mse};
use xcsf_ae::neural::{
    logistic, selu, Activation, Layer, MutationParams, Network, NeuronGrowth, ETA_MAX, ETA_MIN, MU_CONNECTIONS, MU_ETA,
    MU_NEURONS, MU_WEIGHTS, N_MU, SELU_ALPHA, SELU_LAMBDA,
};
use xcsf_ae::xcsf::{self, accuracy, deletion_vote, roulette, weighted_prediction, Classifier, Mode, Params, Xcsf};
use xcsf_ae::{Error, ExperimentConfig};

/// Closed-form arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Sample-statistic checks: relative error of a standard deviation.
pub const SD_REL_TOL: f64 = 0.02;
/// Sample-statistic checks: absolute error of a frequency.
pub const FREQ_ABS_TOL: f64 = 0.02;
/// Log-normal self-adaptation: absolute error of the log-step mean and sd.
pub const LOG_STEP_TOL: f64 = 0.02;
/// Finite-difference gradient agreement.
pub const GRAD_REL_TOL: f64 = 1e-4;
pub const FD_STEP: f64 = 1e-6;

pub type Check = (&'static str, fn() -> Result<(), String>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
    Ok(())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

fn mutation(h_max: Option<usize>) -> MutationParams {
    MutationParams {
        mu_min: 1e-4,
        h_mutate: 1,
        h_max,
        connection_mutation: false,
        growth: NeuronGrowth::Linear,
    }
}

fn half_sse(net: &Network, x: &[f64], t: &[f64]) -> f64 {
    let o = net.forward(x).unwrap();
    0.5 * o.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

fn selu_values() -> Result<(), String> {
    ensure!(selu(0.0) == 0.0, "selu(0) = {}", selu(0.0));
    close(selu(1.0), 1.050_700_987_355_480_5, EXACT_TOL, "selu(1)")?;
    close(selu(1.0), 1.0507, 1e-4, "selu(1) to 4 places")?;
    close(selu(-1000.0), -SELU_LAMBDA * SELU_ALPHA, EXACT_TOL, "selu(-1000)")?;
    close(selu(-1000.0), -1.7581, 1e-4, "selu(-1000) to 4 places")
}

fn logistic_values() -> Result<(), String> {
    ensure!(logistic(0.0) == 0.5, "logistic(0)");
    ensure!(logistic(40.0) > 1.0 - EXACT_TOL, "logistic saturation");
    for z in [-30.0, -2.5, -0.1, 0.7, 3.0, 19.0] {
        close(logistic(z) + logistic(-z), 1.0, EXACT_TOL, "logistic symmetry")?;
    }
    Ok(())
}

fn zero_network_outputs_half() -> Result<(), String> {
    let mut net = Network::new(3, 2, 5, 0.1, 1e-4, &mut rng(1));
    for l in net.layers_mut() {
        l.weights.iter_mut().for_each(|w| *w = 0.0);
        l.biases.iter_mut().for_each(|b| *b = 0.0);
    }
    ensure!(
        net.forward(&[0.2, 0.4, 0.9]).unwrap() == vec![0.5; 5],
        "zero net output"
    );
    Ok(())
}

fn masked_network_ignores_input() -> Result<(), String> {
    let mut net = Network::new(3, 2, 3, 0.5, 1e-4, &mut rng(2));
    for l in net.layers_mut() {
        l.mask.iter_mut().for_each(|m| *m = false);
        l.weights.iter_mut().for_each(|w| *w = 0.0);
        l.biases.iter_mut().for_each(|b| *b = -0.4);
    }
    let a = net.forward(&[0.0, 0.0, 0.0]).unwrap();
    let b = net.forward(&[1.0, 0.3, 0.6]).unwrap();
    ensure!(a == b, "outputs differ: {a:?} vs {b:?}");
    Ok(())
}

fn hand_computed_forward() -> Result<(), String> {
    let mut net = Network::new(2, 1, 2, 0.1, 1e-4, &mut rng(3));
    net.hidden.weights = vec![0.5, -1.0];
    net.hidden.biases = vec![0.1];
    net.output.weights = vec![2.0, -1.5];
    net.output.biases = vec![-0.3, 0.2];
    // z = 0.5·0.4 − 1.0·0.8 + 0.1 = −0.5
    let h = 1.050_700_987_355_480_5 * 1.673_263_242_354_377_2 * ((-0.5f64).exp() - 1.0);
    let o0 = 1.0 / (1.0 + (-(2.0 * h - 0.3)).exp());
    let o1 = 1.0 / (1.0 + (-(-1.5 * h + 0.2)).exp());
    let out = net.forward(&[0.4, 0.8]).unwrap();
    close(out[0], o0, EXACT_TOL, "output 0")?;
    close(out[1], o1, EXACT_TOL, "output 1")
}

fn zero_step_is_identity() -> Result<(), String> {
    let mut net = Network::new(3, 2, 3, 0.1, 1e-4, &mut rng(4));
    for l in net.layers_mut() {
        l.eta = 0.0;
    }
    let before = net.clone();
    net.sgd_update(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9], 0.0).unwrap();
    ensure!(net == before, "network changed");
    Ok(())
}

fn single_weight_gradient_matches_finite_difference() -> Result<(), String> {
    let mut net = Network::new(1, 1, 1, 0.8, 1e-4, &mut rng(5));
    net.hidden.biases[0] = 0.2;
    net.output.biases[0] = -0.1;
    let (x, t) = ([0.6], [0.9]);
    let g = net.gradients(&x, &t).unwrap();
    let w = net.output.weights[0];
    net.output.weights[0] = w + FD_STEP;
    let up = half_sse(&net, &x, &t);
    net.output.weights[0] = w - FD_STEP;
    let down = half_sse(&net, &x, &t);
    let fd = (up - down) / (2.0 * FD_STEP);
    let rel = (g.output_weights[0] - fd).abs() / fd.abs().max(1e-12);
    ensure!(rel < GRAD_REL_TOL, "analytic {} vs fd {fd}", g.output_weights[0]);
    Ok(())
}

fn momentum_adds_previous_step() -> Result<(), String> {
    let mut net = Network::new(1, 1, 1, 0.5, 1e-4, &mut rng(6));
    net.hidden.eta = 0.0;
    net.output.eta = 0.01;
    let (x, t) = ([0.7], [0.2]);
    let g1 = net.gradients(&x, &t).unwrap().output_weights[0];
    let w0 = net.output.weights[0];
    net.sgd_update(&x, &t, 0.9).unwrap();
    let d1 = net.output.weights[0] - w0;
    close(d1, -0.01 * g1, EXACT_TOL, "first step")?;
    let g2 = net.gradients(&x, &t).unwrap().output_weights[0];
    let w1 = net.output.weights[0];
    net.sgd_update(&x, &t, 0.9).unwrap();
    close(
        net.output.weights[0] - w1,
        -0.01 * g2 + 0.9 * d1,
        EXACT_TOL,
        "second step",
    )
}

fn weight_init_statistics() -> Result<(), String> {
    let mut layer = Layer::new(1000, 100, Activation::Selu, 0.1, 1e-4, &mut rng(7));
    layer.init_weights(0.1, &mut rng(8));
    let s = sd(&layer.weights);
    ensure!(
        (s - 0.1).abs() <= SD_REL_TOL * 0.1,
        "sd {s} over {} draws",
        layer.weights.len()
    );
    ensure!(layer.biases.iter().all(|&b| b == 0.0), "nonzero bias");
    ensure!(layer.mask.iter().all(|&m| m), "inactive connection");
    Ok(())
}

fn self_adaptation_clamps_and_is_lognormal() -> Result<(), String> {
    let mut r = rng(9);
    let mut layer = Layer::new(1, 1, Activation::Selu, 0.1, 1e-4, &mut r);
    for _ in 0..2000 {
        layer.mu = [1e-4, 1.0, 1e-4, 1.0];
        layer.self_adapt(1e-4, &mut r);
        ensure!(
            layer.mu.iter().all(|m| (1e-4..=1.0).contains(m)),
            "rate escaped clamp: {:?}",
            layer.mu
        );
    }
    // the floor stays put on non-positive draws, the ceiling on non-negative ones
    let (mut floor_kept, mut ceil_kept) = (0, 0);
    for _ in 0..2000 {
        layer.mu = [1e-4, 1.0, 1e-4, 1.0];
        layer.self_adapt(1e-4, &mut r);
        floor_kept += (layer.mu[0] == 1e-4) as usize + (layer.mu[2] == 1e-4) as usize;
        ceil_kept += (layer.mu[1] == 1.0) as usize + (layer.mu[3] == 1.0) as usize;
    }
    ensure!(
        floor_kept > 1800 && ceil_kept > 1800,
        "clamped {floor_kept}, {ceil_kept} of 4000"
    );
    let mut steps = Vec::new();
    for _ in 0..25_000 {
        layer.mu = [0.01; N_MU];
        layer.self_adapt(1e-12, &mut r);
        steps.extend(layer.mu.iter().map(|m| (m / 0.01).ln()));
    }
    let mean = steps.iter().sum::<f64>() / steps.len() as f64;
    ensure!(mean.abs() < LOG_STEP_TOL, "log-step mean {mean}");
    let s = sd(&steps);
    ensure!((s - 1.0).abs() < LOG_STEP_TOL, "log-step sd {s}");
    Ok(())
}

fn weight_mutation_scale() -> Result<(), String> {
    let mut r = rng(10);
    let mut layer = Layer::new(200, 100, Activation::Selu, 0.1, 1e-4, &mut r);
    layer.mask[17] = false;
    layer.weights[17] = 0.0;
    layer.mu[MU_WEIGHTS] = 1e-4;
    let before = layer.clone();
    layer.mutate_weights(&mut r);
    let max = layer
        .weights
        .iter()
        .zip(&before.weights)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(max < 1e-3, "max |dw| {max} at mu 1e-4");
    ensure!(layer.weights[17] == 0.0, "masked weight moved");
    layer.mu[MU_WEIGHTS] = 0.5;
    let before = layer.clone();
    layer.mutate_weights(&mut r);
    ensure!(layer.weights[17] == 0.0, "masked weight moved");
    let deltas: Vec<f64> = (0..layer.weights.len())
        .filter(|&k| k != 17)
        .map(|k| layer.weights[k] - before.weights[k])
        .collect();
    let s = rms(&deltas);
    ensure!((s - 0.5).abs() <= SD_REL_TOL * 0.5, "delta sd {s}");
    Ok(())
}

fn neuron_count_clamps() -> Result<(), String> {
    let mut r = rng(11);
    let p = mutation(Some(4));
    let mut net = Network::new(3, 1, 3, 0.1, 1e-4, &mut r);
    net.resize_hidden(-1, &p, &mut r);
    ensure!(net.n_hidden() == 1, "floor: {}", net.n_hidden());
    net.resize_hidden(3, &p, &mut r);
    net.resize_hidden(1, &p, &mut r);
    ensure!(net.n_hidden() == 4, "ceiling: {}", net.n_hidden());
    net.hidden.mu[MU_NEURONS] = 1.0;
    for _ in 0..2000 {
        let p = MutationParams {
            h_mutate: 5,
            growth: NeuronGrowth::Gaussian,
            ..mutation(None)
        };
        let n = net.neuron_change(&p, &mut r);
        ensure!((-5..=5).contains(&n), "change {n} outside [-5, 5]");
    }
    net.check_invariants().map_err(|e| e.to_string())
}

fn add_remove_round_trip() -> Result<(), String> {
    let mut r = rng(12);
    let mut net = Network::new(4, 2, 4, 0.1, 1e-4, &mut r);
    let x = [0.2, 0.9, 0.4, 0.0];
    let before = net.forward(&x).unwrap();
    net.add_neuron(false, &mut r);
    ensure!(net.n_hidden() == 3, "did not grow");
    let grown = net.forward(&x).unwrap();
    let shift = before
        .iter()
        .zip(&grown)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(shift > 0.0 && shift < 0.05, "new neuron moved outputs by {shift}");
    ensure!(net.hidden.biases[2] == 0.0, "new bias nonzero");
    net.remove_neuron(2);
    ensure!(net.forward(&x).unwrap() == before, "removal did not restore outputs");
    Ok(())
}

fn eta_mutation() -> Result<(), String> {
    let mut r = rng(13);
    let mut layer = Layer::new(1, 1, Activation::Selu, 0.1, 1e-4, &mut r);
    layer.mu[MU_ETA] = 0.5;
    let (mut at_floor, mut at_ceiling) = (0, 0);
    for _ in 0..1000 {
        layer.eta = ETA_MIN;
        layer.mutate_eta(&mut r);
        ensure!((ETA_MIN..=ETA_MAX).contains(&layer.eta), "eta {}", layer.eta);
        at_floor += (layer.eta == ETA_MIN) as usize;
        layer.eta = ETA_MAX;
        layer.mutate_eta(&mut r);
        ensure!((ETA_MIN..=ETA_MAX).contains(&layer.eta), "eta {}", layer.eta);
        at_ceiling += (layer.eta == ETA_MAX) as usize;
    }
    ensure!(
        at_floor > 400 && at_ceiling > 400,
        "clamped {at_floor}/{at_ceiling} of 1000"
    );
    // mid-range rate with small steps: clamping essentially never applies
    layer.mu[MU_ETA] = 5e-4;
    let mut deltas = Vec::new();
    for _ in 0..20_000 {
        layer.eta = 0.005;
        layer.mutate_eta(&mut r);
        deltas.push(layer.eta - 0.005);
    }
    let s = rms(&deltas);
    ensure!((s - 5e-4).abs() <= SD_REL_TOL * 5e-4, "eta delta sd {s}");
    Ok(())
}

fn connection_mutation() -> Result<(), String> {
    let mut r = rng(14);
    let mut layer = Layer::new(50, 40, Activation::Selu, 0.1, 1e-4, &mut r);
    layer.mu[MU_CONNECTIONS] = 0.0;
    let before = layer.mask.clone();
    layer.mutate_connections(&mut r);
    ensure!(layer.mask == before, "mask changed at rate 0");
    layer.mu[MU_CONNECTIONS] = 0.5;
    let mut flipped = 0;
    for _ in 0..25 {
        let before = layer.mask.clone();
        layer.mutate_connections(&mut r);
        flipped += before.iter().zip(&layer.mask).filter(|(a, b)| a != b).count();
        layer.check().map_err(|e| e.to_string())?;
    }
    let frac = flipped as f64 / (25.0 * layer.mask.len() as f64);
    ensure!((frac - 0.5).abs() < FREQ_ABS_TOL, "flip fraction {frac}");
    let mut one = Layer::new(1, 1, Activation::Selu, 0.1, 1e-4, &mut r);
    one.mu[MU_CONNECTIONS] = 1.0;
    one.mask[0] = false;
    one.weights[0] = 0.0;
    one.mutate_connections(&mut r);
    ensure!(one.mask[0], "not enabled");
    one.mutate_connections(&mut r);
    ensure!(
        !one.mask[0] && one.weights[0] == 0.0,
        "disabled weight is {}",
        one.weights[0]
    );
    Ok(())
}

fn small_params() -> Params {
    Params {
        pop_size: 20,
        h_mutate: 1,
        ..Params::default()
    }
}

fn classifier(n: usize, r: &mut ChaCha8Rng) -> Classifier {
    Classifier::random(n, &small_params(), 0.1, 0, r)
}

fn matching_rules() -> Result<(), String> {
    let mut r = rng(15);
    let p = small_params();
    let mut cl = classifier(3, &mut r);
    for l in cl.condition.layers_mut() {
        l.weights.iter_mut().for_each(|w| *w = 0.0);
        l.biases.iter_mut().for_each(|b| *b = 0.0);
    }
    ensure!(!cl.matches(&[0.2, 0.4, 0.6], &p), "output 0.5 matched");
    cl.condition.output.biases[0] = 50.0;
    for x in [[0.0, 0.0, 0.0], [1.0, 0.5, 0.2], [1.0, 1.0, 1.0]] {
        ensure!(cl.matches(&x, &p), "saturated condition failed to match {x:?}");
    }
    cl.condition.output.biases[0] = -50.0;
    let ea = Params {
        mode: Mode::GlobalEa,
        ..p
    };
    ensure!(cl.matches(&[0.2, 0.4, 0.6], &ea), "global mode did not match");
    Ok(())
}

fn match_set_rules() -> Result<(), String> {
    let ea = Params {
        pop_size: 40,
        mode: Mode::GlobalEa,
        ..small_params()
    };
    let mut sys = Xcsf::new(ea, 3, rng(16)).unwrap();
    sys.pop.members[0].num = 3;
    sys.pop.members.truncate(38);
    let (set, covered) = sys.build_match_set(&[0.1, 0.5, 0.9]).unwrap();
    ensure!(!covered && set.len() == 38, "global match set {} of 38", set.len());

    let p = Params {
        pop_size: 10,
        pop_init: false,
        ..small_params()
    };
    let mut sys = Xcsf::new(p, 3, rng(17)).unwrap();
    let x = [0.3, 0.3, 0.8];
    let (set, covered) = sys.build_match_set(&x).unwrap();
    ensure!(covered && set.len() == 1, "empty population not covered");
    ensure!(sys.pop.members[set[0]].matches(&x, &sys.params), "cover does not match");
    sys.pop.members[0].num = 4;
    let (set, _) = sys.build_match_set(&x).unwrap();
    ensure!(set == vec![0], "classifier listed {} times", set.len());
    Ok(())
}

fn covering_defaults() -> Result<(), String> {
    let mut r = rng(18);
    let p = Params::default();
    let x = [0.1, 0.7, 0.3, 0.9];
    for _ in 0..20 {
        let cl = xcsf::cover(&x, &p, 0, &mut r).map_err(|e| e.to_string())?;
        ensure!(cl.matches(&x, &p), "covered rule does not match");
        ensure!(
            cl.err == 0.0 && cl.fit == 0.01,
            "initial error {} fitness {}",
            cl.err,
            cl.fit
        );
        ensure!(
            cl.condition.n_hidden() == 1 && cl.prediction.n_hidden() == 1,
            "initial hidden size"
        );
    }
    Ok(())
}

fn weighted_prediction_examples() -> Result<(), String> {
    let one = [0.3, 0.6];
    ensure!(
        weighted_prediction([(0.7, &one[..])], 2) == vec![0.3, 0.6],
        "single classifier"
    );
    let (a, b) = ([0.0, 0.2], [1.0, 0.6]);
    let p = weighted_prediction([(0.4, &a[..]), (0.4, &b[..])], 2);
    close(p[0], 0.5, EXACT_TOL, "equal fitness mean")?;
    close(p[1], 0.4, EXACT_TOL, "equal fitness mean")?;
    let (z, o) = ([0.0], [1.0]);
    let p = weighted_prediction([(0.2, &z[..]), (0.3, &o[..]), (0.5, &o[..])], 1);
    close(p[0], 0.8, EXACT_TOL, "weighted mean")
}

fn set_update_examples() -> Result<(), String> {
    let p = Params::default();
    ensure!(accuracy(0.005, &p) == 1.0, "accurate branch");
    close(accuracy(0.02, &p), 2f64.powi(-10), EXACT_TOL, "power-law branch")?;
    close(accuracy(0.02, &p), 9.77e-4, 1e-6, "power-law branch value")?;

    let mut r = rng(19);
    let mut sys = Xcsf::new(
        Params {
            pop_size: 10,
            pop_init: false,
            ..p
        },
        2,
        r.clone(),
    )
    .unwrap();
    let mut cl = classifier(2, &mut r);
    cl.condition.output.biases[0] = 60.0;
    for l in cl.prediction.layers_mut() {
        l.weights.iter_mut().for_each(|w| *w = 0.0);
    }
    cl.err = 0.1;
    cl.set_size = 4.0;
    sys.pop.members.push(cl);
    // constant 0.5 output: the instantaneous MSE of (0.5 ± d) is d² = 0.2
    let d = 0.2f64.sqrt();
    sys.update_set(&[0], &[0.5 + d, 0.5 - d]).unwrap();
    close(sys.pop.members[0].err, 0.11, EXACT_TOL, "error update")?;
    close(
        sys.pop.members[0].fit,
        0.01 + 0.1 * (1.0 - 0.01),
        EXACT_TOL,
        "fitness update",
    )?;
    close(
        sys.pop.members[0].set_size,
        4.0 + 0.1 * (1.0 - 4.0),
        EXACT_TOL,
        "set size update",
    )?;
    ensure!(sys.pop.members[0].exp == 1, "experience");
    Ok(())
}

fn ea_timing_and_offspring() -> Result<(), String> {
    let mut sys = Xcsf::new(
        Params {
            pop_size: 10,
            ..Params::default()
        },
        2,
        rng(20),
    )
    .unwrap();
    sys.pop.trial = 40;
    sys.pop.members.iter_mut().for_each(|c| c.ts = 40);
    let all: Vec<usize> = (0..10).collect();
    ensure!(!sys.maybe_run_ea(&all).unwrap(), "EA fired with mean ts = trial");

    let mut r = rng(21);
    let p = Params {
        pop_size: 10,
        pop_init: false,
        ..Params::default()
    };
    let mut base = Xcsf::new(p, 2, r.clone()).unwrap();
    for (f, e) in [(0.4, 0.02), (0.6, 0.04)] {
        let mut cl = classifier(2, &mut r);
        cl.fit = f;
        cl.err = e;
        base.pop.members.push(cl);
    }
    base.pop.trial = 1000;
    for seed in 0..64 {
        let mut sys = base.clone();
        sys.rng = rng(seed);
        ensure!(sys.maybe_run_ea(&[0, 1]).unwrap(), "EA did not fire");
        let kid = &sys.pop.members[2];
        ensure!(kid.num == 1 && kid.exp == 1, "offspring bookkeeping");
        if (kid.fit - 0.05).abs() <= EXACT_TOL {
            return close(kid.err, 0.03, EXACT_TOL, "offspring error");
        }
    }
    Err("no mixed-parent offspring in 64 draws".into())
}

fn deletion_votes() -> Result<(), String> {
    let mut r = rng(22);
    let p = Params::default();
    let mut cl = classifier(2, &mut r);
    cl.set_size = 30.0;
    cl.num = 2;
    cl.exp = 20;
    cl.fit = 1e-6;
    cl.mtotal = 1;
    close(deletion_vote(&cl, 0.5, &p), 60.0, EXACT_TOL, "inexperienced vote")?;
    cl.exp = 21;
    cl.num = 1;
    cl.fit = 0.05 * 0.4;
    close(deletion_vote(&cl, 0.4, &p), 600.0, 1e-9, "low-fitness vote")?;
    cl.mtotal = 0;
    cl.age = 10_001;
    ensure!(deletion_vote(&cl, 0.4, &p).is_infinite(), "stale vote finite");
    Ok(())
}

fn stale_rule_deleted_first() -> Result<(), String> {
    let mut r = rng(23);
    let p = Params {
        pop_size: 3,
        pop_init: false,
        ..Params::default()
    };
    let mut sys = Xcsf::new(p, 2, r.clone()).unwrap();
    for k in 0..4 {
        let mut cl = classifier(2, &mut r);
        cl.age = 20_000;
        cl.mtotal = if k == 2 { 0 } else { 5 };
        if k != 2 {
            cl.prediction.resize_hidden(5, &mutation(None), &mut r);
        }
        sys.pop.members.push(cl);
    }
    sys.enforce_population_limit();
    ensure!(sys.pop.members.iter().all(|c| c.mtotal > 0), "stale rule survived");
    Ok(())
}

fn deletion_limits() -> Result<(), String> {
    let mut sys = Xcsf::new(
        Params {
            pop_size: 10,
            ..Params::default()
        },
        3,
        rng(24),
    )
    .unwrap();
    let before = sys.pop.clone();
    sys.enforce_population_limit();
    ensure!(sys.pop == before, "deleted at the limit");

    let mut r = rng(25);
    let p = Params {
        pop_size: 1,
        pop_init: false,
        ..Params::default()
    };
    let mut sys = Xcsf::new(p, 2, r.clone()).unwrap();
    let mut big = classifier(2, &mut r);
    big.prediction.resize_hidden(29, &mutation(None), &mut r);
    let mut small = classifier(2, &mut r);
    small.prediction.resize_hidden(4, &mutation(None), &mut r);
    small.set_size = 1e6;
    sys.pop.members = vec![big, small];
    sys.enforce_population_limit();
    ensure!(
        sys.pop.members.len() == 1 && sys.pop.members[0].prediction.n_hidden() == 5,
        "30-neuron rule survived"
    );
    Ok(())
}

fn trial_bookkeeping() -> Result<(), String> {
    let p = Params {
        pop_size: 50,
        h_mutate: 1,
        ..Params::default()
    };
    let mut sys = Xcsf::new(p, 4, rng(26)).unwrap();
    let mut r = rng(27);
    for t in 1..=300u64 {
        let x: Vec<f64> = (0..4).map(|_| r.random()).collect();
        sys.run_trial(&x).map_err(|e| e.to_string())?;
        ensure!(sys.pop.trial == t, "trial counter {}", sys.pop.trial);
        ensure!(sys.pop.micro_size() <= 50, "population {}", sys.pop.micro_size());
    }
    let ea = Params {
        pop_size: 500,
        mode: Mode::GlobalEa,
        h_mutate: 1,
        ..Params::default()
    };
    let mut sys = Xcsf::new(ea, 4, rng(28)).unwrap();
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| r.random()).collect();
        let out = sys.run_trial(&x).map_err(|e| e.to_string())?;
        ensure!(out.match_micro == 500, "global match set {}", out.match_micro);
    }
    Ok(())
}

fn best_rule_selection() -> Result<(), String> {
    let mut r = rng(29);
    let p = Params {
        pop_size: 3,
        pop_init: false,
        ..Params::default()
    };
    let mut sys = Xcsf::new(p, 1, r.clone()).unwrap();
    // one hidden unit passing x through; output thresholds it at c
    let mut rule = |c: f64, err: f64| {
        let mut cl = classifier(1, &mut r);
        cl.condition.hidden.weights = vec![1.0];
        cl.condition.hidden.biases = vec![0.0];
        cl.condition.output.weights = vec![1000.0];
        cl.condition.output.biases = vec![-1000.0 * c * SELU_LAMBDA];
        cl.err = err;
        cl
    };
    sys.pop.members = vec![rule(0.4, 0.001), rule(0.1, 0.005), rule(-1.0, 0.5)];
    let grid: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64 / 10.0 + 0.05]).collect();
    let (best, frac) = sys.best_classifier(grid.iter().map(|v| v.as_slice())).unwrap();
    ensure!(best == 1, "picked {best}");
    close(frac, 0.9, EXACT_TOL, "mfrac")?;
    sys.pop.members.iter_mut().for_each(|c| c.err += 0.1);
    let (best, _) = sys.best_classifier(grid.iter().map(|v| v.as_slice())).unwrap();
    ensure!(best == 0, "argmin picked {best}");
    Ok(())
}

fn roulette_frequencies() -> Result<(), String> {
    let mut r = rng(30);
    let w = [0.1, 0.3, 0.6];
    let mut counts = [0usize; 3];
    for _ in 0..100_000 {
        counts[roulette(&w, &mut r)] += 1;
    }
    for (c, p) in counts.iter().zip(w) {
        let f = *c as f64 / 1e5;
        ensure!((f - p).abs() < FREQ_ABS_TOL, "frequency {f} for weight {p}");
    }
    Ok(())
}

fn temp_file(dir: &Path, name: &str, content: &[u8]) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn csv_loading() -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let ds = data::load_csv(&temp_file(dir.path(), "a.csv", b"0,255\n128,0\n"), false).map_err(|e| e.to_string())?;
    ensure!(ds.row(0) == [0.0, 1.0], "row 0 {:?}", ds.row(0));
    close(ds.row(1)[0], 128.0 / 255.0, EXACT_TOL, "128/255")?;
    close(ds.row(1)[0], 0.502, 1e-3, "128/255 to 3 places")?;
    ensure!(
        data::load_csv(&temp_file(dir.path(), "e.csv", b""), false).is_err(),
        "empty file accepted"
    );
    let h = data::load_csv(&temp_file(dir.path(), "h.csv", b"p0,p1\n0.25,1\n"), false).map_err(|e| e.to_string())?;
    ensure!(h.rows() == 1 && h.row(0) == [0.25, 1.0], "header not skipped");
    let mut idx = Vec::new();
    for word in [0x0803u32, 2, 2, 2] {
        idx.extend_from_slice(&word.to_be_bytes());
    }
    idx.extend_from_slice(&[255, 0, 0, 0, 0, 0, 0]);
    ensure!(
        data::load(&temp_file(dir.path(), "t.idx", &idx), false).is_err(),
        "truncated IDX accepted"
    );
    idx.push(255);
    let ds = data::load(&temp_file(dir.path(), "ok.idx", &idx), false).map_err(|e| e.to_string())?;
    ensure!(ds.row(0)[0] == 1.0 && ds.row(1)[3] == 1.0, "255 not scaled to 1");
    Ok(())
}

fn splits() -> Result<(), String> {
    let ds = Dataset::from_rows(vec![0.5; 9298], 1).unwrap();
    let a = ds.clone().split(0.9, &mut rng(31)).unwrap();
    ensure!(a.train_idx.len() == 8368 && a.valid_idx.len() == 930, "split sizes");
    let b = ds.clone().split(0.9, &mut rng(31)).unwrap();
    ensure!(
        a.train_idx == b.train_idx && a.valid_idx == b.valid_idx,
        "split not deterministic"
    );
    let full = ds.split(1.0, &mut rng(31)).unwrap();
    ensure!(full.valid_idx.is_empty() && full.train_idx.len() == 9298, "ratio 1");
    Ok(())
}

fn corruptions() -> Result<(), String> {
    let mut r = rng(32);
    let x = vec![0.5; 784];
    ensure!(data::salt_pepper(&x, 0.0, &mut r) == x, "fraction 0 changed input");
    let y = data::salt_pepper(&x, 0.1, &mut r);
    let changed = y.iter().filter(|&&v| v != 0.5).count();
    ensure!(changed == 78, "{changed} corrupted positions");
    ensure!(
        data::salt_pepper(&x, 1.0, &mut r).iter().all(|&v| v == 0.0 || v == 1.0),
        "full corruption"
    );
    let shape = ImageShape {
        height: 28,
        width: 28,
        channels: 1,
    };
    let img = vec![0.7; 784];
    let none = CutoutSpec {
        min_frac: 0.0,
        max_frac: 0.0,
    };
    ensure!(
        data::cutout(&img, Some(shape), none, &mut r).unwrap() == img,
        "zero-area cutout"
    );
    let full = CutoutSpec {
        min_frac: 1.0,
        max_frac: 1.0,
    };
    ensure!(
        data::cutout(&img, Some(shape), full, &mut r)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0),
        "full cutout"
    );
    let half = data::cutout_rect(&img, shape, 3, 9, 14, 14);
    let zeroed = half.iter().filter(|&&v| v == 0.0).count();
    ensure!(zeroed == 196, "{zeroed} zeroed");
    Ok(())
}

fn metric_examples() -> Result<(), String> {
    ensure!(mse(&[0.3, 0.7], &[0.3, 0.7]) == 0.0, "mse of equal");
    ensure!(mse(&[0.0, 0.0], &[1.0, 1.0]) == 1.0, "mse unit");
    close(mse(&[0.0, 0.5, 1.0], &[0.0, 0.0, 0.0]), 1.25 / 3.0, EXACT_TOL, "mse")?;
    let constant: Vec<(u64, f64)> = (0..11).map(|t| (t * 1000, 0.3)).collect();
    close(auc_simpson(&constant).unwrap(), 3.0, EXACT_TOL, "constant")?;
    close(
        auc_simpson(&[(0, 0.0), (1, 1.0), (2, 4.0)]).unwrap(),
        8.0 / 3.0,
        EXACT_TOL,
        "quadratic",
    )?;
    close(
        auc_simpson(&[(0, 0.0), (1, 1.0), (2, 2.0)]).unwrap(),
        2.0,
        EXACT_TOL,
        "linear",
    )?;

    let p = Params {
        pop_size: 1,
        h_init: 5,
        ..Params::default()
    };
    let sys = Xcsf::new(p, 6, rng(33)).unwrap();
    let s = metrics::population_stats(&sys);
    ensure!(s.p_h == 5.0, "P_h {}", s.p_h);
    ensure!(s.p_w == (5 * 2 * 6) as f64, "P_w {}", s.p_w);
    Ok(())
}

fn toy_config(dir: &Path, trials: u64) -> ExperimentConfig {
    let mut r = rng(34);
    let mut text = String::new();
    for _ in 0..80 {
        let a: f64 = r.random();
        text += &format!("{:.4},{:.4},{:.4},{:.4}\n", a, 1.0 - a, a * a, 0.5);
    }
    let mut cfg = ExperimentConfig {
        dataset: temp_file(dir, "toy.csv", text.as_bytes()),
        trials,
        checkpoint_interval: 100,
        image_shape: Some(ImageShape {
            height: 2,
            width: 2,
            channels: 1,
        }),
        ..ExperimentConfig::default()
    };
    cfg.params.pop_size = 50;
    cfg
}

fn runner_examples() -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let read = |p: &Path| fs::read(p).unwrap();
    experiment::run(&toy_config(d, 0), &d.join("zero")).map_err(|e| e.to_string())?;
    let lines = fs::read_to_string(d.join("zero").join(METRICS_FILE)).unwrap();
    ensure!(
        lines.lines().count() == 2,
        "trials=0 wrote {} lines",
        lines.lines().count()
    );

    let cfg = toy_config(d, 500);
    experiment::run(&cfg, &d.join("a")).map_err(|e| e.to_string())?;
    experiment::run(&cfg, &d.join("b")).map_err(|e| e.to_string())?;
    ensure!(
        read(&d.join("a").join(METRICS_FILE)) == read(&d.join("b").join(METRICS_FILE)),
        "repeat run differs"
    );

    let ckpt = d.join("a").join(CHECKPOINT_FILE);
    let opts = ReconstructOptions {
        samples: Some(5),
        ..Default::default()
    };
    let clean = experiment::reconstruct(&ckpt, &cfg.dataset, &opts, &d.join("r0")).map_err(|e| e.to_string())?;
    let zero = ReconstructOptions {
        corruption: Corruption::SaltPepper(0.0),
        ..opts
    };
    let noisy = experiment::reconstruct(&ckpt, &cfg.dataset, &zero, &d.join("r1")).map_err(|e| e.to_string())?;
    ensure!(clean == noisy, "zero noise differs from no corruption");

    let before = read(&ckpt);
    experiment::resume(&ckpt, 0, &d.join("a")).map_err(|e| e.to_string())?;
    ensure!(read(&ckpt) == before, "resume(0) changed the checkpoint");

    let mut bytes = before.clone();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    fs::write(&ckpt, bytes).unwrap();
    ensure!(
        matches!(Experiment::load(&ckpt), Err(Error::Checkpoint { .. })),
        "corrupted checkpoint loaded"
    );
    Ok(())
}

pub fn checks() -> Vec<Check> {
    vec![
        ("selu values", selu_values),
        ("logistic values", logistic_values),
        ("zero network outputs 0.5", zero_network_outputs_half),
        ("fully masked network ignores input", masked_network_ignores_input),
        ("hand-computed forward pass", hand_computed_forward),
        ("zero-rate step is identity", zero_step_is_identity),
        (
            "single-weight gradient vs finite difference",
            single_weight_gradient_matches_finite_difference,
        ),
        ("momentum adds previous step", momentum_adds_previous_step),
        ("weight initialisation statistics", weight_init_statistics),
        (
            "self-adaptation clamps and log-normal steps",
            self_adaptation_clamps_and_is_lognormal,
        ),
        ("weight mutation scale and masking", weight_mutation_scale),
        ("neuron count clamps", neuron_count_clamps),
        ("add/remove neuron round trip", add_remove_round_trip),
        ("learning-rate mutation", eta_mutation),
        ("connection mutation", connection_mutation),
        ("condition matching", matching_rules),
        ("match set formation and covering", match_set_rules),
        ("covering defaults", covering_defaults),
        ("fitness-weighted prediction", weighted_prediction_examples),
        ("error, accuracy and fitness updates", set_update_examples),
        ("EA timing and offspring parameters", ea_timing_and_offspring),
        ("deletion votes", deletion_votes),
        ("stale rule deleted first", stale_rule_deleted_first),
        ("population limit enforcement", deletion_limits),
        ("trial bookkeeping", trial_bookkeeping),
        ("best rule selection", best_rule_selection),
        ("roulette frequencies", roulette_frequencies),
        ("dataset loading", csv_loading),
        ("train/validation split", splits),
        ("input corruption", corruptions),
        ("mse, AUC and structure metrics", metric_examples),
        ("runner, reconstruction and resume", runner_examples),
    ]
}
