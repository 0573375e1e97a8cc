//! Fully-connected feed-forward networks used for classifier conditions and
//! predictions.
//!
//! Every network has exactly one SELU hidden layer and one logistic output
//! layer. Each layer carries its own connection mask, gradient-descent rate
//! and vector of self-adaptive mutation rates, so evolution and local search
//! act per layer.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// SELU scale.
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
/// SELU negative saturation.
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

/// Lower clamp for a layer's gradient-descent rate.
pub const ETA_MIN: f64 = 1e-4;
/// Upper clamp for a layer's gradient-descent rate.
pub const ETA_MAX: f64 = 0.01;
/// Ceiling for every self-adaptive mutation rate.
pub const MU_MAX: f64 = 1.0;

/// Standard deviation of freshly initialised (and re-enabled) weights.
pub const INIT_SIGMA: f64 = 0.1;

/// Index of each self-adaptive rate within [`Layer::mu`].
pub const MU_WEIGHTS: usize = 0;
pub const MU_NEURONS: usize = 1;
pub const MU_ETA: usize = 2;
pub const MU_CONNECTIONS: usize = 3;
pub const N_MU: usize = 4;

#[inline]
pub fn selu(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA * z
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp_m1()
    }
}

#[inline]
fn selu_gradient(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp()
    }
}

#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sigma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Selu,
    Logistic,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Selu => selu(z),
            Activation::Logistic => logistic(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn gradient(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Selu => selu_gradient(z),
            Activation::Logistic => a * (1.0 - a),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Selu => 0,
            Activation::Logistic => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Selu),
            1 => Some(Activation::Logistic),
            _ => None,
        }
    }
}

/// How the neuron rate becomes a hidden-layer size change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeuronGrowth {
    /// round((2·mu − 1) · h_M): rates above 0.5 grow the layer, rates below shrink it.
    #[default]
    Linear,
    /// round(g · mu · h_M) with g ~ N(0,1).
    Gaussian,
}

impl NeuronGrowth {
    pub fn as_str(self) -> &'static str {
        match self {
            NeuronGrowth::Linear => "linear",
            NeuronGrowth::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for NeuronGrowth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(NeuronGrowth::Linear),
            "gaussian" => Ok(NeuronGrowth::Gaussian),
            other => Err(format!("unknown neuron growth '{other}' (expected linear or gaussian)")),
        }
    }
}

/// Settings shared by all the evolutionary operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationParams {
    /// Floor for every self-adaptive rate.
    pub mu_min: f64,
    /// Maximum number of hidden neurons added or removed per event.
    pub h_mutate: usize,
    /// Cap on hidden neurons; `None` leaves growth unbounded.
    pub h_max: Option<usize>,
    pub connection_mutation: bool,
    pub growth: NeuronGrowth,
}

impl MutationParams {
    fn h_cap(&self) -> usize {
        self.h_max.unwrap_or(usize::MAX)
    }
}

/// One fully-connected layer. Weights are row-major `[n_out][n_in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    /// `true` where the connection is active.
    pub mask: Vec<bool>,
    pub activation: Activation,
    pub eta: f64,
    /// Previous weight change, used by the momentum term.
    pub weight_momentum: Vec<f64>,
    pub bias_momentum: Vec<f64>,
    pub mu: [f64; N_MU],
}

impl Layer {
    /// A fully-connected layer with N(0, sigma²) weights, zero biases, eta
    /// drawn from U[ETA_MIN, ETA_MAX] and rates from U[mu_min, 1].
    pub fn new<R: Rng + ?Sized>(
        n_in: usize,
        n_out: usize,
        activation: Activation,
        sigma: f64,
        mu_min: f64,
        rng: &mut R,
    ) -> Self {
        let mut layer = Layer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
            mask: vec![true; n_in * n_out],
            activation,
            eta: rng.random_range(ETA_MIN..=ETA_MAX),
            weight_momentum: vec![0.0; n_in * n_out],
            bias_momentum: vec![0.0; n_out],
            mu: [0.0; N_MU],
        };
        for m in &mut layer.mu {
            *m = rng.random_range(mu_min..=MU_MAX);
        }
        layer.init_weights(sigma, rng);
        layer
    }

    /// Resets the layer to a freshly initialised fully-connected state:
    /// N(0, sigma²) weights, zero biases, all connections active and empty
    /// momentum buffers.
    pub fn init_weights<R: Rng + ?Sized>(&mut self, sigma: f64, rng: &mut R) {
        for w in &mut self.weights {
            *w = gaussian(rng, sigma);
        }
        self.biases.iter_mut().for_each(|b| *b = 0.0);
        self.mask.iter_mut().for_each(|m| *m = true);
        self.reset_momentum();
    }

    pub fn reset_momentum(&mut self) {
        self.weight_momentum.iter_mut().for_each(|v| *v = 0.0);
        self.bias_momentum.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn active_weights(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Pre-activations and activations for one input vector.
    fn forward_into(&self, x: &[f64], z: &mut [f64], a: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_in);
        for (j, row) in self.weights.chunks_exact(self.n_in).enumerate() {
            // masked weights are held at exactly zero so a dense dot is safe
            let s: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            let zj = s + self.biases[j];
            z[j] = zj;
            a[j] = self.activation.apply(zj);
        }
    }

    /// Multiplies each rate by e^{N(0,1)} and clamps it to [mu_min, 1].
    pub fn self_adapt<R: Rng + ?Sized>(&mut self, mu_min: f64, rng: &mut R) {
        for m in &mut self.mu {
            *m = (*m * gaussian(rng, 1.0).exp()).clamp(mu_min, MU_MAX);
        }
    }

    /// Adds N(0, mu[0]²) to every active weight and every bias.
    pub fn mutate_weights<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let sigma = self.mu[MU_WEIGHTS];
        for (w, &m) in self.weights.iter_mut().zip(&self.mask) {
            if m {
                *w += gaussian(rng, sigma);
            }
        }
        for b in &mut self.biases {
            *b += gaussian(rng, sigma);
        }
    }

    /// Adds N(0, mu[2]²) to eta and clamps it to [ETA_MIN, ETA_MAX].
    pub fn mutate_eta<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.eta = (self.eta + gaussian(rng, self.mu[MU_ETA])).clamp(ETA_MIN, ETA_MAX);
    }

    /// Flips each connection with probability mu[3]. Disabled weights are
    /// zeroed; enabled weights restart from N(0, INIT_SIGMA²).
    pub fn mutate_connections<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let p = self.mu[MU_CONNECTIONS];
        for k in 0..self.mask.len() {
            if rng.random::<f64>() < p {
                if self.mask[k] {
                    self.mask[k] = false;
                    self.weights[k] = 0.0;
                } else {
                    self.mask[k] = true;
                    self.weights[k] = gaussian(rng, INIT_SIGMA);
                }
                self.weight_momentum[k] = 0.0;
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        let n = self.n_in * self.n_out;
        if self.weights.len() != n
            || self.mask.len() != n
            || self.weight_momentum.len() != n
            || self.biases.len() != self.n_out
            || self.bias_momentum.len() != self.n_out
        {
            return Err(Error::Invariant("layer buffer sizes disagree with dimensions".into()));
        }
        if self.weights.iter().zip(&self.mask).any(|(&w, &m)| !m && w != 0.0) {
            return Err(Error::Invariant("disabled connection holds a non-zero weight".into()));
        }
        if !(ETA_MIN..=ETA_MAX).contains(&self.eta) {
            return Err(Error::Invariant(format!("eta {} outside clamp range", self.eta)));
        }
        Ok(())
    }
}

/// Intermediate values of a forward pass, reused by backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub hidden_z: Vec<f64>,
    pub hidden_a: Vec<f64>,
    pub output_z: Vec<f64>,
    pub output: Vec<f64>,
}

impl Trace {
    fn resize(&mut self, hidden: usize, outputs: usize) {
        self.hidden_z.resize(hidden, 0.0);
        self.hidden_a.resize(hidden, 0.0);
        self.output_z.resize(outputs, 0.0);
        self.output.resize(outputs, 0.0);
    }
}

/// Gradient of the half sum-of-squares reconstruction loss with respect to
/// every weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_biases: Vec<f64>,
}

/// A SELU hidden layer followed by a logistic output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub hidden: Layer,
    pub output: Layer,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(
        n_inputs: usize,
        n_hidden: usize,
        n_outputs: usize,
        sigma: f64,
        mu_min: f64,
        rng: &mut R,
    ) -> Self {
        let hidden = Layer::new(n_inputs, n_hidden, Activation::Selu, sigma, mu_min, rng);
        let output = Layer::new(n_hidden, n_outputs, Activation::Logistic, sigma, mu_min, rng);
        Network { hidden, output }
    }

    pub fn n_inputs(&self) -> usize {
        self.hidden.n_in
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden.n_out
    }

    pub fn n_outputs(&self) -> usize {
        self.output.n_out
    }

    pub fn layers(&self) -> [&Layer; 2] {
        [&self.hidden, &self.output]
    }

    pub fn layers_mut(&mut self) -> [&mut Layer; 2] {
        [&mut self.hidden, &mut self.output]
    }

    pub fn active_weights(&self) -> usize {
        self.hidden.active_weights() + self.output.active_weights()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs() {
            return Err(Error::Dimension {
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace);
        Ok(trace.output)
    }

    /// Forward pass that keeps intermediate values. Panics in debug builds
    /// on a dimension mismatch; use [`Network::forward`] for checked calls.
    pub fn forward_trace(&self, x: &[f64], trace: &mut Trace) {
        trace.resize(self.n_hidden(), self.n_outputs());
        self.hidden.forward_into(x, &mut trace.hidden_z, &mut trace.hidden_a);
        self.output
            .forward_into(&trace.hidden_a, &mut trace.output_z, &mut trace.output);
    }

    /// First output of the network, without keeping a trace.
    pub(crate) fn forward_scalar(&self, x: &[f64], hidden: &mut Vec<f64>) -> f64 {
        let h = &self.hidden;
        hidden.clear();
        for (j, row) in h.weights.chunks_exact(h.n_in).enumerate() {
            let s: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            hidden.push(selu(s + h.biases[j]));
        }
        let o = &self.output;
        let s: f64 = o.weights[..o.n_in].iter().zip(hidden.iter()).map(|(w, a)| w * a).sum();
        o.activation.apply(s + o.biases[0])
    }

    /// Output and hidden deltas (∂E/∂z) for E = ½ Σ (O − target)².
    fn deltas(&self, trace: &Trace, target: &[f64], out_delta: &mut Vec<f64>, hid_delta: &mut Vec<f64>) {
        let o = &self.output;
        out_delta.clear();
        out_delta.extend(
            trace
                .output
                .iter()
                .zip(&trace.output_z)
                .zip(target)
                .map(|((&a, &z), &t)| (a - t) * o.activation.gradient(z, a)),
        );
        hid_delta.clear();
        hid_delta.resize(self.n_hidden(), 0.0);
        for (row, &d) in o.weights.chunks_exact(o.n_in).zip(out_delta.iter()) {
            for (acc, &w) in hid_delta.iter_mut().zip(row) {
                *acc += w * d;
            }
        }
        let h = &self.hidden;
        for ((acc, &z), &a) in hid_delta.iter_mut().zip(&trace.hidden_z).zip(&trace.hidden_a) {
            *acc *= h.activation.gradient(z, a);
        }
    }

    /// Analytic gradient of E = ½ Σ (forward(x) − target)². Disabled
    /// connections have exactly zero gradient.
    pub fn gradients(&self, x: &[f64], target: &[f64]) -> Result<Gradients> {
        self.check_io(x, target)?;
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace);
        let (mut od, mut hd) = (Vec::new(), Vec::new());
        self.deltas(&trace, target, &mut od, &mut hd);
        let outer = |layer: &Layer, delta: &[f64], input: &[f64]| -> Vec<f64> {
            let mut g = vec![0.0; layer.weights.len()];
            for (j, &d) in delta.iter().enumerate() {
                for (i, &x) in input.iter().enumerate().take(layer.n_in) {
                    let k = j * layer.n_in + i;
                    if layer.mask[k] {
                        g[k] = d * x;
                    }
                }
            }
            g
        };
        Ok(Gradients {
            hidden_weights: outer(&self.hidden, &hd, x),
            hidden_biases: hd.clone(),
            output_weights: outer(&self.output, &od, &trace.hidden_a),
            output_biases: od,
        })
    }

    fn check_io(&self, x: &[f64], target: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(Error::Dimension {
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        if target.len() != self.n_outputs() {
            return Err(Error::Dimension {
                expected: self.n_outputs(),
                found: target.len(),
            });
        }
        Ok(())
    }

    /// One step of gradient descent with momentum towards `target`:
    /// Δw_t = −η ∂E/∂w + ω Δw_{t−1}, using each layer's own η.
    pub fn sgd_update(&mut self, x: &[f64], target: &[f64], momentum: f64) -> Result<()> {
        self.check_io(x, target)?;
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace);
        self.backprop(x, target, &trace, momentum, &mut Scratch::default());
        Ok(())
    }

    /// Gradient-descent step reusing a trace from [`Network::forward_trace`]
    /// on the same `x`.
    pub fn backprop(&mut self, x: &[f64], target: &[f64], trace: &Trace, momentum: f64, scratch: &mut Scratch) {
        let Scratch { out_delta, hid_delta } = scratch;
        self.deltas(trace, target, out_delta, hid_delta);
        apply_step(&mut self.output, out_delta, &trace.hidden_a, momentum);
        apply_step(&mut self.hidden, hid_delta, x, momentum);
    }

    /// Adds a hidden neuron with N(0, INIT_SIGMA²) incoming and outgoing
    /// weights and a zero bias. With `sparse` set each new connection is
    /// active with probability 0.5.
    pub fn add_neuron<R: Rng + ?Sized>(&mut self, sparse: bool, rng: &mut R) {
        let connect = |rng: &mut R| -> (bool, f64) {
            if !sparse || rng.random::<bool>() {
                (true, gaussian(rng, INIT_SIGMA))
            } else {
                (false, 0.0)
            }
        };
        let h = &mut self.hidden;
        for _ in 0..h.n_in {
            let (m, w) = connect(rng);
            h.mask.push(m);
            h.weights.push(w);
            h.weight_momentum.push(0.0);
        }
        h.biases.push(0.0);
        h.bias_momentum.push(0.0);
        h.n_out += 1;

        let o = &mut self.output;
        let old = o.n_in;
        let mut weights = Vec::with_capacity(o.n_out * (old + 1));
        let mut mask = Vec::with_capacity(o.n_out * (old + 1));
        let mut momentum = Vec::with_capacity(o.n_out * (old + 1));
        for j in 0..o.n_out {
            let row = j * old..(j + 1) * old;
            weights.extend_from_slice(&o.weights[row.clone()]);
            mask.extend_from_slice(&o.mask[row.clone()]);
            momentum.extend_from_slice(&o.weight_momentum[row]);
            let (m, w) = connect(rng);
            weights.push(w);
            mask.push(m);
            momentum.push(0.0);
        }
        o.weights = weights;
        o.mask = mask;
        o.weight_momentum = momentum;
        o.n_in += 1;
    }

    /// Removes hidden neuron `idx` together with its outgoing column.
    pub fn remove_neuron(&mut self, idx: usize) {
        let h = &mut self.hidden;
        assert!(idx < h.n_out && h.n_out > 1, "cannot remove hidden neuron {idx}");
        let row = idx * h.n_in..(idx + 1) * h.n_in;
        h.weights.drain(row.clone());
        h.mask.drain(row.clone());
        h.weight_momentum.drain(row);
        h.biases.remove(idx);
        h.bias_momentum.remove(idx);
        h.n_out -= 1;

        let o = &mut self.output;
        let old = o.n_in;
        let keep = |k: &usize| k % old != idx;
        o.weights = o
            .weights
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(k))
            .map(|(_, &w)| w)
            .collect();
        o.mask = o
            .mask
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(k))
            .map(|(_, &m)| m)
            .collect();
        o.weight_momentum = o
            .weight_momentum
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(k))
            .map(|(_, &v)| v)
            .collect();
        o.n_in -= 1;
    }

    /// Number of hidden neurons to add (positive) or remove (negative),
    /// derived from the neuron rate and clamped to [−h_M, h_M].
    pub fn neuron_change<R: Rng + ?Sized>(&self, params: &MutationParams, rng: &mut R) -> i64 {
        let hm = params.h_mutate as f64;
        let mu = self.hidden.mu[MU_NEURONS];
        let n = match params.growth {
            NeuronGrowth::Linear => (2.0 * mu - 1.0) * hm,
            NeuronGrowth::Gaussian => gaussian(rng, 1.0) * mu * hm,
        };
        n.round().clamp(-hm, hm) as i64
    }

    /// Grows or shrinks the hidden layer by a self-adaptive amount, keeping
    /// its size within [1, h_max]. Removed neurons are chosen uniformly.
    pub fn mutate_neurons<R: Rng + ?Sized>(&mut self, params: &MutationParams, rng: &mut R) {
        let change = self.neuron_change(params, rng);
        self.resize_hidden(change, params, rng);
    }

    /// Adds or removes `change` hidden neurons, clamped to [1, h_max].
    pub fn resize_hidden<R: Rng + ?Sized>(&mut self, change: i64, params: &MutationParams, rng: &mut R) {
        let current = self.n_hidden() as i64;
        let target = (current + change).clamp(1, params.h_cap().min(i64::MAX as usize) as i64);
        for _ in current..target {
            self.add_neuron(params.connection_mutation, rng);
        }
        for _ in target..current {
            let idx = rng.random_range(0..self.n_hidden());
            self.remove_neuron(idx);
        }
    }

    /// Self-adapts the rates of every layer, then applies each enabled
    /// mutation at the resulting rates.
    pub fn mutate<R: Rng + ?Sized>(&mut self, params: &MutationParams, rng: &mut R) {
        for layer in self.layers_mut() {
            layer.self_adapt(params.mu_min, rng);
        }
        self.mutate_neurons(params, rng);
        for layer in self.layers_mut() {
            layer.mutate_weights(rng);
            layer.mutate_eta(rng);
            if params.connection_mutation {
                layer.mutate_connections(rng);
            }
        }
    }

    pub fn reset_momentum(&mut self) {
        self.hidden.reset_momentum();
        self.output.reset_momentum();
    }

    /// Verifies structural invariants: compatible dimensions, disabled
    /// weights held at zero and eta within its clamp.
    pub fn check_invariants(&self) -> Result<()> {
        self.hidden.check()?;
        self.output.check()?;
        if self.hidden.n_out != self.output.n_in {
            return Err(Error::Invariant("hidden and output layers disagree".into()));
        }
        if self.hidden.activation != Activation::Selu || self.output.activation != Activation::Logistic {
            return Err(Error::Invariant("unexpected activation".into()));
        }
        Ok(())
    }
}

/// Reusable buffers for [`Network::backprop`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    out_delta: Vec<f64>,
    hid_delta: Vec<f64>,
}

fn apply_step(layer: &mut Layer, delta: &[f64], input: &[f64], momentum: f64) {
    let eta = layer.eta;
    let n_in = layer.n_in;
    for (j, &d) in delta.iter().enumerate() {
        let row = j * n_in..(j + 1) * n_in;
        let w = &mut layer.weights[row.clone()];
        let dw = &mut layer.weight_momentum[row.clone()];
        let mask = &layer.mask[row];
        for i in 0..n_in {
            let step = if mask[i] {
                momentum * dw[i] - eta * d * input[i]
            } else {
                0.0
            };
            dw[i] = step;
            w[i] += step;
        }
        let step = momentum * layer.bias_momentum[j] - eta * d;
        layer.bias_momentum[j] = step;
        layer.biases[j] += step;
    }
}
