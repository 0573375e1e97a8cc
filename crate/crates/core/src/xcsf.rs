//! The classifier-system kernel.
//!
//! A [`Xcsf`] owns a bounded population of neural classifiers. Each learning
//! trial forms the match set for one input, reinforces it (error, accuracy,
//! fitness and set-size updates followed by gradient descent on the
//! prediction networks), occasionally reproduces within it and finally
//! enforces the micro-classifier limit with size-biased deletion.
//!
//! Only the regression case is implemented: there is a single implicit
//! action, so the action set is the match set.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::mse;
use crate::neural::{MutationParams, Network, NeuronGrowth, Scratch, Trace, INIT_SIGMA};

/// Weight σ used when covering generates a condition network.
pub const COVER_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Niched classifier system.
    Xcsf,
    /// Baseline whose conditions match every input, so the whole
    /// population competes in one global niche.
    GlobalEa,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Xcsf => "xcsf",
            Mode::GlobalEa => "global_ea",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "xcsf" => Ok(Mode::Xcsf),
            "global_ea" | "globalea" | "ea" => Ok(Mode::GlobalEa),
            other => Err(format!("unknown mode '{other}' (expected xcsf or global_ea)")),
        }
    }
}

/// Learning parameters. [`Default`] gives the standard settings
/// (N = 500, ε₀ = 0.01, β = 0.1, ν = 10, θ_EA = 50, …).
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Maximum population size in micro-classifiers (N).
    pub pop_size: usize,
    /// Fill the population with random classifiers before the first trial.
    pub pop_init: bool,
    /// Target error under which accuracy is 1 (ε₀).
    pub epsilon0: f64,
    /// Update rate for error, fitness and set size (β).
    pub beta: f64,
    /// Accuracy offset (α).
    pub alpha: f64,
    /// Accuracy slope (ν).
    pub nu: f64,
    /// Fraction of mean fitness below which the deletion vote grows (δ).
    pub delta: f64,
    /// Experience required before the fitness term enters the vote (θ_del).
    pub theta_del: u64,
    pub init_fitness: f64,
    pub init_error: f64,
    /// Offspring fitness reduction (F_R).
    pub fitness_reduction: f64,
    /// Offspring error reduction (ε_R).
    pub error_reduction: f64,
    /// EA invocation frequency (θ_EA).
    pub theta_ea: f64,
    /// Offspring per EA invocation (λ).
    pub lambda: usize,
    /// Crossover probability (χ). Only 0 is supported.
    pub crossover: f64,
    pub mu_min: f64,
    /// Gradient-descent momentum (ω).
    pub momentum: f64,
    /// Initial hidden neurons (h_I).
    pub h_init: usize,
    /// Max hidden neurons added or removed per mutation (h_M).
    pub h_mutate: usize,
    /// Mapping from the neuron rate to a size change.
    pub neuron_growth: NeuronGrowth,
    pub h_max: Option<usize>,
    pub connection_mutation: bool,
    pub mode: Mode,
    /// Trials after which a never-matching classifier is removed first.
    pub stale_limit: u64,
    /// A condition matches when its output is strictly above this value.
    pub match_threshold: f64,
    /// Resampling budget for covering.
    pub cover_attempts: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            pop_size: 500,
            pop_init: true,
            epsilon0: 0.01,
            beta: 0.1,
            alpha: 1.0,
            nu: 10.0,
            delta: 0.1,
            theta_del: 20,
            init_fitness: 0.01,
            init_error: 0.0,
            fitness_reduction: 0.1,
            error_reduction: 1.0,
            theta_ea: 50.0,
            lambda: 2,
            crossover: 0.0,
            mu_min: 1e-4,
            momentum: 0.9,
            h_init: 1,
            h_mutate: 5,
            neuron_growth: NeuronGrowth::Linear,
            h_max: None,
            connection_mutation: false,
            mode: Mode::Xcsf,
            stale_limit: 10_000,
            match_threshold: 0.5,
            cover_attempts: 1_000_000,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.pop_size == 0 {
            return bad("pop_size must be at least 1");
        }
        if self.epsilon0.is_nan() || self.epsilon0 <= 0.0 {
            return bad("epsilon0 must be positive");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.alpha) || self.nu <= 0.0 {
            return bad("alpha must lie in [0, 1] and nu must be positive");
        }
        if !(self.init_fitness > 0.0 && self.init_fitness <= 1.0) {
            return bad("init_fitness must lie in (0, 1]");
        }
        if self.init_error < 0.0 {
            return bad("init_error must be non-negative");
        }
        if !(self.fitness_reduction > 0.0 && self.fitness_reduction <= 1.0) || self.error_reduction < 0.0 {
            return bad("fitness_reduction must lie in (0, 1] and error_reduction must be non-negative");
        }
        if self.crossover != 0.0 {
            return bad("crossover is not supported; chi must be 0");
        }
        if !(self.mu_min > 0.0 && self.mu_min <= 1.0) {
            return bad("mu_min must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1]");
        }
        if self.h_init == 0 || self.h_mutate == 0 {
            return bad("h_init and h_mutate must be at least 1");
        }
        if let Some(cap) = self.h_max {
            if cap < self.h_init {
                return bad("h_max must be at least h_init");
            }
        }
        if self.lambda == 0 || self.cover_attempts == 0 {
            return bad("lambda and cover_attempts must be at least 1");
        }
        Ok(())
    }

    pub fn mutation(&self) -> MutationParams {
        MutationParams {
            mu_min: self.mu_min,
            h_mutate: self.h_mutate,
            h_max: self.h_max,
            connection_mutation: self.connection_mutation,
            growth: self.neuron_growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub condition: Network,
    pub prediction: Network,
    /// Matching error ε.
    pub err: f64,
    /// Fitness F.
    pub fit: f64,
    /// Numerosity.
    pub num: u32,
    /// Experience.
    pub exp: u64,
    /// Average participated (micro) set size.
    pub set_size: f64,
    /// Trial of the last EA run in a set containing this classifier.
    pub ts: u64,
    /// Inputs seen since creation.
    pub age: u64,
    /// Inputs matched since creation.
    pub mtotal: u64,
}

impl Classifier {
    /// A classifier with fresh networks; `condition_sigma` sets the weight
    /// spread of the condition network.
    pub fn random<R: Rng + ?Sized>(
        n_features: usize,
        params: &Params,
        condition_sigma: f64,
        trial: u64,
        rng: &mut R,
    ) -> Self {
        let condition = Network::new(n_features, params.h_init, 1, condition_sigma, params.mu_min, rng);
        let prediction = Network::new(n_features, params.h_init, n_features, INIT_SIGMA, params.mu_min, rng);
        Classifier {
            condition,
            prediction,
            err: params.init_error,
            fit: params.init_fitness,
            num: 1,
            exp: 0,
            set_size: 1.0,
            ts: trial,
            age: 0,
            mtotal: 0,
        }
    }

    /// Condition network output for `x`.
    pub fn condition_output(&self, x: &[f64], hidden: &mut Vec<f64>) -> f64 {
        self.condition.forward_scalar(x, hidden)
    }

    pub fn matches(&self, x: &[f64], params: &Params) -> bool {
        match params.mode {
            Mode::GlobalEa => true,
            Mode::Xcsf => self.condition_output(x, &mut Vec::new()) > params.match_threshold,
        }
    }

    fn matches_with(&self, x: &[f64], params: &Params, hidden: &mut Vec<f64>) -> bool {
        match params.mode {
            Mode::GlobalEa => true,
            Mode::Xcsf => self.condition_output(x, hidden) > params.match_threshold,
        }
    }

    pub fn is_stale(&self, stale_limit: u64) -> bool {
        self.mtotal == 0 && self.age > stale_limit
    }

    pub fn check_invariants(&self, n_features: usize) -> Result<()> {
        self.condition.check_invariants()?;
        self.prediction.check_invariants()?;
        if self.condition.n_inputs() != n_features
            || self.prediction.n_inputs() != n_features
            || self.prediction.n_outputs() != n_features
            || self.condition.n_outputs() != 1
        {
            return Err(Error::Invariant("classifier network dimensions".into()));
        }
        if self.num == 0 {
            return Err(Error::Invariant("numerosity is zero".into()));
        }
        if self.err.is_nan() || self.err < 0.0 {
            return Err(Error::Invariant(format!("error {} is negative", self.err)));
        }
        if !(self.fit > 0.0 && self.fit <= 1.0) {
            return Err(Error::Invariant(format!("fitness {} outside (0, 1]", self.fit)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Classifier>,
    /// Micro-classifier limit N.
    pub max_size: usize,
    /// Global trial counter.
    pub trial: u64,
}

impl Population {
    pub fn new(max_size: usize) -> Self {
        Population {
            members: Vec::new(),
            max_size,
            trial: 0,
        }
    }

    /// Σ num over all members.
    pub fn micro_size(&self) -> usize {
        self.members.iter().map(|c| c.num as usize).sum()
    }

    /// Mean micro-classifier fitness, ΣF / Σnum.
    pub fn mean_fitness(&self) -> f64 {
        let micro = self.micro_size();
        if micro == 0 {
            return 0.0;
        }
        self.members.iter().map(|c| c.fit).sum::<f64>() / micro as f64
    }
}

/// κ: 1 below ε₀, otherwise α (ε/ε₀)^(−ν).
pub fn accuracy(err: f64, params: &Params) -> f64 {
    if err < params.epsilon0 {
        1.0
    } else {
        params.alpha * (err / params.epsilon0).powf(-params.nu)
    }
}

/// Deletion vote s·num, boosted by F̄/(F/num) for experienced classifiers
/// whose micro fitness is below δF̄. Stale classifiers get an infinite vote.
pub fn deletion_vote(cl: &Classifier, mean_fitness: f64, params: &Params) -> f64 {
    if cl.is_stale(params.stale_limit) {
        return f64::INFINITY;
    }
    let mut vote = cl.set_size * cl.num as f64;
    let micro_fit = cl.fit / cl.num as f64;
    if cl.exp > params.theta_del && micro_fit < params.delta * mean_fitness {
        vote *= mean_fitness / micro_fit;
    }
    vote
}

/// Fitness-weighted mean of prediction vectors: Σ F_j p_j / Σ F_j.
pub fn weighted_prediction<'a, I>(items: I, n: usize) -> Vec<f64>
where
    I: IntoIterator<Item = (f64, &'a [f64])>,
{
    let mut out = vec![0.0; n];
    let mut total = 0.0;
    for (fit, p) in items {
        total += fit;
        for (o, v) in out.iter_mut().zip(p) {
            *o += fit * v;
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    out
}

/// Index drawn with probability proportional to `weights`. Infinite weights
/// take precedence and are drawn uniformly among themselves; an all-zero
/// wheel degrades to a uniform draw.
pub fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    debug_assert!(!weights.is_empty());
    let infinite: Vec<usize> = (0..weights.len()).filter(|&i| weights[i].is_infinite()).collect();
    if !infinite.is_empty() {
        return infinite[rng.random_range(0..infinite.len())];
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return rng.random_range(0..weights.len());
    }
    let mut spin = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if spin < w {
            return i;
        }
        spin -= w;
    }
    // floating-point leftovers land on the last non-zero slot
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Result of one learning trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub prediction: Vec<f64>,
    /// MSE between the system prediction and the input.
    pub error: f64,
    /// Σ num over the match set.
    pub match_micro: usize,
    /// Number of distinct classifiers in the match set.
    pub match_macro: usize,
    pub covered: bool,
    pub ea_fired: bool,
}

/// Result of an evaluation-only pass over one input.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub prediction: Vec<f64>,
    pub match_micro: usize,
    pub match_macro: usize,
}

#[derive(Debug, Default, Clone)]
struct Workspace {
    hidden: Vec<f64>,
    traces: Vec<Trace>,
    scratch: Scratch,
}

/// A learning classifier system for autoencoding `n_features`-dimensional
/// inputs in [0, 1].
#[derive(Debug, Clone)]
pub struct Xcsf {
    pub params: Params,
    pub n_features: usize,
    pub pop: Population,
    pub rng: ChaCha8Rng,
    work: Workspace,
}

impl Xcsf {
    /// Builds the system and, when `pop_init` is set, fills the population
    /// with `pop_size` random classifiers.
    pub fn new(params: Params, n_features: usize, mut rng: ChaCha8Rng) -> Result<Self> {
        params.validate()?;
        if n_features == 0 {
            return Err(Error::InvalidConfig("feature count must be at least 1".into()));
        }
        let mut pop = Population::new(params.pop_size);
        if params.pop_init {
            for _ in 0..params.pop_size {
                pop.members
                    .push(Classifier::random(n_features, &params, INIT_SIGMA, 0, &mut rng));
            }
        }
        Ok(Xcsf {
            params,
            n_features,
            pop,
            rng,
            work: Workspace::default(),
        })
    }

    /// Reassembles a system from saved parts.
    pub fn from_parts(params: Params, n_features: usize, pop: Population, rng: ChaCha8Rng) -> Result<Self> {
        params.validate()?;
        Ok(Xcsf {
            params,
            n_features,
            pop,
            rng,
            work: Workspace::default(),
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Indices of every classifier whose condition matches `x`, without
    /// side effects.
    pub fn matching(&self, x: &[f64]) -> Vec<usize> {
        let mut hidden = Vec::new();
        (0..self.pop.members.len())
            .filter(|&i| self.pop.members[i].matches_with(x, &self.params, &mut hidden))
            .collect()
    }

    /// Forms the match set, covering when it would be empty, and bumps
    /// `mtotal` of every member. Returns the indices and whether covering ran.
    pub fn build_match_set(&mut self, x: &[f64]) -> Result<(Vec<usize>, bool)> {
        let mut hidden = std::mem::take(&mut self.work.hidden);
        let mut set: Vec<usize> = (0..self.pop.members.len())
            .filter(|&i| self.pop.members[i].matches_with(x, &self.params, &mut hidden))
            .collect();
        self.work.hidden = hidden;
        let covered = set.is_empty();
        if covered {
            let cl = cover(x, &self.params, self.pop.trial, &mut self.rng)?;
            self.pop.members.push(cl);
            set.push(self.pop.members.len() - 1);
        }
        for &i in &set {
            self.pop.members[i].mtotal += 1;
        }
        Ok((set, covered))
    }

    /// Runs one learning trial on `x` and returns the system prediction made
    /// before any update.
    pub fn run_trial(&mut self, x: &[f64]) -> Result<TrialOutcome> {
        self.check_input(x)?;
        self.pop.trial += 1;
        for cl in &mut self.pop.members {
            cl.age += 1;
        }
        let (mset, covered) = self.build_match_set(x)?;

        let mut traces = std::mem::take(&mut self.work.traces);
        traces.resize_with(mset.len(), Trace::default);
        for (t, &i) in traces.iter_mut().zip(&mset) {
            self.pop.members[i].prediction.forward_trace(x, t);
        }
        let prediction = weighted_prediction(
            mset.iter()
                .zip(&traces)
                .map(|(&i, t)| (self.pop.members[i].fit, t.output.as_slice())),
            self.n_features,
        );
        let error = mse(&prediction, x);
        let match_micro: usize = mset.iter().map(|&i| self.pop.members[i].num as usize).sum();

        self.reinforce(&mset, x, &traces);
        self.work.traces = traces;
        let ea_fired = self.maybe_run_ea(&mset)?;
        self.enforce_population_limit();

        Ok(TrialOutcome {
            prediction,
            error,
            match_micro,
            match_macro: mset.len(),
            covered,
            ea_fired,
        })
    }

    /// Updates ε, κ', F and s of every member of `mset`, then takes one
    /// gradient step on each prediction network towards `x`.
    pub fn update_set(&mut self, mset: &[usize], x: &[f64]) -> Result<()> {
        self.check_input(x)?;
        let traces: Vec<Trace> = mset
            .iter()
            .map(|&i| {
                let mut t = Trace::default();
                self.pop.members[i].prediction.forward_trace(x, &mut t);
                t
            })
            .collect();
        self.reinforce(mset, x, &traces);
        Ok(())
    }

    /// [`Xcsf::update_set`] with each member's forward pass on `x` already
    /// in `traces`.
    fn reinforce(&mut self, mset: &[usize], x: &[f64], traces: &[Trace]) {
        let p = &self.params;
        let set_micro: f64 = mset.iter().map(|&i| self.pop.members[i].num as f64).sum();
        let mut kappa = Vec::with_capacity(mset.len());
        for (&i, t) in mset.iter().zip(traces) {
            let cl = &mut self.pop.members[i];
            cl.exp += 1;
            cl.err += p.beta * (mse(x, &t.output) - cl.err);
            kappa.push(accuracy(cl.err, p) * cl.num as f64);
        }
        let total: f64 = kappa.iter().sum();
        let mut scratch = std::mem::take(&mut self.work.scratch);
        for ((&i, t), k) in mset.iter().zip(traces).zip(kappa) {
            let cl = &mut self.pop.members[i];
            let relative = if total > 0.0 {
                k / total
            } else {
                1.0 / mset.len() as f64
            };
            cl.fit += p.beta * (relative - cl.fit);
            cl.set_size += p.beta * (set_micro - cl.set_size);
            cl.prediction.backprop(x, x, t, p.momentum, &mut scratch);
        }
        self.work.scratch = scratch;
    }

    /// Runs the EA in the match set when the num-weighted mean time since
    /// its last run exceeds θ_EA. Returns whether it ran.
    pub fn maybe_run_ea(&mut self, mset: &[usize]) -> Result<bool> {
        let trial = self.pop.trial;
        let members = &mut self.pop.members;
        let micro: f64 = mset.iter().map(|&i| members[i].num as f64).sum();
        let mean_ts: f64 = mset
            .iter()
            .map(|&i| members[i].ts as f64 * members[i].num as f64)
            .sum::<f64>()
            / micro;
        if trial as f64 - mean_ts <= self.params.theta_ea {
            return Ok(false);
        }
        for &i in mset {
            members[i].ts = trial;
        }
        let fitness: Vec<f64> = mset.iter().map(|&i| members[i].fit).collect();
        let parents = [
            mset[roulette(&fitness, &mut self.rng)],
            mset[roulette(&fitness, &mut self.rng)],
        ];
        let err = (members[parents[0]].err + members[parents[1]].err) / 2.0 * self.params.error_reduction;
        let fit = (members[parents[0]].fit + members[parents[1]].fit) / 2.0 * self.params.fitness_reduction;
        let mutation = self.params.mutation();
        for k in 0..self.params.lambda {
            let mut child = members[parents[k % 2]].clone();
            child.condition.reset_momentum();
            child.prediction.reset_momentum();
            child.condition.mutate(&mutation, &mut self.rng);
            child.prediction.mutate(&mutation, &mut self.rng);
            child.err = err;
            child.fit = fit;
            child.num = 1;
            child.exp = 1;
            child.ts = trial;
            child.age = 0;
            child.mtotal = 0;
            members.push(child);
        }
        self.enforce_population_limit();
        Ok(true)
    }

    /// Deletes micro-classifiers until Σ num ≤ N. Each deletion draws two
    /// distinct candidates by deletion-vote roulette and decrements the one
    /// with more prediction hidden neurons (stale classifiers lose first;
    /// ties go to the larger vote, then to a coin flip).
    pub fn enforce_population_limit(&mut self) {
        while self.pop.micro_size() > self.pop.max_size {
            let mean_fit = self.pop.mean_fitness();
            let members = &self.pop.members;
            let votes: Vec<f64> = members
                .iter()
                .map(|c| deletion_vote(c, mean_fit, &self.params))
                .collect();
            let a = roulette(&votes, &mut self.rng);
            let loser = if members.len() > 1 {
                let mut rest = votes.clone();
                rest[a] = 0.0;
                let b = if rest.iter().all(|&v| v == 0.0) {
                    let k = self.rng.random_range(0..members.len() - 1);
                    if k >= a {
                        k + 1
                    } else {
                        k
                    }
                } else {
                    roulette(&rest, &mut self.rng)
                };
                let stale = |i: usize| members[i].is_stale(self.params.stale_limit);
                let size = |i: usize| members[i].prediction.n_hidden();
                if stale(a) != stale(b) {
                    if stale(a) {
                        a
                    } else {
                        b
                    }
                } else if size(a) != size(b) {
                    if size(a) > size(b) {
                        a
                    } else {
                        b
                    }
                } else if votes[a] != votes[b] {
                    if votes[a] > votes[b] {
                        a
                    } else {
                        b
                    }
                } else if self.rng.random::<bool>() {
                    a
                } else {
                    b
                }
            } else {
                a
            };
            let cl = &mut self.pop.members[loser];
            cl.num -= 1;
            if cl.num == 0 {
                self.pop.members.remove(loser);
            }
        }
    }

    /// System prediction for `x` without any learning or covering. When no
    /// classifier matches, the whole population's fitness-weighted
    /// prediction is used and the reported match sizes are zero.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.check_input(x)?;
        let mut mset = self.matching(x);
        let match_micro = mset.iter().map(|&i| self.pop.members[i].num as usize).sum();
        let match_macro = mset.len();
        if mset.is_empty() {
            mset = (0..self.pop.members.len()).collect();
        }
        let mut trace = Trace::default();
        let mut outputs = Vec::with_capacity(mset.len());
        for &i in &mset {
            self.pop.members[i].prediction.forward_trace(x, &mut trace);
            outputs.push(std::mem::take(&mut trace.output));
        }
        let prediction = weighted_prediction(
            mset.iter()
                .zip(&outputs)
                .map(|(&i, o)| (self.pop.members[i].fit, o.as_slice())),
            self.n_features,
        );
        Ok(Evaluation {
            prediction,
            match_micro,
            match_macro,
        })
    }

    /// The best rule: the lowest-error classifier when none is below ε₀,
    /// otherwise the below-ε₀ classifier matching the most `inputs`.
    /// Returns its index and the fraction of `inputs` it matches.
    pub fn best_classifier<'a, I>(&self, inputs: I) -> Option<(usize, f64)>
    where
        I: IntoIterator<Item = &'a [f64]>,
        I::IntoIter: Clone,
    {
        let members = &self.pop.members;
        if members.is_empty() {
            return None;
        }
        let inputs = inputs.into_iter();
        let accurate: Vec<usize> = (0..members.len())
            .filter(|&i| members[i].err < self.params.epsilon0)
            .collect();
        let mut hidden = Vec::new();
        let mut count = |i: usize| -> usize {
            inputs
                .clone()
                .filter(|x| members[i].matches_with(x, &self.params, &mut hidden))
                .count()
        };
        let (best, matched) = if accurate.is_empty() {
            let best = (0..members.len())
                .min_by(|&a, &b| members[a].err.total_cmp(&members[b].err))
                .expect("non-empty");
            (best, count(best))
        } else {
            let mut best = accurate[0];
            let mut best_count = count(best);
            for &i in &accurate[1..] {
                let c = count(i);
                if c > best_count || (c == best_count && members[i].err < members[best].err) {
                    best = i;
                    best_count = c;
                }
            }
            (best, best_count)
        };
        let total = inputs.count();
        let frac = if total == 0 { 0.0 } else { matched as f64 / total as f64 };
        Some((best, frac))
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.pop.micro_size() > self.pop.max_size {
            return Err(Error::Invariant(format!(
                "population holds {} micro-classifiers, limit {}",
                self.pop.micro_size(),
                self.pop.max_size
            )));
        }
        for cl in &self.pop.members {
            cl.check_invariants(self.n_features)?;
            for net in [&cl.condition, &cl.prediction] {
                let h = net.n_hidden();
                if h == 0 || self.params.h_max.is_some_and(|cap| h > cap) {
                    return Err(Error::Invariant(format!("hidden layer size {h} outside limits")));
                }
                for layer in net.layers() {
                    if layer.mu.iter().any(|m| !(self.params.mu_min..=1.0).contains(m)) {
                        return Err(Error::Invariant("mutation rate outside clamp range".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Generates a classifier whose condition matches `x`, resampling the
/// condition network with σ = 1 weights until it does.
pub fn cover<R: Rng + ?Sized>(x: &[f64], params: &Params, trial: u64, rng: &mut R) -> Result<Classifier> {
    let mut cl = Classifier::random(x.len(), params, COVER_SIGMA, trial, rng);
    let mut hidden = Vec::new();
    for _ in 1..params.cover_attempts {
        if cl.matches_with(x, params, &mut hidden) {
            return Ok(cl);
        }
        cl.condition = Network::new(x.len(), params.h_init, 1, COVER_SIGMA, params.mu_min, rng);
    }
    if cl.matches_with(x, params, &mut hidden) {
        return Ok(cl);
    }
    Err(Error::CoverFailed {
        attempts: params.cover_attempts,
    })
}
