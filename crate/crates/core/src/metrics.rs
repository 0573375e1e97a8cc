//! Per-checkpoint measurements and the area-under-curve summary.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::neural::N_MU;
use crate::xcsf::Xcsf;

/// Mean squared error (1/n) Σ (aᵢ − bᵢ)².
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Composite Simpson integral of uniformly spaced samples with unit spacing.
///
/// An odd number of points uses the 1/3 rule throughout. An even number uses
/// the 1/3 rule on all but the last three intervals and the 3/8 rule on
/// those, so the result stays exact for cubics.
pub fn simpson(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 {
        return Err(Error::Integration(format!(
            "Simpson's rule needs at least 3 samples, got {n}"
        )));
    }
    let third = |ys: &[f64]| -> f64 {
        let mut s = ys[0] + ys[ys.len() - 1];
        for (i, y) in ys.iter().enumerate().take(ys.len() - 1).skip(1) {
            s += if i % 2 == 1 { 4.0 * y } else { 2.0 * y };
        }
        s / 3.0
    };
    if n % 2 == 1 {
        return Ok(third(values));
    }
    let split = n - 4;
    let head = if split >= 2 { third(&values[..=split]) } else { 0.0 };
    let t = &values[split..];
    Ok(head + 3.0 / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]))
}

/// Area under an error curve sampled at uniformly spaced trials, with the
/// trial axis measured in checkpoint intervals.
pub fn auc_simpson(series: &[(u64, f64)]) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::Integration(format!(
            "AUC needs at least 3 checkpoints, got {}",
            series.len()
        )));
    }
    let step = series[1].0.checked_sub(series[0].0).filter(|&s| s > 0);
    let uniform = step.is_some_and(|s| series.windows(2).all(|w| w[1].0.checked_sub(w[0].0) == Some(s)));
    if !uniform {
        return Err(Error::Integration("checkpoints are not uniformly spaced".into()));
    }
    let values: Vec<f64> = series.iter().map(|&(_, v)| v).collect();
    simpson(&values)
}

/// One row of the metrics stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub trial: u64,
    /// Mean system-prediction MSE over the training trials since the
    /// previous checkpoint.
    pub train_mse: f64,
    /// Mean system-prediction MSE over the validation split.
    pub valid_mse: f64,
    /// Fraction of inputs matched by the best rule.
    pub mfrac: f64,
    /// Num-weighted mean condition hidden neurons.
    pub c_h: f64,
    /// Num-weighted mean prediction hidden neurons.
    pub p_h: f64,
    /// Num-weighted mean active condition weights.
    pub c_w: f64,
    /// Num-weighted mean active prediction weights.
    pub p_w: f64,
    /// Active condition weights summed over micro-classifiers.
    pub c_w_total: f64,
    /// Active prediction weights summed over micro-classifiers.
    pub p_w_total: f64,
    /// Mean micro match-set size over the window.
    pub m_size: f64,
    pub macro_count: usize,
    /// Num-weighted mean of each self-adaptive rate over all layers.
    pub mean_mu: [f64; N_MU],
}

pub const CSV_HEADER: &str = "trial,train_mse,valid_mse,mfrac,c_h,p_h,c_w,p_w,c_w_total,p_w_total,m_size,macro_count,mu_weights,mu_neurons,mu_eta,mu_connections";

impl Checkpoint {
    /// CSV row in [`CSV_HEADER`] order, using shortest round-trip formatting.
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.train_mse,
            self.valid_mse,
            self.mfrac,
            self.c_h,
            self.p_h,
            self.c_w,
            self.p_w,
            self.c_w_total,
            self.p_w_total,
            self.m_size,
            self.macro_count
        )
        .unwrap();
        for m in self.mean_mu {
            write!(s, ",{m}").unwrap();
        }
        s
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let cells: Vec<&str> = line.trim().split(',').collect();
        if cells.len() != 16 {
            return Err(Error::InvalidConfig(format!(
                "metrics row has {} fields, expected 16",
                cells.len()
            )));
        }
        let f = |i: usize| -> Result<f64> {
            cells[i]
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad metrics field '{}'", cells[i])))
        };
        Ok(Checkpoint {
            trial: f(0)? as u64,
            train_mse: f(1)?,
            valid_mse: f(2)?,
            mfrac: f(3)?,
            c_h: f(4)?,
            p_h: f(5)?,
            c_w: f(6)?,
            p_w: f(7)?,
            c_w_total: f(8)?,
            p_w_total: f(9)?,
            m_size: f(10)?,
            macro_count: f(11)? as usize,
            mean_mu: [f(12)?, f(13)?, f(14)?, f(15)?],
        })
    }
}

/// Structural population statistics (the neuron, weight and rate columns).
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationStats {
    pub c_h: f64,
    pub p_h: f64,
    pub c_w: f64,
    pub p_w: f64,
    pub c_w_total: f64,
    pub p_w_total: f64,
    pub macro_count: usize,
    pub mean_mu: [f64; N_MU],
}

/// Num-weighted means of network sizes and rates. Weight counts include
/// active connections only, not biases.
pub fn population_stats(system: &Xcsf) -> PopulationStats {
    let members = &system.pop.members;
    let micro = system.pop.micro_size().max(1) as f64;
    let mut stats = PopulationStats {
        c_h: 0.0,
        p_h: 0.0,
        c_w: 0.0,
        p_w: 0.0,
        c_w_total: 0.0,
        p_w_total: 0.0,
        macro_count: members.len(),
        mean_mu: [0.0; N_MU],
    };
    let mut layers = 0.0;
    for cl in members {
        let n = cl.num as f64;
        stats.c_h += n * cl.condition.n_hidden() as f64;
        stats.p_h += n * cl.prediction.n_hidden() as f64;
        stats.c_w_total += n * cl.condition.active_weights() as f64;
        stats.p_w_total += n * cl.prediction.active_weights() as f64;
        for layer in cl.condition.layers().into_iter().chain(cl.prediction.layers()) {
            for (acc, m) in stats.mean_mu.iter_mut().zip(layer.mu) {
                *acc += n * m;
            }
            layers += n;
        }
    }
    stats.c_h /= micro;
    stats.p_h /= micro;
    stats.c_w = stats.c_w_total / micro;
    stats.p_w = stats.p_w_total / micro;
    if layers > 0.0 {
        stats.mean_mu.iter_mut().for_each(|m| *m /= layers);
    }
    stats
}
