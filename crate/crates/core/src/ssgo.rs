//! Stochastic sub-gradient loops shared by the linear and locally-linear
//! solvers.
//!
//! Each iteration samples one bag (classification) or one ordered bag pair
//! (ranking), recomputes the witness against the current weights, steps with
//! `eta_t = 1 / (lambda t)`, and applies the hinge sub-gradient when the margin
//! is violated. The returned weights are the last iterate, with no averaging
//! or projection.

use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};
use crate::model::{hinge, pair_hinge, rank_pairs, WitnessResult};
use crate::rng::{rng_from_seed, uniform_index};

/// Sign convention for the ranking update on a violated pair `(I, J)`.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RankUpdate {
    /// Adds `eta (x_I - x_J)(Y_I - Y_J)`, i.e. steps against the sub-gradient.
    #[default]
    Descent,
    /// Adds `eta (x_J - x_I)(Y_I - Y_J)`. Kept only to demonstrate in tests
    /// that it ascends the pairwise loss.
    Mirrored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub iterations: u64,
    pub seed: u64,
    /// Record the objective every this many iterations; 0 disables sampling.
    pub record_objective_every: u64,
    #[doc(hidden)]
    #[serde(skip)]
    pub rank_update: RankUpdate,
}

impl TrainConfig {
    pub fn new(lambda: f64, iterations: u64, seed: u64) -> Self {
        TrainConfig {
            lambda,
            iterations,
            seed,
            record_objective_every: 0,
            rank_update: RankUpdate::Descent,
        }
    }

    pub fn recording_every(mut self, period: u64) -> Self {
        self.record_objective_every = period;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(MilError::InvalidParameter(format!(
                "lambda must be a positive finite number, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(MilError::InvalidParameter("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Convergence diagnostics from one training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// `(t, objective(w_t))`; `t = 1` is the zero initialization and
    /// `t = T + 1` the returned weights.
    pub objective_samples: Vec<(u64, f64)>,
    /// Bags (or pairs) violating the unit margin under the returned weights.
    pub final_violations: usize,
}

/// Mutable weights plus whatever per-instance data the solver precomputed.
pub(crate) trait SsgoState {
    fn n_bags(&self) -> usize;
    fn witness(&self, bag: usize) -> WitnessResult;
    /// `weights *= factor`.
    fn decay(&mut self, factor: f64);
    /// Adds `coef` times the sub-gradient direction of `instance` in `bag`.
    fn add_scaled(&mut self, bag: usize, instance: usize, coef: f64);
    fn sq_norm(&self) -> f64;
    fn all_finite(&self) -> bool;
}

fn step_size(lambda: f64, t: u64) -> f64 {
    1.0 / (lambda * t as f64)
}

fn should_record(cfg: &TrainConfig, t: u64) -> bool {
    let p = cfg.record_objective_every;
    p > 0 && (t == 1 || (t - 1).is_multiple_of(p) || t == cfg.iterations + 1)
}

fn non_finite(t: u64) -> MilError {
    MilError::NonFinite(format!("weights diverged at iteration {t}"))
}

fn classification_objective<S: SsgoState>(state: &S, labels: &[f64], lambda: f64) -> (f64, usize) {
    let mut loss = 0.0;
    let mut violations = 0;
    for (b, &y) in labels.iter().enumerate() {
        let f = state.witness(b).score;
        loss += hinge(y, f);
        if y * f < 1.0 {
            violations += 1;
        }
    }
    (0.5 * lambda * state.sq_norm() + loss / labels.len() as f64, violations)
}

fn ranking_objective<S: SsgoState>(state: &S, ranks: &[i64], pairs: &[(u32, u32)], lambda: f64) -> (f64, usize) {
    let scores: Vec<f64> = (0..state.n_bags()).map(|b| state.witness(b).score).collect();
    let mut loss = 0.0;
    let mut violations = 0;
    for &(i, j) in pairs {
        let (i, j) = (i as usize, j as usize);
        loss += pair_hinge(scores[i], scores[j], (ranks[i] - ranks[j]) as f64);
        if scores[i] - scores[j] < 1.0 {
            violations += 1;
        }
    }
    (0.5 * lambda * state.sq_norm() + loss / pairs.len() as f64, violations)
}

/// Classification loop; `labels[b]` is -1.0 or +1.0.
pub(crate) fn run_classification<S: SsgoState>(state: &mut S, labels: &[f64], cfg: &TrainConfig) -> Result<TrainTrace> {
    cfg.validate()?;
    let n = state.n_bags();
    debug_assert_eq!(n, labels.len());
    let mut rng = rng_from_seed(cfg.seed);
    let mut trace = TrainTrace::default();
    let lambda = cfg.lambda;

    for t in 1..=cfg.iterations {
        if should_record(cfg, t) {
            trace
                .objective_samples
                .push((t, classification_objective(state, labels, lambda).0));
        }
        let b = uniform_index(&mut rng, n);
        let y = labels[b];
        let w = state.witness(b);
        if !w.score.is_finite() {
            return Err(non_finite(t));
        }
        let eta = step_size(lambda, t);
        state.decay(1.0 - eta * lambda);
        if y * w.score < 1.0 {
            state.add_scaled(b, w.index, eta * y);
        }
    }

    if !state.all_finite() {
        return Err(non_finite(cfg.iterations));
    }
    let (objective, violations) = classification_objective(state, labels, lambda);
    if should_record(cfg, cfg.iterations + 1) {
        trace.objective_samples.push((cfg.iterations + 1, objective));
    }
    trace.final_violations = violations;
    Ok(trace)
}

/// Ranking loop over pairs sampled uniformly from `{(I, J) : Y_I > Y_J}`.
pub(crate) fn run_ranking<S: SsgoState>(state: &mut S, ranks: &[i64], cfg: &TrainConfig) -> Result<TrainTrace> {
    cfg.validate()?;
    let pairs = rank_pairs(ranks);
    if pairs.is_empty() {
        return Err(MilError::InvalidDataset("no bag pair with Y_I > Y_J".into()));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut trace = TrainTrace::default();
    let lambda = cfg.lambda;

    for t in 1..=cfg.iterations {
        if should_record(cfg, t) {
            trace
                .objective_samples
                .push((t, ranking_objective(state, ranks, &pairs, lambda).0));
        }
        let (i, j) = pairs[uniform_index(&mut rng, pairs.len())];
        let (i, j) = (i as usize, j as usize);
        let wi = state.witness(i);
        let wj = state.witness(j);
        if !wi.score.is_finite() || !wj.score.is_finite() {
            return Err(non_finite(t));
        }
        let eta = step_size(lambda, t);
        state.decay(1.0 - eta * lambda);
        if wi.score - wj.score < 1.0 {
            let coef = eta * (ranks[i] - ranks[j]) as f64;
            let (up, down) = match cfg.rank_update {
                RankUpdate::Descent => ((i, wi.index), (j, wj.index)),
                RankUpdate::Mirrored => ((j, wj.index), (i, wi.index)),
            };
            state.add_scaled(up.0, up.1, coef);
            state.add_scaled(down.0, down.1, -coef);
        }
    }

    if !state.all_finite() {
        return Err(non_finite(cfg.iterations));
    }
    let (objective, violations) = ranking_objective(state, ranks, &pairs, lambda);
    if should_record(cfg, cfg.iterations + 1) {
        trace.objective_samples.push((cfg.iterations + 1, objective));
    }
    trace.final_violations = violations;
    Ok(trace)
}
