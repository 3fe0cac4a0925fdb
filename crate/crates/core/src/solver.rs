//! One entry point for fitting any of the four solvers from raw data,
//! including standardization, the optional bias feature and anchor selection.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::bag::{Bag, Dataset, Task};
use crate::error::{MilError, Result};
use crate::linear::{train_linear_classifier, train_linear_ranker};
use crate::local::{select_anchors, train_local_classifier, train_local_ranker, AnchorMethod, AnchorSet, LocalModel};
use crate::model::{BagScorer, LinearModel, Preprocess, WitnessResult};
use crate::rng::derive_seed;
use crate::scaling::fit_scaler;
use crate::ssgo::{TrainConfig, TrainTrace};

/// Seed stream used for anchor selection, derived from the training seed.
const ANCHOR_STREAM: u64 = 0xA7C4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "linear-class")]
    LinearClassifier,
    #[serde(rename = "linear-rank")]
    LinearRanker,
    #[serde(rename = "local-class")]
    LocalClassifier,
    #[serde(rename = "local-rank")]
    LocalRanker,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::LinearClassifier,
        SolverKind::LinearRanker,
        SolverKind::LocalClassifier,
        SolverKind::LocalRanker,
    ];

    pub fn from_parts(task: Task, local: bool) -> Self {
        match (task, local) {
            (Task::Classification, false) => SolverKind::LinearClassifier,
            (Task::Ranking, false) => SolverKind::LinearRanker,
            (Task::Classification, true) => SolverKind::LocalClassifier,
            (Task::Ranking, true) => SolverKind::LocalRanker,
        }
    }

    pub fn task(self) -> Task {
        match self {
            SolverKind::LinearClassifier | SolverKind::LocalClassifier => Task::Classification,
            SolverKind::LinearRanker | SolverKind::LocalRanker => Task::Ranking,
        }
    }

    pub fn is_local(self) -> bool {
        matches!(self, SolverKind::LocalClassifier | SolverKind::LocalRanker)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::LinearClassifier => "linear-class",
            SolverKind::LinearRanker => "linear-rank",
            SolverKind::LocalClassifier => "local-class",
            SolverKind::LocalRanker => "local-rank",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = MilError;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| MilError::InvalidParameter(format!("unknown model kind {s:?}")))
    }
}

/// Tunable hyperparameters. `anchors`, `sigma` and `anchor_method` only matter
/// for the locally-linear solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lambda: f64,
    pub anchors: usize,
    pub sigma: f64,
    pub anchor_method: AnchorMethod,
}

impl Hyper {
    pub fn linear(lambda: f64) -> Self {
        Hyper {
            lambda,
            anchors: 0,
            sigma: 0.0,
            anchor_method: AnchorMethod::KMeans,
        }
    }

    pub fn local(lambda: f64, anchors: usize, sigma: f64, anchor_method: AnchorMethod) -> Self {
        Hyper {
            lambda,
            anchors,
            sigma,
            anchor_method,
        }
    }
}

/// Number of SSGO iterations, either fixed or proportional to the number of
/// training bags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Iterations {
    Fixed(u64),
    PerBag(u64),
}

impl Iterations {
    /// Default when nothing is specified: 50 passes' worth of draws per bag.
    pub const DEFAULT: Iterations = Iterations::PerBag(50);

    pub fn resolve(self, n_bags: usize) -> u64 {
        match self {
            Iterations::Fixed(t) => t,
            Iterations::PerBag(m) => (m * n_bags as u64).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub kind: SolverKind,
    pub hyper: Hyper,
    pub iterations: Iterations,
    /// Standardize features using statistics of the training bags.
    pub scale: bool,
    /// Append a constant-1 feature after scaling.
    pub bias: bool,
}

impl SolverSpec {
    pub fn new(kind: SolverKind, hyper: Hyper) -> Self {
        SolverSpec {
            kind,
            hyper,
            iterations: Iterations::DEFAULT,
            scale: true,
            bias: false,
        }
    }

    pub fn with_hyper(mut self, hyper: Hyper) -> Self {
        self.hyper = hyper;
        self
    }
}

/// A trained model of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Linear(LinearModel),
    Local(LocalModel),
}

impl TrainedModel {
    pub fn kind(&self) -> SolverKind {
        match self {
            TrainedModel::Linear(m) => SolverKind::from_parts(m.meta().task, false),
            TrainedModel::Local(m) => SolverKind::from_parts(m.meta().task, true),
        }
    }

    pub fn preprocess(&self) -> &Preprocess {
        match self {
            TrainedModel::Linear(m) => m.preprocess(),
            TrainedModel::Local(m) => m.preprocess(),
        }
    }

    /// Dimension of raw instances this model accepts.
    pub fn input_dim(&self) -> usize {
        let p = self.preprocess();
        p.input_dim().unwrap_or_else(|| self.dim() - usize::from(p.bias))
    }

    /// Preprocesses raw bags and scores them.
    pub fn score_raw(&self, raw: &Dataset) -> Result<Vec<WitnessResult>> {
        if raw.dim() != self.input_dim() {
            return Err(MilError::DimensionMismatch {
                expected: self.input_dim(),
                found: raw.dim(),
            });
        }
        let prepared = self.preprocess().apply(raw)?;
        prepared.bags().iter().map(|b| self.witness(b)).collect()
    }
}

impl BagScorer for TrainedModel {
    fn dim(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.dim(),
            TrainedModel::Local(m) => m.dim(),
        }
    }

    fn witness(&self, bag: &Bag) -> Result<WitnessResult> {
        match self {
            TrainedModel::Linear(m) => m.witness(bag),
            TrainedModel::Local(m) => m.witness(bag),
        }
    }

    fn sq_norm(&self) -> f64 {
        match self {
            TrainedModel::Linear(m) => m.sq_norm(),
            TrainedModel::Local(m) => m.sq_norm(),
        }
    }
}

/// Anchors already selected on one training set, keyed by count, method and
/// seed. Sharing a cache between fits on *different* training sets is a
/// logic error.
#[derive(Debug, Default)]
pub struct AnchorCache {
    sets: Mutex<HashMap<(usize, AnchorMethod, u64), AnchorSet>>,
}

impl AnchorCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_select(&self, instances: &[&[f64]], k: usize, method: AnchorMethod, seed: u64) -> Result<AnchorSet> {
        let key = (k, method, seed);
        if let Some(set) = self.sets.lock().expect("anchor cache poisoned").get(&key) {
            return Ok(set.clone());
        }
        let set = select_anchors(instances, k, method, seed)?;
        self.sets
            .lock()
            .expect("anchor cache poisoned")
            .insert(key, set.clone());
        Ok(set)
    }
}

/// Fits `spec` on raw training bags. Scaling statistics and anchors come from
/// `raw_train` only.
pub fn fit(raw_train: &Dataset, spec: &SolverSpec, seed: u64) -> Result<(TrainedModel, TrainTrace)> {
    fit_with_config(raw_train, spec, seed, 0)
}

/// As [`fit`], reusing anchors from `cache` when an earlier fit on the same
/// training set already selected them.
pub fn fit_cached(
    raw_train: &Dataset,
    spec: &SolverSpec,
    seed: u64,
    cache: &AnchorCache,
) -> Result<(TrainedModel, TrainTrace)> {
    fit_inner(raw_train, spec, seed, 0, Some(cache))
}

/// As [`fit`], sampling the objective every `record_every` iterations.
pub fn fit_with_config(
    raw_train: &Dataset,
    spec: &SolverSpec,
    seed: u64,
    record_every: u64,
) -> Result<(TrainedModel, TrainTrace)> {
    fit_inner(raw_train, spec, seed, record_every, None)
}

fn fit_inner(
    raw_train: &Dataset,
    spec: &SolverSpec,
    seed: u64,
    record_every: u64,
    cache: Option<&AnchorCache>,
) -> Result<(TrainedModel, TrainTrace)> {
    let preprocess = Preprocess {
        scaler: if spec.scale { Some(fit_scaler(raw_train)?) } else { None },
        bias: spec.bias,
    };
    let train = preprocess.apply(raw_train)?;
    let cfg =
        TrainConfig::new(spec.hyper.lambda, spec.iterations.resolve(train.len()), seed).recording_every(record_every);
    let (model, trace) = match spec.kind {
        SolverKind::LinearClassifier | SolverKind::LinearRanker => {
            let (m, trace) = if spec.kind == SolverKind::LinearClassifier {
                train_linear_classifier(&train, &cfg)?
            } else {
                train_linear_ranker(&train, &cfg)?
            };
            (TrainedModel::Linear(m.with_preprocess(preprocess)?), trace)
        }
        SolverKind::LocalClassifier | SolverKind::LocalRanker => {
            let instances: Vec<&[f64]> = train.all_instances().collect();
            let (k, method, anchor_seed) = (
                spec.hyper.anchors,
                spec.hyper.anchor_method,
                derive_seed(seed, ANCHOR_STREAM),
            );
            let anchors = match cache {
                Some(c) => c.get_or_select(&instances, k, method, anchor_seed)?,
                None => select_anchors(&instances, k, method, anchor_seed)?,
            }
            .with_sigma(spec.hyper.sigma)?;
            let (m, trace) = if spec.kind == SolverKind::LocalClassifier {
                train_local_classifier(&train, &anchors, &cfg)?
            } else {
                train_local_ranker(&train, &anchors, &cfg)?
            };
            (TrainedModel::Local(m.with_preprocess(preprocess)?), trace)
        }
    };
    Ok((model, trace))
}
