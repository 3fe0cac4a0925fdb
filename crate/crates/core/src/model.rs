//! Bag-level decision functions, hinge losses and the regularized objectives
//! shared by the linear and locally-linear solvers.
//!
//! A bag scores as its best instance: `f(B) = max_{x in B} s(x)`, where `s` is
//! `<w, x>` for a linear model. The maximizing instance is the bag's witness.

use serde::{Deserialize, Serialize};

use crate::bag::{Bag, Dataset, Task};
use crate::error::{MilError, Result};
use crate::scaling::FeatureScaler;

/// Score of a bag and the position of the instance that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub score: f64,
    pub index: usize,
}

/// Anything that scores bags through a witness instance.
pub trait BagScorer {
    /// Dimension of the (preprocessed) instances the model consumes.
    fn dim(&self) -> usize;

    /// Highest-scoring instance of `bag`; ties go to the lowest index.
    fn witness(&self, bag: &Bag) -> Result<WitnessResult>;

    /// Squared (Frobenius) norm of the weights, for the regularizer.
    fn sq_norm(&self) -> f64;
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Scans `scores` for the maximum; strict `>` keeps the lowest index on ties.
pub(crate) fn argmax(scores: impl IntoIterator<Item = f64>) -> WitnessResult {
    let mut best = WitnessResult {
        score: f64::NEG_INFINITY,
        index: 0,
    };
    for (i, s) in scores.into_iter().enumerate() {
        if i == 0 || s > best.score {
            best = WitnessResult { score: s, index: i };
        }
    }
    best
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(MilError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Transform applied to raw instances before a model sees them: optional
/// z-scoring followed by an optional constant-1 bias feature.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub scaler: Option<FeatureScaler>,
    pub bias: bool,
}

impl Preprocess {
    /// Dimension of the raw input this transform expects, if it fixes one.
    pub fn input_dim(&self) -> Option<usize> {
        self.scaler.as_ref().map(FeatureScaler::dim)
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        input_dim + usize::from(self.bias)
    }

    pub fn apply(&self, raw: &Dataset) -> Result<Dataset> {
        let scaled = match &self.scaler {
            Some(s) => s.apply(raw)?,
            None => raw.clone(),
        };
        if self.bias {
            scaled.with_bias_feature()
        } else {
            Ok(scaled)
        }
    }
}

/// Training provenance stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub lambda: f64,
    pub iterations: u64,
    pub seed: u64,
    pub task: Task,
}

/// Weight vector of the linear decision function `f(B) = max <w, x>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    preprocess: Preprocess,
    meta: ModelMeta,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, meta: ModelMeta) -> Result<Self> {
        if weights.is_empty() {
            return Err(MilError::InvalidParameter("weight vector is empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(MilError::NonFinite("linear model weights".into()));
        }
        Ok(LinearModel {
            weights,
            preprocess: Preprocess::default(),
            meta,
        })
    }

    /// Zero weights of dimension `dim`; mostly useful in tests.
    pub fn zeros(dim: usize) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            preprocess: Preprocess::default(),
            meta: ModelMeta {
                lambda: 1.0,
                iterations: 0,
                seed: 0,
                task: Task::Classification,
            },
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let mut m = Self::zeros(weights.len());
        m.weights = weights;
        if m.weights.iter().any(|w| !w.is_finite()) {
            return Err(MilError::NonFinite("linear model weights".into()));
        }
        Ok(m)
    }

    pub fn with_preprocess(mut self, preprocess: Preprocess) -> Result<Self> {
        if let Some(d) = preprocess.input_dim() {
            check_dim(self.weights.len(), preprocess.output_dim(d))?;
        }
        self.preprocess = preprocess;
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }
}

impl BagScorer for LinearModel {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn witness(&self, bag: &Bag) -> Result<WitnessResult> {
        check_dim(self.weights.len(), bag.dim())?;
        Ok(argmax(bag.instances().map(|x| dot(&self.weights, x))))
    }

    fn sq_norm(&self) -> f64 {
        dot(&self.weights, &self.weights)
    }
}

/// `max_{x in bag} <w, x>` with its witness index.
pub fn bag_score_linear(bag: &Bag, model: &LinearModel) -> Result<WitnessResult> {
    model.witness(bag)
}

/// Witness results for each bag, in input order.
pub fn predict_bags<M: BagScorer + ?Sized>(model: &M, bags: &[Bag]) -> Result<Vec<WitnessResult>> {
    bags.iter().map(|b| model.witness(b)).collect()
}

/// `max(0, 1 - y * f)`.
#[inline]
pub fn hinge(label: f64, score: f64) -> f64 {
    (1.0 - label * score).max(0.0)
}

/// `max(0, 1 - f_i + f_j) * (y_i - y_j)`.
#[inline]
pub fn pair_hinge(score_i: f64, score_j: f64, rank_gap: f64) -> f64 {
    (1.0 - score_i + score_j).max(0.0) * rank_gap
}

pub fn hinge_loss_classification<M: BagScorer + ?Sized>(bag: &Bag, model: &M) -> Result<f64> {
    let f = model.witness(bag)?.score;
    Ok(hinge(bag.label() as f64, f))
}

/// Pairwise ranking hinge for `bag_i` ranked above `bag_j` (labels are ranks).
pub fn hinge_loss_ranking<M: BagScorer + ?Sized>(bag_i: &Bag, bag_j: &Bag, model: &M) -> Result<f64> {
    if bag_i.label() <= bag_j.label() {
        return Err(MilError::Precondition(format!(
            "ranking loss needs Y_I > Y_J, got {} <= {}",
            bag_i.label(),
            bag_j.label()
        )));
    }
    let fi = model.witness(bag_i)?.score;
    let fj = model.witness(bag_j)?.score;
    Ok(pair_hinge(fi, fj, (bag_i.label() - bag_j.label()) as f64))
}

/// All ordered index pairs `(i, j)` with `ranks[i] > ranks[j]`, row-major.
pub fn rank_pairs(ranks: &[i64]) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for (i, ri) in ranks.iter().enumerate() {
        for (j, rj) in ranks.iter().enumerate() {
            if ri > rj {
                pairs.push((i as u32, j as u32));
            }
        }
    }
    pairs
}

/// `lambda/2 ||w||^2 + (1/N) sum_I max(0, 1 - Y_I f(B_I))`.
pub fn objective_classification<M: BagScorer + ?Sized>(dataset: &Dataset, model: &M, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(MilError::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    if dataset.task() != Task::Classification {
        return Err(MilError::InvalidDataset(
            "classification objective needs a classification dataset".into(),
        ));
    }
    if dataset.is_empty() {
        return Err(MilError::InvalidDataset("dataset has no bags".into()));
    }
    let mut loss = 0.0;
    for bag in dataset.bags() {
        loss += hinge_loss_classification(bag, model)?;
    }
    Ok(0.5 * lambda * model.sq_norm() + loss / dataset.len() as f64)
}

/// Mean pairwise ranking hinge over all ordered pairs plus `lambda/2 ||w||^2`.
///
/// `lambda = 0` is accepted so the bare loss can be inspected.
pub fn objective_ranking<M: BagScorer + ?Sized>(dataset: &Dataset, model: &M, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(MilError::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let ranks = dataset.ranks();
    let pairs = rank_pairs(&ranks);
    if pairs.is_empty() {
        return Err(MilError::InvalidDataset("no bag pair with Y_I > Y_J".into()));
    }
    let scores = predict_bags(model, dataset.bags())?;
    let total: f64 = pairs
        .iter()
        .map(|&(i, j)| {
            let (i, j) = (i as usize, j as usize);
            pair_hinge(scores[i].score, scores[j].score, (ranks[i] - ranks[j]) as f64)
        })
        .sum();
    Ok(0.5 * lambda * model.sq_norm() + total / pairs.len() as f64)
}
