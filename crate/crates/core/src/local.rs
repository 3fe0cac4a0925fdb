//! Locally-linear coding and the locally-linear multiple-instance solvers.
//!
//! An instance `x` is encoded by its local coordinates `gamma(x)` with respect
//! to `K` anchor points `V = [v_1 .. v_K]`, minimizing
//!
//! ```text
//! ||x - V gamma||^2 + sigma * sum_k gamma_k^2 ||v_k - x||^2
//! ```
//!
//! whose minimizer solves `(V^T V + sigma D_x + eps I) gamma = V^T x` with
//! `D_x = diag(||v_k - x||^2)`. A fixed ridge `eps = 1e-8` keeps the system
//! positive definite when `V^T V` is singular. No sum-to-one constraint is
//! imposed on `gamma`.
//!
//! The decision function is `f(B) = max_{x in B} <W gamma(x), x>` where
//! column `k` of the `d x K` matrix `W` is the weight vector attached to
//! anchor `k`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bag::{Bag, Dataset, Task};
use crate::error::{MilError, Result};
use crate::model::{argmax, check_dim, dot, BagScorer, ModelMeta, Preprocess, WitnessResult};
use crate::rng::{rng_from_seed, uniform_index, MilRng};
use crate::ssgo::{run_classification, run_ranking, SsgoState, TrainConfig, TrainTrace};

/// Ridge added to the diagonal of every local-coordinate system.
pub const CODING_RIDGE: f64 = 1e-8;

const KMEANS_MAX_ITERS: usize = 100;
const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorMethod {
    KMeans,
    Random,
}

impl fmt::Display for AnchorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnchorMethod::KMeans => "kmeans",
            AnchorMethod::Random => "random",
        })
    }
}

impl FromStr for AnchorMethod {
    type Err = MilError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(AnchorMethod::KMeans),
            "random" => Ok(AnchorMethod::Random),
            other => Err(MilError::InvalidParameter(format!(
                "unknown anchor method {other:?} (expected kmeans or random)"
            ))),
        }
    }
}

/// Anchor points plus the locality weight `sigma` used when coding against them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: Vec<f64>,
    gram: Vec<f64>,
    dim: usize,
    k: usize,
    sigma: f64,
    method: AnchorMethod,
    seed: u64,
}

impl AnchorSet {
    pub fn new(anchors: Vec<Vec<f64>>, sigma: f64, method: AnchorMethod, seed: u64) -> Result<Self> {
        let k = anchors.len();
        if k == 0 {
            return Err(MilError::InvalidParameter("need at least one anchor".into()));
        }
        let dim = anchors[0].len();
        if dim == 0 {
            return Err(MilError::InvalidParameter("anchors are zero-dimensional".into()));
        }
        let mut flat = Vec::with_capacity(k * dim);
        for a in &anchors {
            check_dim(dim, a.len())?;
            if a.iter().any(|v| !v.is_finite()) {
                return Err(MilError::NonFinite("anchor coordinates".into()));
            }
            flat.extend_from_slice(a);
        }
        let mut seen = HashSet::with_capacity(k);
        for a in &anchors {
            if !seen.insert(row_key(a)) {
                return Err(MilError::InvalidParameter(
                    "anchor points must be pairwise distinct".into(),
                ));
            }
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let g = dot(&flat[i * dim..(i + 1) * dim], &flat[j * dim..(j + 1) * dim]);
                gram[i * k + j] = g;
                gram[j * k + i] = g;
            }
        }
        let set = AnchorSet {
            anchors: flat,
            gram,
            dim,
            k,
            sigma: 1.0,
            method,
            seed,
        };
        set.with_sigma(sigma)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(MilError::InvalidParameter(format!(
                "sigma must be finite and non-negative, got {sigma}"
            )));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn method(&self) -> AnchorMethod {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn anchor(&self, k: usize) -> &[f64] {
        &self.anchors[k * self.dim..(k + 1) * self.dim]
    }

    pub fn anchors(&self) -> std::slice::ChunksExact<'_, f64> {
        self.anchors.chunks_exact(self.dim)
    }

    /// Local coordinates of `x`.
    pub fn code(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MilError::NonFinite("instance passed to local coding".into()));
        }
        let k = self.k;
        let mut system = DMatrix::from_row_slice(k, k, &self.gram);
        let mut rhs = DVector::zeros(k);
        for (j, v) in self.anchors().enumerate() {
            let dist2: f64 = v.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            system[(j, j)] += self.sigma * dist2 + CODING_RIDGE;
            rhs[j] = dot(v, x);
        }
        let chol = system
            .cholesky()
            .ok_or_else(|| MilError::NonFinite("local coding system is not positive definite".into()))?;
        let gamma = chol.solve(&rhs);
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(MilError::NonFinite("local coordinates".into()));
        }
        Ok(gamma.iter().copied().collect())
    }

    /// `||(V^T V + sigma D_x + eps I) gamma - V^T x||`, for verifying a solve.
    pub fn normal_equation_residual(&self, x: &[f64], gamma: &[f64]) -> f64 {
        let k = self.k;
        let mut sq = 0.0;
        for i in 0..k {
            let v = self.anchor(i);
            let dist2: f64 = v.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            let diag = (self.sigma * dist2 + CODING_RIDGE) * gamma[i];
            let row = self.gram[i * k..(i + 1) * k]
                .iter()
                .zip(gamma)
                .fold(diag, |acc, (g, c)| acc + g * c);
            let r = row - dot(v, x);
            sq += r * r;
        }
        sq.sqrt()
    }

    /// `V^T x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.anchors().map(|v| dot(v, x)).collect()
    }

    /// `V gamma`.
    pub fn reconstruct(&self, gamma: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (v, g) in self.anchors().zip(gamma) {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += g * vi;
            }
        }
        out
    }
}

/// Closed-form local coordinates of `x` against `anchors`.
pub fn local_coordinates(x: &[f64], anchors: &AnchorSet) -> Result<Vec<f64>> {
    anchors.code(x)
}

fn row_key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same point
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    // four partial sums so the loop vectorizes
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn distinct_rows<'a>(instances: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let mut seen = HashSet::with_capacity(instances.len());
    instances.iter().copied().filter(|x| seen.insert(row_key(x))).collect()
}

/// Chooses `k` anchor points from `instances`.
///
/// `Random` draws `k` distinct instances without replacement. `KMeans` runs
/// Lloyd's algorithm from k-means++ seeding for at most 100 iterations or
/// until no centroid moves by 1e-6 or more; a cluster that empties is
/// re-seeded with the point farthest from its assigned centroid. Both are
/// deterministic for a given seed. The returned set has `sigma = 1`.
pub fn select_anchors(instances: &[&[f64]], k: usize, method: AnchorMethod, seed: u64) -> Result<AnchorSet> {
    if k == 0 {
        return Err(MilError::InvalidParameter(
            "number of anchors must be at least 1".into(),
        ));
    }
    let dim = instances
        .first()
        .map(|x| x.len())
        .ok_or_else(|| MilError::InvalidParameter("no instances to select anchors from".into()))?;
    for x in instances {
        check_dim(dim, x.len())?;
    }
    let points = distinct_rows(instances);
    if points.len() < k {
        return Err(MilError::InvalidParameter(format!(
            "requested {k} anchors but only {} distinct instances exist",
            points.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let anchors = match method {
        AnchorMethod::Random => {
            let mut order: Vec<usize> = (0..points.len()).collect();
            for i in 0..k {
                let j = i + uniform_index(&mut rng, order.len() - i);
                order.swap(i, j);
            }
            order[..k].iter().map(|&i| points[i].to_vec()).collect()
        }
        AnchorMethod::KMeans => kmeans(&points, k, &mut rng),
    };
    AnchorSet::new(anchors, 1.0, method, seed)
}

fn kmeans_pp(points: &[&[f64]], k: usize, rng: &mut MilRng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[uniform_index(rng, points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, d) in d2.iter().enumerate() {
            if *d <= 0.0 {
                continue;
            }
            acc += d;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        // points are distinct and fewer than k centroids exist, so some d2 > 0
        let next = points[pick.expect("a point with positive distance")].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &next));
        }
        centroids.push(next);
    }
    centroids
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn kmeans(points: &[&[f64]], k: usize, rng: &mut MilRng) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut centroids = kmeans_pp(points, k, rng);
    let mut assign = vec![0usize; points.len()];
    let mut dist = vec![0.0; points.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assign[i] = c;
            dist[i] = d;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        let mut taken = vec![false; points.len()];
        let mut moved: f64 = 0.0;
        for c in 0..k {
            let next = if counts[c] > 0 {
                sums[c].iter().map(|s| s / counts[c] as f64).collect::<Vec<_>>()
            } else {
                let mut far = None;
                for (i, d) in dist.iter().enumerate() {
                    if !taken[i] && far.is_none_or(|(_, best)| *d > best) {
                        far = Some((i, *d));
                    }
                }
                let (i, _) = far.expect("more points than clusters");
                taken[i] = true;
                points[i].to_vec()
            };
            moved = moved.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if moved < KMEANS_TOL {
            break;
        }
    }
    centroids
}

/// Weight matrix `W` over anchors, stored as one `d`-vector per anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    weights: Vec<f64>,
    anchors: AnchorSet,
    preprocess: Preprocess,
    meta: ModelMeta,
}

impl LocalModel {
    /// `weights` holds `K` rows of length `d`; row `k` is column `k` of `W`.
    pub fn new(weights: Vec<f64>, anchors: AnchorSet, meta: ModelMeta) -> Result<Self> {
        check_dim(anchors.k() * anchors.dim(), weights.len())?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(MilError::NonFinite("local model weights".into()));
        }
        Ok(LocalModel {
            weights,
            anchors,
            preprocess: Preprocess::default(),
            meta,
        })
    }

    pub fn zeros(anchors: AnchorSet) -> Self {
        LocalModel {
            weights: vec![0.0; anchors.k() * anchors.dim()],
            anchors,
            preprocess: Preprocess::default(),
            meta: ModelMeta {
                lambda: 1.0,
                iterations: 0,
                seed: 0,
                task: Task::Classification,
            },
        }
    }

    pub fn with_preprocess(mut self, preprocess: Preprocess) -> Result<Self> {
        if let Some(d) = preprocess.input_dim() {
            check_dim(self.anchors.dim(), preprocess.output_dim(d))?;
        }
        self.preprocess = preprocess;
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight vector attached to anchor `k`.
    pub fn anchor_weights(&self, k: usize) -> &[f64] {
        let d = self.anchors.dim();
        &self.weights[k * d..(k + 1) * d]
    }

    pub fn anchors(&self) -> &AnchorSet {
        &self.anchors
    }

    pub fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    /// `<W gamma(x), x>`.
    pub fn score_instance(&self, x: &[f64]) -> Result<f64> {
        let gamma = self.anchors.code(x)?;
        Ok(coded_score(
            &self.weights,
            self.anchors.dim(),
            &gamma,
            x,
            &mut Vec::new(),
        ))
    }
}

/// `<W gamma, x>`. Forms `u = sum_k gamma_k w_k` first; the accumulation
/// has no cross-lane dependency so it vectorizes, unlike `K` separate dots.
fn coded_score(weights: &[f64], dim: usize, gamma: &[f64], x: &[f64], u: &mut Vec<f64>) -> f64 {
    u.clear();
    u.resize(dim, 0.0);
    for (g, w) in gamma.iter().zip(weights.chunks_exact(dim)) {
        for (ui, wi) in u.iter_mut().zip(w) {
            *ui += g * wi;
        }
    }
    dot(u, x)
}

impl BagScorer for LocalModel {
    fn dim(&self) -> usize {
        self.anchors.dim()
    }

    fn witness(&self, bag: &Bag) -> Result<WitnessResult> {
        check_dim(self.anchors.dim(), bag.dim())?;
        let scores = bag
            .instances()
            .map(|x| self.score_instance(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(argmax(scores))
    }

    fn sq_norm(&self) -> f64 {
        dot(&self.weights, &self.weights)
    }
}

/// `max_{x in bag} <W gamma(x), x>` with its witness index.
pub fn bag_score_local(bag: &Bag, model: &LocalModel) -> Result<WitnessResult> {
    model.witness(bag)
}

struct LocalState<'a> {
    w: Vec<f64>,
    dim: usize,
    bags: &'a [Bag],
    /// Per bag, `len * K` precomputed coordinates.
    gammas: Vec<Vec<f64>>,
    k: usize,
}

impl<'a> LocalState<'a> {
    fn new(dataset: &'a Dataset, anchors: &AnchorSet) -> Result<Self> {
        let gammas = dataset
            .bags()
            .iter()
            .map(|bag| {
                let mut flat = Vec::with_capacity(bag.len() * anchors.k());
                for x in bag.instances() {
                    flat.extend(anchors.code(x)?);
                }
                Ok(flat)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalState {
            w: vec![0.0; anchors.k() * anchors.dim()],
            dim: anchors.dim(),
            bags: dataset.bags(),
            gammas,
            k: anchors.k(),
        })
    }

    fn gamma(&self, bag: usize, instance: usize) -> &[f64] {
        &self.gammas[bag][instance * self.k..(instance + 1) * self.k]
    }
}

impl SsgoState for LocalState<'_> {
    fn n_bags(&self) -> usize {
        self.bags.len()
    }

    fn witness(&self, bag: usize) -> WitnessResult {
        let mut u = Vec::with_capacity(self.dim);
        argmax(
            self.bags[bag]
                .instances()
                .enumerate()
                .map(|(i, x)| coded_score(&self.w, self.dim, self.gamma(bag, i), x, &mut u)),
        )
    }

    fn decay(&mut self, factor: f64) {
        self.w.iter_mut().for_each(|v| *v *= factor);
    }

    fn add_scaled(&mut self, bag: usize, instance: usize, coef: f64) {
        let x = self.bags[bag].instance(instance);
        let gamma = &self.gammas[bag][instance * self.k..(instance + 1) * self.k];
        for (wk, g) in self.w.chunks_exact_mut(self.dim).zip(gamma) {
            let c = coef * g;
            for (w, xi) in wk.iter_mut().zip(x) {
                *w += c * xi;
            }
        }
    }

    fn sq_norm(&self) -> f64 {
        dot(&self.w, &self.w)
    }

    fn all_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
    }
}

fn finish(w: Vec<f64>, anchors: &AnchorSet, cfg: &TrainConfig, task: Task) -> Result<LocalModel> {
    LocalModel::new(
        w,
        anchors.clone(),
        ModelMeta {
            lambda: cfg.lambda,
            iterations: cfg.iterations,
            seed: cfg.seed,
            task,
        },
    )
}

/// Locally-linear classifier. Coordinates of every training instance are
/// computed once up front.
pub fn train_local_classifier(
    dataset: &Dataset,
    anchors: &AnchorSet,
    cfg: &TrainConfig,
) -> Result<(LocalModel, TrainTrace)> {
    cfg.validate()?;
    dataset.check_trainable(Task::Classification)?;
    check_dim(anchors.dim(), dataset.dim())?;
    let labels: Vec<f64> = dataset.bags().iter().map(|b| b.label() as f64).collect();
    let mut state = LocalState::new(dataset, anchors)?;
    let trace = run_classification(&mut state, &labels, cfg)?;
    Ok((finish(state.w, anchors, cfg, Task::Classification)?, trace))
}

/// Locally-linear ranker; classification data is ranked as in the linear ranker.
pub fn train_local_ranker(
    dataset: &Dataset,
    anchors: &AnchorSet,
    cfg: &TrainConfig,
) -> Result<(LocalModel, TrainTrace)> {
    cfg.validate()?;
    dataset.check_trainable(Task::Ranking)?;
    check_dim(anchors.dim(), dataset.dim())?;
    let ranks = dataset.ranks();
    let mut state = LocalState::new(dataset, anchors)?;
    let trace = run_ranking(&mut state, &ranks, cfg)?;
    Ok((finish(state.w, anchors, cfg, Task::Ranking)?, trace))
}
