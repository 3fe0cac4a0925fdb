//! Cross-validation, leave-one-bag-out and grid search.
//!
//! Folds are drawn at the bag level, so all instances of a bag stay together.
//! Every run `r` gets its own seed `derive_seed(seed, r)` which fixes both the
//! fold plan and the training streams, so a report is reproducible from
//! `(dataset, spec, options)` alone. Work items may run on a thread pool but
//! are always merged by `(run, fold)` index.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bag::{Dataset, Task};
use crate::error::{MilError, Result};
use crate::local::AnchorMethod;
use crate::metrics::{accuracy, auc_pr, auc_roc, auc_roc_partial, pairwise_order_accuracy, pick_threshold, ScoredBag};
use crate::rng::{derive_seed, rng_from_seed, uniform_index};
use crate::solver::{fit, fit_cached, AnchorCache, Hyper, SolverSpec, TrainedModel};

const TRAIN_STREAM: u64 = 0x7EA1;
const INNER_STREAM: u64 = 0x1AA3;

/// Seed of run `run` under master seed `seed`; it fixes that run's fold plan.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    derive_seed(seed, run as u64)
}

/// Training seed used for every fold of a run.
pub fn train_seed(run_seed: u64) -> u64 {
    derive_seed(run_seed, TRAIN_STREAM)
}

/// Assignment of every bag to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub stratified: bool,
    pub seed: u64,
    /// `assignments[i]` is the fold of the dataset's `i`-th bag.
    pub assignments: Vec<usize>,
    pub bag_ids: Vec<String>,
}

impl FoldPlan {
    pub fn fold_of(&self, bag_id: &str) -> Option<usize> {
        self.bag_ids
            .iter()
            .position(|id| id == bag_id)
            .map(|i| self.assignments[i])
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

fn shuffle(indices: &mut [usize], rng: &mut crate::rng::MilRng) {
    for i in (1..indices.len()).rev() {
        let j = uniform_index(rng, i + 1);
        indices.swap(i, j);
    }
}

/// Splits bags into `k` folds. When stratified, each label value is shuffled
/// separately and dealt round-robin, so per-class fold sizes differ by at
/// most one.
pub fn make_folds(dataset: &Dataset, k: usize, stratified: bool, seed: u64) -> Result<FoldPlan> {
    let n = dataset.len();
    if k < 2 {
        return Err(MilError::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(MilError::InvalidParameter(format!("{k} folds requested for {n} bags")));
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    if stratified {
        let mut by_label: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, b) in dataset.bags().iter().enumerate() {
            by_label.entry(b.label()).or_default().push(i);
        }
        for (label, mut idx) in by_label {
            if idx.len() < k {
                return Err(MilError::InvalidParameter(format!(
                    "label {label} has {} bags, fewer than {k} folds",
                    idx.len()
                )));
            }
            shuffle(&mut idx, &mut rng);
            order.extend(idx);
        }
    } else {
        order.extend(0..n);
        shuffle(&mut order, &mut rng);
    }
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan {
        k,
        stratified,
        seed,
        assignments,
        bag_ids: dataset.bags().iter().map(|b| b.id().to_string()).collect(),
    })
}

/// Lists of candidate values; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub anchors: Vec<usize>,
    #[serde(default)]
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub anchor_method: Vec<AnchorMethod>,
}

impl HyperGrid {
    pub fn lambdas(lambda: Vec<f64>) -> Self {
        HyperGrid {
            lambda,
            anchors: Vec::new(),
            sigma: Vec::new(),
            anchor_method: Vec::new(),
        }
    }

    /// Grid points for `spec`; unspecified local axes fall back to the spec's
    /// own values.
    pub fn points(&self, spec: &SolverSpec) -> Result<Vec<Hyper>> {
        if self.lambda.is_empty() {
            return Err(MilError::InvalidParameter("grid has no lambda values".into()));
        }
        if let Some(l) = self.lambda.iter().find(|l| !(**l > 0.0)) {
            return Err(MilError::InvalidParameter(format!("grid lambda {l} is not positive")));
        }
        if !spec.kind.is_local() {
            return Ok(self
                .lambda
                .iter()
                .map(|&l| Hyper {
                    lambda: l,
                    ..spec.hyper
                })
                .collect());
        }
        fn or<T: Copy>(v: &[T], d: T) -> Vec<T> {
            if v.is_empty() {
                vec![d]
            } else {
                v.to_vec()
            }
        }
        let anchors = or(&self.anchors, spec.hyper.anchors);
        let sigmas = or(&self.sigma, spec.hyper.sigma);
        let methods = or(&self.anchor_method, spec.hyper.anchor_method);
        if anchors.contains(&0) {
            return Err(MilError::InvalidParameter(
                "grid anchor count must be at least 1".into(),
            ));
        }
        let mut out = Vec::new();
        for &lambda in &self.lambda {
            for &k in &anchors {
                for &sigma in &sigmas {
                    for &method in &methods {
                        out.push(Hyper::local(lambda, k, sigma, method));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Inner grid search performed on each outer training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub grid: HyperGrid,
    pub inner_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Worker threads; 1 runs everything on the calling thread.
    #[serde(skip)]
    pub jobs: usize,
    pub tuning: Option<Tuning>,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: 10,
            runs: 5,
            seed: 0,
            stratified: true,
            jobs: 1,
            tuning: None,
        }
    }
}

/// Mean and population standard deviation over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Summary { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutScore {
    pub run: usize,
    pub fold: usize,
    pub bag_id: String,
    pub label: i64,
    pub score: f64,
    pub witness: usize,
    /// Predicted class under the fold's threshold; absent for multi-rank data.
    pub predicted: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub run: usize,
    pub fold: usize,
    pub n_test: usize,
    pub hyper: Hyper,
    pub threshold: Option<f64>,
    pub accuracy: Option<f64>,
    /// Only when the held-out fold contains both classes.
    pub auc_roc: Option<f64>,
    pub train_violations: usize,
}

/// Metrics on one run's pooled held-out scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub accuracy: Option<f64>,
    pub auc_roc: Option<f64>,
    pub auc_roc_01: Option<f64>,
    pub auc_pr: Option<f64>,
    pub pairwise_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummaries {
    pub accuracy: Option<Summary>,
    pub auc_roc: Option<Summary>,
    pub auc_roc_01: Option<Summary>,
    pub auc_pr: Option<Summary>,
    pub pairwise_accuracy: Option<Summary>,
}

impl MetricSummaries {
    /// `(name, summary)` for every metric that was computed.
    pub fn rows(&self) -> Vec<(&'static str, Summary)> {
        [
            ("accuracy", self.accuracy),
            ("auc_roc", self.auc_roc),
            ("auc_roc_0.1", self.auc_roc_01),
            ("auc_pr", self.auc_pr),
            ("pairwise_accuracy", self.pairwise_accuracy),
        ]
        .into_iter()
        .filter_map(|(n, s)| s.map(|s| (n, s)))
        .collect()
    }
}

/// Outcome of a cross-validation. `seconds` holds per-run wall-clock time
/// (summed over that run's folds) and is left out of serialization so the
/// serialized report is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub solver: SolverSpec,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub stratified: bool,
    pub tuning: Option<Tuning>,
    pub fold_results: Vec<FoldResult>,
    pub run_metrics: Vec<RunMetrics>,
    pub summary: MetricSummaries,
    pub held_out: Vec<HeldOutScore>,
    #[serde(skip)]
    pub seconds: Vec<f64>,
}

impl EvalReport {
    /// Main selection metric: mean AUC-ROC for binary labels, mean pairwise
    /// order accuracy for multi-rank labels.
    pub fn selection_score(&self) -> f64 {
        self.summary
            .auc_roc
            .or(self.summary.pairwise_accuracy)
            .map_or(f64::NEG_INFINITY, |s| s.mean)
    }

    /// Number of models trained (one per run and fold).
    pub fn models_trained(&self) -> usize {
        self.fold_results.len()
    }
}

struct FoldOutput {
    result: FoldResult,
    scores: Vec<HeldOutScore>,
    seconds: f64,
}

#[allow(clippy::too_many_arguments)]
fn eval_fold(
    dataset: &Dataset,
    spec: &SolverSpec,
    plan: &FoldPlan,
    run: usize,
    fold: usize,
    run_seed: u64,
    tuning: Option<&Tuning>,
    cache: Option<&AnchorCache>,
) -> Result<FoldOutput> {
    let start = Instant::now();
    let train = dataset.subset(&plan.train_indices(fold));
    let test_idx = plan.test_indices(fold);
    let test = dataset.subset(&test_idx);

    let hyper = match tuning {
        Some(t) => {
            grid_search(
                &train,
                spec,
                &t.grid,
                t.inner_folds,
                derive_seed(run_seed, INNER_STREAM),
                1,
            )?
            .best
        }
        None => spec.hyper,
    };
    let spec = spec.with_hyper(hyper);
    let seed = train_seed(run_seed);
    let (model, trace) = match cache {
        Some(c) => fit_cached(&train, &spec, seed, c)?,
        None => fit(&train, &spec, seed)?,
    };

    let binary = dataset.has_binary_labels();
    let threshold = if !binary {
        None
    } else if spec.kind.task() == Task::Classification {
        Some(0.0)
    } else {
        Some(pick_threshold(&score_bags(&model, &train)?)?)
    };

    let test_scores = model.score_raw(&test)?;
    let scored: Vec<ScoredBag> = test
        .bags()
        .iter()
        .zip(&test_scores)
        .map(|(b, w)| ScoredBag::new(b.id(), b.label(), w.score))
        .collect();
    let held_out = test
        .bags()
        .iter()
        .zip(&test_scores)
        .map(|(b, w)| HeldOutScore {
            run,
            fold,
            bag_id: b.id().to_string(),
            label: b.label(),
            score: w.score,
            witness: w.index,
            predicted: threshold.map(|t| if w.score >= t { 1 } else { -1 }),
        })
        .collect();
    let fold_accuracy = match threshold {
        Some(t) => Some(accuracy(&scored, t)?),
        None => None,
    };
    let has_both = binary && scored.iter().any(|s| s.true_label > 0) && scored.iter().any(|s| s.true_label < 0);
    Ok(FoldOutput {
        result: FoldResult {
            run,
            fold,
            n_test: test_idx.len(),
            hyper,
            threshold,
            accuracy: fold_accuracy,
            auc_roc: if has_both { Some(auc_roc(&scored)?) } else { None },
            train_violations: trace.final_violations,
        },
        scores: held_out,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Scores the raw bags of `dataset` with `model`.
pub fn score_bags(model: &TrainedModel, dataset: &Dataset) -> Result<Vec<ScoredBag>> {
    let w = model.score_raw(dataset)?;
    Ok(dataset
        .bags()
        .iter()
        .zip(w)
        .map(|(b, w)| ScoredBag::new(b.id(), b.label(), w.score))
        .collect())
}

fn run_metrics(run: usize, scores: &[HeldOutScore], binary: bool) -> Result<RunMetrics> {
    let scored: Vec<ScoredBag> = scores
        .iter()
        .map(|s| ScoredBag::new(s.bag_id.clone(), s.label, s.score))
        .collect();
    if !binary {
        return Ok(RunMetrics {
            run,
            accuracy: None,
            auc_roc: None,
            auc_roc_01: None,
            auc_pr: None,
            pairwise_accuracy: pairwise_order_accuracy(&scored).ok(),
        });
    }
    let correct = scores.iter().filter(|s| s.predicted == Some(s.label)).count();
    let both = scored.iter().any(|s| s.true_label > 0) && scored.iter().any(|s| s.true_label < 0);
    let has_pos = scored.iter().any(|s| s.true_label > 0);
    Ok(RunMetrics {
        run,
        accuracy: Some(correct as f64 / scores.len() as f64),
        auc_roc: if both { Some(auc_roc(&scored)?) } else { None },
        auc_roc_01: if both {
            Some(auc_roc_partial(&scored, 0.1)?)
        } else {
            None
        },
        auc_pr: if has_pos { Some(auc_pr(&scored)?) } else { None },
        pairwise_accuracy: None,
    })
}

fn summarize(runs: &[RunMetrics]) -> MetricSummaries {
    let col = |f: fn(&RunMetrics) -> Option<f64>| {
        let v: Option<Vec<f64>> = runs.iter().map(f).collect();
        v.and_then(|v| Summary::of(&v))
    };
    MetricSummaries {
        accuracy: col(|r| r.accuracy),
        auc_roc: col(|r| r.auc_roc),
        auc_roc_01: col(|r| r.auc_roc_01),
        auc_pr: col(|r| r.auc_pr),
        pairwise_accuracy: col(|r| r.pairwise_accuracy),
    }
}

fn run_parallel<T: Send, F>(jobs: usize, n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if jobs <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| MilError::InvalidParameter(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect::<Vec<_>>())
        .into_iter()
        .collect()
}

/// Evaluates `spec` on the given per-run fold plans.
fn evaluate_plans(
    dataset: &Dataset,
    spec: &SolverSpec,
    plans: &[FoldPlan],
    run_seeds: &[u64],
    opts: &CvOptions,
    caches: Option<&[Vec<AnchorCache>]>,
) -> Result<EvalReport> {
    dataset.check_trainable(spec.kind.task())?;
    let tasks: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .flat_map(|(r, p)| (0..p.k).map(move |f| (r, f)))
        .collect();
    let outputs = run_parallel(opts.jobs, tasks.len(), |i| {
        let (r, f) = tasks[i];
        let cache = caches.map(|c| &c[r][f]);
        eval_fold(
            dataset,
            spec,
            &plans[r],
            r,
            f,
            run_seeds[r],
            opts.tuning.as_ref(),
            cache,
        )
        .map_err(|e| e.context(format!("run {}, fold {}", r + 1, f + 1)))
    })?;

    let binary = dataset.has_binary_labels();
    let mut fold_results = Vec::with_capacity(outputs.len());
    let mut held_out = Vec::new();
    let mut seconds = vec![0.0; plans.len()];
    let mut per_run: Vec<Vec<HeldOutScore>> = vec![Vec::new(); plans.len()];
    for ((r, _), out) in tasks.iter().zip(outputs) {
        seconds[*r] += out.seconds;
        per_run[*r].extend(out.scores.iter().cloned());
        held_out.extend(out.scores);
        fold_results.push(out.result);
    }
    let run_metrics = per_run
        .iter()
        .enumerate()
        .map(|(r, s)| run_metrics(r, s, binary))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        solver: *spec,
        folds: plans.first().map_or(0, |p| p.k),
        runs: plans.len(),
        seed: opts.seed,
        stratified: opts.stratified,
        tuning: opts.tuning.clone(),
        summary: summarize(&run_metrics),
        fold_results,
        run_metrics,
        held_out,
        seconds,
    })
}

/// `runs` repetitions of `folds`-fold cross-validation with pooled held-out
/// scores per run. Rankers classify with a threshold picked on their training
/// split; classifiers use the sign.
pub fn cross_validate(dataset: &Dataset, spec: &SolverSpec, opts: &CvOptions) -> Result<EvalReport> {
    if opts.runs == 0 {
        return Err(MilError::InvalidParameter("runs must be at least 1".into()));
    }
    let run_seeds: Vec<u64> = (0..opts.runs).map(|r| run_seed(opts.seed, r)).collect();
    let plans = run_seeds
        .iter()
        .map(|&s| make_folds(dataset, opts.folds, opts.stratified, s))
        .collect::<Result<Vec<_>>>()?;
    evaluate_plans(dataset, spec, &plans, &run_seeds, opts, None)
}

/// One split per bag: train on the other `N - 1` bags, score the held-out one.
/// Equivalent to unstratified `cross_validate` with `folds = N` and one run.
pub fn leave_one_bag_out(dataset: &Dataset, spec: &SolverSpec, opts: &CvOptions) -> Result<EvalReport> {
    if dataset.len() < 3 {
        return Err(MilError::InvalidDataset(format!(
            "leave-one-bag-out needs at least 3 bags, got {}",
            dataset.len()
        )));
    }
    let opts = CvOptions {
        folds: dataset.len(),
        runs: 1,
        stratified: false,
        ..opts.clone()
    };
    cross_validate(dataset, spec, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Hyper,
    /// Inner cross-validation report of the winning point.
    pub report: EvalReport,
    /// Selection score of every grid point, in grid order.
    pub scores: Vec<(Hyper, f64)>,
}

fn better(candidate: (&Hyper, f64), incumbent: (&Hyper, f64)) -> bool {
    let (c, cs) = candidate;
    let (i, is) = incumbent;
    if cs != is {
        return cs > is;
    }
    if c.lambda != i.lambda {
        return c.lambda > i.lambda;
    }
    c.anchors < i.anchors
}

/// Exhaustive search maximizing inner cross-validated AUC-ROC (pairwise
/// order accuracy for multi-rank data). Ties prefer larger lambda, then fewer
/// anchors, then the earlier grid point.
pub fn grid_search(
    dataset: &Dataset,
    spec: &SolverSpec,
    grid: &HyperGrid,
    inner_folds: usize,
    seed: u64,
    jobs: usize,
) -> Result<GridResult> {
    let points = grid.points(spec)?;
    let stratified = {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for b in dataset.bags() {
            *counts.entry(b.label()).or_default() += 1;
        }
        counts.values().all(|&c| c >= inner_folds)
    };
    let opts = CvOptions {
        folds: inner_folds,
        runs: 1,
        seed,
        stratified,
        jobs: 1,
        tuning: None,
    };
    // same plan and seeds as cross_validate with these options
    let run_seeds = [run_seed(seed, 0)];
    let plans = [make_folds(dataset, inner_folds, stratified, run_seeds[0])?];
    // grid points sharing an anchor count and method reuse the fold's anchors
    let caches = [(0..inner_folds).map(|_| AnchorCache::new()).collect::<Vec<_>>()];
    let reports = run_parallel(jobs, points.len(), |i| {
        evaluate_plans(
            dataset,
            &spec.with_hyper(points[i]),
            &plans,
            &run_seeds,
            &opts,
            Some(&caches),
        )
        .map_err(|e| e.context(format!("grid point {:?}", points[i])))
    })?;
    let mut best = 0;
    for i in 1..points.len() {
        if better(
            (&points[i], reports[i].selection_score()),
            (&points[best], reports[best].selection_score()),
        ) {
            best = i;
        }
    }
    let scores = points
        .iter()
        .zip(&reports)
        .map(|(p, r)| (*p, r.selection_score()))
        .collect();
    Ok(GridResult {
        best: points[best],
        report: reports.into_iter().nth(best).expect("best index in range"),
        scores,
    })
}
