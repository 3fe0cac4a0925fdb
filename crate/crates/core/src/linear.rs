//! Linear multiple-instance classifier and ranker.

use crate::bag::{Bag, Dataset, Task};
use crate::error::Result;
use crate::model::{argmax, dot, LinearModel, ModelMeta, WitnessResult};
use crate::ssgo::{run_classification, run_ranking, SsgoState, TrainConfig, TrainTrace};

struct LinearState<'a> {
    w: Vec<f64>,
    bags: &'a [Bag],
}

impl SsgoState for LinearState<'_> {
    fn n_bags(&self) -> usize {
        self.bags.len()
    }

    fn witness(&self, bag: usize) -> WitnessResult {
        argmax(self.bags[bag].instances().map(|x| dot(&self.w, x)))
    }

    fn decay(&mut self, factor: f64) {
        self.w.iter_mut().for_each(|v| *v *= factor);
    }

    fn add_scaled(&mut self, bag: usize, instance: usize, coef: f64) {
        let x = self.bags[bag].instance(instance);
        for (w, xi) in self.w.iter_mut().zip(x) {
            *w += coef * xi;
        }
    }

    fn sq_norm(&self) -> f64 {
        dot(&self.w, &self.w)
    }

    fn all_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
    }
}

fn finish(w: Vec<f64>, cfg: &TrainConfig, task: Task) -> Result<LinearModel> {
    LinearModel::new(
        w,
        ModelMeta {
            lambda: cfg.lambda,
            iterations: cfg.iterations,
            seed: cfg.seed,
            task,
        },
    )
}

/// Trains `f(B) = max <w, x>` on -1/+1 labelled bags.
pub fn train_linear_classifier(dataset: &Dataset, cfg: &TrainConfig) -> Result<(LinearModel, TrainTrace)> {
    cfg.validate()?;
    dataset.check_trainable(Task::Classification)?;
    let labels: Vec<f64> = dataset.bags().iter().map(|b| b.label() as f64).collect();
    let mut state = LinearState {
        w: vec![0.0; dataset.dim()],
        bags: dataset.bags(),
    };
    let trace = run_classification(&mut state, &labels, cfg)?;
    Ok((finish(state.w, cfg, Task::Classification)?, trace))
}

/// Trains a bag ranker. Classification datasets are ranked with
/// -1 as rank 1 and +1 as rank 2.
pub fn train_linear_ranker(dataset: &Dataset, cfg: &TrainConfig) -> Result<(LinearModel, TrainTrace)> {
    cfg.validate()?;
    dataset.check_trainable(Task::Ranking)?;
    let ranks = dataset.ranks();
    let mut state = LinearState {
        w: vec![0.0; dataset.dim()],
        bags: dataset.bags(),
    };
    let trace = run_ranking(&mut state, &ranks, cfg)?;
    Ok((finish(state.w, cfg, Task::Ranking)?, trace))
}
