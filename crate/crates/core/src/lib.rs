//! Large-margin multiple-instance classification and ranking.
//!
//! Bags of instances carry one label (or integer rank) each and score as
//! their highest-scoring instance. Four stochastic sub-gradient solvers are
//! provided: linear and locally-linear, each as a classifier and a ranker.
//! Around them sit dataset loaders, cross-validation with the usual ranking
//! and classification metrics, and a plain-text model format.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bag;
pub mod error;
pub mod eval;
pub mod io;
pub mod linear;
pub mod local;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scaling;
pub mod solver;
pub mod ssgo;

pub use bag::{Bag, Dataset, Instance, Task};
pub use error::{MilError, Result};
pub use eval::{
    cross_validate, grid_search, leave_one_bag_out, make_folds, run_seed, train_seed, CvOptions, EvalReport, FoldPlan,
    HyperGrid, Summary, Tuning,
};
pub use linear::{train_linear_classifier, train_linear_ranker};
pub use local::{
    bag_score_local, local_coordinates, select_anchors, train_local_classifier, train_local_ranker, AnchorMethod,
    AnchorSet, LocalModel,
};
pub use metrics::{accuracy, auc_pr, auc_roc, auc_roc_partial, pairwise_order_accuracy, pick_threshold, ScoredBag};
pub use model::{
    bag_score_linear, hinge_loss_classification, hinge_loss_ranking, objective_classification, objective_ranking,
    predict_bags, BagScorer, LinearModel, ModelMeta, Preprocess, WitnessResult,
};
pub use scaling::{apply_scaler, fit_scaler, FeatureScaler};
pub use solver::{
    fit, fit_cached, fit_with_config, AnchorCache, Hyper, Iterations, SolverKind, SolverSpec, TrainedModel,
};
pub use ssgo::{TrainConfig, TrainTrace};
