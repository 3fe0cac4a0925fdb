//! Bag-level classification and ranking metrics.
//!
//! Binary metrics expect labels -1/+1. Scores are swept from high to low with
//! equal scores grouped, so tied positive/negative pairs earn half credit in
//! the ROC area (the Mann-Whitney convention).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredBag {
    pub bag_id: String,
    pub true_label: i64,
    pub score: f64,
}

impl ScoredBag {
    pub fn new(bag_id: impl Into<String>, true_label: i64, score: f64) -> Self {
        ScoredBag {
            bag_id: bag_id.into(),
            true_label,
            score,
        }
    }
}

fn check_binary(scored: &[ScoredBag]) -> Result<(usize, usize)> {
    if scored.is_empty() {
        return Err(MilError::InvalidParameter("no scored bags".into()));
    }
    let mut pos = 0;
    for s in scored {
        if !s.score.is_finite() {
            return Err(MilError::NonFinite(format!("score of bag {:?}", s.bag_id)));
        }
        match s.true_label {
            1 => pos += 1,
            -1 => {}
            other => {
                return Err(MilError::InvalidParameter(format!(
                    "binary metric got label {other} for bag {:?}",
                    s.bag_id
                )))
            }
        }
    }
    Ok((pos, scored.len() - pos))
}

fn check_both_classes(scored: &[ScoredBag]) -> Result<(usize, usize)> {
    let (p, n) = check_binary(scored)?;
    if p == 0 || n == 0 {
        return Err(MilError::InvalidParameter(
            "metric needs at least one positive and one negative bag".into(),
        ));
    }
    Ok((p, n))
}

/// `(positives, negatives)` per group of equal scores, highest score first.
fn descending_groups(scored: &[ScoredBag]) -> Vec<(usize, usize)> {
    let mut order: Vec<(f64, bool)> = scored.iter().map(|s| (s.score, s.true_label > 0)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut last = None;
    for (score, positive) in order {
        if last != Some(score) {
            groups.push((0, 0));
            last = Some(score);
        }
        let g = groups.last_mut().expect("group pushed above");
        if positive {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Fraction of bags whose predicted sign matches the label. A score equal
/// to the threshold predicts positive.
pub fn accuracy(scored: &[ScoredBag], threshold: f64) -> Result<f64> {
    check_binary(scored)?;
    let correct = scored
        .iter()
        .filter(|s| (s.score >= threshold) == (s.true_label > 0))
        .count();
    Ok(correct as f64 / scored.len() as f64)
}

/// Area under the ROC curve: the probability that a random positive outscores
/// a random negative, ties counting one half.
pub fn auc_roc(scored: &[ScoredBag]) -> Result<f64> {
    auc_roc_partial(scored, 1.0)
}

/// ROC area over false-positive rates `[0, fpr_cap]`, divided by `fpr_cap` so a
/// perfect ranking scores 1. The curve is interpolated linearly at the cap.
pub fn auc_roc_partial(scored: &[ScoredBag], fpr_cap: f64) -> Result<f64> {
    if !(fpr_cap > 0.0 && fpr_cap <= 1.0) {
        return Err(MilError::InvalidParameter(format!(
            "fpr_cap must lie in (0, 1], got {fpr_cap}"
        )));
    }
    let (p, n) = check_both_classes(scored)?;
    let fp_limit = fpr_cap * n as f64;
    // area in (false positive count) x (true positive count) units
    let mut area = 0.0;
    let mut tp = 0.0;
    let mut fp = 0.0;
    for (gp, gn) in descending_groups(scored) {
        let (gp, gn) = (gp as f64, gn as f64);
        if fp + gn <= fp_limit {
            area += gn * (tp + 0.5 * gp);
        } else {
            let width = fp_limit - fp;
            area += width * (tp + 0.5 * gp * width / gn);
            break;
        }
        tp += gp;
        fp += gn;
    }
    Ok(area / (p as f64 * n as f64) / fpr_cap)
}

/// Area under the precision-recall staircase: precision at each distinct
/// score level times the recall gained there.
pub fn auc_pr(scored: &[ScoredBag]) -> Result<f64> {
    let (p, _) = check_binary(scored)?;
    if p == 0 {
        return Err(MilError::InvalidParameter(
            "precision-recall needs a positive bag".into(),
        ));
    }
    let mut area = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    for (gp, gn) in descending_groups(scored) {
        tp += gp;
        seen += gp + gn;
        if gp > 0 {
            area += (gp as f64 / p as f64) * (tp as f64 / seen as f64);
        }
    }
    Ok(area)
}

/// Threshold maximizing training accuracy over the midpoints between
/// consecutive distinct scores plus the two infinite sentinels. Ties go to the
/// candidate closest to zero.
pub fn pick_threshold(train_scored: &[ScoredBag]) -> Result<f64> {
    check_both_classes(train_scored)?;
    let mut order: Vec<(f64, bool)> = train_scored.iter().map(|s| (s.score, s.true_label > 0)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_pos = order.iter().filter(|o| o.1).count();

    // threshold below everything: all predicted positive
    let mut best_t = f64::NEG_INFINITY;
    let mut best_correct = total_pos;
    let mut neg_below = 0;
    let mut pos_below = 0;
    let mut i = 0;
    while i < order.len() {
        let score = order[i].0;
        while i < order.len() && order[i].0 == score {
            if order[i].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        let t = match order.get(i) {
            Some(next) => 0.5 * (score + next.0),
            None => f64::INFINITY,
        };
        let correct = neg_below + (total_pos - pos_below);
        if correct > best_correct || (correct == best_correct && t.abs() < best_t.abs()) {
            best_correct = correct;
            best_t = t;
        }
    }
    Ok(best_t)
}

/// Fraction of bag pairs with different ranks ordered correctly by score,
/// ties counting one half.
pub fn pairwise_order_accuracy(scored: &[ScoredBag]) -> Result<f64> {
    let mut good = 0.0;
    let mut total = 0usize;
    for a in scored {
        for b in scored {
            if a.true_label > b.true_label {
                total += 1;
                match a.score.partial_cmp(&b.score) {
                    Some(Ordering::Greater) => good += 1.0,
                    Some(Ordering::Equal) => good += 0.5,
                    _ => {}
                }
            }
        }
    }
    if total == 0 {
        return Err(MilError::InvalidParameter("no pairs with different ranks".into()));
    }
    Ok(good / total as f64)
}
