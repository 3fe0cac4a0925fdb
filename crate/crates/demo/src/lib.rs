//! Browser demo: bindings behind `www/index.html`.
//!
//! Build with `wasm-pack build crates/demo --target web` and serve `www/`.
//! Every export returns a flat `Vec<f64>` so the page can read it as a
//! `Float64Array` without glue types. The exports are thin wrappers over
//! plain functions, which is what the native tests call: `JsError` cannot
//! be built outside a wasm runtime.

use lemmings_core::rng::rng_from_seed;
use lemmings_core::{
    auc_roc, bag_score_linear, bag_score_local, local_coordinates, train_linear_classifier, train_local_classifier,
    AnchorMethod, AnchorSet, Bag, Dataset, ScoredBag, Task, TrainConfig,
};
use rand::Rng;
use wasm_bindgen::prelude::*;

const XOR: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];

/// Half-width of the square the decision fields cover.
const EXTENT: f64 = 2.0;

fn xor_dataset() -> Dataset {
    let bags = XOR
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| Bag::new(format!("x{i}"), if a * b > 0.0 { 1 } else { -1 }, vec![vec![a, b]]).unwrap())
        .collect();
    Dataset::new(bags, Task::Classification).unwrap()
}

type Result<T> = std::result::Result<T, String>;

fn xor_anchors(sigma: f64) -> Result<AnchorSet> {
    let corners = XOR.iter().map(|&(a, b)| vec![a, b]).collect();
    AnchorSet::new(corners, sigma, AnchorMethod::Random, 0).map_err(|e| e.to_string())
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn grid_point(i: usize, resolution: usize) -> f64 {
    -EXTENT + 2.0 * EXTENT * i as f64 / (resolution - 1) as f64
}

/// Trains a linear and a locally-linear classifier on the four XOR points
/// and evaluates both on a `resolution`² grid over [-2, 2]².
///
/// Layout: linear field row-major (y outer), then the local field, then the
/// training error counts of the two models.
#[wasm_bindgen]
pub fn xor_decision_fields(
    resolution: usize,
    sigma: f64,
    lambda: f64,
    iterations: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(decision_fields(resolution, sigma, lambda, iterations))
}

fn decision_fields(resolution: usize, sigma: f64, lambda: f64, iterations: u32) -> Result<Vec<f64>> {
    if resolution < 2 {
        return Err("resolution must be at least 2".into());
    }
    let e = |e: lemmings_core::MilError| e.to_string();
    let ds = xor_dataset();
    let cfg = TrainConfig::new(lambda, u64::from(iterations), 0);
    let (linear, _) = train_linear_classifier(&ds, &cfg).map_err(e)?;
    let (local, _) = train_local_classifier(&ds, &xor_anchors(sigma)?, &cfg).map_err(e)?;

    let n = resolution * resolution;
    let mut out = Vec::with_capacity(2 * n + 2);
    let mut local_field = Vec::with_capacity(n);
    for iy in 0..resolution {
        for ix in 0..resolution {
            let bag = Bag::new(
                "p",
                1,
                vec![vec![grid_point(ix, resolution), -grid_point(iy, resolution)]],
            )
            .map_err(e)?;
            out.push(bag_score_linear(&bag, &linear).map_err(e)?.score);
            local_field.push(bag_score_local(&bag, &local).map_err(e)?.score);
        }
    }
    out.extend(local_field);
    for errors in [
        ds.bags()
            .iter()
            .map(|b| bag_score_linear(b, &linear).map(|w| w.score))
            .collect::<Vec<_>>(),
        ds.bags()
            .iter()
            .map(|b| bag_score_local(b, &local).map(|w| w.score))
            .collect::<Vec<_>>(),
    ] {
        let errors = errors
            .into_iter()
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(e)?;
        let wrong = errors
            .iter()
            .zip(ds.bags())
            .filter(|(s, b)| (**s >= 0.0) != (b.label() > 0))
            .count();
        out.push(wrong as f64);
    }
    Ok(out)
}

/// Local coordinates of (x, y) against the four XOR corners.
#[wasm_bindgen]
pub fn coordinates_at(x: f64, y: f64, sigma: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(coordinates(x, y, sigma))
}

fn coordinates(x: f64, y: f64, sigma: f64) -> Result<Vec<f64>> {
    local_coordinates(&[x, y], &xor_anchors(sigma)?).map_err(|e| e.to_string())
}

/// ROC curve of `n` positive and `n` negative synthetic scores whose means
/// are `separation` apart. Returns `[auc, fpr0, tpr0, fpr1, tpr1, ...]`.
#[wasm_bindgen]
pub fn roc_curve(seed: u32, n: usize, separation: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(roc(seed, n, separation))
}

fn roc(seed: u32, n: usize, separation: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err("n must be positive".into());
    }
    let mut rng = rng_from_seed(u64::from(seed));
    // sum of four uniforms: a cheap bell shape
    let mut draw = |shift: f64| shift + (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() / 2.0;
    let mut scored: Vec<ScoredBag> = (0..2 * n)
        .map(|i| {
            let positive = i < n;
            let score = draw(if positive { separation } else { 0.0 });
            ScoredBag::new(format!("b{i}"), if positive { 1 } else { -1 }, score)
        })
        .collect();
    let auc = auc_roc(&scored).map_err(|e| e.to_string())?;

    scored.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut out = vec![auc, 0.0, 0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, s) in scored.iter().enumerate() {
        if s.true_label > 0 {
            tp += 1;
        } else {
            fp += 1;
        }
        // one vertex per distinct score, so tied runs draw a diagonal
        if scored.get(i + 1).is_none_or(|next| next.score != s.score) {
            out.extend([fp as f64 / n as f64, tp as f64 / n as f64]);
        }
    }
    Ok(out)
}
