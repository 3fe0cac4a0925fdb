//! Reference implementations the library is checked against. Each one is
//! written from the definition, as directly as possible, and shares no code
//! with the library beyond the seeded index stream.
#![allow(dead_code, clippy::needless_range_loop)]

use lemmings_core::rng::{rng_from_seed, uniform_index};
use lemmings_core::{Bag, Dataset, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn naive_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Single-instance primal SVM sub-gradient solver. Returns `w_1 ..= w_{T+1}`.
pub fn pegasos_trajectory(xs: &[Vec<f64>], ys: &[f64], lambda: f64, iterations: u64, seed: u64) -> Vec<Vec<f64>> {
    let d = xs[0].len();
    let mut w = vec![0.0; d];
    let mut out = vec![w.clone()];
    let mut r = rng_from_seed(seed);
    for t in 1..=iterations {
        let i = uniform_index(&mut r, xs.len());
        let eta = 1.0 / (lambda * t as f64);
        let margin = ys[i] * naive_dot(&w, &xs[i]);
        let keep = 1.0 - eta * lambda;
        for k in 0..d {
            w[k] *= keep;
        }
        if margin < 1.0 {
            for k in 0..d {
                w[k] += eta * ys[i] * xs[i][k];
            }
        }
        out.push(w.clone());
    }
    out
}

/// `(#{s_p > s_n} + #{s_p == s_n} / 2) / (P N)` by enumerating every pair.
pub fn brute_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Vertices of the empirical ROC curve: one point per distinct threshold,
/// from (0, 0) to (1, 1). Tied scores move diagonally.
pub fn roc_polyline(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
    let p = positive.iter().filter(|&&b| b).count() as f64;
    let n = positive.len() as f64 - p;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut pts = vec![(0.0, 0.0)];
    for t in thresholds {
        let tp = (0..scores.len()).filter(|&i| positive[i] && scores[i] >= t).count() as f64;
        let fp = (0..scores.len()).filter(|&i| !positive[i] && scores[i] >= t).count() as f64;
        pts.push((fp / n, tp / p));
    }
    pts
}

/// Trapezoid area under `pts` for `x` in `[0, cap]`, divided by `cap`.
pub fn polyline_area(pts: &[(f64, f64)], cap: f64) -> f64 {
    let mut area = 0.0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= cap {
            break;
        }
        if x1 <= cap {
            area += (x1 - x0) * (y0 + y1) / 2.0;
        } else {
            let y_cap = y0 + (y1 - y0) * (cap - x0) / (x1 - x0);
            area += (cap - x0) * (y0 + y_cap) / 2.0;
        }
    }
    area / cap
}

/// Training accuracy of `score >= t` for every candidate threshold, by direct
/// counting: every midpoint of two distinct scores and both infinities.
pub fn threshold_table(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
    let mut cands = vec![f64::NEG_INFINITY, f64::INFINITY];
    for &a in scores {
        for &b in scores {
            if a < b {
                cands.push((a + b) / 2.0);
            }
        }
    }
    cands
        .into_iter()
        .map(|t| {
            let ok = (0..scores.len()).filter(|&i| (scores[i] >= t) == positive[i]).count();
            (t, ok as f64 / scores.len() as f64)
        })
        .collect()
}

/// Classification of 1-based window starts by plain interval arithmetic:
/// `Some(r)` inside region `r`, `None` for zero overlap, `Err(())` otherwise.
pub fn classify_windows(
    len: usize,
    window: usize,
    stride: usize,
    regions: &[(usize, usize)],
) -> Vec<(usize, Result<Option<usize>, ()>)> {
    let mut out = Vec::new();
    let mut s = 1;
    while s + window - 1 <= len {
        let e = s + window - 1;
        let mut class = Ok(None);
        for (r, &(a, b)) in regions.iter().enumerate() {
            let overlap = s.max(a) <= e.min(b);
            if a <= s && e <= b {
                class = Ok(Some(r));
                break;
            }
            if overlap {
                class = Err(());
            }
        }
        out.push((s, class));
        s += stride;
    }
    out
}

/// Best 2-means partition by enumerating every split of `pts`.
pub fn best_two_means(pts: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = pts.len();
    let mean = |idx: &[usize]| {
        let mut m = vec![0.0; pts[0].len()];
        for &i in idx {
            for (a, b) in m.iter_mut().zip(&pts[i]) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= idx.len() as f64);
        m
    };
    let sse = |idx: &[usize], c: &[f64]| -> f64 {
        idx.iter()
            .map(|&i| pts[i].iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum()
    };
    let mut best = (f64::INFINITY, vec![], vec![]);
    // point 0 always in group a; every other subset of the rest joins it
    for mask in 0u32..(1 << (n - 1)) {
        let a: Vec<usize> = (0..n).filter(|&i| i == 0 || mask & (1 << (i - 1)) != 0).collect();
        let b: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
        if b.is_empty() {
            continue;
        }
        let (ca, cb) = (mean(&a), mean(&b));
        let cost = sse(&a, &ca) + sse(&b, &cb);
        if cost < best.0 {
            best = (cost, ca, cb);
        }
    }
    (best.1, best.2)
}

pub fn uniform_vec(r: &mut impl Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| r.gen_range(lo..hi)).collect()
}

/// Random classification dataset with both classes present.
pub fn random_dataset(r: &mut impl Rng, n_bags: usize, d: usize, max_inst: usize) -> Dataset {
    let bags = (0..n_bags)
        .map(|i| {
            let label = if i % 2 == 0 { 1 } else { -1 };
            let m = r.gen_range(1..=max_inst);
            let inst = (0..m).map(|_| uniform_vec(r, d, -2.0, 2.0)).collect();
            Bag::new(format!("b{i}"), label, inst).unwrap()
        })
        .collect();
    Dataset::new(bags, Task::Classification).unwrap()
}

/// Eight bags in 2-D: positives hold one point with `x1 >= 2` among
/// distractors at `x1 <= -1`; negatives only have points at `x1 <= -1`.
pub fn separable_toy() -> Dataset {
    let mut bags = Vec::new();
    for i in 0..4 {
        let f = i as f64;
        bags.push(
            Bag::new(
                format!("pos{i}"),
                1,
                vec![vec![-1.0 - f, 0.5 * f], vec![2.0 + 0.5 * f, 1.0 - f], vec![-1.5, -f]],
            )
            .unwrap(),
        );
        bags.push(
            Bag::new(
                format!("neg{i}"),
                -1,
                vec![vec![-1.0 - 0.3 * f, 1.0], vec![-2.0, 0.5 * f - 1.0]],
            )
            .unwrap(),
        );
    }
    Dataset::new(bags, Task::Classification).unwrap()
}

/// Ranks 1, 2, 3 with witnesses at `x1 = -1, 0, +1` and distractors at
/// `x1 <= -2`, three bags per rank.
pub fn monotone_rank_toy(seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut bags = Vec::new();
    for rank in 1..=3i64 {
        for j in 0..3 {
            let mut inst = vec![vec![(rank - 2) as f64, r.gen_range(-0.2..0.2)]];
            for _ in 0..2 {
                inst.push(vec![r.gen_range(-3.0..-2.0), r.gen_range(-1.0..1.0)]);
            }
            bags.push(Bag::new(format!("r{rank}_{j}"), rank, inst).unwrap());
        }
    }
    Dataset::new(bags, Task::Ranking).unwrap()
}

/// Four single-instance bags at `(+-1, +-1)` labelled by the product of signs.
pub fn xor_bags() -> Dataset {
    let pts = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    let bags = pts
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let label = if a * b > 0.0 { 1 } else { -1 };
            Bag::new(format!("x{i}"), label, vec![vec![a, b]]).unwrap()
        })
        .collect();
    Dataset::new(bags, Task::Classification).unwrap()
}

/// Smallest number of XOR bags any `w` on a fine grid misclassifies with the
/// rule `score >= 0` means positive.
pub fn xor_best_linear_errors(grid_half_width: f64, step: f64) -> usize {
    let ds = xor_bags();
    let n = (2.0 * grid_half_width / step).round() as i64;
    let mut best = usize::MAX;
    for i in 0..=n {
        for j in 0..=n {
            let w = [-grid_half_width + i as f64 * step, -grid_half_width + j as f64 * step];
            let errors = ds
                .bags()
                .iter()
                .filter(|b| {
                    let s = naive_dot(&w, b.instance(0));
                    (s >= 0.0) != (b.label() > 0)
                })
                .count();
            best = best.min(errors);
        }
    }
    best
}

pub fn linear_objective_gradient(ds: &Dataset, w: &[f64], lambda: f64) -> Vec<f64> {
    let mut g: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    let n = ds.len() as f64;
    for b in ds.bags() {
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
        for (i, x) in b.instances().enumerate() {
            let s = naive_dot(w, x);
            if s > best {
                best = s;
                arg = i;
            }
        }
        let y = b.label() as f64;
        if y * best < 1.0 {
            for (gk, xk) in g.iter_mut().zip(b.instance(arg)) {
                *gk -= y * xk / n;
            }
        }
    }
    g
}

/// Distance from `w` to the nearest kink of the linear objective: the hinge
/// corner and the gap between the two best instances of every bag.
pub fn linear_kink_distance(ds: &Dataset, w: &[f64]) -> f64 {
    let mut dist = f64::INFINITY;
    for b in ds.bags() {
        let mut s: Vec<f64> = b.instances().map(|x| naive_dot(w, x)).collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        dist = dist.min((1.0 - b.label() as f64 * s[0]).abs());
        if s.len() > 1 {
            dist = dist.min(s[0] - s[1]);
        }
    }
    dist
}

/// Central differences of `f` at `w` with step `h`.
pub fn central_difference(w: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = w.to_vec();
    (0..w.len())
        .map(|k| {
            probe[k] = w[k] + h;
            let up = f(&probe);
            probe[k] = w[k] - h;
            let down = f(&probe);
            probe[k] = w[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    diff / scale.max(1e-12)
}

/// Solves `A g = b` for a small dense symmetric positive-definite `A` by
/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Local coordinates straight from the normal equations, with the ridge.
pub fn coding_oracle(x: &[f64], anchors: &[Vec<f64>], sigma: f64) -> Vec<f64> {
    let k = anchors.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = naive_dot(&anchors[i], &anchors[j]);
        }
        let d2: f64 = anchors[i].iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum();
        a[i][i] += sigma * d2 + 1e-8;
        b[i] = naive_dot(&anchors[i], x);
    }
    gauss_solve(a, b)
}

/// `sum_k gamma_k <w_k, x>` with `w` stored as `K` rows of `d`.
fn coded(w: &[f64], gamma: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    (0..gamma.len())
        .map(|k| gamma[k] * naive_dot(&w[k * d..(k + 1) * d], x))
        .sum()
}

/// Sub-gradient of the locally-linear classification objective with respect
/// to `W` (rows of `d`), given the coordinates of every instance.
pub fn local_objective_gradient(ds: &Dataset, gammas: &[Vec<Vec<f64>>], w: &[f64], lambda: f64) -> Vec<f64> {
    let d = ds.dim();
    let mut g: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    let n = ds.len() as f64;
    for (b, gb) in ds.bags().iter().zip(gammas) {
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
        for (i, x) in b.instances().enumerate() {
            let s = coded(w, &gb[i], x);
            if s > best {
                best = s;
                arg = i;
            }
        }
        let y = b.label() as f64;
        if y * best < 1.0 {
            let x = b.instance(arg);
            for (k, gk) in gb[arg].iter().enumerate() {
                for j in 0..d {
                    g[k * d + j] -= y * gk * x[j] / n;
                }
            }
        }
    }
    g
}

pub fn local_kink_distance(ds: &Dataset, gammas: &[Vec<Vec<f64>>], w: &[f64]) -> f64 {
    let mut dist = f64::INFINITY;
    for (b, gb) in ds.bags().iter().zip(gammas) {
        let mut s: Vec<f64> = b.instances().enumerate().map(|(i, x)| coded(w, &gb[i], x)).collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        dist = dist.min((1.0 - b.label() as f64 * s[0]).abs());
        if s.len() > 1 {
            dist = dist.min(s[0] - s[1]);
        }
    }
    dist
}
