mod common;

use common::*;
use lemmings_core::io::{window_starts, windows_to_bags, SequenceAnnotation};
use lemmings_core::ssgo::RankUpdate;
use lemmings_core::*;
use rand::Rng;

fn scored(scores: &[f64], positive: &[bool]) -> Vec<ScoredBag> {
    scores
        .iter()
        .zip(positive)
        .enumerate()
        .map(|(i, (&s, &p))| ScoredBag::new(format!("b{i}"), if p { 1 } else { -1 }, s))
        .collect()
}

fn singleton_data(r: &mut impl Rng, n: usize, d: usize) -> (Dataset, Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..n).map(|_| uniform_vec(r, d, -1.0, 1.0)).collect();
    let ys: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let bags = xs
        .iter()
        .zip(&ys)
        .enumerate()
        .map(|(i, (x, &y))| Bag::new(format!("s{i}"), y as i64, vec![x.clone()]).unwrap())
        .collect();
    (Dataset::new(bags, Task::Classification).unwrap(), xs, ys)
}

#[test]
fn singleton_bags_follow_the_svm_subgradient_trajectory() {
    // w_{t+1} for every t comes from training with T = t: the index stream is
    // a prefix of the longer run's stream.
    let mut r = rng(11);
    for seed in 0..10u64 {
        let (ds, xs, ys) = singleton_data(&mut r, 12, 5);
        let lambda = 0.05;
        let oracle = pegasos_trajectory(&xs, &ys, lambda, 40, seed);
        for t in 1..=40u64 {
            let (m, _) = train_linear_classifier(&ds, &TrainConfig::new(lambda, t, seed)).unwrap();
            assert_eq!(m.weights(), &oracle[t as usize][..], "seed {seed}, t {t}");
        }
    }
}

#[test]
fn auc_matches_pair_counting_with_ties() {
    let mut r = rng(5);
    for _ in 0..300 {
        let n = r.gen_range(2..=60);
        let mut pos: Vec<bool> = (0..n).map(|_| r.gen_bool(0.4)).collect();
        pos[0] = true;
        pos[1] = false;
        // coarse grid so ties are common
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..8) as f64 * 0.5).collect();
        let s = scored(&scores, &pos);
        assert_eq!(auc_roc(&s).unwrap(), brute_auc(&scores, &pos));
    }
}

#[test]
fn pair_counting_examples() {
    let pos = [true, false, false, true];
    assert_eq!(brute_auc(&[0.9, 0.7, 0.5, 0.3], &pos), 0.5);
    assert_eq!(auc_roc(&scored(&[0.9, 0.7, 0.5, 0.3], &pos)).unwrap(), 0.5);
}

#[test]
fn partial_auc_matches_roc_polyline() {
    // two positives {0.9, 0.2}, ten negatives below 0.85
    let mut scores = vec![0.9, 0.2];
    let mut pos = vec![true, true];
    for i in 0..10 {
        scores.push(0.8 - 0.07 * i as f64);
        pos.push(false);
    }
    let poly = roc_polyline(&scores, &pos);
    assert_eq!(poly.len(), 13);
    let expected = polyline_area(&poly, 0.1);
    // first positive is caught before any false positive; the second only
    // after eight negatives
    assert!((expected - 0.5).abs() < 1e-12);
    let got = auc_roc_partial(&scored(&scores, &pos), 0.1).unwrap();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");

    let mut r = rng(9);
    for _ in 0..200 {
        let n = r.gen_range(4..40);
        let mut pos: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        pos[0] = true;
        pos[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..12) as f64).collect();
        let cap = [0.05, 0.1, 0.25, 0.5, 1.0][r.gen_range(0..5)];
        let expected = polyline_area(&roc_polyline(&scores, &pos), cap);
        let got = auc_roc_partial(&scored(&scores, &pos), cap).unwrap();
        assert!((got - expected).abs() < 1e-12, "cap {cap}: {got} vs {expected}");
    }
}

#[test]
fn staircase_pr_single_positive_last() {
    let s = scored(&[0.9, 0.8, 0.7, 0.1], &[false, false, false, true]);
    assert_eq!(auc_pr(&s).unwrap(), 0.25);
}

#[test]
fn threshold_maximizes_training_accuracy() {
    // [+:3, -:2, +:1]: enumeration finds 2/3 at t = -inf and t = 2.5; the
    // tie goes to the finite one
    let scores = [3.0, 2.0, 1.0];
    let pos = [true, false, true];
    let table = threshold_table(&scores, &pos);
    let best = table.iter().map(|e| e.1).fold(0.0, f64::max);
    assert!((best - 2.0 / 3.0).abs() < 1e-15);
    let t = pick_threshold(&scored(&scores, &pos)).unwrap();
    assert_eq!(t, 2.5);
    assert_eq!(accuracy(&scored(&scores, &pos), t).unwrap(), best);

    let mut r = rng(21);
    for _ in 0..300 {
        let n = r.gen_range(2..25);
        let mut pos: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        pos[0] = true;
        pos[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-6..6) as f64 * 0.5).collect();
        let table = threshold_table(&scores, &pos);
        let best = table.iter().map(|e| e.1).fold(0.0, f64::max);
        // tie rule is stated over the documented candidates: midpoints of
        // consecutive distinct scores
        let mut distinct = scores.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let documented: Vec<f64> = distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        let closest = table
            .iter()
            .filter(|e| e.1 == best && (e.0.is_infinite() || documented.contains(&e.0)))
            .map(|e| e.0.abs())
            .fold(f64::INFINITY, f64::min);
        let s = scored(&scores, &pos);
        let t = pick_threshold(&s).unwrap();
        assert_eq!(accuracy(&s, t).unwrap(), best);
        assert_eq!(t.abs(), closest);
    }
}

#[test]
fn accuracy_hand_count() {
    let s: Vec<ScoredBag> = [(2.0, 1), (-1.0, -1), (0.5, -1), (-3.0, 1)]
        .iter()
        .enumerate()
        .map(|(i, &(sc, l))| ScoredBag::new(format!("b{i}"), l, sc))
        .collect();
    assert_eq!(accuracy(&s, 0.0).unwrap(), 0.5);
}

#[test]
fn windows_match_interval_oracle() {
    let ann = SequenceAnnotation::new("s", "ACDEFGHIKL", vec![(3, 8)]).unwrap();
    let p = window_starts(&ann, 4, 1).unwrap();
    let oracle = classify_windows(10, 4, 1, &[(3, 8)]);
    assert_eq!(oracle.len(), 7);
    let pos: Vec<usize> = oracle.iter().filter(|o| o.1 == Ok(Some(0))).map(|o| o.0).collect();
    let neg: Vec<usize> = oracle.iter().filter(|o| o.1 == Ok(None)).map(|o| o.0).collect();
    assert_eq!(p.positive, vec![pos]);
    assert_eq!(p.negative, neg);
    assert_eq!(p.positive[0], vec![3, 4, 5]);
    assert!(p.negative.is_empty());

    let (bags, negative) = windows_to_bags(&ann, 4, 1, false).unwrap();
    assert_eq!(bags.len(), 1);
    assert_eq!(bags[0].len(), 3);
    assert!(negative.is_none());
}

#[test]
fn kmeans_finds_the_best_two_means_split() {
    let mut r = rng(3);
    for trial in 0..20u64 {
        let mut pts = Vec::new();
        let n_a = r.gen_range(3..=6);
        let n_b = r.gen_range(3..=6);
        for _ in 0..n_a {
            pts.push(vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
        }
        for _ in 0..n_b {
            pts.push(vec![r.gen_range(9.0..11.0), r.gen_range(9.0..11.0)]);
        }
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let set = select_anchors(&refs, 2, AnchorMethod::KMeans, trial).unwrap();
        let (ca, cb) = best_two_means(&pts);
        let mut got: Vec<Vec<f64>> = set.anchors().map(|a| a.to_vec()).collect();
        got.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        let mut want = vec![ca, cb];
        want.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        for (g, w) in got.iter().zip(&want) {
            for (x, y) in g.iter().zip(w) {
                assert!((x - y).abs() < 1e-9, "trial {trial}: {got:?} vs {want:?}");
            }
        }
        // one centroid per blob
        assert!(got[0].iter().all(|v| (-1.0..1.0).contains(v)));
        assert!(got[1].iter().all(|v| (9.0..11.0).contains(v)));
    }
}

#[test]
fn coordinates_match_dense_elimination() {
    let mut r = rng(17);
    for _ in 0..200 {
        let d = r.gen_range(1..6);
        let k = r.gen_range(1..6);
        let anchors: Vec<Vec<f64>> = (0..k).map(|_| uniform_vec(&mut r, d, -2.0, 2.0)).collect();
        let sigma = [0.1, 1.0, 10.0][r.gen_range(0..3)];
        let set = AnchorSet::new(anchors.clone(), sigma, AnchorMethod::Random, 0).unwrap();
        let x = uniform_vec(&mut r, d, -2.0, 2.0);
        let got = local_coordinates(&x, &set).unwrap();
        let want = coding_oracle(&x, &anchors, sigma);
        assert!(relative_error(&got, &want) < 1e-8, "{got:?} vs {want:?}");
    }
}

#[test]
fn hand_solved_coordinates() {
    let set = AnchorSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0, AnchorMethod::Random, 0).unwrap();
    let g = local_coordinates(&[1.0, 1.0], &set).unwrap();
    assert!((g[0] - 0.5).abs() < 1e-8 && (g[1] - 0.5).abs() < 1e-8);
}

#[test]
fn single_anchor_score_is_scalar_coordinate_times_dot() {
    let mut r = rng(23);
    for _ in 0..100 {
        let d = r.gen_range(1..6);
        let anchor = uniform_vec(&mut r, d, -1.0, 1.0);
        let set = AnchorSet::new(vec![anchor], 1.0, AnchorMethod::Random, 0).unwrap();
        let w = uniform_vec(&mut r, d, -1.0, 1.0);
        let model = LocalModel::new(w.clone(), set.clone(), meta()).unwrap();
        let inst: Vec<Vec<f64>> = (0..4).map(|_| uniform_vec(&mut r, d, -2.0, 2.0)).collect();
        let bag = Bag::new("b", 1, inst.clone()).unwrap();
        let want = inst
            .iter()
            .map(|x| local_coordinates(x, &set).unwrap()[0] * x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let got = bag_score_local(&bag, &model).unwrap().score;
        assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}

#[test]
fn shared_column_score_is_coordinate_sum_times_dot() {
    let mut r = rng(29);
    for _ in 0..100 {
        let d = r.gen_range(1..5);
        let k = r.gen_range(1..5);
        let anchors: Vec<Vec<f64>> = (0..k).map(|_| uniform_vec(&mut r, d, -2.0, 2.0)).collect();
        let set = AnchorSet::new(anchors, 0.5, AnchorMethod::Random, 0).unwrap();
        let w = uniform_vec(&mut r, d, -1.0, 1.0);
        let model = LocalModel::new(w.repeat(k), set.clone(), meta()).unwrap();
        let inst: Vec<Vec<f64>> = (0..3).map(|_| uniform_vec(&mut r, d, -2.0, 2.0)).collect();
        let bag = Bag::new("b", 1, inst.clone()).unwrap();
        let want = inst
            .iter()
            .map(|x| {
                let s: f64 = local_coordinates(x, &set).unwrap().iter().sum();
                s * x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let got = bag_score_local(&bag, &model).unwrap().score;
        assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}

fn meta() -> ModelMeta {
    ModelMeta {
        lambda: 1.0,
        iterations: 0,
        seed: 0,
        task: Task::Classification,
    }
}

#[test]
fn single_anchor_training_is_linear_training_on_rescaled_instances() {
    let mut r = rng(31);
    for seed in 0..5u64 {
        let ds = random_dataset(&mut r, 10, 3, 4);
        let anchor = uniform_vec(&mut r, 3, -1.0, 1.0);
        let set = AnchorSet::new(vec![anchor], 1.0, AnchorMethod::Random, 0).unwrap();
        let rescaled = ds
            .map_instances(3, |x, out| {
                let g = local_coordinates(x, &set).unwrap()[0];
                out.extend(x.iter().map(|v| g * v));
            })
            .unwrap();
        let cfg = TrainConfig::new(0.1, 300, seed);
        let (local, _) = train_local_classifier(&ds, &set, &cfg).unwrap();
        let (linear, _) = train_linear_classifier(&rescaled, &cfg).unwrap();
        assert!(relative_error(local.weights(), linear.weights()) < 1e-10);
    }
}

#[test]
fn linear_gradient_matches_finite_differences() {
    let mut r = rng(41);
    let mut checked = 0;
    while checked < 50 {
        let ds = random_dataset(&mut r, 8, 4, 3);
        let w = uniform_vec(&mut r, 4, -1.0, 1.0);
        if linear_kink_distance(&ds, &w) < 1e-3 {
            continue;
        }
        let lambda = r.gen_range(0.01..1.0);
        let fd = central_difference(&w, 1e-5, |v| {
            objective_classification(&ds, &LinearModel::from_weights(v.to_vec()).unwrap(), lambda).unwrap()
        });
        let g = linear_objective_gradient(&ds, &w, lambda);
        assert!(relative_error(&fd, &g) < 1e-4);
        checked += 1;
    }
}

#[test]
fn separable_toy_is_fit_without_errors() {
    let ds = separable_toy();
    let cfg = TrainConfig::new(0.01, 10_000, 1).recording_every(1000);
    let (m, trace) = train_linear_classifier(&ds, &cfg).unwrap();
    for b in ds.bags() {
        let s = bag_score_linear(b, &m).unwrap().score;
        assert_eq!(s >= 0.0, b.label() > 0, "bag {}", b.id());
    }
    let first = trace.objective_samples.first().unwrap();
    let last = trace.objective_samples.last().unwrap();
    assert_eq!(first.0, 1);
    assert_eq!(last.0, 10_001);
    assert!(last.1 < first.1);
}

fn pairwise(ds: &Dataset, model: &dyn Fn(&Bag) -> f64) -> f64 {
    let s: Vec<ScoredBag> = ds
        .bags()
        .iter()
        .map(|b| ScoredBag::new(b.id(), b.label(), model(b)))
        .collect();
    pairwise_order_accuracy(&s).unwrap()
}

#[test]
fn monotone_toy_is_ranked_by_both_rankers() {
    for seed in 0..3 {
        let ds = monotone_rank_toy(seed);
        let cfg = TrainConfig::new(0.01, 5000, seed).recording_every(500);
        let (m, trace) = train_linear_ranker(&ds, &cfg).unwrap();
        assert_eq!(pairwise(&ds, &|b| bag_score_linear(b, &m).unwrap().score), 1.0);
        assert!(trace.objective_samples.last().unwrap().1 < trace.objective_samples[0].1);

        let refs: Vec<&[f64]> = ds.all_instances().collect();
        let anchors = select_anchors(&refs, 3, AnchorMethod::KMeans, seed).unwrap();
        let (lm, _) = train_local_ranker(&ds, &anchors, &cfg).unwrap();
        assert_eq!(pairwise(&ds, &|b| bag_score_local(b, &lm).unwrap().score), 1.0);
    }
}

#[test]
fn mirrored_rank_update_does_not_rank_the_toy() {
    let ds = monotone_rank_toy(0);
    let mut cfg = TrainConfig::new(0.01, 5000, 0).recording_every(500);
    cfg.rank_update = RankUpdate::Mirrored;
    let (m, trace) = train_linear_ranker(&ds, &cfg).unwrap();
    let acc = pairwise(&ds, &|b| bag_score_linear(b, &m).unwrap().score);
    let decreased = trace.objective_samples.last().unwrap().1 < trace.objective_samples[0].1;
    assert!(acc < 1.0 || !decreased);
}

#[test]
fn xor_needs_local_coding() {
    let ds = xor_bags();
    // f(1,1) = -f(-1,-1), so both positives can only be >= 0 with w1 + w2 = 0,
    // which makes the two negatives score 0 as well
    assert!(xor_best_linear_errors(3.0, 0.05) >= 1);
    let cfg = TrainConfig::new(0.01, 20_000, 0);
    let (lin, _) = train_linear_classifier(&ds, &cfg).unwrap();
    let lin_err = ds
        .bags()
        .iter()
        .filter(|b| (bag_score_linear(b, &lin).unwrap().score >= 0.0) != (b.label() > 0))
        .count();
    assert!(lin_err >= 1);

    let anchors: Vec<Vec<f64>> = ds.bags().iter().map(|b| b.instance(0).to_vec()).collect();
    let set = AnchorSet::new(anchors, 1.0, AnchorMethod::Random, 0).unwrap();
    let (loc, _) = train_local_classifier(&ds, &set, &cfg).unwrap();
    for b in ds.bags() {
        assert_eq!(bag_score_local(b, &loc).unwrap().score >= 0.0, b.label() > 0);
    }
}

#[test]
fn local_gradient_matches_finite_differences() {
    let mut r = rng(43);
    let mut checked = 0;
    while checked < 50 {
        let ds = random_dataset(&mut r, 8, 3, 3);
        let anchors: Vec<Vec<f64>> = (0..3).map(|_| uniform_vec(&mut r, 3, -2.0, 2.0)).collect();
        let set = AnchorSet::new(anchors, 1.0, AnchorMethod::Random, 0).unwrap();
        let gammas: Vec<Vec<Vec<f64>>> = ds
            .bags()
            .iter()
            .map(|b| b.instances().map(|x| local_coordinates(x, &set).unwrap()).collect())
            .collect();
        let w = uniform_vec(&mut r, 9, -1.0, 1.0);
        if local_kink_distance(&ds, &gammas, &w) < 1e-3 {
            continue;
        }
        let lambda = r.gen_range(0.01..1.0);
        let fd = central_difference(&w, 1e-5, |v| {
            let m = LocalModel::new(v.to_vec(), set.clone(), meta()).unwrap();
            objective_classification(&ds, &m, lambda).unwrap()
        });
        let g = local_objective_gradient(&ds, &gammas, &w, lambda);
        assert!(relative_error(&fd, &g) < 1e-4);
        checked += 1;
    }
}
