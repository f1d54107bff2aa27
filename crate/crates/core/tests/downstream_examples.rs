use fairtrans::data::{toy_classification, Task};
use fairtrans::downstream::{compose, fit, fit_zoo, DownstreamParams, FeatureMap, ModelKind};
use fairtrans::experiment::{evaluate_baseline, EvalConfig};
use fairtrans::metrics::{auc, popoviciu_check};
use fairtrans::nn::Matrix;
use fairtrans::preprocess::SupervisedConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn accuracy(scores: &[f64], y: &[f64]) -> f64 {
    let hits = scores
        .iter()
        .zip(y)
        .filter(|(s, y)| (**s >= 0.5) == (**y == 1.0))
        .count();
    hits as f64 / y.len() as f64
}

fn rows(points: &[[f64; 2]]) -> Matrix {
    Matrix::from_rows(points).unwrap()
}

fn separable(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as f64;
        let side = if label == 1.0 { 1.0 } else { -1.0 };
        pts.push([side * (0.5 + rng.random::<f64>()), rng.random_range(-2.0..2.0)]);
        y.push(label);
    }
    (rows(&pts), y)
}

fn xor(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let b: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        pts.push([
            a + 0.2 * rng.random_range(-1.0..1.0),
            b + 0.2 * rng.random_range(-1.0..1.0),
        ]);
        y.push(if a * b > 0.0 { 1.0 } else { 0.0 });
    }
    (rows(&pts), y)
}

fn params() -> DownstreamParams {
    DownstreamParams::default()
}

#[test]
fn logistic_regression_separates_separable_data() {
    let (x, y) = separable(400, 1);
    let m = fit(
        ModelKind::LogisticRegression,
        &x,
        &y,
        Task::Classification,
        &params(),
        0,
    )
    .unwrap();
    assert!(accuracy(&m.score(&x).unwrap(), &y) >= 0.99);
}

#[test]
fn random_features_solve_xor_where_linear_fails() {
    let (x, y) = xor(400, 2);
    let rff = fit(
        ModelKind::RandomFeatureLinear,
        &x,
        &y,
        Task::Classification,
        &params(),
        0,
    )
    .unwrap();
    let lr = fit(
        ModelKind::LogisticRegression,
        &x,
        &y,
        Task::Classification,
        &params(),
        0,
    )
    .unwrap();
    let (a_rff, a_lr) = (
        accuracy(&rff.score(&x).unwrap(), &y),
        accuracy(&lr.score(&x).unwrap(), &y),
    );
    assert!(a_rff >= 0.9, "rff accuracy {a_rff}");
    assert!(a_lr <= 0.6, "linear accuracy {a_lr}");
}

#[test]
fn one_nearest_neighbour_scores_are_labels() {
    let (x, y) = xor(120, 3);
    let p = DownstreamParams { knn_k: 1, ..params() };
    let m = fit(ModelKind::Knn, &x, &y, Task::Classification, &p, 0).unwrap();
    let (q, _) = xor(50, 4);
    assert!(m.score(&q).unwrap().iter().all(|&s| s == 0.0 || s == 1.0));
    assert_eq!(m.score(&x).unwrap(), y);
}

#[test]
fn constant_covariates_give_constant_scores() {
    let x = Matrix::from_rows(&vec![[2.0, -1.0]; 40]).unwrap();
    let y: Vec<f64> = (0..40).map(|i| (i % 3 == 0) as u8 as f64).collect();
    let probe = Matrix::from_rows(&[[2.0, -1.0], [2.0, -1.0]]).unwrap();
    for kind in ModelKind::ALL {
        let m = fit(kind, &x, &y, Task::Classification, &params(), 5).unwrap();
        let s = m.score(&probe).unwrap();
        assert!((s[0] - s[1]).abs() < 1e-12, "{kind:?}");
        assert!(s[0] > 0.0 && s[0] < 1.0, "{kind:?}: {s:?}");
    }
}

#[test]
fn identity_composition_equals_direct_fit() {
    let (x, y) = separable(200, 6);
    for kind in [ModelKind::LogisticRegression, ModelKind::Knn, ModelKind::SmallMlp] {
        let direct = fit(kind, &x, &y, Task::Classification, &params(), 7).unwrap();
        let composed = compose(FeatureMap::Identity, kind, &x, &y, Task::Classification, &params(), 7).unwrap();
        assert_eq!(direct.score(&x).unwrap(), composed.score(&x).unwrap(), "{kind:?}");
    }
}

#[test]
fn fitting_is_deterministic_per_seed() {
    let (x, y) = xor(150, 8);
    for kind in ModelKind::ALL {
        let a = fit(kind, &x, &y, Task::Classification, &params(), 9).unwrap();
        let b = fit(kind, &x, &y, Task::Classification, &params(), 9).unwrap();
        assert_eq!(a.score(&x).unwrap(), b.score(&x).unwrap(), "{kind:?}");
    }
}

#[test]
fn logistic_scores_rank_like_the_linear_predictor() {
    // The logit is an increasing map of the probability.
    let (x, y) = separable(300, 10);
    let m = fit(
        ModelKind::LogisticRegression,
        &x,
        &y,
        Task::Classification,
        &params(),
        0,
    )
    .unwrap();
    let s = m.score(&x).unwrap();
    let logits: Vec<f64> = s.iter().map(|p| (p / (1.0 - p)).ln()).collect();
    assert_eq!(auc(&s, &y).unwrap(), auc(&logits, &y).unwrap());
}

#[test]
fn regression_zoo_fits_a_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts: Vec<[f64; 2]> = (0..300)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let y: Vec<f64> = pts
        .iter()
        .map(|p| 2.0 * p[0] - p[1] + 0.05 * rng.random::<f64>())
        .collect();
    let x = rows(&pts);
    let var = {
        let m = y.iter().sum::<f64>() / y.len() as f64;
        y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len() as f64
    };
    let p = DownstreamParams {
        mlp_epochs: 200,
        ..params()
    };
    let zoo = fit_zoo(&ModelKind::ALL, &x, &y, Task::Regression, &p, 0).unwrap();
    for m in &zoo {
        let s = m.score(&x).unwrap();
        let mse = s.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
        assert!(mse < 0.25 * var, "{:?}: mse {mse} var {var}", m.kind());
    }
}

#[test]
fn baseline_evaluation_covers_the_zoo() {
    let d = toy_classification(1500, 12).unwrap();
    let idx: Vec<usize> = (0..1500).collect();
    let (train, test) = fairtrans::data::split_by_indices(&d, &idx[..1100], &idx[1100..]);
    let up = SupervisedConfig {
        hidden: vec![16, 16],
        epochs: 20,
        batch_size: 100,
        learning_rate: 1e-2,
        dropout: 0.0,
        seed: 0,
        loss: fairtrans::preprocess::LossKind::CrossEntropy,
    };
    let eval = EvalConfig {
        hgr_steps: 0,
        ..EvalConfig::default()
    };
    let run = evaluate_baseline(&train, &test, &up, &eval).unwrap();
    assert_eq!(run.reports().count(), ModelKind::ALL.len() + 1);
    for r in run.reports() {
        let a = r.auc.unwrap();
        assert!(a > 0.75, "{}: auc {a}", r.model);
        assert!(r.sp.unwrap() > 0.0 && r.eo.is_some());
        assert!(r.hgr_hat.is_none());
    }
    let losses: Vec<f64> = run.reports().map(|r| r.loss).collect();
    assert!(popoviciu_check(&losses).unwrap().holds);
}
