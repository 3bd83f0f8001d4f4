mod common;

use ols_core::mlp::{init_mlp, load_model, save_model, train, MlpModel, TrainConfig};
use ols_core::rng::SeededRng;

#[test]
fn backprop_matches_finite_differences() {
    for seed in 0..20 {
        let err = common::gradient_check(seed);
        assert!(err <= 1e-5, "seed {seed}: {err:e}");
    }
}

fn line_data(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = SeededRng::new(4);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform_in(-1.0, 1.0)]).collect();
    let ys = xs.iter().map(|x| vec![2.0 * x[0] + 1.0]).collect();
    (xs, ys)
}

#[test]
fn learns_a_line() {
    let (xs, ys) = line_data(200);
    let cfg = TrainConfig {
        hidden: vec![8],
        learning_rate: 1e-2,
        max_epochs: 2000,
        l2: 0.0,
        patience: 2000,
        ..TrainConfig::default()
    };
    let model = init_mlp(&[1, 8, 1], 1).unwrap();
    let (_, report) = train(&model, &xs, &ys, &cfg).unwrap();
    assert!(report.final_mse < 1e-4, "{}", report.final_mse);
}

#[test]
fn full_batch_small_steps_decrease_loss() {
    let (xs, ys) = line_data(64);
    let mut model = init_mlp(&[1, 5, 1], 3).unwrap();
    let lr = 1e-4;
    let mut last = f64::INFINITY;
    for _ in 0..50 {
        let (loss, g) = model.gradients(&xs, &ys, 1e-3, None).unwrap();
        assert!(loss <= last + 1e-15, "{loss} > {last}");
        last = loss;
        for (k, l) in model.layers.iter_mut().enumerate() {
            l.w -= lr * &g.dw[k];
            l.b -= lr * &g.db[k];
        }
    }
}

fn trained_once() -> MlpModel {
    let (xs, ys) = line_data(100);
    let cfg = TrainConfig {
        hidden: vec![4, 3],
        max_epochs: 30,
        seed: 9,
        ..TrainConfig::default()
    };
    train(&init_mlp(&[1, 4, 3, 1], 9).unwrap(), &xs, &ys, &cfg).unwrap().0
}

#[test]
fn training_is_deterministic() {
    assert_eq!(trained_once(), trained_once());
}

#[test]
fn saved_model_reloads_exactly() {
    let model = trained_once();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, model);
    save_model(&back, &dir.path().join("n.json")).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(dir.path().join("n.json")).unwrap());
}
