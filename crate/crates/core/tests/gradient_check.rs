//! Analytic backward pass against central finite differences.

use deepfcnn::fcnn::{backward, forward, DeepFcnn};
use deepfcnn::initcond::random_uniform;
use deepfcnn::training::mse_loss;
use deepfcnn::{EquationKind, Field, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;
const TOL: f64 = 1e-5;

fn loss(model: &DeepFcnn, input: &Field, target: &Field) -> f64 {
    mse_loss(&model.predict(input), target).unwrap().0
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-8 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

fn check(kind: EquationKind, order: usize, seed: u64) {
    let spec = GridSpec::unit_square(8).unwrap();
    let input = random_uniform(&spec, seed);
    let target = random_uniform(&spec, seed + 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = DeepFcnn::random(kind, 3, order, 0.5, &mut rng).unwrap();

    let pass = forward(&model, &input);
    let (_, g_out) = mse_loss(&pass.output, &target).unwrap();
    let grads = backward(&model, &pass, &g_out).unwrap();
    let analytic = grads.flatten();

    let params = model.params();
    for (p, &a) in analytic.iter().enumerate() {
        let mut plus = model.clone();
        let mut minus = model.clone();
        let mut v = params.clone();
        v[p] = params[p] + STEP;
        plus.set_params(&v).unwrap();
        v[p] = params[p] - STEP;
        minus.set_params(&v).unwrap();
        let numeric = (loss(&plus, &input, &target) - loss(&minus, &input, &target)) / (2.0 * STEP);
        let e = rel_err(a, numeric);
        assert!(
            e < TOL,
            "order {order}, param {p}: analytic {a}, numeric {numeric}, rel {e}"
        );
    }

    // input gradient, including boundary nodes
    for idx in [0, 3, 7, 9, 27, 56, 63] {
        let mut plus = input.clone();
        let mut minus = input.clone();
        plus.values_mut()[idx] += STEP;
        minus.values_mut()[idx] -= STEP;
        let numeric = (loss(&model, &plus, &target) - loss(&model, &minus, &target)) / (2.0 * STEP);
        let a = grads.input.values()[idx];
        assert!(
            rel_err(a, numeric) < TOL,
            "input node {idx}: analytic {a}, numeric {numeric}"
        );
    }
}

#[test]
fn heat_order_0() {
    for seed in 0..3 {
        check(EquationKind::Heat, 0, seed);
    }
}

#[test]
fn fisher_order_2() {
    for seed in 0..3 {
        check(EquationKind::Fisher, 2, seed);
    }
}

#[test]
fn allen_cahn_order_3() {
    for seed in 0..3 {
        check(EquationKind::AllenCahn, 3, seed);
    }
}
