mod common;

use common::{finite_difference_check, random_instance, random_params, TENSORS};
use mosan::params::Dims;
use mosan::rng::seeded;
use mosan::training::{NeuralModel, Penalty};
use rand::Rng as _;

const DIMS: Dims = Dims {
    users: 8,
    items: 6,
    dim: 4,
    hidden: 4,
};

fn check(model: NeuralModel, cases: u64, penalty: impl Fn(u64) -> Penalty) {
    for case in 0..cases {
        let mut rng = seeded(1000 + case);
        let p = random_params(DIMS, 0.5, case);
        let size = rng.gen_range(1..=3);
        let batch: Vec<_> = (0..size).map(|_| random_instance(&mut rng, DIMS, 5)).collect();
        let r = finite_difference_check(model, &p, &batch, penalty(case), 1e-5);
        for (name, err) in TENSORS.iter().zip(r.max_rel) {
            assert!(err < 1e-4, "{} case {case}: {name} rel err {err:e}", model.name());
        }
        assert!(r.d_analytic.abs() < 1e-12, "d gradient {:e}", r.d_analytic);
        assert!(r.d_numeric.abs() < 1e-8, "numeric d gradient {:e}", r.d_numeric);
    }
}

#[test]
fn mosan_matches_finite_differences() {
    check(NeuralModel::Mosan, 60, |_| Penalty::full(0.01));
}

#[test]
fn mosan_with_partial_dense_penalty() {
    check(NeuralModel::Mosan, 20, |c| {
        Penalty::for_batch(0.1, 1 + c as usize % 3, 7)
    });
}

#[test]
fn mosan_without_penalty() {
    check(NeuralModel::Mosan, 20, |_| Penalty::full(0.0));
}

#[test]
fn att_avg_matches_finite_differences() {
    check(NeuralModel::AttAvg, 40, |_| Penalty::full(0.01));
}

#[test]
fn mf_avg_matches_finite_differences() {
    check(NeuralModel::MfAvg, 40, |_| Penalty::full(0.01));
}
