//! The oracle checks on fresh seeds, plus edge cases the random draws
//! rarely reach.

mod common;

use common::checks;
use exodyn::regressors::kernel::{gram_matrix, CompositeKernelParams};
use exodyn::regressors::{gpr, knn, svr, xgboost};
use exodyn::Matrix;

fn pass(c: checks::Check) {
    if let Err(e) = c {
        panic!("{e}");
    }
}

#[test]
fn metrics_on_other_seeds() {
    for seed in 1..4 {
        pass(checks::metric_oracle(seed, 300));
    }
}

#[test]
fn gpr_on_other_seeds() {
    pass(checks::gpr_oracle(11, 30));
}

#[test]
fn knn_on_other_seeds() {
    pass(checks::knn_oracle(12, 300));
}

#[test]
fn xgboost_on_other_seeds() {
    for seed in 20..25 {
        pass(checks::xgboost_split_oracle(seed, 200));
    }
}

#[test]
fn mlp_on_other_seeds() {
    pass(checks::mlp_gradient_check(13, 40));
}

#[test]
fn lwpr_on_other_seeds() {
    pass(checks::lwpr_laws(14, 500));
}

#[test]
fn svr_on_other_seeds() {
    pass(checks::svr_kkt(15, 10));
}

#[test]
fn pipeline_on_other_seeds() {
    pass(checks::pipeline_laws(16, 50));
}

#[test]
fn gpr_fails_cleanly_past_the_row_cap() {
    let x = Matrix::zeros(11, 1);
    let y = Matrix::zeros(11, 1);
    let params = gpr::GprParams { max_rows: 10, ..Default::default() };
    assert!(matches!(gpr::fit(&x, &y, &params), Err(exodyn::Error::TooManyRows { rows: 11, cap: 10 })));
}

#[test]
fn knn_with_k_equal_to_n_is_a_weighted_mean() {
    let x = Matrix::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
    let y = Matrix::from_rows(&[[1.0], [2.0], [4.0]]).unwrap();
    let m = knn::fit(&x, &y, &knn::KnnParams { k: Some(3), p: 0.0, ..Default::default() }, 0).unwrap();
    // p = 0 gives uniform weights
    assert!((m.predict_all(&[10.0])[0] - 7.0 / 3.0).abs() < 1e-15);
}

#[test]
fn xgboost_refuses_splits_below_gamma() {
    let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
    let grad = [1.0, -1.0];
    let hess = [1.0, 1.0];
    // gain of the only split is ½(1/2 + 1/2 - 0) = 0.5
    let open = xgboost::XgbParams { lambda: 1.0, gamma: 0.0, min_child_weight: 0.0, ..Default::default() };
    let s = xgboost::find_best_split(&x, &[0, 1], &grad, &hess, &open).unwrap();
    assert!((s.gain - 0.5).abs() < 1e-15 && s.threshold == 0.5);
    let closed = xgboost::XgbParams { gamma: 0.5, ..open };
    assert!(xgboost::find_best_split(&x, &[0, 1], &grad, &hess, &closed).is_none());
}

#[test]
fn svr_fits_inside_the_tube_without_support_vectors() {
    let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
    let kernel = CompositeKernelParams::default();
    let params = svr::SvrParams { epsilon: 0.5, ..Default::default() };
    let y = [0.1, -0.1, 0.2];
    let sol = svr::solve_dual(&gram_matrix(&x, &kernel), &y, &params).unwrap();
    assert!(sol.coef.iter().all(|&c| c == 0.0), "{:?}", sol.coef);
    // any bias inside every tube is optimal
    for v in y {
        assert!((v - sol.bias).abs() <= 0.5 + 1e-9);
    }
}
