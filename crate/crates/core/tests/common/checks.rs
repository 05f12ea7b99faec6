//! Oracle checks shared by the acceptance suite and the per-module
//! integration tests. Each returns a one-line summary on success and the
//! first discrepancy on failure.

#![allow(dead_code)]

use std::collections::BTreeSet;

use exodyn::evaluation::{error_metrics, r_squared};
use exodyn::preprocess::{build_pairs, fit_scaler, make_folds, resample_linear, apply_scaler};
use exodyn::regressors::kernel::{gram_matrix, CompositeKernelParams};
use exodyn::regressors::{gpr, knn, lwpr, mlp, svr, xgboost};
use exodyn::types::{DimensionProfile, TaskLabel, Trial};
use exodyn::Matrix;
use rand::Rng;

use super::{dot, gauss_solve, inverse, matvec, random_matrix, random_vec, rng, Dense};

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Metric oracle

fn brute_r2(y: &[f64], yh: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mut mean = 0.0;
    for v in y {
        mean += v;
    }
    mean /= n;
    let mut tot = 0.0;
    let mut res = 0.0;
    for i in 0..y.len() {
        tot += (y[i] - mean).powi(2);
        res += (y[i] - yh[i]).powi(2);
    }
    100.0 * (1.0 - res / tot)
}

pub fn metric_oracle(seed: u64, pairs: usize) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for case in 0..pairs {
        let n = r.gen_range(2..200);
        let offset = r.gen_range(-50.0..50.0);
        let spread = r.gen_range(0.1..10.0);
        let y: Vec<f64> = (0..n).map(|_| offset + spread * r.gen_range(-1.0..1.0)).collect();
        let noise = spread * r.gen_range(0.0..1.0);
        let yh: Vec<f64> = y.iter().map(|v| v + noise * r.gen_range(-1.0..1.0)).collect();
        let got = r_squared(&y, &yh).map_err(|e| format!("case {case}: {e}"))?;
        let (rmse, mae) = error_metrics(&y, &yh).map_err(|e| format!("case {case}: {e}"))?;
        let want_rmse = (y.iter().zip(&yh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64).sqrt();
        let want_mae = y.iter().zip(&yh).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
        for (name, a, b) in [("R2", got, brute_r2(&y, &yh)), ("RMSE", rmse, want_rmse), ("MAE", mae, want_mae)] {
            let d = (a - b).abs();
            worst = worst.max(d);
            ensure(d <= 1e-12, || format!("case {case}: {name} {a} vs brute force {b}"))?;
        }
    }
    Ok(format!("{pairs} pairs, max deviation {worst:.1e}"))
}

// GPR oracle

fn matern(a: &[f64], b: &[f64], ell: f64) -> f64 {
    let r = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let s = 3f64.sqrt() * r / ell;
    (1.0 + s) * (-s).exp()
}

pub fn gpr_oracle(seed: u64, datasets: usize) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for case in 0..datasets {
        let n = r.gen_range(1..=50);
        let d = r.gen_range(1..=4);
        let kernel = CompositeKernelParams {
            constant_value: r.gen_range(0.2..2.0),
            length_scale: r.gen_range(0.3..3.0),
            nu: 1.5,
            white_noise: r.gen_range(0.1..1.0),
        };
        let x = random_matrix(&mut r, n, d, -2.0, 2.0);
        let y = random_matrix(&mut r, n, 2, -1.0, 1.0);
        let model = gpr::fit(&x, &y, &gpr::GprParams { kernel, max_rows: 2000 }).map_err(|e| format!("case {case}: {e}"))?;
        let c2 = kernel.constant_value * kernel.constant_value;
        let dense: Dense = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let diag = if i == j { kernel.white_noise.powi(2) + model.jitter } else { 0.0 };
                        c2 + matern(x.row(i), x.row(j), kernel.length_scale) + diag
                    })
                    .collect()
            })
            .collect();
        let kinv = inverse(&dense);
        for _ in 0..5 {
            let q = random_vec(&mut r, d, -2.5, 2.5);
            let ks: Vec<f64> = (0..n).map(|i| c2 + matern(x.row(i), &q, kernel.length_scale)).collect();
            for o in 0..2 {
                let want = dot(&ks, &gauss_solve(&dense, &y.column(o)));
                let got = model.predict(o, &q);
                worst = worst.max((got - want).abs());
                ensure((got - want).abs() <= 1e-8, || format!("case {case}: mean {got} vs dense {want}"))?;
            }
            let want_var = c2 + 1.0 - dot(&ks, &matvec(&kinv, &ks));
            let got_var = model.predict_variance(&q);
            worst = worst.max((got_var - want_var).abs());
            ensure((got_var - want_var).abs() <= 1e-8, || {
                format!("case {case}: variance {got_var} vs dense {want_var}")
            })?;
        }
    }
    Ok(format!("{datasets} datasets, max deviation {worst:.1e}"))
}

// KNN oracle

pub fn knn_oracle(seed: u64, queries: usize) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut case = 0;
    while done < queries {
        let n = r.gen_range(20..=100);
        let d = r.gen_range(1..=5);
        let k = r.gen_range(1..=15);
        let p = [0.0, 1.0, 2.0, 3.0][r.gen_range(0..4)];
        let x = random_matrix(&mut r, n, d, -1.0, 1.0);
        let y = random_matrix(&mut r, n, 3, -1.0, 1.0);
        let params = knn::KnnParams { k: Some(k), p, ..Default::default() };
        let model = knn::fit(&x, &y, &params, case).map_err(|e| format!("case {case}: {e}"))?;
        for _ in 0..10.min(queries - done) {
            let q = random_vec(&mut r, d, -1.2, 1.2);
            let mut all: Vec<(f64, usize)> = (0..n)
                .map(|i| (x.row(i).iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>(), i))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let raw: Vec<f64> = all[..k].iter().map(|(dist, _)| (1.0 / (1.0 + dist)).powf(p)).collect();
            let total: f64 = raw.iter().sum();
            let got = model.predict_all(&q);
            for o in 0..3 {
                let want: f64 = all[..k].iter().zip(&raw).map(|(&(_, i), w)| w / total * y.get(i, o)).sum();
                worst = worst.max((got[o] - want).abs());
                ensure((got[o] - want).abs() <= 1e-12, || {
                    format!("case {case}: k={k} p={p} output {o}: {} vs exhaustive {want}", got[o])
                })?;
            }
            done += 1;
        }
        case += 1;
    }
    Ok(format!("{queries} queries, max deviation {worst:.1e}"))
}

// XGBoost split oracle

pub fn xgboost_split_oracle(seed: u64, instances: usize) -> Check {
    let mut r = rng(seed);
    let mut splits = 0;
    let mut skipped = 0;
    for case in 0..instances {
        let n = r.gen_range(1..=8);
        let levels = r.gen_range(1..=6);
        let xs: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64 * 0.5).collect();
        let grad = random_vec(&mut r, n, -1.0, 1.0);
        let hess: Vec<f64> = if r.gen_bool(0.5) { vec![1.0; n] } else { random_vec(&mut r, n, 0.2, 2.0) };
        let params = xgboost::XgbParams {
            lambda: [0.0, 1.0, 2.5][r.gen_range(0..3)],
            gamma: [0.0, 0.05][r.gen_range(0..2)],
            min_child_weight: [0.0, 1.0][r.gen_range(0..2)],
            ..Default::default()
        };
        let x = Matrix::from_vec(n, 1, xs.clone()).unwrap();
        let rows: Vec<usize> = (0..n).collect();

        let mut values: Vec<f64> = xs.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let (g, h): (f64, f64) = (grad.iter().sum(), hess.iter().sum());
        let sc = |g: f64, h: f64| if h + params.lambda == 0.0 { 0.0 } else { g * g / (h + params.lambda) };
        let mut candidates: Vec<(f64, f64)> = Vec::new();
        for w in values.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..n {
                if xs[i] < t {
                    gl += grad[i];
                    hl += hess[i];
                }
            }
            let (gr, hr) = (g - gl, h - hl);
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = 0.5 * (sc(gl, hl) + sc(gr, hr) - sc(g, h)) - params.gamma;
            candidates.push((t, gain));
        }
        // best gain, lowest threshold among equals
        let best = candidates
            .iter()
            .copied()
            .fold(None::<(f64, f64)>, |acc, c| match acc {
                Some(a) if a.1 >= c.1 => Some(a),
                _ => Some(c),
            });
        let got = xgboost::find_best_split(&x, &rows, &grad, &hess, &params);
        match best {
            Some((t, gain)) if gain > 1e-9 => {
                let runner_up = candidates
                    .iter()
                    .filter(|c| c.0 != t)
                    .map(|c| c.1)
                    .fold(f64::NEG_INFINITY, f64::max);
                let s = got.ok_or_else(|| format!("case {case}: no split, exhaustive best gain {gain} at {t}"))?;
                ensure((s.gain - gain).abs() <= 1e-12 * (1.0 + gain.abs()), || {
                    format!("case {case}: gain {} vs exhaustive {gain}", s.gain)
                })?;
                if gain - runner_up > 1e-12 {
                    ensure(s.threshold == t && s.feature == 0, || {
                        format!("case {case}: threshold {} vs exhaustive {t}", s.threshold)
                    })?;
                }
                splits += 1;
            }
            Some((_, gain)) if gain > -1e-9 => skipped += 1,
            _ => ensure(got.is_none(), || format!("case {case}: split {got:?} where none gains"))?,
        }
    }
    Ok(format!("{instances} instances, {splits} with a split, {skipped} within rounding of zero gain"))
}

// MLP gradient check

pub fn mlp_gradient_check(seed: u64, networks: usize) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for case in 0..networks {
        let d = r.gen_range(1..=4);
        let hidden: Vec<usize> = (0..r.gen_range(1..=2)).map(|_| r.gen_range(1..=6)).collect();
        let n = r.gen_range(2..=10);
        let l2 = [0.0, 1e-2][r.gen_range(0..2)];
        let arch = mlp::Architecture::new(d, &hidden);
        let params = arch.init(seed ^ case as u64);
        let x = random_matrix(&mut r, n, d, -1.5, 1.5);
        let y = random_vec(&mut r, n, -1.0, 1.0);
        let mut analytic = vec![0.0; params.len()];
        arch.loss_and_grad(&params, &x, &y, l2, &mut analytic);
        let mut scratch = vec![0.0; params.len()];
        let h = 1e-6;
        let numeric: Vec<f64> = (0..params.len())
            .map(|k| {
                let mut p = params.clone();
                p[k] += h;
                let up = arch.loss_and_grad(&p, &x, &y, l2, &mut scratch);
                p[k] -= 2.0 * h;
                let down = arch.loss_and_grad(&p, &x, &y, l2, &mut scratch);
                (up - down) / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let denom = norm(&analytic) + norm(&numeric);
        let rel = if denom == 0.0 { 0.0 } else { norm(&diff) / denom };
        worst = worst.max(rel);
        ensure(rel < 1e-4, || format!("case {case}: widths {:?}, relative error {rel:.2e}", arch.widths))?;
    }
    Ok(format!("{networks} networks, max relative error {worst:.1e}"))
}

// LWPR laws

pub fn lwpr_laws(seed: u64, queries: usize) -> Check {
    let mut r = rng(seed);
    let x = random_matrix(&mut r, 80, 3, -2.0, 2.0);
    let y = random_matrix(&mut r, 80, 2, -1.0, 1.0);
    let model = lwpr::fit(&x, &y, &lwpr::LwprParams::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..queries {
        let scale = if i % 10 == 0 { 25.0 } else { 2.5 };
        let q = random_vec(&mut r, 3, -scale, scale);
        let s: f64 = model.normalized_weights(&q).iter().sum();
        worst = worst.max((s - 1.0).abs());
        ensure((s - 1.0).abs() <= 1e-12, || format!("query {i}: weights sum to {s}"))?;
    }
    let mut lowest = f64::INFINITY;
    for case in 0..10 {
        let d = r.gen_range(1..=10);
        let n = r.gen_range(30..=120);
        let x = random_matrix(&mut r, n, d, -1.0, 1.0);
        let coef = random_vec(&mut r, d + 1, -2.0, 2.0);
        let targets: Vec<f64> = x.row_iter().map(|row| dot(row, &coef[..d]) + coef[d]).collect();
        let y = Matrix::column_vector(&targets);
        let params = lwpr::LwprParams { r: 0.01, w_gen: 0.1, ridge: 0.0 };
        let m = lwpr::fit(&x, &y, &params).map_err(|e| format!("linear case {case}: {e}"))?;
        ensure(m.fields.len() == 1, || format!("linear case {case}: {} receptive fields", m.fields.len()))?;
        let pred: Vec<f64> = x.row_iter().map(|row| m.predict(0, row)).collect();
        let r2 = r_squared(&targets, &pred).map_err(|e| e.to_string())?;
        lowest = lowest.min(r2);
        ensure(r2 >= 99.9999, || format!("linear case {case}: train R² {r2}"))?;
    }
    Ok(format!("{queries} queries, max |Σw - 1| {worst:.1e}; linear recovery min R² {lowest:.8}"))
}

// SVR KKT and reference QP

/// Accelerated proximal gradient inside an augmented Lagrangian for the
/// dual `min ½βᵀKβ - yᵀβ + ε‖β‖₁` over `|β| ≤ C`, `Σβ = 0`. Returns `β`
/// and the bias, which is the equality multiplier.
fn reference_qp(k: &Dense, y: &[f64], c: f64, eps: f64, mu: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let rho = 1.0;
    let gersh = k.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let lip = gersh + rho * n as f64;
    let momentum = (lip.sqrt() - mu.sqrt()) / (lip.sqrt() + mu.sqrt());
    let mut beta = vec![0.0; n];
    let mut lambda = 0.0;
    let prox = |z: f64| (z.abs() - eps / lip).max(0.0).copysign(z).clamp(-c, c);
    for _ in 0..200 {
        let mut prev = beta.clone();
        let mut z = beta.clone();
        for _ in 0..600 {
            let kz = matvec(k, &z);
            let s: f64 = z.iter().sum();
            let next: Vec<f64> = (0..n)
                .map(|i| prox(z[i] - (kz[i] - y[i] + lambda + rho * s) / lip))
                .collect();
            z = (0..n).map(|i| next[i] + momentum * (next[i] - prev[i])).collect();
            prev = next;
        }
        beta = prev;
        lambda += rho * beta.iter().sum::<f64>();
    }
    (beta, lambda)
}

pub fn svr_kkt(seed: u64, problems: usize) -> Check {
    let mut r = rng(seed);
    let mut worst_kkt = 0.0f64;
    let mut worst_pred = 0.0f64;
    let mut bounded = 0;
    for case in 0..problems {
        let n = r.gen_range(10..=30);
        let mut xs = random_vec(&mut r, n, -2.0, 2.0);
        xs.sort_by(f64::total_cmp);
        let freq = r.gen_range(0.5..3.0);
        let y: Vec<f64> = xs.iter().map(|v| (freq * v).sin() + 0.1 * r.gen_range(-1.0..1.0)).collect();
        let kernel = CompositeKernelParams {
            length_scale: r.gen_range(0.5..2.0),
            white_noise: r.gen_range(0.5..1.0),
            ..Default::default()
        };
        let params = svr::SvrParams {
            c: [0.2, 1.0, 10.0][r.gen_range(0..3)],
            epsilon: r.gen_range(0.01..0.1),
            kernel,
            ..Default::default()
        };
        let x = Matrix::from_vec(n, 1, xs.clone()).unwrap();
        let gram = gram_matrix(&x, &kernel);
        let sol = svr::solve_dual(&gram, &y, &params).map_err(|e| format!("problem {case}: {e}"))?;
        let c = params.c;
        for (i, &b) in sol.coef.iter().enumerate() {
            ensure(b.abs() <= c * (1.0 + 1e-12), || format!("problem {case}: coefficient {i} = {b} outside ±{c}"))?;
        }
        let sum: f64 = sol.coef.iter().sum();
        ensure(sum.abs() <= 1e-8, || format!("problem {case}: Σ coefficients = {sum}"))?;
        let dense: Dense = (0..n).map(|i| (0..n).map(|j| gram.get(i, j)).collect()).collect();
        let f = matvec(&dense, &sol.coef);
        for i in 0..n {
            let res = y[i] - f[i] - sol.bias;
            let b = sol.coef[i];
            let eps = params.epsilon;
            let bound = c * (1.0 - 1e-12);
            let viol = if b == 0.0 {
                (res.abs() - eps).max(0.0)
            } else if b >= bound {
                bounded += 1;
                (eps - res).max(0.0)
            } else if b <= -bound {
                bounded += 1;
                (res + eps).max(0.0)
            } else if b > 0.0 {
                (res - eps).abs()
            } else {
                (res + eps).abs()
            };
            worst_kkt = worst_kkt.max(viol);
            ensure(viol < 1e-4, || format!("problem {case}: KKT residual {viol:.2e} at row {i} (β = {b})"))?;
        }
        let (beta, bias) = reference_qp(&dense, &y, c, params.epsilon, kernel.white_noise.powi(2));
        let model = svr::SvrModel::from_solution(&x, sol, kernel);
        for g in 0..50 {
            let q = -2.2 + 4.4 * g as f64 / 49.0;
            let ks: Vec<f64> = xs
                .iter()
                .map(|&xi| kernel.constant_value.powi(2) + matern(&[xi], &[q], kernel.length_scale))
                .collect();
            let want = dot(&ks, &beta) + bias;
            let got = model.predict(&[q]);
            worst_pred = worst_pred.max((got - want).abs());
            ensure((got - want).abs() < 1e-3, || format!("problem {case}: prediction {got} vs reference {want} at {q}"))?;
        }
    }
    Ok(format!(
        "{problems} problems, max KKT residual {worst_kkt:.1e}, max prediction gap {worst_pred:.1e}, {bounded} coefficients at ±C"
    ))
}

// Pipeline laws

pub fn pipeline_laws(seed: u64, instances: usize) -> Check {
    let mut r = rng(seed);
    for case in 0..instances {
        let n = r.gen_range(2..500);
        let k = r.gen_range(2..=10.min(n));
        let plan = make_folds(n, k, r.gen()).map_err(|e| e.to_string())?;
        let mut seen = BTreeSet::new();
        for f in 0..k {
            let test = plan.test_rows(f);
            let train = plan.train_rows(f);
            ensure(test.len() + train.len() == n, || format!("folds {case}: fold {f} does not cover all rows"))?;
            ensure(test.iter().all(|i| !train.contains(i)), || format!("folds {case}: fold {f} overlaps"))?;
            for i in test {
                ensure(seen.insert(i), || format!("folds {case}: row {i} tested twice"))?;
            }
        }
        ensure(seen.len() == n, || format!("folds {case}: {} of {n} rows tested", seen.len()))?;
        let sizes = plan.fold_sizes();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        ensure(hi - lo <= 1, || format!("folds {case}: unbalanced sizes {sizes:?}"))?;
    }
    for case in 0..instances {
        let n = r.gen_range(2..200);
        let d = r.gen_range(1..12);
        let mut x = random_matrix(&mut r, n, d, -1.0, 1.0);
        let constant = r.gen_range(0..d);
        let offset = r.gen_range(-100.0..100.0);
        let spread = r.gen_range(0.01..50.0);
        for i in 0..n {
            for c in 0..d {
                let v = if c == constant && d > 1 { 0.375 } else { offset + spread * x.get(i, c) };
                x.set(i, c, v);
            }
        }
        let s = fit_scaler(&x).map_err(|e| e.to_string())?;
        let z = apply_scaler(&s, &x).map_err(|e| e.to_string())?;
        for c in 0..d {
            let col = z.column(c);
            let raw = x.column(c);
            if raw.iter().all(|&v| v == raw[0]) {
                ensure(col.iter().all(|v| v.abs() <= 1e-3), || format!("scaler {case}: constant column {c} -> {col:?}"))?;
                continue;
            }
            let m = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            ensure(m.abs() <= 1e-9, || format!("scaler {case}: column {c} mean {m}"))?;
            ensure((var - 1.0).abs() <= 1e-9, || format!("scaler {case}: column {c} variance {var}"))?;
        }
    }
    for case in 0..instances {
        let n = r.gen_range(2..300);
        let target = r.gen_range(2..500);
        let series = random_vec(&mut r, n, -5.0, 5.0);
        let out = resample_linear(&series, target).map_err(|e| e.to_string())?;
        ensure(out.len() == target, || format!("resample {case}: length {}", out.len()))?;
        ensure(out[0] == series[0] && out[target - 1] == series[n - 1], || {
            format!("resample {case}: endpoints {} {} vs {} {}", out[0], out[target - 1], series[0], series[n - 1])
        })?;
        let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        ensure(out.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12), || format!("resample {case}: overshoot"))?;
    }
    let profile = DimensionProfile::default();
    let mut worst = 0.0f64;
    for case in 0..instances {
        let t = r.gen_range(11..200);
        let feats = random_matrix(&mut r, t, profile.input_dim(), -3.0, 3.0);
        let trial = Trial::new(feats.clone(), 100.0, TaskLabel::ALL[case % 6], "1", 1, profile).unwrap();
        let ds = build_pairs(&trial).map_err(|e| e.to_string())?;
        ensure(ds.len() == t - 1, || format!("pairs {case}: {} rows for {t} samples", ds.len()))?;
        let mut state = feats.row(0)[..profile.state_dim].to_vec();
        for i in 0..t - 1 {
            ensure(ds.inputs.row(i) == feats.row(i), || format!("pairs {case}: input row {i} differs"))?;
            for (c, s) in state.iter_mut().enumerate() {
                *s += ds.targets.get(i, c);
            }
            for (c, s) in state.iter().enumerate() {
                let d = (s - feats.get(i + 1, c)).abs();
                worst = worst.max(d);
                ensure(d <= 1e-9, || format!("pairs {case}: cumulative sum off by {d} at t={}", i + 1))?;
            }
        }
    }
    Ok(format!(
        "{instances} instances each of folds, scaler, resampling and pair inversion (max drift {worst:.1e})"
    ))
}
