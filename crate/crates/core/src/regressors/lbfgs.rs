//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub history: usize,
    pub max_iter: usize,
    /// Stop when the infinity norm of the gradient falls below this.
    pub gtol: f64,
    /// Stop when the relative decrease of the objective falls below this.
    pub ftol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            history: 10,
            max_iter: 500,
            gtol: 1e-9,
            ftol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    ObjectiveTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl LbfgsResult {
    pub fn converged(&self) -> bool {
        matches!(
            self.termination,
            Termination::GradientTolerance | Termination::ObjectiveTolerance
        )
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the objective.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.history);
    let mut iterations = 0;

    let termination = loop {
        if inf_norm(&g) <= opts.gtol {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break Termination::MaxIterations;
        }

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            for di in &mut d {
                *di *= gamma;
            }
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let step0 = if hist.is_empty() {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };

        let Some((step, f_new, g_new)) = line_search(&mut f, &x, fx, &d, slope, step0) else {
            break Termination::LineSearchFailed;
        };
        iterations += 1;

        let s: Vec<f64> = d.iter().map(|v| step * v).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if hist.len() == opts.history {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let f_old = fx;
        fx = f_new;
        g = g_new;
        if (f_old - fx).abs() <= opts.ftol * f_old.abs().max(fx.abs()).max(1e-300) {
            break Termination::ObjectiveTolerance;
        }
    };

    LbfgsResult {
        grad_norm: inf_norm(&g),
        x,
        value: fx,
        iterations,
        termination,
    }
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LS_EVALS: usize = 40;

fn line_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    d: &[f64],
    slope0: f64,
    step0: f64,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut trial = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut evals = 0;
    let mut eval = |step: f64, grad: &mut Vec<f64>| {
        for i in 0..n {
            trial[i] = x[i] + step * d[i];
        }
        let v = f(&trial, grad);
        (v, dot(grad, d))
    };

    let mut prev = (0.0, f0, slope0);
    let mut step = step0;
    // (step, value, slope) at the low and high ends of the bracket
    let (mut lo, mut hi);
    loop {
        let (fv, sv) = eval(step, &mut grad);
        evals += 1;
        if evals >= MAX_LS_EVALS {
            return None;
        }
        if !fv.is_finite() {
            step = 0.5 * (prev.0 + step);
            continue;
        }
        if fv > f0 + C1 * step * slope0 || (evals > 1 && fv >= prev.1) {
            lo = prev;
            hi = (step, fv, sv);
            break;
        }
        if sv.abs() <= -C2 * slope0 {
            return Some((step, fv, grad));
        }
        if sv >= 0.0 {
            lo = (step, fv, sv);
            hi = prev;
            break;
        }
        prev = (step, fv, sv);
        step *= 2.0;
    }

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    while evals < MAX_LS_EVALS {
        let width = hi.0 - lo.0;
        let curv = hi.1 - lo.1 - lo.2 * width;
        let (a, b) = if lo.0 < hi.0 { (lo.0, hi.0) } else { (hi.0, lo.0) };
        let margin = 0.1 * (b - a);
        let mut step_new = if curv > 0.0 {
            lo.0 - lo.2 * width * width / (2.0 * curv)
        } else {
            0.5 * (a + b)
        };
        if !(step_new > a + margin && step_new < b - margin) {
            step_new = 0.5 * (a + b);
        }
        let (fv, sv) = eval(step_new, &mut grad);
        evals += 1;
        if fv.is_finite() && fv < f0 + C1 * step_new * slope0 && best.as_ref().is_none_or(|b| fv < b.1) {
            best = Some((step_new, fv, grad.clone()));
        }
        if !fv.is_finite() || fv > f0 + C1 * step_new * slope0 || fv >= lo.1 {
            hi = (step_new, fv, sv);
        } else {
            if sv.abs() <= -C2 * slope0 {
                return Some((step_new, fv, grad));
            }
            if sv * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (step_new, fv, sv);
        }
        if (b - a) <= 1e-16 * b.abs().max(1.0) {
            break;
        }
    }
    best
}
