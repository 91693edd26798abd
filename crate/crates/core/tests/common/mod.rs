//! Shared helpers for the acceptance suite: an independent proximal-gradient
//! (FISTA) solver used as a correctness oracle, plus small data generators.
//!
//! The oracle shares no code with the coordinate-descent path solver: it has
//! its own objective, gradient, soft-threshold, step-size search, and
//! stopping rule, so agreement between the two is meaningful evidence.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleFamily {
    Gaussian,
    Binomial,
}

/// Numerically stable log(1 + exp(v)).
fn log1pexp(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// Smooth part of the objective at (b0, beta).
fn smooth_value(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    b0: f64,
    beta: &[f64],
    family: OracleFamily,
) -> f64 {
    let n = x.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let mut eta = b0;
        for j in 0..beta.len() {
            eta += x[[i, j]] * beta[j];
        }
        total += match family {
            OracleFamily::Gaussian => {
                let r = y[i] - eta;
                0.5 * r * r
            }
            OracleFamily::Binomial => log1pexp(eta) - y[i] * eta,
        };
    }
    total / n as f64
}

/// Gradient of the smooth part: (d/d b0, d/d beta).
fn smooth_grad(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    b0: f64,
    beta: &[f64],
    family: OracleFamily,
) -> (f64, Vec<f64>) {
    let n = x.nrows();
    let p = beta.len();
    // Per-row residual factor: gaussian -(y - eta), binomial (sigma(eta) - y).
    let mut factor = vec![0.0; n];
    for i in 0..n {
        let mut eta = b0;
        for j in 0..p {
            eta += x[[i, j]] * beta[j];
        }
        factor[i] = match family {
            OracleFamily::Gaussian => eta - y[i],
            OracleFamily::Binomial => 1.0 / (1.0 + (-eta).exp()) - y[i],
        };
    }
    let nf = n as f64;
    let g0 = factor.iter().sum::<f64>() / nf;
    let mut g = vec![0.0; p];
    for j in 0..p {
        let mut acc = 0.0;
        for i in 0..n {
            acc += x[[i, j]] * factor[i];
        }
        g[j] = acc / nf;
    }
    (g0, g)
}

/// Full objective: smooth part + lambda * sum_j w_j |beta_j|.
pub fn oracle_objective(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    b0: f64,
    beta: &[f64],
    lambda: f64,
    weights: &[f64],
    family: OracleFamily,
) -> f64 {
    let penalty: f64 = beta
        .iter()
        .zip(weights)
        .map(|(&b, &w)| w * b.abs())
        .sum::<f64>();
    smooth_value(x, y, b0, beta, family) + lambda * penalty
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Stationarity violation of the weighted-l1 objective at (b0, beta): the
/// worst over the intercept gradient, |g_j + lambda w_j sign(beta_j)| on
/// active coordinates, and (|g_j| - lambda w_j)_+ on inactive ones.
pub fn kkt_violation(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    b0: f64,
    beta: &[f64],
    lambda: f64,
    weights: &[f64],
    family: OracleFamily,
) -> f64 {
    let (g0, g) = smooth_grad(x, y, b0, beta, family);
    let mut worst = g0.abs();
    for j in 0..beta.len() {
        let v = if beta[j] != 0.0 {
            (g[j] + lambda * weights[j] * beta[j].signum()).abs()
        } else {
            (g[j].abs() - lambda * weights[j]).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// One pass of FISTA with backtracking and function-value restart, stopping
/// as soon as the stationarity violation drops below `kkt_tol` (checked
/// every 10 iterations) or the iteration budget runs out.
fn fista_pass(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    weights: &[f64],
    lambda: f64,
    family: OracleFamily,
    state: &mut (f64, Vec<f64>),
    kkt_tol: f64,
    max_iter: usize,
) {
    let p = weights.len();
    let (mut b0, mut beta) = (state.0, state.1.clone());
    let mut z0 = b0;
    let mut zb = beta.clone();
    let mut theta = 1.0f64;
    let mut t = 1.0f64;
    let mut f_prev = oracle_objective(x, y, b0, &beta, lambda, weights, family);

    for iter in 0..max_iter {
        let fz = smooth_value(x, y, z0, &zb, family);
        let (g0, g) = smooth_grad(x, y, z0, &zb, family);

        // Backtrack until the quadratic model at z majorizes the candidate.
        let (mut c0, mut cb);
        loop {
            c0 = z0 - t * g0;
            cb = (0..p)
                .map(|j| soft(zb[j] - t * g[j], t * lambda * weights[j]))
                .collect::<Vec<f64>>();
            let fc = smooth_value(x, y, c0, &cb, family);
            let mut linear = (c0 - z0) * g0;
            let mut sq = (c0 - z0) * (c0 - z0);
            for j in 0..p {
                let d = cb[j] - zb[j];
                linear += d * g[j];
                sq += d * d;
            }
            if fc <= fz + linear + sq / (2.0 * t) + 1e-15 {
                break;
            }
            t *= 0.5;
            assert!(t > 1e-30, "step size underflow in oracle");
        }

        let f_new = oracle_objective(x, y, c0, &cb, lambda, weights, family);
        if f_new > f_prev {
            // Momentum overshot: restart from the last accepted point.
            z0 = b0;
            zb = beta.clone();
            theta = 1.0;
            continue;
        }

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let mix = (theta - 1.0) / theta_next;
        z0 = c0 + mix * (c0 - b0);
        zb = (0..p).map(|j| cb[j] + mix * (cb[j] - beta[j])).collect();
        theta = theta_next;
        b0 = c0;
        beta = cb;
        f_prev = f_new;

        if iter % 10 == 9 && kkt_violation(x, y, b0, &beta, lambda, weights, family) <= kkt_tol {
            break;
        }
        // Let the step size recover so backtracking stays adaptive.
        t *= 1.1;
    }
    *state = (b0, beta);
}

/// Solve the dense symmetric system H d = -g in place by Gaussian
/// elimination with partial pivoting. Returns None when H is singular.
fn solve_dense(mut h: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let m = rhs.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&a, &b| {
            h[a][col].abs().partial_cmp(&h[b][col].abs()).unwrap()
        })?;
        if h[pivot][col].abs() < 1e-300 {
            return None;
        }
        h.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..m {
            let factor = h[row][col] / h[col][col];
            for k in col..m {
                h[row][k] -= factor * h[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut d = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..m {
            acc -= h[row][k] * d[k];
        }
        d[row] = acc / h[row][row];
    }
    Some(d)
}

/// Newton refinement on the active set: with the support and signs frozen,
/// the objective restricted to (b0, beta_active) is smooth, so Newton steps
/// (with step halving on non-decrease) reach machine-precision stationarity.
/// Returns false when the frozen support broke (a coefficient crossed zero).
fn newton_polish(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    weights: &[f64],
    lambda: f64,
    family: OracleFamily,
    state: &mut (f64, Vec<f64>),
) -> bool {
    let n = x.nrows();
    let nf = n as f64;
    let active: Vec<usize> = (0..state.1.len()).filter(|&j| state.1[j] != 0.0).collect();
    let signs: Vec<f64> = active.iter().map(|&j| state.1[j].signum()).collect();
    let m = active.len() + 1; // intercept first, then active coefficients

    let mut b0 = state.0;
    let mut beta = state.1.clone();
    for _ in 0..60 {
        // Gradient of the smooth-plus-linear restricted objective.
        let (g0, g) = smooth_grad(x, y, b0, &beta, family);
        let mut grad = vec![0.0; m];
        grad[0] = g0;
        for (a, &j) in active.iter().enumerate() {
            grad[a + 1] = g[j] + lambda * weights[j] * signs[a];
        }
        let worst = grad.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if worst <= 1e-12 {
            break;
        }

        // Hessian of the smooth part on [1, X_active].
        let mut d = vec![1.0; n];
        if family == OracleFamily::Binomial {
            for i in 0..n {
                let mut eta = b0;
                for j in 0..beta.len() {
                    eta += x[[i, j]] * beta[j];
                }
                let prob = 1.0 / (1.0 + (-eta).exp());
                d[i] = prob * (1.0 - prob);
            }
        }
        let col = |k: usize, i: usize| -> f64 {
            if k == 0 {
                1.0
            } else {
                x[[i, active[k - 1]]]
            }
        };
        let mut h = vec![vec![0.0; m]; m];
        for r in 0..m {
            for c in r..m {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += col(r, i) * d[i] * col(c, i);
                }
                h[r][c] = acc / nf;
                h[c][r] = h[r][c];
            }
        }
        let Some(step) = solve_dense(h, grad.iter().map(|v| -v).collect()) else {
            return false;
        };

        // Halve the step until the full objective does not increase.
        let base = oracle_objective(x, y, b0, &beta, lambda, weights, family);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let nb0 = b0 + scale * step[0];
            let mut nbeta = beta.clone();
            let mut signs_hold = true;
            for (a, &j) in active.iter().enumerate() {
                nbeta[j] = beta[j] + scale * step[a + 1];
                if nbeta[j] * signs[a] < 0.0 {
                    signs_hold = false;
                }
            }
            let val = oracle_objective(x, y, nb0, &nbeta, lambda, weights, family);
            if signs_hold && val <= base + 1e-15 {
                b0 = nb0;
                beta = nbeta;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return false;
        }
    }
    *state = (b0, beta);
    true
}

/// Minimize the weighted-l1 objective at one lambda to near machine
/// precision: FISTA locates the active set, Newton on that set polishes the
/// solution, and the cycle repeats until the full stationarity check passes
/// at `kkt_tol`. Fully independent of the coordinate-descent path solver.
#[allow(clippy::too_many_arguments)]
pub fn fista_solve(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    weights: &[f64],
    lambda: f64,
    family: OracleFamily,
    init: (f64, Vec<f64>),
    kkt_tol: f64,
    max_iter: usize,
) -> (f64, Vec<f64>) {
    let mut state = init;
    let mut budget = max_iter;
    for round in 0..6 {
        let pass_tol = if round == 0 { kkt_tol.max(1e-6) } else { kkt_tol };
        let pass_iters = budget.min(if round == 0 { 4_000 } else { 20_000 });
        fista_pass(x, y, weights, lambda, family, &mut state, pass_tol, pass_iters);
        budget = budget.saturating_sub(pass_iters);
        newton_polish(x, y, weights, lambda, family, &mut state);
        if kkt_violation(x, y, state.0, &state.1, lambda, weights, family) <= kkt_tol {
            return state;
        }
    }
    let final_kkt = kkt_violation(x, y, state.0, &state.1, lambda, weights, family);
    assert!(
        final_kkt <= kkt_tol * 10.0,
        "oracle failed to reach stationarity: {final_kkt:.3e}"
    );
    state
}

/// Uniform(-1, 1) design matrix.
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0))
}

/// Gaussian response y = X b* + noise with a sparse b*.
pub fn gaussian_response(
    rng: &mut ChaCha8Rng,
    x: &Array2<f64>,
    n_true: usize,
    noise: f64,
) -> Array1<f64> {
    let p = x.ncols();
    let mut b = vec![0.0; p];
    for item in b.iter_mut().take(n_true.min(p)) {
        *item = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    let mut y = Array1::zeros(x.nrows());
    for i in 0..x.nrows() {
        let mut v = 0.0;
        for j in 0..p {
            v += x[[i, j]] * b[j];
        }
        y[i] = v + noise * rng.gen_range(-1.0..1.0);
    }
    y
}

/// 0/1 response from a logistic model with a sparse signal.
pub fn binomial_response(rng: &mut ChaCha8Rng, x: &Array2<f64>, n_true: usize) -> Array1<f64> {
    let p = x.ncols();
    let mut b = vec![0.0; p];
    for item in b.iter_mut().take(n_true.min(p)) {
        *item = rng.gen_range(1.0..2.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    let mut y = Array1::zeros(x.nrows());
    for i in 0..x.nrows() {
        let mut eta = 0.0;
        for j in 0..p {
            eta += x[[i, j]] * b[j];
        }
        let prob = 1.0 / (1.0 + (-eta).exp());
        y[i] = if rng.gen_bool(prob.clamp(0.02, 0.98)) {
            1.0
        } else {
            0.0
        };
    }
    y
}

/// Ensure a 0/1 vector has both classes; flips the first entry if needed.
pub fn ensure_two_classes(y: &mut Array1<f64>) {
    let n_pos = y.iter().filter(|&&v| v == 1.0).count();
    if n_pos == 0 {
        y[0] = 1.0;
    } else if n_pos == y.len() {
        y[0] = 0.0;
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
