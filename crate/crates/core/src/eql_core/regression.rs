use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Minimum-norm least-squares solution of `Θξ ≈ b` via SVD.
pub fn least_squares(theta: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (n, d) = theta.shape();
    if d == 0 {
        return DVector::zeros(0);
    }
    let svd = theta.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DVector::zeros(d);
    }
    let eps = smax * n.max(d) as f64 * f64::EPSILON;
    svd.solve(b, eps).expect("both singular vector sets were computed")
}

/// Least squares restricted to `support`, zero elsewhere.
pub fn least_squares_on(theta: &DMatrix<f64>, b: &DVector<f64>, support: &[usize]) -> DVector<f64> {
    let mut xi = DVector::zeros(theta.ncols());
    if support.is_empty() {
        return xi;
    }
    let sub = least_squares(&theta.select_columns(support), b);
    for (k, &j) in support.iter().enumerate() {
        xi[j] = sub[k];
    }
    xi
}

pub fn residual_norm(theta: &DMatrix<f64>, b: &DVector<f64>, xi: &DVector<f64>) -> f64 {
    (b - theta * xi).norm()
}

/// FISTA defaults.
pub const LASSO_ITER_MAX: usize = 10_000;
pub const LASSO_REL_TOL: f64 = 1e-10;

/// Result of a Lasso solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coeffs: DVector<f64>,
    pub iterations: usize,
    /// `false` when `iter_max` was reached before the coefficients settled.
    pub converged: bool,
    /// Final value of [`lasso_objective`].
    pub objective: f64,
}

/// The Lasso objective `‖Θξ − b‖² / (2‖b‖) + λ‖ξ‖₁`.
///
/// Dividing the data term by `‖b‖` makes `λ` insensitive to the overall
/// magnitude of the derivative data.
pub fn lasso_objective(theta: &DMatrix<f64>, b: &DVector<f64>, xi: &DVector<f64>, lambda: f64) -> f64 {
    let scale = target_scale(b);
    0.5 * (theta * xi - b).norm_squared() / scale + lambda * xi.lp_norm(1)
}

fn target_scale(b: &DVector<f64>) -> f64 {
    let s = b.norm();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Column norms of `theta`; errors on an all-zero column.
pub fn column_norms(theta: &DMatrix<f64>) -> Result<Vec<f64>> {
    theta
        .column_iter()
        .enumerate()
        .map(|(j, c)| {
            let a = c.norm();
            if a > 0.0 && a.is_finite() {
                Ok(a)
            } else {
                Err(Error::numerical(format!("library column {j} is zero or non-finite")))
            }
        })
        .collect()
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration.
pub fn power_iteration(g: &DMatrix<f64>) -> f64 {
    let d = g.nrows();
    let mut v = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let mut lam = 0.0;
    for _ in 0..10_000 {
        let w = g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lam).abs() <= 1e-14 * next.abs() {
            return next.max(norm);
        }
        lam = next;
    }
    lam
}

/// Lasso by FISTA on column-normalised data.
///
/// Columns are scaled to unit norm and the target to unit norm. The
/// penalty stays on the original coefficients, so coordinate `i` is
/// soft-thresholded at `λ/(L·aᵢ)` with `L = σ_max(A)²`. Coefficients are
/// mapped back through `1/aᵢ` and the target scale. Minimises
/// [`lasso_objective`].
pub fn lasso_fista(theta: &DMatrix<f64>, b: &DVector<f64>, lambda: f64, iter_max: usize) -> Result<LassoFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let d = theta.ncols();
    let a = column_norms(theta)?;
    let scale = target_scale(b);
    let mut an = theta.clone();
    for (j, mut c) in an.column_iter_mut().enumerate() {
        c /= a[j];
    }
    let bn = b / scale;
    let g = an.transpose() * &an;
    let atb = an.transpose() * &bn;
    let l = power_iteration(&g);
    let thresh: Vec<f64> = a.iter().map(|ai| lambda / (l * ai)).collect();

    let mut w = DVector::zeros(d);
    let mut w_old = DVector::zeros(d);
    let mut converged = false;
    let mut iterations = 0;
    if l > 0.0 {
        while iterations < iter_max {
            let k = iterations as f64;
            let z = &w + (&w - &w_old) * (k / (k + 1.0));
            let grad = &g * &z - &atb;
            let z = z - grad / l;
            w_old = std::mem::replace(&mut w, DVector::zeros(d));
            for i in 0..d {
                w[i] = z[i].signum() * (z[i].abs() - thresh[i]).max(0.0);
            }
            iterations += 1;
            let change = (&w - &w_old).norm();
            if change <= LASSO_REL_TOL * w.norm() {
                converged = true;
                break;
            }
        }
    } else {
        converged = true;
    }
    let coeffs = DVector::from_fn(d, |i, _| w[i] * scale / a[i]);
    let objective = lasso_objective(theta, b, &coeffs, lambda);
    Ok(LassoFit {
        coeffs,
        iterations,
        converged,
        objective,
    })
}

/// Largest violation of the Lasso subgradient conditions at `xi`, in the
/// units of `Θᵀr / ‖b‖`.
pub fn lasso_kkt_residual(theta: &DMatrix<f64>, b: &DVector<f64>, xi: &DVector<f64>, lambda: f64) -> f64 {
    let g = theta.transpose() * (b - theta * xi) / target_scale(b);
    let mut worst: f64 = 0.0;
    for j in 0..xi.len() {
        let v = if xi[j] != 0.0 {
            (g[j] - lambda * xi[j].signum()).abs()
        } else {
            (g[j].abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Result of a greedy forward-backward fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyFit {
    pub coeffs: DVector<f64>,
    /// Active columns, ascending.
    pub support: Vec<usize>,
}

/// Greedy forward-backward selection with tolerance `tol` on the residual
/// norm `‖b − Θξ‖₂`.
///
/// Forward: add the column whose refit lowers the residual norm the most,
/// if the decrease exceeds `tol`. Backward: after each addition drop active
/// columns while the cheapest removal raises the residual norm by less
/// than `tol/2`. Ties go to the lowest column index.
pub fn greedy_fb(theta: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<GreedyFit> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::config(format!("greedy tolerance must be positive, got {tol}")));
    }
    let d = theta.ncols();
    let fit = |s: &[usize]| {
        let xi = least_squares_on(theta, b, s);
        let r = residual_norm(theta, b, &xi);
        (xi, r)
    };
    let mut support: Vec<usize> = Vec::new();
    let (mut xi, mut res) = fit(&support);
    for _ in 0..4 * d + 4 {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for j in (0..d).filter(|j| !support.contains(j)) {
            let mut s = support.clone();
            s.push(j);
            s.sort_unstable();
            let (x, r) = fit(&s);
            if best.as_ref().is_none_or(|(_, _, br)| r < *br) {
                best = Some((j, x, r));
            }
        }
        let Some((j, x, r)) = best else { break };
        if res - r <= tol {
            break;
        }
        support.push(j);
        support.sort_unstable();
        xi = x;
        res = r;
        while support.len() > 1 {
            let mut drop: Option<(usize, DVector<f64>, f64)> = None;
            for &k in &support {
                let s: Vec<usize> = support.iter().copied().filter(|&m| m != k).collect();
                let (x, r) = fit(&s);
                if drop.as_ref().is_none_or(|(_, _, dr)| r < *dr) {
                    drop = Some((k, x, r));
                }
            }
            let (k, x, r) = drop.expect("support is non-empty");
            if r - res >= tol / 2.0 {
                break;
            }
            support.retain(|&m| m != k);
            xi = x;
            res = r;
        }
    }
    Ok(GreedyFit { coeffs: xi, support })
}
