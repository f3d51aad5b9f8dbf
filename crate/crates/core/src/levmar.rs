//! Damped nonlinear least squares (Levenberg-Marquardt).
//!
//! All curve fits in this crate go through this routine. It is fully
//! deterministic: forward-difference Jacobians, a fixed damping schedule,
//! and Gaussian elimination on the normal equations. The parameter counts
//! are tiny (<= 6), so there is no need for anything fancier.

use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub struct LmOptions<T> {
    pub max_iterations: usize,
    /// Initial damping factor.
    pub lambda0: T,
    /// Stop when the relative reduction of the squared residual norm and
    /// the step size both fall below this.
    pub tolerance: T,
    /// Relative step used for forward-difference Jacobians.
    pub jacobian_step: T,
}

impl<T: Real> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            lambda0: T::lit(1e-3),
            tolerance: T::lit(1e-12),
            jacobian_step: T::lit(1e-7),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult<T> {
    pub params: Vec<T>,
    /// Euclidean norm of the residual vector at the solution.
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// Diagonal of (J^T J)^-1 scaled by the residual variance; a rough
    /// per-parameter variance estimate.
    pub covariance_diag: Vec<T>,
}

fn sum_sq<T: Real>(r: &[T]) -> T {
    r.iter().map(|&v| v * v).sum()
}

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` for a singular system.
#[allow(clippy::needless_range_loop)]
fn solve<T: Real>(a: &mut [Vec<T>], b: &mut [T]) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < T::lit(1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= factor * v;
            }
            let bv = b[col];
            b[row] -= factor * bv;
        }
    }
    let mut x = vec![T::zero(); n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Minimize the squared norm of `residuals(params)`.
///
/// `residuals` fills its output vector with `n_residuals` entries; the
/// output length must not depend on the parameters.
#[allow(clippy::needless_range_loop)]
pub fn fit<T, F>(
    residuals: &F,
    n_residuals: usize,
    params0: &[T],
    opts: LmOptions<T>,
) -> LmResult<T>
where
    T: Real,
    F: Fn(&[T], &mut Vec<T>),
{
    let n_params = params0.len();
    let mut params = params0.to_vec();
    let mut r = Vec::with_capacity(n_residuals);
    residuals(&params, &mut r);
    assert_eq!(r.len(), n_residuals);
    let mut cost = sum_sq(&r);
    let mut lambda = opts.lambda0;
    let mut converged = false;
    let mut iterations = 0;

    let mut jac = vec![vec![T::zero(); n_params]; n_residuals];
    let mut r_step = Vec::with_capacity(n_residuals);

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        // Forward-difference Jacobian.
        for p in 0..n_params {
            let base = params[p];
            let h = opts.jacobian_step * (base.abs() + T::one());
            params[p] = base + h;
            residuals(&params, &mut r_step);
            params[p] = base;
            for (i, row) in jac.iter_mut().enumerate() {
                row[p] = (r_step[i] - r[i]) / h;
            }
        }
        // Normal equations J^T J and J^T r.
        let mut jtj = vec![vec![T::zero(); n_params]; n_params];
        let mut jtr = vec![T::zero(); n_params];
        for (i, row) in jac.iter().enumerate() {
            for p in 0..n_params {
                jtr[p] += row[p] * r[i];
                for q in p..n_params {
                    jtj[p][q] += row[p] * row[q];
                }
            }
        }
        for p in 0..n_params {
            for q in 0..p {
                jtj[p][q] = jtj[q][p];
            }
        }

        let mut improved = false;
        for _ in 0..16 {
            let mut a: Vec<Vec<T>> = jtj.clone();
            for p in 0..n_params {
                a[p][p] += lambda * (jtj[p][p].max(T::lit(1e-12)));
            }
            let mut b: Vec<T> = jtr.iter().map(|&v| -v).collect();
            let Some(step) = solve(&mut a, &mut b) else {
                lambda *= T::lit(10.0);
                continue;
            };
            let trial: Vec<T> = params.iter().zip(&step).map(|(&p, &s)| p + s).collect();
            residuals(&trial, &mut r_step);
            let trial_cost = sum_sq(&r_step);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel_drop = (cost - trial_cost) / cost.max(T::lit(1e-300));
                let step_norm = sum_sq(&step).sqrt();
                params = trial;
                std::mem::swap(&mut r, &mut r_step);
                cost = trial_cost;
                lambda = (lambda * T::lit(0.1)).max(T::lit(1e-12));
                improved = true;
                if rel_drop < opts.tolerance || step_norm < opts.tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= T::lit(10.0);
        }
        if converged {
            break;
        }
        if !improved {
            // Damping exhausted: local minimum to working precision.
            converged = true;
            break;
        }
    }

    // Covariance diagonal from the final Jacobian.
    let mut jtj = vec![vec![T::zero(); n_params]; n_params];
    for row in &jac {
        for p in 0..n_params {
            for q in p..n_params {
                jtj[p][q] += row[p] * row[q];
            }
        }
    }
    for p in 0..n_params {
        for q in 0..p {
            jtj[p][q] = jtj[q][p];
        }
    }
    let dof = n_residuals.saturating_sub(n_params).max(1);
    let sigma2 = cost / T::from_usize(dof).unwrap();
    let covariance_diag = invert_diag(&jtj)
        .map(|d| d.into_iter().map(|v| v * sigma2).collect())
        .unwrap_or_else(|| vec![T::nan(); n_params]);

    LmResult {
        params,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
        covariance_diag,
    }
}

/// Diagonal of the inverse of a small symmetric positive matrix.
fn invert_diag<T: Real>(m: &[Vec<T>]) -> Option<Vec<T>> {
    let n = m.len();
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        let mut a: Vec<Vec<T>> = m.to_vec();
        let mut b = vec![T::zero(); n];
        b[k] = T::one();
        let x = solve(&mut a, &mut b)?;
        diag.push(x[k]);
    }
    Some(diag)
}
