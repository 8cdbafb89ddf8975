//! Restarted GMRES for the dense-free linear systems of the Duhamel lattice.

use crate::error::{HardyError, Result};

/// Outcome of a GMRES solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves A x = b with restarted GMRES(m), starting from `x`.
///
/// `apply(v, out)` must write A v into `out`. Modified Gram–Schmidt with
/// Givens rotations; stops once ‖b − Ax‖ ≤ tol·‖b‖.
pub fn gmres<F>(mut apply: F, b: &[f64], x: &mut [f64], restart: usize, max_iter: usize, tol: f64) -> Result<KrylovStats>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut work = vec![0.0; n];
    let mut iterations = 0;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
    let mut residual;
    loop {
        apply(x, &mut work);
        let r: Vec<f64> = b.iter().zip(&work).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        residual = beta / b_norm;
        if residual <= tol {
            return Ok(KrylovStats { iterations, relative_residual: residual });
        }
        if iterations >= max_iter {
            break;
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            apply(&basis[k], &mut work);
            let mut w = work.clone();
            for (j, v) in basis.iter().enumerate() {
                let h = dot(&w, v);
                hess[j][k] = h;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h * vi;
                }
            }
            let h_next = norm(&w);
            hess[k + 1][k] = h_next;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            cs[k] = hess[k][k] / d;
            sn[k] = hess[k + 1][k] / d;
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k_used = k + 1;
            if g[k + 1].abs() / b_norm <= 0.1 * tol || h_next == 0.0 || iterations >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }
        // Back substitution for the Krylov coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
    Err(HardyError::convergence(
        "GMRES",
        format!("relative residual {residual:e} after {iterations} iterations"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        // Bidiagonal upper-triangular operator with a nontrivial solution.
        let n = 50;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                out[i] = 2.0 * v[i] + if i + 1 < n { 0.9 * v[i + 1] } else { 0.0 } - 0.3 * v[(i + 7) % n];
            }
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&truth, &mut b);
        let mut x = vec![0.0; n];
        let stats = gmres(apply, &b, &mut x, 20, 500, 1e-12).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        for (a, t) in x.iter().zip(&truth) {
            assert!((a - t).abs() < 1e-9);
        }
    }
}
