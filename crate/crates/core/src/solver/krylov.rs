//! Jacobi-preconditioned BiCGSTAB for matrix-free nonsymmetric systems.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// A square linear operator given by its action and its diagonal.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖`.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` starting from the contents of `x`, to relative residual
/// `tol`. Restarts from the current iterate on breakdown.
pub fn bicgstab(op: &dyn LinearOperator, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> KrylovStats {
    let n = op.dim();
    debug_assert!(b.len() == n && x.len() == n);
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovStats { iterations: 0, relative_residual: 0.0, converged: true };
    }

    let mut r = vec![0.0; n];
    let mut r_hat = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];

    let true_residual = |x: &[f64], r: &mut [f64]| {
        op.apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    };

    let mut iterations = 0;
    let mut rel = f64::INFINITY;
    'restart: while iterations < max_iter {
        true_residual(x, &mut r);
        rel = norm(&r) / bnorm;
        if rel <= tol {
            return KrylovStats { iterations, relative_residual: rel, converged: true };
        }
        r_hat.copy_from_slice(&r);
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 || !rho_new.is_finite() {
                continue 'restart;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                y[i] = inv_diag[i] * p[i];
            }
            op.apply(&y, &mut v);
            let denom = dot(&r_hat, &v);
            if denom == 0.0 || !denom.is_finite() {
                continue 'restart;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) / bnorm <= tol {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                true_residual(x, &mut r);
                rel = norm(&r) / bnorm;
                if rel <= tol {
                    return KrylovStats { iterations, relative_residual: rel, converged: true };
                }
                continue 'restart;
            }
            for i in 0..n {
                z[i] = inv_diag[i] * s[i];
            }
            op.apply(&z, &mut t);
            let tt = dot(&t, &t);
            if tt == 0.0 {
                continue 'restart;
            }
            omega = dot(&t, &s) / tt;
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = norm(&r) / bnorm;
            if rel <= tol {
                // guard against drift of the recursive residual
                true_residual(x, &mut r);
                rel = norm(&r) / bnorm;
                if rel <= tol {
                    return KrylovStats { iterations, relative_residual: rel, converged: true };
                }
                continue 'restart;
            }
        }
    }
    KrylovStats { iterations, relative_residual: rel, converged: false }
}
