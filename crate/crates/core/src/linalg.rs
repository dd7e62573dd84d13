//! Small dense and Krylov helpers shared by the estimators.

use crate::scalar::Real;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct Solve<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||` at exit.
    pub relative_residual: T,
    pub converged: bool,
}

/// BiCGSTAB for `A x = b` with `A` given as a matrix-vector product.
pub fn bicgstab<T: Real>(apply: impl Fn(&[T]) -> Vec<T>, b: &[T], tol: T, max_iter: usize) -> Solve<T> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Solve { x, iterations: 0, relative_residual: T::zero(), converged: true };
    }
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut rel = T::one();
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == T::zero() || omega == T::zero() {
            return Solve { x, iterations: it, relative_residual: rel, converged: false };
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = apply(&p);
        let rv = dot(&r_hat, &v);
        if rv == T::zero() {
            return Solve { x, iterations: it, relative_residual: rel, converged: false };
        }
        alpha = rho / rv;
        let s: Vec<T> = r.iter().zip(&v).map(|(&ri, &vi)| ri - alpha * vi).collect();
        let snorm = norm(&s);
        if snorm / bnorm <= tol {
            for i in 0..n {
                x[i] = x[i] + alpha * p[i];
            }
            return Solve { x, iterations: it, relative_residual: snorm / bnorm, converged: true };
        }
        let t = apply(&s);
        let tt = dot(&t, &t);
        omega = if tt == T::zero() { T::zero() } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] = x[i] + alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= tol {
            return Solve { x, iterations: it, relative_residual: rel, converged: true };
        }
    }
    Solve { x, iterations: max_iter, relative_residual: rel, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [2.0, 5.0, 1.0], [0.0, 1.0, 3.0]];
        let want = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a.iter().map(|row| dot(row, &want)).collect();
        let sol = bicgstab(|v| a.iter().map(|row| dot(row, v)).collect(), &b, 1e-13, 50);
        assert!(sol.converged);
        for (x, w) in sol.x.iter().zip(&want) {
            assert!((x - w).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_rhs() {
        let sol = bicgstab(|v: &[f64]| v.to_vec(), &[0.0, 0.0], 1e-12, 10);
        assert!(sol.converged && sol.x == vec![0.0, 0.0]);
    }
}
