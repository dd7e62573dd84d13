//! Legendre polynomials, expansions against the cosine law, and the series
//! solution of the Legendre-Poisson equation `L g = -f` with
//! `L = d/dx (1 - x^2) d/dx`.

use crate::observable::Observable;
use crate::quadrature::PiQuadrature;
use crate::scalar::{count, lit, Real};

/// Errors raised by Legendre expansions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("function is not mean-zero: <f, 1>_pi = {mean:e}")]
    NotMeanZero { mean: f64 },
}

/// `phi_l(x)` by the three-term recurrence.
pub fn legendre_eval<T: Real>(l: usize, x: T) -> T {
    match l {
        0 => T::one(),
        1 => x,
        _ => {
            let (mut p0, mut p1) = (T::one(), x);
            for k in 1..l {
                let kf: T = count(k);
                let p2 = ((kf + kf + T::one()) * x * p1 - kf * p0) / (kf + T::one());
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `phi_0(x), ..., phi_n(x)` written into `out` (resized to `n + 1`).
pub fn legendre_values<T: Real>(n: usize, x: T, out: &mut Vec<T>) {
    out.clear();
    out.push(T::one());
    if n == 0 {
        return;
    }
    out.push(x);
    for k in 1..n {
        let kf: T = count(k);
        let p = ((kf + kf + T::one()) * x * out[k] - kf * out[k - 1]) / (kf + T::one());
        out.push(p);
    }
}

/// Averages of `phi_0, ..., phi_n` over each cell of `edges`, exact up to
/// rounding via `int phi_l = (phi_{l+1} - phi_{l-1}) / (2l + 1)`.
///
/// Returned as `avg[l][cell]`.
pub fn legendre_cell_averages<T: Real>(n: usize, edges: &[T]) -> Vec<Vec<T>> {
    let cells = edges.len().saturating_sub(1);
    let mut at_edges: Vec<Vec<T>> = Vec::with_capacity(edges.len());
    let mut buf = Vec::new();
    for &e in edges {
        legendre_values(n + 1, e, &mut buf);
        at_edges.push(buf.clone());
    }
    let mut out = vec![vec![T::zero(); cells]; n + 1];
    for c in 0..cells {
        let width = edges[c + 1] - edges[c];
        out[0][c] = T::one();
        for l in 1..=n {
            let anti = |v: &Vec<T>| (v[l + 1] - v[l - 1]) / count::<T>(2 * l + 1);
            out[l][c] = (anti(&at_edges[c + 1]) - anti(&at_edges[c])) / width;
        }
    }
    out
}

/// `<f, g>_pi = (1/2) int f g dx` by Gauss quadrature, split at the
/// breakpoints of both functions.
///
/// Piecewise functions (those with breakpoints) are refined by adaptive
/// Gauss-Kronrod, since the displacement observable grows steeply just
/// inside its cut-off points.
pub fn inner_product_pi<T: Real>(
    f: &Observable<T>,
    g: &Observable<T>,
    quad: &PiQuadrature<T>,
) -> Result<T, SpectralError> {
    let mut bps = f.breakpoints().to_vec();
    bps.extend_from_slice(g.breakpoints());
    let mut acc = T::zero();
    let mut mass = T::zero();
    for (x, w) in quad.nodes(&bps) {
        let v = f.eval(x) * g.eval(x);
        if !v.is_finite() {
            return Err(SpectralError::NonFinite { x: x.to_f64().unwrap_or(f64::NAN) });
        }
        acc = acc + w * v;
        mass = mass + w * v.abs();
    }
    if bps.is_empty() || mass == T::zero() {
        return Ok(acc);
    }
    let tol = mass * lit::<T>(1e-13).max(T::epsilon() * lit(64.0));
    Ok(quad.integrate_adaptive(|x| f.eval(x) * g.eval(x), &bps, tol))
}

/// `<phi_l, f>_pi` for `l = 0..=n` in a single sweep over the quadrature
/// nodes.
pub fn legendre_moments<T: Real>(f: &Observable<T>, n: usize, quad: &PiQuadrature<T>) -> Vec<T> {
    let quad = quad.for_degree(n);
    let mut acc = vec![T::zero(); n + 1];
    let mut phi = Vec::with_capacity(n + 1);
    for (x, w) in quad.nodes(f.breakpoints()) {
        let fx = w * f.eval(x);
        legendre_values(n, x, &mut phi);
        for (a, &p) in acc.iter_mut().zip(&phi) {
            *a = *a + fx * p;
        }
    }
    acc
}

/// Truncated Legendre expansion `sum_{l=0}^{n} b_l phi_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreSeries<T> {
    pub coefficients: Vec<T>,
}

impl<T: Real> LegendreSeries<T> {
    pub fn new(coefficients: Vec<T>) -> Self {
        assert!(!coefficients.is_empty(), "series needs at least the constant term");
        LegendreSeries { coefficients }
    }

    /// Series with coefficients `b_l = (2l+1) m_l` from moments `m_l = <phi_l, f>_pi`.
    pub fn from_moments(moments: &[T]) -> Self {
        Self::new(
            moments
                .iter()
                .enumerate()
                .map(|(l, &m)| count::<T>(2 * l + 1) * m)
                .collect(),
        )
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: T) -> T {
        let mut phi = Vec::with_capacity(self.coefficients.len());
        legendre_values(self.degree(), x, &mut phi);
        self.coefficients.iter().zip(&phi).map(|(&b, &p)| b * p).sum()
    }

    /// `<phi_l, series>_pi = b_l / (2l + 1)`.
    pub fn moments(&self) -> Vec<T> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(l, &b)| b / count::<T>(2 * l + 1))
            .collect()
    }

    /// `||series||_pi^2 = sum b_l^2 / (2l + 1)`.
    pub fn norm_sq_pi(&self) -> T {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(l, &b)| b * b / count::<T>(2 * l + 1))
            .sum()
    }

    /// `<self, other>_pi` over the common degree range.
    pub fn inner_product(&self, other: &Self) -> T {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .enumerate()
            .map(|(l, (&a, &b))| a * b / count::<T>(2 * l + 1))
            .sum()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self::new(self.coefficients.iter().map(|&b| b * s).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coefficients.len().max(other.coefficients.len());
        let get = |v: &Vec<T>, l: usize| v.get(l).copied().unwrap_or_else(T::zero);
        Self::new(
            (0..n)
                .map(|l| get(&self.coefficients, l) - get(&other.coefficients, l))
                .collect(),
        )
    }

    /// Degree-`n` truncation `T_n`.
    pub fn truncated(&self, n: usize) -> Self {
        Self::new(self.coefficients.iter().take(n + 1).copied().collect())
    }
}

/// `b_l = (2l+1) <phi_l, f>_pi` for `l = 0..=n`.
pub fn expand<T: Real>(f: &Observable<T>, n: usize, quad: &PiQuadrature<T>) -> LegendreSeries<T> {
    LegendreSeries::from_moments(&legendre_moments(f, n, quad))
}

/// Action of `L` on the eigenbasis: `b_l -> -l(l+1) b_l`.
pub fn legendre_operator_apply<T: Real>(series: &LegendreSeries<T>) -> LegendreSeries<T> {
    LegendreSeries::new(
        series
            .coefficients
            .iter()
            .enumerate()
            .map(|(l, &b)| -count::<T>(l * (l + 1)) * b)
            .collect(),
    )
}

/// Solution of `L g = -f` truncated at degree `n`, or of `L g = -f / (2h)`
/// when `scale = Some(h)`.
///
/// The coefficients are `a_l = (2l+1) <phi_l, f>_pi / (l(l+1))`, `a_0 = 0`.
pub fn poisson_solve_series<T: Real>(
    f: &Observable<T>,
    n: usize,
    scale: Option<T>,
    quad: &PiQuadrature<T>,
) -> Result<LegendreSeries<T>, SpectralError> {
    let moments = legendre_moments(f, n, quad);
    let norm = f.norm_sq(quad).sqrt();
    poisson_from_moments(&moments, norm, scale)
}

/// [`poisson_solve_series`] from precomputed moments; `norm` is `||f||_pi`
/// and sets the scale of the mean-zero check.
pub fn poisson_from_moments<T: Real>(
    moments: &[T],
    norm: T,
    scale: Option<T>,
) -> Result<LegendreSeries<T>, SpectralError> {
    let mean = moments.first().copied().unwrap_or_else(T::zero);
    let tol = T::algebraic_tolerance() * norm.max(T::one());
    if mean.abs() > tol {
        return Err(SpectralError::NotMeanZero { mean: mean.to_f64().unwrap_or(f64::NAN) });
    }
    let factor = match scale {
        Some(h) => T::one() / (h + h),
        None => T::one(),
    };
    let mut coeffs = vec![T::zero(); moments.len()];
    for (l, (c, &m)) in coeffs.iter_mut().zip(moments).enumerate().skip(1) {
        *c = factor * count::<T>(2 * l + 1) * m / count::<T>(l * (l + 1));
    }
    Ok(LegendreSeries::new(coeffs))
}

/// `||L g + T_n f||_pi` for the series solution `g` of `L g = -f`.
pub fn poisson_residual<T: Real>(f_series: &LegendreSeries<T>, g: &LegendreSeries<T>) -> T {
    let mut f0 = f_series.clone();
    f0.coefficients[0] = T::zero();
    legendre_operator_apply(g)
        .sub(&f0.scaled(-T::one()))
        .norm_sq_pi()
        .max(T::zero())
        .sqrt()
}

/// Gram matrix `<phi_i, phi_j>_pi` for `i, j <= n`, by quadrature.
pub fn gram_matrix<T: Real>(n: usize, quad: &PiQuadrature<T>) -> Vec<Vec<T>> {
    let quad = quad.for_degree(n);
    let mut g = vec![vec![T::zero(); n + 1]; n + 1];
    let mut phi = Vec::with_capacity(n + 1);
    for (x, w) in quad.nodes(&[]) {
        legendre_values(n, x, &mut phi);
        for i in 0..=n {
            let wi = w * phi[i];
            for j in 0..=n {
                g[i][j] = g[i][j] + wi * phi[j];
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_values() {
        assert_eq!(legendre_eval(2, 0.5f64), -0.125);
        for l in 0..40 {
            assert!((legendre_eval(l, 1.0f64) - 1.0).abs() < 1e-12);
        }
        // phi_7 = (429 x^7 - 693 x^5 + 315 x^3 - 35 x) / 16
        let x = 0.3f64;
        let explicit =
            (429.0 * x.powi(7) - 693.0 * x.powi(5) + 315.0 * x.powi(3) - 35.0 * x) / 16.0;
        assert!((legendre_eval(7, x) - explicit).abs() < 1e-15);
    }

    #[test]
    fn values_match_single_evaluation() {
        let mut v = Vec::new();
        legendre_values(30, -0.77f64, &mut v);
        for (l, p) in v.iter().enumerate() {
            assert_eq!(*p, legendre_eval(l, -0.77));
        }
    }

    #[test]
    fn cell_averages_match_quadrature() {
        let edges: Vec<f64> = (0..=8).map(|k| -1.0 + 0.25 * k as f64).collect();
        let avg = legendre_cell_averages(12, &edges);
        let q = PiQuadrature::<f64>::new(32);
        for (l, row) in avg.iter().enumerate() {
            let numeric = q.cell_averages(|x| legendre_eval(l, x), &edges, &[]);
            for c in 0..8 {
                assert!((row[c] - numeric[c]).abs() < 1e-13, "l={l} c={c}");
            }
        }
    }

    #[test]
    fn expansion_of_cubic() {
        let q = PiQuadrature::<f64>::new(64);
        let f = Observable::from_fn("x^3", |x: f64| x * x * x);
        let s = expand(&f, 6, &q);
        let want = [0.0, 0.6, 0.0, 0.4, 0.0, 0.0, 0.0];
        for (b, w) in s.coefficients.iter().zip(want) {
            assert!((b - w).abs() < 1e-13);
        }
    }

    #[test]
    fn operator_eigenvalues() {
        let s = LegendreSeries::new(vec![1.0, 0.5, 1.0]);
        let ls = legendre_operator_apply(&s);
        assert_eq!(ls.coefficients, vec![0.0, -1.0, -6.0]);
    }

    #[test]
    fn poisson_for_basis_functions() {
        let q = PiQuadrature::<f64>::new(64);
        let g1 = poisson_solve_series(&Observable::legendre(1), 4, None, &q).unwrap();
        assert!((g1.coefficients[1] - 0.5).abs() < 1e-14);
        let g2 = poisson_solve_series(&Observable::legendre(2), 4, None, &q).unwrap();
        assert!((g2.coefficients[2] - 1.0 / 6.0).abs() < 1e-14);
        let gh = poisson_solve_series(&Observable::legendre(1), 4, Some(0.25), &q).unwrap();
        assert!((gh.coefficients[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn poisson_rejects_non_mean_zero() {
        let q = PiQuadrature::<f64>::new(64);
        let f = Observable::from_fn("1 + x", |x: f64| 1.0 + x);
        assert!(matches!(
            poisson_solve_series(&f, 4, None, &q),
            Err(SpectralError::NotMeanZero { .. })
        ));
    }
}
