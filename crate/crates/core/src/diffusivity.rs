//! CLT variance `sigma^2` of the axial displacement and the dimensionless
//! self-diffusivity `eta = sigma^2 / ||f||_pi^2`.
//!
//! Four estimators are provided:
//!
//! * `lser`: the weak-scattering series in Legendre moments of `f`, which
//!   only needs the flatness `h`;
//! * `galerkin`: projection of the Poisson equation `(I - P) g = f` onto
//!   `phi_1..phi_n`;
//! * `direct`: a BiCGSTAB solve of the Poisson equation on the bin grid;
//! * `spectral`: the integral of `(1 + lambda) / (1 - lambda)` against the
//!   spectral measure of `f`.
//!
//! Operators follow the bin-projected model of [`crate::operator`], so the
//! part of `f` finer than a bin is carried at the retention eigenvalue.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{bicgstab, dot};
use crate::observable::{Observable, ObservableError};
use crate::operator::{
    apply, spectral_measure_from_bins, spectral_summary, OperatorError, SpectralSummary, TracedOperator,
    TransitionMatrix,
};
use crate::quadrature::PiQuadrature;
use crate::scalar::{count, lit, Real};
use crate::spectral_basis::legendre_cell_averages;

/// Below this gap the direct solve is reported as unreliable.
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.02;
/// Default cutoff of the displacement observable, in channel radii.
pub const DEFAULT_CUTOFF: f64 = 50_000.0;
pub const DEFAULT_LSER_N: usize = 500;
pub const DEFAULT_GALERKIN_N: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Lser,
    Galerkin,
    Direct,
    Spectral,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Lser, Estimator::Galerkin, Estimator::Direct, Estimator::Spectral];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Lser => "lser",
            Estimator::Galerkin => "galerkin",
            Estimator::Direct => "direct",
            Estimator::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown estimator {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffusivityError {
    #[error("parameter {name} = {value} outside {allowed}")]
    Parameter { name: &'static str, value: f64, allowed: &'static str },
    #[error("estimate unreliable: {reason}")]
    Unreliable { reason: String },
    #[error("Galerkin system is singular to working precision (smallest scaled eigenvalue {min_eigenvalue:e}); the profile's spectral gap is too small")]
    Conditioning { min_eigenvalue: f64 },
    #[error("observable is not mean-zero: {mass:e} of its squared norm sits on constants")]
    NotMeanZero { mass: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

impl DiffusivityError {
    /// True for failures caused by a (near) vanishing spectral gap rather
    /// than by bad input.
    pub fn is_reliability(&self) -> bool {
        matches!(self, DiffusivityError::Unreliable { .. } | DiffusivityError::Conditioning { .. })
    }
}

/// Result of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityReport<T> {
    pub sigma2: T,
    /// `||f||_pi^2`, the variance for a fully diffuse wall.
    pub sigma0_2: T,
    pub eta: T,
    pub estimator: Estimator,
    /// Truncation order where applicable.
    pub n: Option<usize>,
    /// Bin count of the operator.
    pub m: Option<usize>,
    /// Entry positions per row of the operator.
    pub positions: Option<usize>,
    pub h: Option<T>,
    pub error_bound: Option<T>,
    pub radius: T,
}

impl<T: Real> DiffusivityReport<T> {
    fn new(sigma2: T, sigma0_2: T, estimator: Estimator, radius: T) -> Self {
        DiffusivityReport {
            sigma2,
            sigma0_2,
            eta: sigma2 / sigma0_2,
            estimator,
            n: None,
            m: None,
            positions: None,
            h: None,
            error_bound: None,
            radius,
        }
    }

    fn with_matrix(mut self, p: &TransitionMatrix<T>) -> Self {
        self.m = Some(p.m());
        self.positions = Some(p.metadata().n);
        self
    }
}

/// The cut-off displacement observable `f_a` for channel radius `r`.
pub fn displacement_observable<T: Real>(a: T, radius: T) -> Result<Observable<T>, DiffusivityError> {
    Ok(Observable::displacement(a, radius)?)
}

fn f64_of<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// `||f||^2`, failing when it vanishes.
fn positive_norm<T: Real>(f: &Observable<T>, quad: &PiQuadrature<T>) -> Result<T, DiffusivityError> {
    let n = f.norm_sq(quad);
    if !(n > T::zero()) || !n.is_finite() {
        return Err(DiffusivityError::Parameter { name: "||f||^2", value: f64_of(n), allowed: "(0, inf)" });
    }
    Ok(n)
}

fn check_mean<T: Real>(mean: T, norm_sq: T) -> Result<(), DiffusivityError> {
    let mass = mean * mean / norm_sq;
    if mass > T::algebraic_tolerance() {
        return Err(DiffusivityError::NotMeanZero { mass: f64_of(mass) });
    }
    Ok(())
}

/// `sum_{l=1}^n (2l+1)/(l(l+1)) m_l^2` from moments `m_0..m_n`.
fn weighted_moment_sum<T: Real>(moments: &[T]) -> T {
    moments
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, &m)| count::<T>(2 * l + 1) / count::<T>(l * (l + 1)) * m * m)
        .sum()
}

/// Weak-scattering series `-||f||^2 + (1/h) sum (2l+1)/(l(l+1)) <phi_l, f>^2`
/// truncated at `n`, with the tail bound `||f||^2 / (h (n + 1))`.
///
/// `h = 0` (a flat wall) has no finite variance and is reported as
/// unreliable; negative `h` is a parameter error.
pub fn lser_sigma2<T: Real>(
    f: &Observable<T>,
    h: T,
    n: usize,
    quad: &PiQuadrature<T>,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    if h < T::zero() || !h.is_finite() {
        return Err(DiffusivityError::Parameter { name: "h", value: f64_of(h), allowed: "(0, inf)" });
    }
    if h == T::zero() {
        return Err(DiffusivityError::Unreliable { reason: "flatness h = 0: the wall is specular".into() });
    }
    if n == 0 {
        return Err(DiffusivityError::Parameter { name: "n", value: 0.0, allowed: "[1, inf)" });
    }
    let norm_sq = positive_norm(f, quad)?;
    let moments = f.moments(n, quad);
    check_mean(moments[0], norm_sq)?;
    let sigma2 = -norm_sq + weighted_moment_sum(&moments) / h;
    let mut report = DiffusivityReport::new(sigma2, norm_sq, Estimator::Lser, f.radius());
    report.n = Some(n);
    report.h = Some(h);
    report.error_bound = Some(norm_sq / (h * count::<T>(n + 1)));
    Ok(report)
}

/// `C_f = sum_{l=1}^n (2l+1)/(l(l+1)) <phi_l, f/||f||>^2` and the
/// asymptotic `eta ~ (C_f - h) / h`.
pub fn eta_asymptotic<T: Real>(f: &Observable<T>, h: T, n: usize, quad: &PiQuadrature<T>) -> Result<T, DiffusivityError> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(DiffusivityError::Parameter { name: "h", value: f64_of(h), allowed: "(0, inf)" });
    }
    let norm_sq = positive_norm(f, quad)?;
    let c_f = weighted_moment_sum(&f.moments(n, quad)) / norm_sq;
    Ok((c_f - h) / h)
}

/// Asymptotic spectral gap `4h` of a weakly scattering wall.
pub fn gap_asymptotic<T: Real>(h: T) -> Result<T, DiffusivityError> {
    if h < T::zero() || !h.is_finite() {
        return Err(DiffusivityError::Parameter { name: "h", value: f64_of(h), allowed: "[0, inf)" });
    }
    Ok(lit::<T>(4.0) * h)
}

/// Maxwell-Smoluchowski accommodation coefficient with the same `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accommodation<T> {
    pub theta: T,
    /// `eta < 1`: more diffusive than a fully diffuse wall, so `theta > 1`
    /// has no Maxwell-Smoluchowski interpretation.
    pub below_diffuse: bool,
}

/// `theta = 2 / (eta + 1)`, the inverse of `eta = (2 - theta) / theta`.
pub fn accommodation_equivalent<T: Real>(eta: T) -> Result<Accommodation<T>, DiffusivityError> {
    let denom = eta + T::one();
    if denom == T::zero() || !eta.is_finite() {
        return Err(DiffusivityError::Parameter { name: "eta", value: f64_of(eta), allowed: "(-1, inf)" });
    }
    Ok(Accommodation { theta: lit::<T>(2.0) / denom, below_diffuse: eta < T::one() })
}

/// How `||f||^2` enters the Galerkin estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GalerkinNorm {
    /// `||f||^2 + 2 <P f, g_n>`, only `g_n` is truncated.
    #[default]
    Full,
    /// `||T_n f||^2 + 2 <P f, g_n>` with the projected norm.
    Projected,
}

/// Inputs of the Galerkin solve: `A_ij = <P phi_j, phi_i>` and
/// `c_j = <f, P phi_j>` for `i, j = 1..=n`.
struct GalerkinSystem<T> {
    n: usize,
    a: Vec<T>,
    c: Vec<T>,
}

fn galerkin_solve<T: Real>(
    sys: GalerkinSystem<T>,
    moments: &[T],
    norm_sq: T,
    variant: GalerkinNorm,
) -> Result<T, DiffusivityError> {
    let n = sys.n;
    // Scale by D^{-1/2}, D = diag(1/(2l+1)), so the Gram part becomes I.
    let scale: Vec<T> = (1..=n).map(|l| count::<T>(2 * l + 1).sqrt()).collect();
    let mut g = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let gram = if i == j { T::one() / count::<T>(2 * i + 3) } else { T::zero() };
            g[i * n + j] = scale[i] * (gram - sys.a[i * n + j]) * scale[j];
        }
    }
    let eig = T::symmetric_eigen(n, &g).ok_or(DiffusivityError::Operator(OperatorError::Eigen))?;
    let min = eig.values.last().copied().unwrap_or_else(T::zero);
    if !(min > T::algebraic_tolerance() * lit(100.0)) {
        return Err(DiffusivityError::Conditioning { min_eigenvalue: f64_of(min) });
    }
    let rhs: Vec<T> = (0..n).map(|i| scale[i] * moments[i + 1]).collect();
    let mut z = vec![T::zero(); n];
    for (lam, v) in eig.values.iter().zip(&eig.vectors) {
        let coef = dot(v, &rhs) / *lam;
        for (zi, &vi) in z.iter_mut().zip(v) {
            *zi = *zi + coef * vi;
        }
    }
    let x: Vec<T> = z.iter().zip(&scale).map(|(&a, &b)| a * b).collect();
    let first = match variant {
        GalerkinNorm::Full => norm_sq,
        GalerkinNorm::Projected => moments
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, &m)| count::<T>(2 * l + 1) * m * m)
            .sum(),
    };
    Ok(first + lit::<T>(2.0) * dot(&sys.c, &x))
}

/// Galerkin estimate in `span(phi_1..phi_n)` using the bin operator.
pub fn galerkin_sigma2<T: Real>(
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    n: usize,
    quad: &PiQuadrature<T>,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    galerkin_sigma2_with(p, f, n, quad, GalerkinNorm::Full)
}

pub fn galerkin_sigma2_with<T: Real>(
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    n: usize,
    quad: &PiQuadrature<T>,
    variant: GalerkinNorm,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    if n == 0 {
        return Err(DiffusivityError::Parameter { name: "n", value: 0.0, allowed: "[1, inf)" });
    }
    let norm_sq = positive_norm(f, quad)?;
    let moments = f.moments(n, quad);
    check_mean(moments[0], norm_sq)?;
    let m = p.m();
    let mf: T = count(m);
    let beta = p.retention();
    let edges = p.grid().edges();
    // phi_bar[l][bin] for l = 1..=n, and S phi_bar with S = (P + P^T) / 2.
    let phi_bar: Vec<Vec<T>> = legendre_cell_averages(n, edges).into_iter().skip(1).collect();
    let s_phi: Vec<Vec<T>> = phi_bar.iter().map(|v| symmetrized_apply(p, v)).collect();
    let f_bar = f.bin_averages(edges, quad);
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let coarse = dot(&phi_bar[i], &s_phi[j]) / mf;
            let gram = if i == j { T::one() / count::<T>(2 * i + 3) } else { T::zero() };
            let fine = gram - dot(&phi_bar[i], &phi_bar[j]) / mf;
            let v = coarse + beta * fine;
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    let c = (0..n)
        .map(|j| dot(&f_bar, &s_phi[j]) / mf + beta * (moments[j + 1] - dot(&f_bar, &phi_bar[j]) / mf))
        .collect();
    let sigma2 = galerkin_solve(GalerkinSystem { n, a, c }, &moments, norm_sq, variant)?;
    let mut report = DiffusivityReport::new(sigma2, norm_sq, Estimator::Galerkin, f.radius()).with_matrix(p);
    report.n = Some(n);
    Ok(report)
}

/// Galerkin estimate with `<P phi_j, phi_i>` integrated from traced exits
/// at quadrature nodes, bypassing the bin projection.
pub fn galerkin_sigma2_traced<T: Real>(
    op: &TracedOperator<T>,
    f: &Observable<T>,
    n: usize,
    quad: &PiQuadrature<T>,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    if n == 0 {
        return Err(DiffusivityError::Parameter { name: "n", value: 0.0, allowed: "[1, inf)" });
    }
    let norm_sq = positive_norm(f, quad)?;
    let moments = f.moments(n, quad);
    check_mean(moments[0], norm_sq)?;
    let avgs = op.exit_legendre_averages(n);
    let mut c = vec![T::zero(); n];
    for (&(x, w), avg) in op.nodes().iter().zip(&avgs) {
        let wf = w * f.eval(x);
        for (cj, &v) in c.iter_mut().zip(&avg[1..]) {
            *cj = *cj + wf * v;
        }
    }
    let a = op.legendre_matrix(n);
    let sigma2 = galerkin_solve(GalerkinSystem { n, a, c }, &moments, norm_sq, GalerkinNorm::Full)?;
    let mut report = DiffusivityReport::new(sigma2, norm_sq, Estimator::Galerkin, f.radius());
    report.n = Some(n);
    Ok(report)
}

fn symmetrized_apply<T: Real>(p: &TransitionMatrix<T>, v: &[T]) -> Vec<T> {
    let m = p.m();
    let half: T = lit(0.5);
    let pv = apply(p, v);
    let mut ptv = vec![T::zero(); m];
    for (i, &vi) in v.iter().enumerate() {
        for (acc, &pij) in ptv.iter_mut().zip(p.row(i)) {
            *acc = *acc + pij * vi;
        }
    }
    pv.iter().zip(&ptv).map(|(&a, &b)| half * (a + b)).collect()
}

/// Settings of the direct Poisson solve.
#[derive(Debug, Clone, Copy)]
pub struct DirectOptions<T> {
    pub gap_threshold: T,
    /// Relative residual at which BiCGSTAB stops.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Skip the eigendecomposition when the gap is already known.
    pub known_gap: Option<T>,
}

impl<T: Real> Default for DirectOptions<T> {
    fn default() -> Self {
        DirectOptions {
            gap_threshold: lit(DEFAULT_GAP_THRESHOLD),
            tolerance: T::algebraic_tolerance(),
            max_iterations: 5000,
            known_gap: None,
        }
    }
}

/// Solution of `(I - P) g = f` split into bin and sub-bin parts.
struct PoissonSolution<T> {
    f_bar: Vec<T>,
    g_bar: Vec<T>,
    /// `||f||^2 - ||E f||^2`.
    fine: T,
    norm_sq: T,
}

fn poisson_solve<T: Real>(
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    quad: &PiQuadrature<T>,
    opts: &DirectOptions<T>,
) -> Result<PoissonSolution<T>, DiffusivityError> {
    let gap = match opts.known_gap {
        Some(g) => g,
        None => spectral_summary(p)?.gap,
    };
    if !(gap >= opts.gap_threshold) {
        return Err(DiffusivityError::Unreliable {
            reason: format!("spectral gap {:.3e} below threshold {:.3e}", f64_of(gap), f64_of(opts.gap_threshold)),
        });
    }
    let norm_sq = positive_norm(f, quad)?;
    let m = p.m();
    let mf: T = count(m);
    let f_bar = f.bin_averages(p.grid().edges(), quad);
    let mean = f_bar.iter().copied().sum::<T>() / mf;
    check_mean(mean, norm_sq)?;
    let project = |v: &[T]| {
        let mu = v.iter().copied().sum::<T>() / mf;
        v.iter().map(|&x| x - mu).collect::<Vec<T>>()
    };
    let b = project(&f_bar);
    let op = |v: &[T]| {
        let q = project(v);
        let pq = apply(p, &q);
        project(&q.iter().zip(&pq).map(|(&a, &b)| a - b).collect::<Vec<T>>())
    };
    let sol = bicgstab(op, &b, opts.tolerance, opts.max_iterations);
    if !sol.converged {
        return Err(DiffusivityError::Unreliable {
            reason: format!(
                "BiCGSTAB stopped after {} iterations at relative residual {:.3e}",
                sol.iterations,
                f64_of(sol.relative_residual)
            ),
        });
    }
    let grid_sq = dot(&f_bar, &f_bar) / mf;
    Ok(PoissonSolution { f_bar, g_bar: project(&sol.x), fine: (norm_sq - grid_sq).max(T::zero()), norm_sq })
}

/// `sigma^2 = <f, f> + 2 <f, P g>` with `(I - P) g = f` solved by BiCGSTAB.
pub fn direct_sigma2<T: Real>(
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    quad: &PiQuadrature<T>,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    direct_sigma2_with(p, f, quad, &DirectOptions::default())
}

pub fn direct_sigma2_with<T: Real>(
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    quad: &PiQuadrature<T>,
    opts: &DirectOptions<T>,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    let sol = poisson_solve(p, f, quad, opts)?;
    let mf: T = count(p.m());
    let beta = p.retention();
    let pg = apply(p, &sol.g_bar);
    let coarse = dot(&sol.f_bar, &sol.f_bar) / mf + lit::<T>(2.0) * dot(&sol.f_bar, &pg) / mf;
    let fine = sol.fine * (T::one() + beta) / (T::one() - beta);
    Ok(DiffusivityReport::new(coarse + fine, sol.norm_sq, Estimator::Direct, f.radius()).with_matrix(p))
}

/// `sigma^2 = sum_k w_k (1 + lambda_k) / (1 - lambda_k)` over the spectral
/// measure of `f`.
pub fn spectral_sigma2<T: Real>(
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    quad: &PiQuadrature<T>,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    let summary = spectral_summary(p)?;
    spectral_sigma2_from(&summary, p, f, quad)
}

/// [`spectral_sigma2`] reusing a precomputed summary of `p`.
pub fn spectral_sigma2_from<T: Real>(
    summary: &SpectralSummary<T>,
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    quad: &PiQuadrature<T>,
) -> Result<DiffusivityReport<T>, DiffusivityError> {
    let norm_sq = positive_norm(f, quad)?;
    let f_bar = f.bin_averages(p.grid().edges(), quad);
    let measure = spectral_measure_from_bins(summary, &f_bar, norm_sq);
    if measure.mean_mass / norm_sq > T::algebraic_tolerance() {
        return Err(DiffusivityError::NotMeanZero { mass: f64_of(measure.mean_mass / norm_sq) });
    }
    let tiny = T::algebraic_tolerance();
    let mut sigma2 = T::zero();
    for &(lam, w) in measure.atoms.iter().chain(std::iter::once(&measure.fine_atom)) {
        if w <= tiny * norm_sq {
            continue;
        }
        let denom = T::one() - lam;
        if !(denom > tiny) {
            return Err(DiffusivityError::Unreliable {
                reason: format!("spectral mass {:.3e} at eigenvalue {}", f64_of(w / norm_sq), f64_of(lam)),
            });
        }
        sigma2 = sigma2 + w * (T::one() + lam) / denom;
    }
    Ok(DiffusivityReport::new(sigma2, norm_sq, Estimator::Spectral, f.radius()).with_matrix(p))
}

/// Increase of `eta` when the wall of `p1` is mixed with a specular wall:
/// `(2 (1 - alpha) / alpha) <f, (I - P1)^{-1} f> / ||f||^2`.
pub fn mixture_eta_shift<T: Real>(
    p1: &TransitionMatrix<T>,
    f: &Observable<T>,
    alpha: T,
    quad: &PiQuadrature<T>,
) -> Result<T, DiffusivityError> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(DiffusivityError::Parameter { name: "alpha", value: f64_of(alpha), allowed: "(0, 1]" });
    }
    if alpha == T::one() {
        return Ok(T::zero());
    }
    let sol = poisson_solve(p1, f, quad, &DirectOptions::default())?;
    let mf: T = count(p1.m());
    let resolvent = dot(&sol.f_bar, &sol.g_bar) / mf + sol.fine / (T::one() - p1.retention());
    Ok(lit::<T>(2.0) * (T::one() - alpha) / alpha * resolvent / sol.norm_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{diffuse_matrix, identity_matrix};

    #[test]
    fn accommodation_values() {
        assert_eq!(accommodation_equivalent(1.0f64).unwrap().theta, 1.0);
        assert_eq!(accommodation_equivalent(3.0f64).unwrap().theta, 0.5);
        assert!(accommodation_equivalent(0.5f64).unwrap().below_diffuse);
        assert!(accommodation_equivalent(-1.0f64).is_err());
    }

    #[test]
    fn lser_on_phi1() {
        let quad = PiQuadrature::<f64>::default();
        let r = lser_sigma2(&Observable::legendre(1), 0.01, 5, &quad).unwrap();
        assert!((r.sigma2 - (-1.0 / 3.0 + 1.0 / 0.06)).abs() < 1e-10);
        assert!(lser_sigma2(&Observable::legendre(1), -0.1, 5, &quad).is_err());
        assert!(lser_sigma2(&Observable::legendre(1), 0.0, 5, &quad).unwrap_err().is_reliability());
        assert!(lser_sigma2(&Observable::legendre(2).centered(&quad), 0.1, 5, &quad).is_ok());
        assert!(matches!(
            lser_sigma2(&Observable::legendre(0), 0.1, 5, &quad),
            Err(DiffusivityError::NotMeanZero { .. })
        ));
    }

    #[test]
    fn diffuse_matrix_gives_unit_eta() {
        let quad = PiQuadrature::<f64>::default();
        let p = diffuse_matrix::<f64>(50).unwrap();
        let f = Observable::legendre(3);
        for r in [
            direct_sigma2(&p, &f, &quad).unwrap(),
            spectral_sigma2(&p, &f, &quad).unwrap(),
            galerkin_sigma2(&p, &f, 10, &quad).unwrap(),
        ] {
            assert!((r.eta - 1.0).abs() < 1e-10, "{:?}", r);
        }
    }

    #[test]
    fn identity_matrix_is_unreliable() {
        let quad = PiQuadrature::<f64>::default();
        let p = identity_matrix::<f64>(20).unwrap();
        let f = Observable::legendre(1);
        assert!(direct_sigma2(&p, &f, &quad).unwrap_err().is_reliability());
        assert!(spectral_sigma2(&p, &f, &quad).unwrap_err().is_reliability());
        assert!(galerkin_sigma2(&p, &f, 8, &quad).unwrap_err().is_reliability());
    }

    #[test]
    fn two_state_toy_spectrum() {
        // P = [[1-a, a], [a, 1-a]] has eigenvalue 1 - 2a on (1, -1).
        let a = 0.3;
        let p = TransitionMatrix::from_rows(2, vec![1.0 - a, a, a, 1.0 - a], 0.0, "toy").unwrap();
        let quad = PiQuadrature::<f64>::default();
        let f = Observable::from_fn("sign", |x: f64| x.signum()).with_breakpoints(vec![0.0]);
        let lam = 1.0 - 2.0 * a;
        let want = (1.0 + lam) / (1.0 - lam);
        let r = spectral_sigma2(&p, &f, &quad).unwrap();
        assert!((r.sigma2 - want).abs() < 1e-12, "{}", r.sigma2);
        let d = direct_sigma2(&p, &f, &quad).unwrap();
        assert!((d.sigma2 - want).abs() < 1e-9, "{}", d.sigma2);
    }
}
