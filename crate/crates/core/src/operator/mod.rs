//! Finite-rank Markov operators on direction cosines.
//!
//! `P_M` is the `M x M` matrix of bin-to-bin transition fractions. As an
//! operator on `L^2(pi)` it acts through the bin projection `E` (cell
//! averaging): `P f = P_M (E f) + beta (f - E f)`. The retention factor
//! `beta` describes what happens to fluctuations finer than a bin. A traced
//! matrix gets the share of the period where the wall is a horizontal piece
//! on the reference line (those rays reflect specularly, so `P` is exactly
//! the identity there) and treats the scattered remainder as seeing only bin
//! averages. It is 0 for the diffuse matrix, 1 for the identity, and mixes
//! linearly under [`mixture_operator`].

mod matrix;
mod spectrum;
mod traced;

pub use matrix::{
    build_matrix, diffuse_matrix, identity_matrix, specular_fraction, MatrixMetadata, SamplingMode, TransitionMatrix,
};
pub use spectrum::{spectral_measure, spectral_measure_from_bins, spectral_summary, SpectralMeasure, SpectralSummary};
pub use traced::{sample_transition, EntrySampler, TracedOperator};

use crate::billiard::TraceError;
use crate::scalar::{count, Real};
use crate::spectral_basis::legendre_eval;

/// Operator construction and analysis failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("parameter {name} = {value} outside {allowed}")]
    Parameter { name: &'static str, value: f64, allowed: &'static str },
    #[error("trace failed: {0}")]
    Trace(#[from] TraceError),
    #[error("eigendecomposition did not converge")]
    Eigen,
    #[error("matrix shapes differ: {0} vs {1}")]
    Shape(usize, usize),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed matrix file: {0}")]
    Format(String),
}

/// Uniform partition of `(-1, 1)` into `M` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid<T> {
    edges: Vec<T>,
    midpoints: Vec<T>,
}

impl<T: Real> VelocityGrid<T> {
    pub fn new(m: usize) -> Result<Self, OperatorError> {
        if m < 2 {
            return Err(OperatorError::Parameter { name: "M", value: m as f64, allowed: "[2, inf)" });
        }
        let mf: T = count(m);
        let edges: Vec<T> = (0..=m)
            .map(|i| {
                if i == m {
                    T::one()
                } else {
                    -T::one() + count::<T>(2 * i) / mf
                }
            })
            .collect();
        let midpoints = (0..m).map(|i| -T::one() + count::<T>(2 * i + 1) / mf).collect();
        Ok(VelocityGrid { edges, midpoints })
    }

    pub fn len(&self) -> usize {
        self.midpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.midpoints.is_empty()
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn midpoints(&self) -> &[T] {
        &self.midpoints
    }

    /// Bin containing `x`; values on an edge go to the upper bin and the
    /// endpoints are clamped into the outer bins.
    pub fn bin_of(&self, x: T) -> usize {
        let m = self.len();
        let half: T = T::one() / (T::one() + T::one());
        let idx = ((x + T::one()) * count::<T>(m) * half).floor();
        idx.to_isize().map_or(0, |i| i.clamp(0, m as isize - 1) as usize)
    }
}

/// `alpha P + (1 - alpha) I`, the operator of a wall that scatters through
/// `P` with probability `alpha` and reflects specularly otherwise.
pub fn mixture_operator<T: Real>(p: &TransitionMatrix<T>, alpha: T) -> Result<TransitionMatrix<T>, OperatorError> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(OperatorError::Parameter {
            name: "alpha",
            value: alpha.to_f64().unwrap_or(f64::NAN),
            allowed: "(0, 1]",
        });
    }
    let m = p.m();
    let mut entries: Vec<T> = p.entries().iter().map(|&v| alpha * v).collect();
    for i in 0..m {
        entries[i * m + i] = entries[i * m + i] + (T::one() - alpha);
    }
    let retention = alpha * p.retention() + (T::one() - alpha);
    let mut meta = p.metadata().clone();
    meta.mixture_alpha = Some(alpha.to_f64().unwrap_or(f64::NAN) * meta.mixture_alpha.unwrap_or(1.0));
    meta.retention = retention.to_f64().unwrap_or(f64::NAN);
    Ok(TransitionMatrix::from_parts(p.grid().clone(), entries, retention, meta))
}

/// `sum_j |(u^T P)_j - u_j|` with `u` the uniform probability vector.
pub fn stationarity_defect<T: Real>(p: &TransitionMatrix<T>) -> T {
    let m = p.m();
    let inv: T = T::one() / count::<T>(m);
    let mut col = vec![T::zero(); m];
    for i in 0..m {
        for (c, &v) in col.iter_mut().zip(p.row(i)) {
            *c = *c + v;
        }
    }
    col.into_iter().map(|c| (c * inv - inv).abs()).sum()
}

/// Largest `|P_ij - P_ji|`.
pub fn symmetry_defect<T: Real>(p: &TransitionMatrix<T>) -> T {
    let m = p.m();
    let mut worst = T::zero();
    for i in 0..m {
        for j in (i + 1)..m {
            worst = worst.max((p.get(i, j) - p.get(j, i)).abs());
        }
    }
    worst
}

/// `P v` for a bin vector `v`.
pub fn apply<T: Real>(p: &TransitionMatrix<T>, v: &[T]) -> Vec<T> {
    (0..p.m())
        .map(|i| p.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
        .collect()
}

/// `||(P - I) phi_l + 2 h l (l + 1) phi_l||_pi / ||phi_l||_pi` with `phi_l`
/// sampled at bin midpoints: how far `P` is from its weak-scattering
/// limit `I + 2h L` on one Legendre mode.
pub fn diffusion_residual<T: Real>(p: &TransitionMatrix<T>, l: usize, h: T) -> T {
    let phi: Vec<T> = p.grid().midpoints().iter().map(|&x| legendre_eval(l, x)).collect();
    let pphi = apply(p, &phi);
    let lam = h * count::<T>(2 * l * (l + 1));
    let res: Vec<T> = pphi.iter().zip(&phi).map(|(&a, &b)| a - b + lam * b).collect();
    grid_norm(&res) / grid_norm(&phi)
}

/// Discrete `pi`-weighted norm `sqrt((1/M) sum v_i^2)`.
pub fn grid_norm<T: Real>(v: &[T]) -> T {
    (v.iter().map(|&x| x * x).sum::<T>() / count::<T>(v.len())).sqrt()
}
