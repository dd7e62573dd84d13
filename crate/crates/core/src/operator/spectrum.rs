use super::{OperatorError, TransitionMatrix};
use crate::observable::Observable;
use crate::quadrature::PiQuadrature;
use crate::scalar::{count, Real};

/// Spectrum of the symmetrized operator.
///
/// The constant vector is deflated exactly, so `eigenvalues[0]` is the
/// Rayleigh quotient of the constant (1 up to rounding for a row-stochastic
/// matrix) and the rest is the spectrum on mean-zero bin vectors.
#[derive(Debug, Clone)]
pub struct SpectralSummary<T> {
    /// Descending; the first entry belongs to the constant vector.
    pub eigenvalues: Vec<T>,
    /// Largest `|lambda|` on mean-zero functions, including the sub-bin
    /// retention factor.
    pub second_eigenvalue: T,
    pub gap: T,
    /// `max |P_ij - P_ji|`, i.e. the noise removed by symmetrizing.
    pub symmetrization_defect: T,
    pub retention: T,
    /// Euclidean-unit eigenvectors matching `eigenvalues[1..]`.
    vectors: Vec<Vec<T>>,
}

impl<T: Real> SpectralSummary<T> {
    pub fn top(&self) -> T {
        self.eigenvalues[0]
    }

    /// Eigenvalues on mean-zero bin vectors.
    pub fn nontrivial(&self) -> &[T] {
        &self.eigenvalues[1..]
    }

    pub fn eigenvector(&self, k: usize) -> &[T] {
        &self.vectors[k]
    }
}

/// Symmetrizes `P`, deflates the constants with a Householder reflector and
/// diagonalizes the remaining block.
pub fn spectral_summary<T: Real>(p: &TransitionMatrix<T>) -> Result<SpectralSummary<T>, OperatorError> {
    let m = p.m();
    let half: T = T::one() / (T::one() + T::one());
    let mut s = vec![T::zero(); m * m];
    let mut defect = T::zero();
    for i in 0..m {
        for j in 0..m {
            let (a, b) = (p.get(i, j), p.get(j, i));
            s[i * m + j] = half * (a + b);
            defect = defect.max((a - b).abs());
        }
    }

    // H = I - 2 w w^T / (w^T w) with w = u - e_1 maps u = 1/sqrt(M) to e_1.
    let u = T::one() / count::<T>(m).sqrt();
    let mut w = vec![u; m];
    w[0] = w[0] - T::one();
    let c: T = w.iter().map(|&v| v * v).sum();
    let z: Vec<T> = (0..m).map(|i| (0..m).map(|j| s[i * m + j] * w[j]).sum()).collect();
    let sw: T = w.iter().zip(&z).map(|(&a, &b)| a * b).sum();
    let two_c = (T::one() + T::one()) / c;
    let four_s = (count::<T>(4) * sw) / (c * c);
    let hsh = |i: usize, j: usize| s[i * m + j] - two_c * (w[i] * z[j] + z[i] * w[j]) + four_s * w[i] * w[j];

    let top = hsh(0, 0);
    let k = m - 1;
    let mut block = Vec::with_capacity(k * k);
    for i in 1..m {
        for j in 1..m {
            block.push(hsh(i, j));
        }
    }
    let eig = T::symmetric_eigen(k, &block).ok_or(OperatorError::Eigen)?;

    let vectors: Vec<Vec<T>> = eig
        .vectors
        .iter()
        .map(|y| {
            let wy: T = y.iter().zip(&w[1..]).map(|(&a, &b)| a * b).sum();
            let mut v = Vec::with_capacity(m);
            v.push(-two_c * wy * w[0]);
            v.extend(y.iter().zip(&w[1..]).map(|(&a, &b)| a - two_c * wy * b));
            v
        })
        .collect();

    let retention = p.retention();
    let rho = eig
        .values
        .iter()
        .fold(retention.abs(), |acc, &l| acc.max(l.abs()));
    let mut eigenvalues = Vec::with_capacity(m);
    eigenvalues.push(top);
    eigenvalues.extend(eig.values);
    Ok(SpectralSummary {
        eigenvalues,
        second_eigenvalue: rho,
        // Rounding can push rho a few ulps above 1 for the identity.
        gap: (T::one() - rho).max(T::zero()),
        symmetrization_defect: defect,
        retention,
        vectors,
    })
}

/// Discrete spectral measure `Pi_f` of a mean-zero observable.
///
/// Atoms sit at the nontrivial eigenvalues of the bin operator, plus one
/// atom at the retention factor carrying the part of `f` finer than a bin.
#[derive(Debug, Clone)]
pub struct SpectralMeasure<T> {
    /// `(lambda_k, w_k)` for the mean-zero bin eigenvectors.
    pub atoms: Vec<(T, T)>,
    /// `(beta, ||f||^2 - ||E f||^2)`.
    pub fine_atom: (T, T),
    /// Mass on the constant eigenvector, i.e. the squared bin mean.
    pub mean_mass: T,
    /// `||f||_pi^2` the weights should add up to.
    pub norm_sq: T,
}

impl<T: Real> SpectralMeasure<T> {
    /// Total mass including the constant and sub-bin atoms.
    pub fn total_weight(&self) -> T {
        self.atoms.iter().map(|a| a.1).sum::<T>() + self.fine_atom.1 + self.mean_mass
    }
}

/// Spectral measure from bin averages `f_bar` and the exact norm of `f`.
pub fn spectral_measure_from_bins<T: Real>(summary: &SpectralSummary<T>, f_bar: &[T], norm_sq: T) -> SpectralMeasure<T> {
    let m = f_bar.len();
    let mf: T = count(m);
    let atoms = summary
        .nontrivial()
        .iter()
        .zip(&summary.vectors)
        .map(|(&l, v)| {
            let proj: T = v.iter().zip(f_bar).map(|(&a, &b)| a * b).sum();
            (l, proj * proj / mf)
        })
        .collect();
    let mean = f_bar.iter().copied().sum::<T>() / mf;
    let grid_sq = f_bar.iter().map(|&v| v * v).sum::<T>() / mf;
    SpectralMeasure {
        atoms,
        fine_atom: (summary.retention, (norm_sq - grid_sq).max(T::zero())),
        mean_mass: mean * mean,
        norm_sq,
    }
}

/// `Pi_f` for an observable, which is centered first.
pub fn spectral_measure<T: Real>(
    summary: &SpectralSummary<T>,
    p: &TransitionMatrix<T>,
    f: &Observable<T>,
    quad: &PiQuadrature<T>,
) -> SpectralMeasure<T> {
    let f = f.centered(quad);
    let f_bar = f.bin_averages(p.grid().edges(), quad);
    spectral_measure_from_bins(summary, &f_bar, f.norm_sq(quad))
}
