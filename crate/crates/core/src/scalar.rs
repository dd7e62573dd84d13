//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point scalar (`f32` or `f64`).
///
/// Dense symmetric eigendecomposition is delegated to `nalgebra` per concrete
/// type so that generic code only sees `num_traits` methods.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Tolerance for tangency and corner detection in the billiard tracer.
    fn geometric_tolerance() -> Self;

    /// Tolerance for "exact" linear algebra identities (row sums, Parseval).
    fn algebraic_tolerance() -> Self;

    /// Eigen-decomposition of a dense symmetric matrix given in row-major order.
    fn symmetric_eigen(n: usize, row_major: &[Self]) -> Option<SymmetricEigen<Self>>;
}

/// Eigenpairs of a symmetric matrix, sorted by decreasing eigenvalue.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// `vectors[k]` is the unit eigenvector belonging to `values[k]`.
    pub vectors: Vec<Vec<T>>,
}

macro_rules! impl_real {
    ($t:ty, $geo:expr, $alg:expr) => {
        impl Real for $t {
            fn geometric_tolerance() -> Self {
                $geo
            }

            fn algebraic_tolerance() -> Self {
                $alg
            }

            fn symmetric_eigen(n: usize, row_major: &[Self]) -> Option<SymmetricEigen<Self>> {
                assert_eq!(row_major.len(), n * n, "matrix must be n x n");
                if n == 0 {
                    return Some(SymmetricEigen { values: vec![], vectors: vec![] });
                }
                let m = nalgebra::DMatrix::<$t>::from_row_slice(n, n, row_major);
                let eig = m.try_symmetric_eigen(<$t>::EPSILON, 0)?;
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
                let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
                let vectors = order
                    .iter()
                    .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
                    .collect();
                Some(SymmetricEigen { values, vectors })
            }
        }
    };
}

impl_real!(f64, 1e-12, 1e-10);
impl_real!(f32, 1e-5, 1e-4);

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count or index into the working scalar.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}
