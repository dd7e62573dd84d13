//! Knudsen self-diffusivity of gas in a channel whose wall carries a periodic
//! billiard microstructure.
//!
//! The pipeline runs from a cell [`geometry::Profile`] through the exact
//! specular [`billiard`] flow to a finite-rank Markov [`operator`] on
//! direction cosines, and from there to the CLT variance of the axial
//! displacement by several independent [`diffusivity`] estimators. Legendre
//! machinery for the weak-scattering limit lives in [`spectral_basis`].
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! crate-root aliases fix the scalar to `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod billiard;
pub mod diffusivity;
pub mod geometry;
mod linalg;
pub mod observable;
pub mod operator;
pub mod quadrature;
pub mod scalar;
pub mod spectral_basis;
pub mod vec2;

pub use scalar::Real;

pub type Vec2 = vec2::Vec2<f64>;
pub type Profile = geometry::Profile<f64>;
pub type BoundaryPiece = geometry::BoundaryPiece<f64>;
pub type BoundaryPoint = geometry::BoundaryPoint<f64>;
pub type FlatnessResult = geometry::FlatnessResult<f64>;
pub type CellTrajectory = billiard::CellTrajectory<f64>;
pub type ParticleState = billiard::ParticleState<f64>;
pub type Observable = observable::Observable<f64>;
pub type LegendreSeries = spectral_basis::LegendreSeries<f64>;
pub type QuadratureRule = quadrature::QuadratureRule<f64>;
pub type PiQuadrature = quadrature::PiQuadrature<f64>;
pub type TransitionMatrix = operator::TransitionMatrix<f64>;
pub type VelocityGrid = operator::VelocityGrid<f64>;
pub type SpectralSummary = operator::SpectralSummary<f64>;
pub type SpectralMeasure = operator::SpectralMeasure<f64>;
pub type TracedOperator = operator::TracedOperator<f64>;
pub type DiffusivityReport = diffusivity::DiffusivityReport<f64>;

pub use geometry::{FamilySpec, GeometryError};
pub use billiard::TraceError;
pub use diffusivity::{DiffusivityError, Estimator};
pub use operator::OperatorError;
pub use spectral_basis::SpectralError;
