//! Functions of the direction cosine `x` in `(-1, 1)`.

use std::fmt;
use std::sync::Arc;

use crate::quadrature::PiQuadrature;
use crate::scalar::{lit, Real};
use crate::spectral_basis::{legendre_eval, legendre_moments};

/// Symmetry of an observable under `x -> -x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
    Unknown,
}

/// Real function on `(-1, 1)` with the metadata needed to integrate it
/// accurately against the cosine law.
#[derive(Clone)]
pub struct Observable<T> {
    eval: Arc<dyn Fn(T) -> T + Send + Sync>,
    breakpoints: Vec<T>,
    cutoff: Option<T>,
    radius: T,
    parity: Parity,
    label: String,
}

impl<T: Real> fmt::Debug for Observable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("cutoff", &self.cutoff)
            .field("radius", &self.radius)
            .field("parity", &self.parity)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

/// Invalid observable parameters.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservableError {
    #[error("cutoff must be positive, got {0}")]
    Cutoff(f64),
    #[error("channel radius must be positive, got {0}")]
    Radius(f64),
}

impl<T: Real> Observable<T> {
    pub fn from_fn(label: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Observable {
            eval: Arc::new(f),
            breakpoints: Vec::new(),
            cutoff: None,
            radius: T::one(),
            parity: Parity::Unknown,
            label: label.into(),
        }
    }

    /// Points in `(-1, 1)` where the function is not smooth.
    pub fn with_breakpoints(mut self, breakpoints: Vec<T>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    /// The Legendre polynomial `phi_l`.
    pub fn legendre(l: usize) -> Self {
        let parity = if l.is_multiple_of(2) { Parity::Even } else { Parity::Odd };
        Self::from_fn(format!("phi_{l}"), move |x| legendre_eval(l, x)).with_parity(parity)
    }

    /// Axial flight length per bounce, `2 r x / sqrt(1 - x^2)`, saturated at
    /// `+-a` where its magnitude exceeds the cutoff `a`.
    ///
    /// Saturation keeps the sign of the untruncated value so the observable
    /// stays odd and mean-zero under the cosine law.
    pub fn displacement(a: T, radius: T) -> Result<Self, ObservableError> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(ObservableError::Cutoff(a.to_f64().unwrap_or(f64::NAN)));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(ObservableError::Radius(radius.to_f64().unwrap_or(f64::NAN)));
        }
        let two_r = radius + radius;
        // |f(x)| = a  <=>  x^2 = a^2 / (a^2 + 4 r^2)
        let xc = a / (a * a + two_r * two_r).sqrt();
        let eval = move |x: T| {
            if x.abs() >= xc {
                return a.copysign(x);
            }
            let v = two_r * x / ((T::one() - x) * (T::one() + x)).sqrt();
            if v.abs() > a {
                a.copysign(x)
            } else {
                v
            }
        };
        Ok(Observable {
            eval: Arc::new(eval),
            breakpoints: vec![-xc, xc],
            cutoff: Some(a),
            radius,
            parity: Parity::Odd,
            label: format!("displacement(a={a}, r={radius})"),
        })
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        (self.eval)(x)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn cutoff(&self) -> Option<T> {
        self.cutoff
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `<f, 1>_pi`.
    pub fn mean(&self, quad: &PiQuadrature<T>) -> T {
        if self.parity == Parity::Odd {
            return T::zero();
        }
        quad.integrate(|x| self.eval(x), &self.breakpoints)
    }

    /// `f - <f, 1>_pi`.
    pub fn centered(&self, quad: &PiQuadrature<T>) -> Self {
        let m = self.mean(quad);
        if m == T::zero() {
            return self.clone();
        }
        let inner = self.eval.clone();
        Observable {
            eval: Arc::new(move |x| inner(x) - m),
            breakpoints: self.breakpoints.clone(),
            cutoff: self.cutoff,
            radius: self.radius,
            parity: self.parity,
            label: format!("{} (centered)", self.label),
        }
    }

    /// `||f||_pi^2` by adaptive integration, which resolves the steep growth
    /// of the displacement observable just inside its cutoff points.
    pub fn norm_sq(&self, quad: &PiQuadrature<T>) -> T {
        let rough = quad.integrate(|x| self.eval(x).powi(2), &self.breakpoints);
        let tol = rough.abs().max(T::min_positive_value()) * lit::<T>(1e-13).max(T::epsilon() * lit(64.0));
        quad.integrate_adaptive(|x| self.eval(x).powi(2), &self.breakpoints, tol)
    }

    /// Averages of `f` over the cells delimited by `edges`.
    pub fn bin_averages(&self, edges: &[T], quad: &PiQuadrature<T>) -> Vec<T> {
        quad.cell_averages(|x| self.eval(x), edges, &self.breakpoints)
    }

    /// Legendre moments `<phi_l, f>_pi` for `l = 0..=n`.
    pub fn moments(&self, n: usize, quad: &PiQuadrature<T>) -> Vec<T> {
        legendre_moments(self, n, quad)
    }
}
