use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::OperatorError;
use crate::billiard::{trace_exit, trace_exit_resampled, TraceError};
use crate::geometry::Profile;
use crate::scalar::{count, lit, Real};
use crate::spectral_basis::legendre_values;

/// Redraws allowed for a random entry before the last error is returned.
const MAX_REDRAWS: usize = 64;

/// Source of the entry position on the torus.
pub enum EntrySampler<'a, T> {
    /// A fixed abscissa in `[0, period)`.
    Position(T),
    /// A uniform draw, redrawn when the trajectory is singular.
    Random(&'a mut dyn RngCore),
}

/// One step of the velocity chain: the exit cosine after entering with
/// cosine `x`.
pub fn sample_transition<T: Real>(profile: &Profile<T>, x: T, sampler: EntrySampler<'_, T>) -> Result<T, TraceError> {
    match sampler {
        EntrySampler::Position(r) => trace_exit_resampled(profile, r, x).map(|(e, _)| e.x),
        EntrySampler::Random(rng) => {
            let mut last = None;
            for _ in 0..=MAX_REDRAWS {
                let u: f64 = rng.random();
                match trace_exit(profile, lit::<T>(u) * profile.period(), x) {
                    Ok(e) => return Ok(e.x),
                    Err(e) if e.is_singular() => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one draw"))
        }
    }
}

/// Exit cosines traced from a fixed set of entry cosines, without binning.
///
/// `(P g)(x_q)` is the average of `g` over the exits recorded for node `q`,
/// which gives Galerkin entries free of the bin projection.
#[derive(Debug, Clone)]
pub struct TracedOperator<T> {
    nodes: Vec<(T, T)>,
    exits: Vec<Vec<T>>,
    rejections: u64,
}

impl<T: Real> TracedOperator<T> {
    /// Traces `n` grid positions from each quadrature node `(x_q, w_q)`.
    /// Nodes that rounded onto `+-1` are traced one ulp inside.
    pub fn build(profile: &Profile<T>, nodes: Vec<(T, T)>, n: usize) -> Result<Self, OperatorError> {
        if n == 0 {
            return Err(OperatorError::Parameter { name: "N", value: 0.0, allowed: "[1, inf)" });
        }
        let nf: T = count(n);
        let half: T = lit(0.5);
        let rows: Vec<Result<(Vec<T>, u64), TraceError>> = nodes
            .par_iter()
            .map(|&(x, _)| {
                // Outer quadrature nodes can round onto +-1.
                let lim = T::one() - T::epsilon();
                let x = x.max(-lim).min(lim);
                let mut rej = 0u64;
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    let r = (count::<T>(k) + half) * profile.period() / nf;
                    let (e, rj) = trace_exit_resampled(profile, r, x)?;
                    rej += rj as u64;
                    out.push(e.x);
                }
                Ok((out, rej))
            })
            .collect();
        let mut exits = Vec::with_capacity(nodes.len());
        let mut rejections = 0;
        for row in rows {
            let (e, r) = row?;
            exits.push(e);
            rejections += r;
        }
        Ok(TracedOperator { nodes, exits, rejections })
    }

    pub fn nodes(&self) -> &[(T, T)] {
        &self.nodes
    }

    pub fn rejections(&self) -> u64 {
        self.rejections
    }

    /// `(P g)(x_q)` for every node.
    pub fn apply(&self, g: impl Fn(T) -> T + Sync) -> Vec<T> {
        self.exits
            .par_iter()
            .map(|ex| ex.iter().map(|&e| g(e)).sum::<T>() / count::<T>(ex.len()))
            .collect()
    }

    /// Averages of `phi_0, ..., phi_n` over the exits of each node, i.e.
    /// `(P phi_l)(x_q)`, node-major.
    pub fn exit_legendre_averages(&self, n: usize) -> Vec<Vec<T>> {
        self.exits
            .par_iter()
            .map(|ex| {
                let mut avg = vec![T::zero(); n + 1];
                let mut buf = Vec::with_capacity(n + 1);
                for &e in ex {
                    legendre_values(n, e, &mut buf);
                    for (a, &v) in avg.iter_mut().zip(&buf) {
                        *a = *a + v;
                    }
                }
                let inv = T::one() / count::<T>(ex.len());
                avg.iter_mut().for_each(|a| *a = *a * inv);
                avg
            })
            .collect()
    }

    /// Symmetrized `<P phi_j, phi_i>_pi` for `i, j = 1..=n`, row-major.
    pub fn legendre_matrix(&self, n: usize) -> Vec<T> {
        let avgs = self.exit_legendre_averages(n);
        let mut a = vec![T::zero(); n * n];
        let mut buf = Vec::with_capacity(n + 1);
        for (&(x, w), avg) in self.nodes.iter().zip(&avgs) {
            legendre_values(n, x, &mut buf);
            for i in 0..n {
                let wi = w * buf[i + 1];
                for j in 0..n {
                    a[i * n + j] = a[i * n + j] + wi * avg[j + 1];
                }
            }
        }
        let half: T = lit(0.5);
        for i in 0..n {
            for j in (i + 1)..n {
                let s = half * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = s;
                a[j * n + i] = s;
            }
        }
        a
    }
}
