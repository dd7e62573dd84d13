//! Gauss-type quadrature: fixed Gauss-Legendre rules, an adaptive
//! Gauss-Kronrod integrator, and integration against the stationary cosine
//! law `pi(dx) = dx/2` on `(-1, 1)`.

use crate::scalar::{count, lit, Real};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    /// `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
    ///
    /// Nodes come from Newton iteration on the three-term recurrence, carried
    /// out in `f64` and then converted.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, q) = legendre_pair_f64(n, x);
                dp = nf * (x * p - q) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (p, q) = legendre_pair_f64(n, x);
                    dp = nf * (x * p - q) / (x * x - 1.0);
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = lit(-x);
            nodes[n - 1 - i] = lit(x);
            weights[i] = lit(w);
            weights[n - 1 - i] = lit(w);
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        QuadratureRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) / lit(2.0);
        let mid = (a + b) / lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: T, b: T, f: impl Fn(T) -> T) -> T {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_pair_f64(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
// Gauss weights at odd indices of GK_NODES (1, 3, 5, 7).
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error_estimate: T,
}

fn gk15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = (b - a) / lit(2.0);
    let mid = (a + b) / lit(2.0);
    let mut kronrod = T::zero();
    let mut gauss = T::zero();
    for (i, (&x, &wk)) in GK_NODES.iter().zip(&GK_WEIGHTS_K).enumerate() {
        let x: T = lit(x);
        let wk: T = lit(wk);
        let vals = if i == 7 {
            let v = f(mid);
            (v, T::zero())
        } else {
            (f(mid - half * x), f(mid + half * x))
        };
        let s = vals.0 + vals.1;
        kronrod = kronrod + wk * s;
        if i % 2 == 1 {
            gauss = gauss + lit::<T>(GK_WEIGHTS_G[i / 2]) * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Subdivides by bisection until the summed error estimate falls below
/// `abs_tol` or `max_intervals` panels are in use.
pub fn adaptive_gauss_kronrod<T: Real>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    abs_tol: T,
    max_intervals: usize,
) -> Integral<T> {
    if a == b {
        return Integral { value: T::zero(), error_estimate: T::zero() };
    }
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total_err: T = panels.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || panels.len() >= max_intervals {
            let value = panels.iter().map(|p| p.2).sum();
            return Integral { value, error_estimate: total_err };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .expect("at least one panel");
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = (lo + hi) / lit(2.0);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Integration against `pi(dx) = dx/2` on `(-1, 1)`.
///
/// Integrals are evaluated in the angle variable `x = sin(t)`, which absorbs
/// inverse square-root growth at `x = +-1` (the displacement observable
/// behaves like `(1 - x^2)^(-1/2)` there). The angle interval is split at the
/// images of the supplied breakpoints, and each piece gets a full
/// Gauss-Legendre rule.
#[derive(Debug, Clone)]
pub struct PiQuadrature<T> {
    rule: QuadratureRule<T>,
}

impl<T: Real> PiQuadrature<T> {
    pub const DEFAULT_ORDER: usize = 512;

    pub fn new(order: usize) -> Self {
        PiQuadrature { rule: QuadratureRule::gauss_legendre(order) }
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    /// Quadrature at least as fine as this one and sufficient for products of
    /// Legendre polynomials up to `degree` with a smooth factor.
    pub fn for_degree(&self, degree: usize) -> Self {
        let needed = 2 * degree + 128;
        if needed <= self.order() {
            self.clone()
        } else {
            Self::new(needed)
        }
    }

    /// Nodes `x_q` and weights `w_q` such that `sum w_q g(x_q)` approximates
    /// `(1/2) int_a^b g(x) dx` for `-1 <= a < b <= 1`, with interior splits at
    /// `breakpoints`.
    pub fn nodes_on(&self, a: T, b: T, breakpoints: &[T]) -> Vec<(T, T)> {
        let cuts = sorted_cuts(a, b, breakpoints);
        let half: T = lit(0.5);
        let mut out = Vec::with_capacity(self.order() * (cuts.len() - 1));
        for w in cuts.windows(2) {
            let (ta, tb) = (clamp_unit(w[0]).asin(), clamp_unit(w[1]).asin());
            for (t, wt) in self.rule.mapped(ta, tb) {
                out.push((t.sin(), half * wt * t.cos()));
            }
        }
        out
    }

    /// Nodes for the whole interval `(-1, 1)`.
    pub fn nodes(&self, breakpoints: &[T]) -> Vec<(T, T)> {
        self.nodes_on(-T::one(), T::one(), breakpoints)
    }

    /// `(1/2) int_{-1}^{1} g(x) dx`.
    pub fn integrate(&self, g: impl Fn(T) -> T, breakpoints: &[T]) -> T {
        self.nodes(breakpoints).into_iter().map(|(x, w)| w * g(x)).sum()
    }

    /// `(1/2) int_{-1}^{1} g(x) dx` by adaptive Gauss-Kronrod in the angle
    /// variable, to absolute accuracy `tol`.
    pub fn integrate_adaptive(&self, g: impl Fn(T) -> T, breakpoints: &[T], tol: T) -> T {
        let cuts = sorted_cuts(-T::one(), T::one(), breakpoints);
        let per_piece = tol / count(cuts.len() - 1);
        let half: T = lit(0.5);
        cuts.windows(2)
            .map(|w| {
                let (ta, tb) = (clamp_unit(w[0]).asin(), clamp_unit(w[1]).asin());
                adaptive_gauss_kronrod(|t: T| half * t.cos() * g(t.sin()), ta, tb, per_piece, 4000).value
            })
            .sum()
    }

    /// Averages of `g` over consecutive cells of `edges`, i.e.
    /// `(1/(b-a)) int_a^b g` for each cell, using a short rule per cell.
    pub fn cell_averages(&self, g: impl Fn(T) -> T, edges: &[T], breakpoints: &[T]) -> Vec<T> {
        let local = PiQuadrature { rule: QuadratureRule::gauss_legendre(24) };
        edges
            .windows(2)
            .map(|w| {
                let s: T = local
                    .nodes_on(w[0], w[1], breakpoints)
                    .into_iter()
                    .map(|(x, wt)| wt * g(x))
                    .sum();
                s * lit(2.0) / (w[1] - w[0])
            })
            .collect()
    }
}

impl<T: Real> Default for PiQuadrature<T> {
    fn default() -> Self {
        Self::new(Self::DEFAULT_ORDER)
    }
}

fn sorted_cuts<T: Real>(a: T, b: T, breakpoints: &[T]) -> Vec<T> {
    let mut cuts: Vec<T> = vec![a, b];
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    cuts.dedup();
    cuts
}

fn clamp_unit<T: Real>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}
