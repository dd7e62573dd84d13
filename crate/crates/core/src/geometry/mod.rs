//! Periodic billiard cells built from circular arcs and line segments.
//!
//! Coordinates are dimensionless. A cell spans `0 <= x <= period`; the
//! boundary is an ordered chain of pieces running from `x = 0` to
//! `x = period` with the gas on its left, so the inward normal is the
//! counter-clockwise rotation of the unit tangent. The reference line sits
//! at `y = y_max`, the supremum of the boundary height.

mod config;
mod families;

pub use config::{FamilySpec, PieceSpec};
pub use families::{
    make_bumps, make_bumps_with_wall, make_flat, make_mixture, make_two_bumps, DEFAULT_K_BIG,
    DEFAULT_K_SMALL, DEFAULT_WALL_RADIUS,
};

use crate::quadrature::adaptive_gauss_kronrod;
use crate::scalar::{count, lit, Real};
use crate::vec2::Vec2;

/// Geometry construction and query failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("parameter {name} = {value} outside {allowed}")]
    Parameter { name: &'static str, value: f64, allowed: &'static str },
    #[error("invalid piece {index}: {reason}")]
    InvalidPiece { index: usize, reason: String },
    #[error("pieces {index} and {next} do not join (gap {gap:e})")]
    Discontinuous { index: usize, next: usize, gap: f64 },
    #[error("boundary does not close over one period: end - start = ({dx}, {dy})")]
    NotPeriodic { dx: f64, dy: f64 },
    #[error("piece {index} leaves the cell strip 0 <= x <= period")]
    OutsideStrip { index: usize },
    #[error("boundary is not a simple curve: pieces {first} and {second} intersect")]
    SelfIntersection { first: usize, second: usize },
    #[error("point ({x}, {y}) is a corner of the boundary")]
    Corner { x: f64, y: f64 },
    #[error("point ({x}, {y}) is not on the boundary")]
    NotOnBoundary { x: f64, y: f64 },
    #[error("piece index {0} out of range")]
    NoSuchPiece(usize),
}

/// One smooth piece of the cell boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPiece<T> {
    /// Points `center + radius (cos t, sin t)` for `t` from `start_angle` to
    /// `start_angle + sweep`; the sign of `sweep` sets the direction of travel.
    Arc { center: Vec2<T>, radius: T, start_angle: T, sweep: T },
    Segment { a: Vec2<T>, b: Vec2<T> },
}

impl<T: Real> BoundaryPiece<T> {
    pub fn arc(center: Vec2<T>, radius: T, start_angle: T, sweep: T) -> Self {
        BoundaryPiece::Arc { center, radius, start_angle, sweep }
    }

    pub fn segment(a: Vec2<T>, b: Vec2<T>) -> Self {
        BoundaryPiece::Segment { a, b }
    }

    fn validate(&self, index: usize) -> Result<(), GeometryError> {
        let bad = |reason: &str| Err(GeometryError::InvalidPiece { index, reason: reason.into() });
        match *self {
            BoundaryPiece::Arc { center, radius, start_angle, sweep } => {
                let finite = [center.x, center.y, radius, start_angle, sweep].iter().all(|v| v.is_finite());
                if !finite {
                    return bad("non-finite arc data");
                }
                if !(radius > T::zero()) {
                    return bad("arc radius must be positive");
                }
                if sweep == T::zero() {
                    return bad("arc sweep must be nonzero");
                }
                if sweep.abs() > T::TAU() {
                    return bad("arc sweep exceeds a full turn");
                }
                Ok(())
            }
            BoundaryPiece::Segment { a, b } => {
                if ![a.x, a.y, b.x, b.y].iter().all(|v| v.is_finite()) {
                    return bad("non-finite segment endpoint");
                }
                if a == b {
                    return bad("segment endpoints coincide");
                }
                Ok(())
            }
        }
    }

    /// Point at local parameter `s` in `[0, 1]`.
    pub fn point_at(&self, s: T) -> Vec2<T> {
        match *self {
            BoundaryPiece::Arc { center, radius, start_angle, sweep } => {
                let t = start_angle + sweep * s;
                Vec2::new(center.x + radius * t.cos(), center.y + radius * t.sin())
            }
            BoundaryPiece::Segment { a, b } => a + (b - a) * s,
        }
    }

    pub fn start(&self) -> Vec2<T> {
        self.point_at(T::zero())
    }

    pub fn end(&self) -> Vec2<T> {
        self.point_at(T::one())
    }

    pub fn length(&self) -> T {
        match *self {
            BoundaryPiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
            BoundaryPiece::Segment { a, b } => a.distance(b),
        }
    }

    /// Inward unit normal at local parameter `s`.
    pub fn normal_at(&self, s: T) -> Vec2<T> {
        match *self {
            BoundaryPiece::Arc { start_angle, sweep, .. } => {
                let t = start_angle + sweep * s;
                let sign = sweep.signum();
                Vec2::new(-sign * t.cos(), -sign * t.sin())
            }
            BoundaryPiece::Segment { a, b } => (b - a).normalized().perp(),
        }
    }

    /// `dx/ds` for the local parameter.
    fn dx_ds(&self, s: T) -> T {
        match *self {
            BoundaryPiece::Arc { radius, start_angle, sweep, .. } => {
                -radius * sweep * (start_angle + sweep * s).sin()
            }
            BoundaryPiece::Segment { a, b } => b.x - a.x,
        }
    }

    pub fn is_vertical_segment(&self) -> bool {
        matches!(*self, BoundaryPiece::Segment { a, b } if a.x == b.x)
    }

    /// Highest point of the piece.
    fn y_sup(&self) -> T {
        let ends = self.start().y.max(self.end().y);
        match *self {
            BoundaryPiece::Arc { center, radius, start_angle, sweep } => {
                if angle_in_sweep(T::FRAC_PI_2(), start_angle, sweep) {
                    center.y + radius
                } else {
                    ends
                }
            }
            BoundaryPiece::Segment { .. } => ends,
        }
    }

    /// Horizontal extent of the piece.
    fn x_range(&self) -> (T, T) {
        let (mut lo, mut hi) = (self.start().x.min(self.end().x), self.start().x.max(self.end().x));
        if let BoundaryPiece::Arc { center, radius, start_angle, sweep } = *self {
            if angle_in_sweep(T::zero(), start_angle, sweep) {
                hi = hi.max(center.x + radius);
            }
            if angle_in_sweep(T::PI(), start_angle, sweep) {
                lo = lo.min(center.x - radius);
            }
        }
        (lo, hi)
    }

    /// Mirror image through the vertical line `x = period / 2`, traversed
    /// in the opposite direction so the mirrored chain still runs left to
    /// right.
    pub fn mirrored(&self, period: T) -> Self {
        match *self {
            BoundaryPiece::Arc { center, radius, start_angle, sweep } => BoundaryPiece::Arc {
                center: Vec2::new(period - center.x, center.y),
                radius,
                start_angle: T::PI() - (start_angle + sweep),
                sweep,
            },
            BoundaryPiece::Segment { a, b } => BoundaryPiece::Segment {
                a: Vec2::new(period - b.x, b.y),
                b: Vec2::new(period - a.x, a.y),
            },
        }
    }

    /// Local parameter of the point on this piece closest to `p`, with the
    /// distance to it. Arcs clamp to their angular range.
    pub fn project(&self, p: Vec2<T>) -> (T, T) {
        let s = match *self {
            BoundaryPiece::Arc { center, start_angle, sweep, .. } => {
                let d = p - center;
                let ang = d.y.atan2(d.x);
                (along_sweep(ang - start_angle, sweep) / sweep.abs()).max(T::zero()).min(T::one())
            }
            BoundaryPiece::Segment { a, b } => {
                let ab = b - a;
                ((p - a).dot(ab) / ab.dot(ab)).max(T::zero()).min(T::one())
            }
        };
        (s, self.point_at(s).distance(p))
    }
}

/// Angle offset of `delta` along the direction of `sweep`, reduced to the
/// window of width `2 pi` centred on the arc's midpoint. Values in
/// `[0, |sweep|]` lie on the arc.
pub(crate) fn along_sweep<T: Real>(delta: T, sweep: T) -> T {
    let tau = T::TAU();
    let half = sweep.abs() / lit(2.0);
    let mut r = (delta * sweep.signum() - half) % tau;
    if r < -T::PI() {
        r = r + tau;
    } else if r >= T::PI() {
        r = r - tau;
    }
    r + half
}

fn angle_in_sweep<T: Real>(angle: T, start: T, sweep: T) -> bool {
    let tau = T::TAU();
    let mut rel = ((angle - start) * sweep.signum()) % tau;
    if rel < T::zero() {
        rel = rel + tau;
    }
    rel <= sweep.abs()
}

/// Built-in family and its parameters, kept with a profile for provenance.
pub type FamilyTag = FamilySpec;

/// One period of a periodic cell boundary.
#[derive(Debug, Clone)]
pub struct Profile<T> {
    pieces: Vec<BoundaryPiece<T>>,
    period: T,
    symmetric: bool,
    y_max: T,
    family: FamilyTag,
    /// `smooth_end[i]`: whether piece `i` meets its successor (cyclically,
    /// across the period boundary) with a continuous normal.
    smooth_end: Vec<bool>,
}

/// A location on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint<T> {
    /// Local parameter `s` in `[0, 1]` on piece `index`. Endpoints evaluate
    /// the one-sided normal of that piece.
    Piece { index: usize, s: T },
    /// Cartesian position; rejected at non-smooth junctions.
    Position(Vec2<T>),
}

/// Value of the flatness parameter and its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessResult<T> {
    pub h: T,
    pub quadrature_error_estimate: T,
    /// Vertical segments skipped because they have no horizontal extent.
    pub vertical_pieces_skipped: usize,
}

impl<T: Real> Profile<T> {
    /// Validates and assembles a cell boundary.
    pub fn new(pieces: Vec<BoundaryPiece<T>>, period: T, family: FamilyTag) -> Result<Self, GeometryError> {
        if !(period > T::zero()) || !period.is_finite() {
            return Err(GeometryError::Parameter {
                name: "period",
                value: period.to_f64().unwrap_or(f64::NAN),
                allowed: "(0, inf)",
            });
        }
        if pieces.is_empty() {
            return Err(GeometryError::InvalidPiece { index: 0, reason: "no pieces".into() });
        }
        let tol = T::geometric_tolerance() * period.max(T::one());
        for (i, p) in pieces.iter().enumerate() {
            p.validate(i)?;
        }
        for i in 0..pieces.len() - 1 {
            let gap = pieces[i].end().distance(pieces[i + 1].start());
            if gap > tol {
                return Err(GeometryError::Discontinuous {
                    index: i,
                    next: i + 1,
                    gap: gap.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let first = pieces[0].start();
        let last = pieces[pieces.len() - 1].end();
        let (dx, dy) = (last.x - first.x - period, last.y - first.y);
        if dx.abs() > tol || dy.abs() > tol || first.x.abs() > tol {
            return Err(GeometryError::NotPeriodic {
                dx: (last.x - first.x).to_f64().unwrap_or(f64::NAN),
                dy: dy.to_f64().unwrap_or(f64::NAN),
            });
        }
        for (i, p) in pieces.iter().enumerate() {
            let (lo, hi) = p.x_range();
            if lo < -tol || hi > period + tol {
                return Err(GeometryError::OutsideStrip { index: i });
            }
        }
        check_simple(&pieces, period)?;

        let y_max = pieces.iter().map(|p| p.y_sup()).fold(T::neg_infinity(), T::max);
        let normal_tol = lit::<T>(1e3) * T::geometric_tolerance();
        let n = pieces.len();
        let smooth_end = (0..n)
            .map(|i| {
                let a = pieces[i].normal_at(T::one());
                let b = pieces[(i + 1) % n].normal_at(T::zero());
                (a - b).norm() <= normal_tol
            })
            .collect();
        let mut profile = Profile { pieces, period, symmetric: false, y_max, family, smooth_end };
        profile.symmetric = profile.detect_symmetry();
        Ok(profile)
    }

    pub fn pieces(&self) -> &[BoundaryPiece<T>] {
        &self.pieces
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    /// Highest boundary point; also the height of the reference line.
    pub fn y_max(&self) -> T {
        self.y_max
    }

    pub fn reference_height(&self) -> T {
        self.y_max
    }

    pub fn family(&self) -> &FamilyTag {
        &self.family
    }

    /// Whether the end of piece `i` joins the next piece smoothly.
    pub fn smooth_end(&self, i: usize) -> bool {
        self.smooth_end[i]
    }

    /// Whether the start of piece `i` joins the previous piece smoothly.
    pub fn smooth_start(&self, i: usize) -> bool {
        let n = self.pieces.len();
        self.smooth_end[(i + n - 1) % n]
    }

    fn detect_symmetry(&self) -> bool {
        let n = self.pieces.len();
        let tol = lit::<T>(1e3) * T::geometric_tolerance() * self.period.max(T::one());
        let probes = [0.0, 0.25, 0.5, 0.75, 1.0];
        (0..n).all(|i| {
            let mirror = self.pieces[n - 1 - i].mirrored(self.period);
            probes.iter().all(|&s| {
                let s: T = lit(s);
                self.pieces[i].point_at(s).distance(mirror.point_at(s)) <= tol
            })
        })
    }

    /// Walks the chain and returns the displacement from its start to its end.
    pub fn chain_displacement(&self) -> Vec2<T> {
        self.pieces[self.pieces.len() - 1].end() - self.pieces[0].start()
    }

    /// Flatness `h`: the mean over one period of the squared horizontal
    /// component of the unit normal, `(1/period) int n_x^2 |dx|`.
    ///
    /// For graph profiles this is `int F'^2 / (1 + F'^2) dr` over the torus
    /// of unit length. Vertical segments contribute nothing.
    pub fn flatness_h(&self) -> FlatnessResult<T> {
        let tol: T = lit::<T>(1e-13).max(T::epsilon() * lit(16.0));
        let mut h = T::zero();
        let mut err = T::zero();
        let mut skipped = 0;
        for p in &self.pieces {
            if p.is_vertical_segment() {
                skipped += 1;
                continue;
            }
            let r = match *p {
                BoundaryPiece::Segment { .. } => {
                    let nx = p.normal_at(T::zero()).x;
                    let v = nx * nx * p.dx_ds(T::zero()).abs();
                    h = h + v;
                    continue;
                }
                BoundaryPiece::Arc { .. } => adaptive_gauss_kronrod(
                    |s: T| {
                        let nx = p.normal_at(s).x;
                        nx * nx * p.dx_ds(s).abs()
                    },
                    T::zero(),
                    T::one(),
                    tol,
                    500,
                ),
            };
            h = h + r.value;
            err = err + r.error_estimate;
        }
        FlatnessResult {
            h: h / self.period,
            quadrature_error_estimate: err / self.period,
            vertical_pieces_skipped: skipped,
        }
    }

    /// Inward unit normal at a boundary point.
    pub fn normal_at(&self, point: BoundaryPoint<T>) -> Result<Vec2<T>, GeometryError> {
        match point {
            BoundaryPoint::Piece { index, s } => {
                let piece = self.pieces.get(index).ok_or(GeometryError::NoSuchPiece(index))?;
                if !(s >= T::zero() && s <= T::one()) {
                    return Err(GeometryError::Parameter {
                        name: "s",
                        value: s.to_f64().unwrap_or(f64::NAN),
                        allowed: "[0, 1]",
                    });
                }
                Ok(piece.normal_at(s))
            }
            BoundaryPoint::Position(p) => {
                let (index, s) = self.locate(p)?;
                Ok(self.pieces[index].normal_at(s))
            }
        }
    }

    /// Piece and local parameter of a boundary position. Positions within
    /// tolerance of a non-smooth junction are corners.
    pub fn locate(&self, p: Vec2<T>) -> Result<(usize, T), GeometryError> {
        let tol = lit::<T>(1e-9) * self.period.max(T::one());
        let pos = Vec2::new(p.x - (p.x / self.period).floor() * self.period, p.y);
        let corner = || GeometryError::Corner {
            x: p.x.to_f64().unwrap_or(f64::NAN),
            y: p.y.to_f64().unwrap_or(f64::NAN),
        };
        let mut best: Option<(usize, T, T)> = None;
        for shift in [T::zero(), self.period, -self.period] {
            let q = Vec2::new(pos.x + shift, pos.y);
            for (i, piece) in self.pieces.iter().enumerate() {
                let (s, d) = piece.project(q);
                if d <= tol && best.is_none_or(|b| d < b.2) {
                    best = Some((i, s, d));
                }
            }
        }
        let (i, s, _) = best.ok_or(GeometryError::NotOnBoundary {
            x: p.x.to_f64().unwrap_or(f64::NAN),
            y: p.y.to_f64().unwrap_or(f64::NAN),
        })?;
        let along = self.pieces[i].length();
        if (s * along <= tol && !self.smooth_start(i)) || ((T::one() - s) * along <= tol && !self.smooth_end(i)) {
            return Err(corner());
        }
        Ok((i, s))
    }

    /// Boundary point above abscissa `r` for graph profiles: the piece that
    /// covers `r` with nonzero horizontal extent, and the local parameter.
    pub fn point_at_abscissa(&self, r: T) -> Option<BoundaryPoint<T>> {
        let r = r - (r / self.period).floor() * self.period;
        for (index, piece) in self.pieces.iter().enumerate() {
            if piece.is_vertical_segment() {
                continue;
            }
            let (a, b) = (piece.start().x, piece.end().x);
            let (lo, hi) = (a.min(b), a.max(b));
            if r < lo || r > hi {
                continue;
            }
            let s = match *piece {
                BoundaryPiece::Segment { a, b } => (r - a.x) / (b.x - a.x),
                BoundaryPiece::Arc { center, radius, start_angle, sweep } => {
                    let c = ((r - center.x) / radius).max(-T::one()).min(T::one());
                    // Pick the branch on the swept side of the circle.
                    let mut found = None;
                    for t in [c.acos(), -c.acos()] {
                        let s = along_sweep(t - start_angle, sweep) / sweep.abs();
                        if s >= -T::epsilon() && s <= T::one() + T::epsilon() {
                            found = Some(s.max(T::zero()).min(T::one()));
                            break;
                        }
                    }
                    match found {
                        Some(s) => s,
                        None => continue,
                    }
                }
            };
            return Some(BoundaryPoint::Piece { index, s });
        }
        None
    }

    /// Boundary height `F(r)` for graph profiles.
    pub fn height_at(&self, r: T) -> Option<T> {
        match self.point_at_abscissa(r)? {
            BoundaryPoint::Piece { index, s } => Some(self.pieces[index].point_at(s).y),
            BoundaryPoint::Position(p) => Some(p.y),
        }
    }

    /// Profile with the pieces converted to another scalar type.
    pub fn cast<U: Real>(&self) -> Profile<U> {
        let c = |v: T| U::from_f64(v.to_f64().expect("finite")).expect("representable");
        let cv = |v: Vec2<T>| Vec2::new(c(v.x), c(v.y));
        let pieces = self
            .pieces
            .iter()
            .map(|p| match *p {
                BoundaryPiece::Arc { center, radius, start_angle, sweep } => {
                    BoundaryPiece::Arc { center: cv(center), radius: c(radius), start_angle: c(start_angle), sweep: c(sweep) }
                }
                BoundaryPiece::Segment { a, b } => BoundaryPiece::Segment { a: cv(a), b: cv(b) },
            })
            .collect();
        Profile {
            pieces,
            period: c(self.period),
            symmetric: self.symmetric,
            y_max: c(self.y_max),
            family: self.family.clone(),
            smooth_end: self.smooth_end.clone(),
        }
    }
}

/// Rejects chains whose pieces cross each other (including copies shifted
/// by one period). Pieces are compared as fine polylines; contacts at shared
/// junctions are ignored.
fn check_simple<T: Real>(pieces: &[BoundaryPiece<T>], period: T) -> Result<(), GeometryError> {
    const SAMPLES: usize = 96;
    let n = pieces.len();
    let poly: Vec<Vec<Vec2<T>>> = pieces
        .iter()
        .map(|p| (0..=SAMPLES).map(|k| p.point_at(count::<T>(k) / count::<T>(SAMPLES))).collect())
        .collect();
    let junction_tol = lit::<T>(1e-9) * period.max(T::one());
    for i in 0..n {
        for j in i..n {
            for shift in [T::zero(), period, -period] {
                if i == j && shift == T::zero() {
                    continue;
                }
                let shifted: Vec<Vec2<T>> = poly[j].iter().map(|p| Vec2::new(p.x + shift, p.y)).collect();
                for a in poly[i].windows(2) {
                    for b in shifted.windows(2) {
                        if let Some(x) = segment_crossing(a[0], a[1], b[0], b[1]) {
                            if !is_junction(x, pieces, period, junction_tol) {
                                return Err(GeometryError::SelfIntersection { first: i, second: j });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn is_junction<T: Real>(x: Vec2<T>, pieces: &[BoundaryPiece<T>], period: T, tol: T) -> bool {
    let slack = tol * lit(1e4);
    pieces.iter().any(|p| {
        [p.start(), p.end()].iter().any(|e| {
            [T::zero(), period, -period]
                .iter()
                .any(|&s| Vec2::new(e.x + s, e.y).distance(x) <= slack)
        })
    })
}

/// Intersection point of two closed segments, if any.
fn segment_crossing<T: Real>(p0: Vec2<T>, p1: Vec2<T>, q0: Vec2<T>, q1: Vec2<T>) -> Option<Vec2<T>> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    if denom == T::zero() {
        return None;
    }
    let qp = q0 - p0;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if t >= T::zero() && t <= T::one() && u >= T::zero() && u <= T::one() {
        Some(p0 + r * t)
    } else {
        None
    }
}
