//! Specular billiard flow inside one periodic cell.
//!
//! A particle enters through the reference line `y = c` at torus position
//! `r` with velocity `(x, -sqrt(1 - x^2))`, reflects specularly off the
//! boundary, re-enters through the opposite side line whenever it crosses
//! `x = 0` or `x = period`, and leaves when it next crosses the reference
//! line upward. `x` is the horizontal velocity component, i.e. the cosine of
//! the angle between the velocity and the reference line.

use std::fmt::Write as _;

use crate::geometry::{BoundaryPiece, Profile};
use crate::scalar::{lit, Real};
use crate::vec2::Vec2;

/// Default cap on boundary collisions in one cell visit.
pub const MAX_COLLISIONS: usize = 10_000;
/// Cap on periodic side crossings in one cell visit.
const MAX_WRAPS: usize = 1_000_000;
/// Deterministic resampling attempts for singular entries.
const MAX_RESAMPLES: usize = 32;

/// Failures of a single trace. `Corner` and `Tangency` are measure-zero
/// events and the entry should be resampled.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("trajectory grazes the boundary near ({x}, {y})")]
    Tangency { x: f64, y: f64 },
    #[error("trajectory hits a corner near ({x}, {y}) on piece {piece}")]
    Corner { x: f64, y: f64, piece: usize },
    #[error("reflection requested for a direction leaving the wall")]
    Incidence,
    #[error("ray from ({x}, {y}) escapes the cell")]
    Leak { x: f64, y: f64 },
    #[error("trajectory exceeded {cap} collisions")]
    NonTerminating { cap: usize },
    #[error("entry state invalid: {0}")]
    InvalidEntry(String),
}

impl TraceError {
    /// Whether the failure is a singular entry that resampling cures.
    pub fn is_singular(&self) -> bool {
        matches!(self, TraceError::Tangency { .. } | TraceError::Corner { .. })
    }
}

fn at<T: Real>(p: Vec2<T>) -> (f64, f64) {
    (p.x.to_f64().unwrap_or(f64::NAN), p.y.to_f64().unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heading {
    Inbound,
    Outbound,
}

/// Crossing of the reference line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState<T> {
    /// Position on the torus `[0, period)`.
    pub r: T,
    /// Horizontal velocity component in `(-1, 1)`.
    pub x: T,
    pub heading: Heading,
}

/// One specular reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision<T> {
    pub point: Vec2<T>,
    pub piece: usize,
    /// Direction after the reflection.
    pub direction: Vec2<T>,
}

/// A full visit to the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrajectory<T> {
    pub entry: ParticleState<T>,
    pub exit: ParticleState<T>,
    pub collisions: Vec<Collision<T>>,
    pub wraps: usize,
}

impl<T: Real> CellTrajectory<T> {
    /// Event table with columns `event,x,y,dx,dy`: the entry point, each
    /// collision, and the exit point, in cell coordinates.
    pub fn to_csv(&self, reference_height: T) -> String {
        let mut out = String::from("event,x,y,dx,dy\n");
        let entry_dir = Vec2::new(self.entry.x, -(T::one() - self.entry.x * self.entry.x).sqrt());
        let _ = writeln!(out, "0,{},{},{},{}", self.entry.r, reference_height, entry_dir.x, entry_dir.y);
        for (i, c) in self.collisions.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", i + 1, c.point.x, c.point.y, c.direction.x, c.direction.y);
        }
        let exit_dir = Vec2::new(self.exit.x, (T::one() - self.exit.x * self.exit.x).sqrt());
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            self.collisions.len() + 1,
            self.exit.r,
            reference_height,
            exit_dir.x,
            exit_dir.y
        );
        out
    }
}

/// Exit data without the collision list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitState<T> {
    pub r: T,
    pub x: T,
    pub collisions: usize,
    pub wraps: usize,
}

/// Which side line a ray crosses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Next event along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hit<T> {
    Boundary { point: Vec2<T>, piece: usize, time: T, normal: Vec2<T> },
    SideWrap { side: Side, time: T },
    ReferenceExit { time: T },
}

/// Specular image `v - 2 <v, n> n` of `direction` about the unit `normal`.
pub fn reflect<T: Real>(direction: Vec2<T>, normal: Vec2<T>) -> Result<Vec2<T>, TraceError> {
    let vn = direction.dot(normal);
    if vn.abs() < T::geometric_tolerance() {
        return Err(TraceError::Tangency { x: f64::NAN, y: f64::NAN });
    }
    if vn > T::zero() {
        return Err(TraceError::Incidence);
    }
    Ok(direction - normal * (vn + vn))
}

/// Earliest event along the ray `origin + t direction` with `t > eps`.
pub fn first_hit<T: Real>(profile: &Profile<T>, origin: Vec2<T>, direction: Vec2<T>) -> Result<Hit<T>, TraceError> {
    next_event(profile, origin, direction, T::geometric_tolerance())
}

struct Candidate<T> {
    time: T,
    point: Vec2<T>,
    piece: usize,
    normal: Vec2<T>,
    corner: bool,
    tangent: bool,
}

fn next_event<T: Real>(profile: &Profile<T>, p: Vec2<T>, v: Vec2<T>, min_time: T) -> Result<Hit<T>, TraceError> {
    let tol = T::geometric_tolerance();
    let len_tol = tol * profile.period().max(T::one());
    let mut best: Option<Candidate<T>> = None;
    for (i, piece) in profile.pieces().iter().enumerate() {
        let cand = match *piece {
            BoundaryPiece::Segment { a, b } => segment_hit(profile, i, a, b, p, v, min_time, len_tol),
            BoundaryPiece::Arc { center, radius, start_angle, sweep } => {
                arc_hit(profile, i, center, radius, start_angle, sweep, p, v, min_time, len_tol)
            }
        };
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|b| c.time < b.time) {
                best = Some(c);
            }
        }
    }

    let period = profile.period();
    let side = if v.x < T::zero() {
        Some((Side::Left, (T::zero() - p.x) / v.x))
    } else if v.x > T::zero() {
        Some((Side::Right, (period - p.x) / v.x))
    } else {
        None
    };
    let reference = if v.y > T::zero() {
        Some(((profile.reference_height() - p.y) / v.y).max(T::zero()))
    } else {
        None
    };

    let t_side = side.map_or(T::infinity(), |s| s.1.max(T::zero()));
    let t_ref = reference.unwrap_or(T::infinity());
    if let Some(c) = best {
        if c.time <= t_side && c.time <= t_ref {
            let (x, y) = at(c.point);
            if c.corner {
                return Err(TraceError::Corner { x, y, piece: c.piece });
            }
            if c.tangent {
                return Err(TraceError::Tangency { x, y });
            }
            return Ok(Hit::Boundary { point: c.point, piece: c.piece, time: c.time, normal: c.normal });
        }
    }
    if t_ref <= t_side && t_ref.is_finite() {
        return Ok(Hit::ReferenceExit { time: t_ref });
    }
    if let Some((s, _)) = side {
        return Ok(Hit::SideWrap { side: s, time: t_side });
    }
    let (x, y) = at(p);
    Err(TraceError::Leak { x, y })
}

#[allow(clippy::too_many_arguments)]
fn segment_hit<T: Real>(
    profile: &Profile<T>,
    index: usize,
    a: Vec2<T>,
    b: Vec2<T>,
    p: Vec2<T>,
    v: Vec2<T>,
    min_time: T,
    len_tol: T,
) -> Option<Candidate<T>> {
    let d = b - a;
    let denom = v.cross(d);
    if denom == T::zero() {
        return None;
    }
    let ap = a - p;
    let t = ap.cross(d) / denom;
    if !(t >= min_time) {
        return None;
    }
    let len = d.norm();
    let u = ap.cross(v) / denom;
    let pos = u * len;
    if pos < -len_tol || pos > len + len_tol {
        return None;
    }
    let normal = d.normalized().perp();
    let vn = v.dot(normal);
    let tangent = vn.abs() < T::geometric_tolerance();
    if vn > T::zero() && !tangent {
        return None;
    }
    let corner = (pos <= len_tol && !profile.smooth_start(index)) || (pos >= len - len_tol && !profile.smooth_end(index));
    let point = if u <= T::zero() {
        a
    } else if u >= T::one() {
        b
    } else {
        p + v * t
    };
    Some(Candidate { time: t, point, piece: index, normal, corner, tangent })
}

#[allow(clippy::too_many_arguments)]
fn arc_hit<T: Real>(
    profile: &Profile<T>,
    index: usize,
    center: Vec2<T>,
    radius: T,
    start_angle: T,
    sweep: T,
    p: Vec2<T>,
    v: Vec2<T>,
    min_time: T,
    len_tol: T,
) -> Option<Candidate<T>> {
    let pc = p - center;
    let half_b = v.dot(pc);
    let c = pc.dot(pc) - radius * radius;
    let mut disc = half_b * half_b - c;
    if disc < T::zero() {
        let clamp = T::geometric_tolerance() * lit(1e-2) * radius * radius;
        if disc < -clamp {
            return None;
        }
        disc = T::zero();
    }
    // Stable roots of t^2 + 2 half_b t + c = 0.
    let q = -(half_b + half_b.signum() * disc.sqrt());
    let (t1, t2) = if q == T::zero() { (T::zero(), T::zero()) } else { (q, c / q) };
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let sign = sweep.signum();
    let length = radius * sweep.abs();
    for t in [lo, hi] {
        if !(t >= min_time) {
            continue;
        }
        let point = p + v * t;
        let rel = point - center;
        let angle = rel.y.atan2(rel.x);
        let pos = crate::geometry::along_sweep(angle - start_angle, sweep) * radius;
        if pos < -len_tol || pos > length + len_tol {
            continue;
        }
        let normal = (center - point) * (sign / rel.norm());
        let vn = v.dot(normal);
        let tangent = vn.abs() < T::geometric_tolerance();
        if vn > T::zero() && !tangent {
            continue;
        }
        let corner =
            (pos <= len_tol && !profile.smooth_start(index)) || (pos >= length - len_tol && !profile.smooth_end(index));
        return Some(Candidate { time: t, point, piece: index, normal, corner, tangent });
    }
    None
}

fn trace_impl<T: Real>(
    profile: &Profile<T>,
    r: T,
    x: T,
    mut on_collision: impl FnMut(Collision<T>),
) -> Result<ExitState<T>, TraceError> {
    if !(x > -T::one() && x < T::one()) {
        return Err(TraceError::InvalidEntry(format!("direction cosine {x} not in (-1, 1)")));
    }
    if !r.is_finite() {
        return Err(TraceError::InvalidEntry(format!("position {r} not finite")));
    }
    let period = profile.period();
    let c = profile.reference_height();
    let mut p = Vec2::new(r - (r / period).floor() * period, c);
    let mut v = Vec2::new(x, -((T::one() - x) * (T::one() + x)).sqrt());
    let mut collisions = 0usize;
    let mut wraps = 0usize;
    let mut min_time = T::zero();
    loop {
        match next_event(profile, p, v, min_time)? {
            Hit::Boundary { point, piece, normal, .. } => {
                v = reflect(v, normal).map_err(|e| match e {
                    TraceError::Tangency { .. } => {
                        let (x, y) = at(point);
                        TraceError::Tangency { x, y }
                    }
                    other => other,
                })?;
                p = point;
                collisions += 1;
                if collisions > MAX_COLLISIONS {
                    return Err(TraceError::NonTerminating { cap: MAX_COLLISIONS });
                }
                on_collision(Collision { point, piece, direction: v });
                min_time = T::geometric_tolerance();
            }
            Hit::SideWrap { side, time } => {
                let y = p.y + v.y * time;
                p = match side {
                    Side::Left => Vec2::new(period, y),
                    Side::Right => Vec2::new(T::zero(), y),
                };
                wraps += 1;
                if wraps > MAX_WRAPS {
                    return Err(TraceError::NonTerminating { cap: MAX_COLLISIONS });
                }
                // A wrap is not a collision; the next boundary hit may be
                // arbitrarily close.
                min_time = T::zero();
            }
            Hit::ReferenceExit { time } => {
                let xe = p.x + v.x * time;
                let mut re = xe - (xe / period).floor() * period;
                if re >= period {
                    re = re - period;
                }
                if !(v.x.abs() < T::one()) {
                    let (x, y) = at(p);
                    return Err(TraceError::Tangency { x, y });
                }
                return Ok(ExitState { r: re, x: v.x, collisions, wraps });
            }
        }
    }
}

/// Traces one visit and records every collision.
pub fn trace_cell<T: Real>(profile: &Profile<T>, r: T, x: T) -> Result<CellTrajectory<T>, TraceError> {
    let mut collisions = Vec::new();
    let exit = trace_impl(profile, r, x, |c| collisions.push(c))?;
    let period = profile.period();
    Ok(CellTrajectory {
        entry: ParticleState { r: r - (r / period).floor() * period, x, heading: Heading::Inbound },
        exit: ParticleState { r: exit.r, x: exit.x, heading: Heading::Outbound },
        collisions,
        wraps: exit.wraps,
    })
}

/// Traces one visit, returning only the exit data.
pub fn trace_exit<T: Real>(profile: &Profile<T>, r: T, x: T) -> Result<ExitState<T>, TraceError> {
    trace_impl(profile, r, x, |_| {})
}

/// Traces from `r`, nudging the entry position deterministically when the
/// trajectory hits a corner or grazes the wall. Returns the exit and the
/// number of rejected attempts.
pub fn trace_exit_resampled<T: Real>(profile: &Profile<T>, r: T, x: T) -> Result<(ExitState<T>, usize), TraceError> {
    let step = lit::<T>(1e-9) * profile.period();
    let mut last = None;
    for attempt in 0..MAX_RESAMPLES {
        let k: T = lit(attempt.div_ceil(2) as f64);
        let offset = if attempt % 2 == 1 { step * k } else { -step * k };
        match trace_exit(profile, r + offset, x) {
            Ok(exit) => return Ok((exit, attempt)),
            Err(e) if e.is_singular() => {
                log::debug!("rejected entry r = {r}, x = {x}: {e}");
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Fraction of single-collision visits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionFraction<T> {
    pub fraction: T,
    pub samples: usize,
    pub rejections: usize,
}

/// Fraction of `n` evenly spaced entry positions `(k + 1/2) period / n`
/// whose visit with direction cosine `x` has exactly one collision.
pub fn single_collision_fraction<T: Real>(
    profile: &Profile<T>,
    x: T,
    n: usize,
) -> Result<CollisionFraction<T>, TraceError> {
    if n == 0 {
        return Err(TraceError::InvalidEntry("sample count must be positive".into()));
    }
    let period = profile.period();
    let nf: T = lit(n as f64);
    let mut single = 0usize;
    let mut rejections = 0usize;
    for k in 0..n {
        let r = (lit::<T>(k as f64) + lit(0.5)) * period / nf;
        let (exit, rej) = trace_exit_resampled(profile, r, x)?;
        rejections += rej;
        if exit.collisions == 1 {
            single += 1;
        }
    }
    Ok(CollisionFraction { fraction: lit::<T>(single as f64) / nf, samples: n, rejections })
}
