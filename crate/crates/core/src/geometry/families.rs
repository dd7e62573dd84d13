//! Built-in cell families. All use period 1; arcs are cups hanging below
//! their chord, so the gas sees them as concave.

use super::{BoundaryPiece, FamilySpec, GeometryError, Profile};
use crate::scalar::{lit, Real};
use crate::vec2::Vec2;

pub const DEFAULT_K_BIG: f64 = 2.0;
pub const DEFAULT_K_SMALL: f64 = 1.0;
pub const DEFAULT_WALL_RADIUS: f64 = 0.5;

fn param_err<T: Real>(name: &'static str, value: T, allowed: &'static str) -> GeometryError {
    GeometryError::Parameter { name, value: value.to_f64().unwrap_or(f64::NAN), allowed }
}

/// Circle below the chord `[x0, x1]` at height `rim`, with radius `radius`.
/// Returns the center and the half-angle subtended by the chord.
fn cup_circle<T: Real>(x0: T, x1: T, rim: T, radius: T) -> (Vec2<T>, T) {
    let half = (x1 - x0) / lit(2.0);
    let phi = (half / radius).min(T::one()).asin();
    let center = Vec2::new(x0 + half, rim + radius * phi.cos());
    (center, phi)
}

fn cup<T: Real>(x0: T, x1: T, rim: T, radius: T) -> BoundaryPiece<T> {
    let (center, phi) = cup_circle(x0, x1, rim, radius);
    let bottom = T::PI() + T::FRAC_PI_2();
    BoundaryPiece::arc(center, radius, bottom - phi, phi + phi)
}

fn check_curvature<T: Real>(name: &'static str, k: T) -> Result<(), GeometryError> {
    if k > T::zero() && k <= lit(2.0) {
        Ok(())
    } else {
        Err(param_err(name, k, "(0, 2]"))
    }
}

/// Circular bumps of curvature `K = period / R` over the whole opening.
pub fn make_bumps<T: Real>(k: T) -> Result<Profile<T>, GeometryError> {
    check_curvature("K", k)?;
    let radius = T::one() / k;
    let pieces = vec![cup(T::zero(), T::one(), T::zero(), radius)];
    Profile::new(pieces, T::one(), FamilySpec::Bumps { k: k.to_f64().unwrap_or(f64::NAN) })
}

/// Semicircular bump of diameter `alpha` centred in the opening, flanked by
/// flat segments of total length `1 - alpha`.
pub fn make_mixture<T: Real>(alpha: T) -> Result<Profile<T>, GeometryError> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(param_err("alpha", alpha, "(0, 1]"));
    }
    let half: T = lit(0.5);
    let left = half - alpha * half;
    let right = half + alpha * half;
    let mut pieces = Vec::with_capacity(3);
    if left > T::zero() {
        pieces.push(BoundaryPiece::segment(Vec2::new(T::zero(), T::zero()), Vec2::new(left, T::zero())));
    }
    pieces.push(BoundaryPiece::arc(Vec2::new(half, T::zero()), alpha * half, T::PI(), T::PI()));
    if right < T::one() {
        pieces.push(BoundaryPiece::segment(Vec2::new(right, T::zero()), Vec2::new(T::one(), T::zero())));
    }
    Profile::new(pieces, T::one(), FamilySpec::Mixture { alpha: alpha.to_f64().unwrap_or(f64::NAN) })
}

/// A single horizontal wall.
pub fn make_flat<T: Real>() -> Result<Profile<T>, GeometryError> {
    let pieces = vec![BoundaryPiece::segment(Vec2::new(T::zero(), T::zero()), Vec2::new(T::one(), T::zero()))];
    Profile::new(pieces, T::one(), FamilySpec::Flat)
}

/// Two cups of width 1/2 each: one of curvature `k_big` centred in the
/// opening with its rim at height 0, and one of curvature `k_small` split
/// across the cell edges with its rim raised by `d`. Vertical steps of
/// height `|d|` join the rims. Curvatures are relative to each cup's own
/// chord, `K = chord / R`.
///
/// `d < 0` lowers the `k_small` cup and exposes the `k_big` one. Steps
/// taller than the period (`|d| > 1`) are rejected.
pub fn make_two_bumps<T: Real>(d: T, k_big: T, k_small: T) -> Result<Profile<T>, GeometryError> {
    check_curvature("K_big", k_big)?;
    check_curvature("K_small", k_small)?;
    if !(d.abs() <= T::one()) {
        return Err(param_err("d", d, "[-1, 1]"));
    }
    let half: T = lit(0.5);
    let quarter: T = lit(0.25);
    let r_small = half / k_small;
    let (c_right, phi) = cup_circle(-quarter, quarter, d, r_small);
    let (c_left, _) = cup_circle(T::one() - quarter, T::one() + quarter, d, r_small);
    let bottom = T::PI() + T::FRAC_PI_2();

    let mut pieces = Vec::with_capacity(5);
    let b_right = BoundaryPiece::arc(c_right, r_small, bottom, phi);
    let step_x = b_right.end().x;
    pieces.push(b_right);
    if d != T::zero() {
        pieces.push(BoundaryPiece::segment(Vec2::new(step_x, d), Vec2::new(step_x, T::zero())));
    }
    let a = cup(quarter, T::one() - quarter, T::zero(), half / k_big);
    let step_x = a.end().x;
    pieces.push(a);
    if d != T::zero() {
        pieces.push(BoundaryPiece::segment(Vec2::new(step_x, T::zero()), Vec2::new(step_x, d)));
    }
    pieces.push(BoundaryPiece::arc(c_left, r_small, bottom - phi, phi));
    let tag = FamilySpec::TwoBumps {
        d: d.to_f64().unwrap_or(f64::NAN),
        k_big: k_big.to_f64().unwrap_or(f64::NAN),
        k_small: k_small.to_f64().unwrap_or(f64::NAN),
    };
    Profile::new(pieces, T::one(), tag)
}

/// Cup of radius `radius` over the middle `1 - w` of the opening, with a
/// flat-topped wall of total width `w` split between the two cell edges.
/// The wall top sits at height `d` relative to the cup rims and joins them
/// through vertical sides. `w = 0` is the plain bumps cell with
/// `K = 1 / radius`.
pub fn make_bumps_with_wall<T: Real>(w: T, d: T, radius: T) -> Result<Profile<T>, GeometryError> {
    if !(w >= T::zero() && w < T::one()) {
        return Err(param_err("w", w, "[0, 1)"));
    }
    if !(d.abs() <= T::one()) {
        return Err(param_err("d", d, "[-1, 1]"));
    }
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(param_err("R", radius, "(0, inf)"));
    }
    let chord = T::one() - w;
    if chord > radius + radius {
        return Err(param_err("R", radius, "[(1 - w)/2, inf): cup wider than its circle"));
    }
    let x0 = w / lit(2.0);
    let x1 = T::one() - x0;
    let mut pieces = Vec::with_capacity(5);
    if w > T::zero() {
        pieces.push(BoundaryPiece::segment(Vec2::new(T::zero(), d), Vec2::new(x0, d)));
        if d != T::zero() {
            pieces.push(BoundaryPiece::segment(Vec2::new(x0, d), Vec2::new(x0, T::zero())));
        }
    }
    pieces.push(cup(x0, x1, T::zero(), radius));
    if w > T::zero() {
        if d != T::zero() {
            pieces.push(BoundaryPiece::segment(Vec2::new(x1, T::zero()), Vec2::new(x1, d)));
        }
        pieces.push(BoundaryPiece::segment(Vec2::new(x1, d), Vec2::new(T::one(), d)));
    }
    let tag = FamilySpec::BumpsWithWall {
        w: w.to_f64().unwrap_or(f64::NAN),
        d: d.to_f64().unwrap_or(f64::NAN),
        r: radius.to_f64().unwrap_or(f64::NAN),
    };
    Profile::new(pieces, T::one(), tag)
}
