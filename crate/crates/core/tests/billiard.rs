use knudsen_core::billiard::{
    first_hit, reflect, single_collision_fraction, trace_cell, trace_exit, Hit, TraceError,
};
use knudsen_core::geometry::{make_bumps, make_bumps_with_wall, make_flat, make_mixture, make_two_bumps, Profile};
use knudsen_core::vec2::Vec2;
use proptest::prelude::*;

fn cells() -> Vec<Profile<f64>> {
    vec![
        make_bumps(0.2).unwrap(),
        make_bumps(1.0).unwrap(),
        make_bumps(2.0).unwrap(),
        make_mixture(0.5).unwrap(),
        make_two_bumps(-0.2, 2.0, 1.0).unwrap(),
        make_two_bumps(0.25, 2.0, 1.0).unwrap(),
        make_bumps_with_wall(0.3, 0.2, 0.5).unwrap(),
        make_bumps_with_wall(0.4, -0.3, 0.5).unwrap(),
    ]
}

#[test]
fn oblique_reflection_matches_householder() {
    let n = Vec2::<f64>::new(1.0, 1.0).normalized();
    let v = Vec2::<f64>::new(-0.6, -0.8);
    // Householder oracle (I - 2 n n^T) v evaluated componentwise.
    let vn = v.x * n.x + v.y * n.y;
    let want = Vec2::new(v.x - 2.0 * vn * n.x, v.y - 2.0 * vn * n.y);
    let got = reflect(v, n).unwrap();
    assert!((got.x - want.x).abs() < 1e-15 && (got.y - want.y).abs() < 1e-15);
    assert!((got.x - 0.8).abs() < 1e-15 && (got.y - 0.6).abs() < 1e-15, "{got:?}");
    assert!((got.dot(n) + vn).abs() < 1e-15);
    assert!(matches!(reflect(Vec2::new(0.6, 0.8), n), Err(TraceError::Incidence)));
}

#[test]
fn oblique_ray_against_dense_sampling() {
    let cell = make_bumps::<f64>(1.3).unwrap();
    let (center, radius) = match cell.pieces()[0] {
        knudsen_core::geometry::BoundaryPiece::Arc { center, radius, .. } => (center, radius),
        _ => unreachable!(),
    };
    for (ox, dir) in [(0.2, (0.5, -1.0)), (0.9, (-0.7, -0.3)), (0.5, (0.05, -1.0))] {
        let origin = Vec2::new(ox, 0.0);
        let v = Vec2::new(dir.0, dir.1).normalized();
        // March until the point leaves the disc's lower part or the strip.
        let mut t_oracle = None;
        let dt = 1e-6;
        let mut t = 0.0;
        while t < 3.0 {
            let p = origin + v * t;
            if p.distance(center) >= radius && p.y < 0.0 {
                t_oracle = Some(t);
                break;
            }
            if !(0.0..=1.0).contains(&p.x) {
                break;
            }
            t += dt;
        }
        match first_hit(&cell, origin, v).unwrap() {
            Hit::Boundary { time, point, .. } => {
                let want = t_oracle.expect("oracle hit");
                assert!((time - want).abs() < 2e-6, "time {time} vs {want}");
                assert!((point.distance(center) - radius).abs() < 1e-12);
            }
            Hit::SideWrap { .. } => assert!(t_oracle.is_none()),
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[test]
fn flat_cell_is_exact_identity_on_a_grid() {
    let flat = make_flat::<f64>().unwrap();
    for i in 0..200 {
        let x = -1.0 + (i as f64 + 0.5) / 100.0;
        for k in 0..50 {
            let r = (k as f64 + 0.5) / 50.0;
            let t = trace_cell(&flat, r, x).unwrap();
            assert_eq!(t.exit.x, x);
            assert_eq!(t.collisions.len(), 1);
        }
    }
    // Positions on the period boundary are not corners for a flat wall.
    assert_eq!(trace_cell(&flat, 0.0, 0.3).unwrap().exit.x, 0.3);
}

#[test]
fn semicircle_vertical_drop_at_center() {
    let semi = make_bumps::<f64>(2.0).unwrap();
    let t = trace_cell(&semi, 0.5, 0.0).unwrap();
    assert_eq!(t.collisions.len(), 1);
    assert!(t.exit.x.abs() < 1e-15);
    assert!((t.exit.r - 0.5).abs() < 1e-15);
}

#[test]
fn weak_bumps_collide_once() {
    // For K = 0.2 the wall tilts by at most asin(0.1); rays steeper than
    // twice that tilt (|x| < cos(2 asin 0.1) = 0.98) reflect exactly once.
    let cell = make_bumps::<f64>(0.2).unwrap();
    for i in 0..=78 {
        let x = -0.975 + i as f64 * 0.025;
        let f = single_collision_fraction(&cell, x, 400).unwrap();
        assert_eq!(f.fraction, 1.0, "x = {x}");
    }
    let f = single_collision_fraction(&make_bumps::<f64>(0.1).unwrap(), 0.0, 1000).unwrap();
    assert_eq!(f.fraction, 1.0);
}

#[test]
fn semicircle_multiple_collisions_near_grazing() {
    let semi = make_bumps::<f64>(2.0).unwrap();
    let f = single_collision_fraction(&semi, 0.99, 1000).unwrap();
    assert!(f.fraction < 1.0);
    assert!(single_collision_fraction(&semi, 0.5, 0).is_err());
    let flat = make_flat::<f64>().unwrap();
    assert_eq!(single_collision_fraction(&flat, 0.7, 100).unwrap().fraction, 1.0);
}

#[test]
fn speed_is_preserved_along_trajectories() {
    for cell in cells() {
        for i in 0..40 {
            let x = -0.975 + i as f64 * 0.05;
            for k in 0..25 {
                let r = (k as f64 + 0.37) / 25.0;
                let Ok(t) = trace_cell(&cell, r, x) else { continue };
                assert!(!t.collisions.is_empty());
                for c in &t.collisions {
                    assert!((c.direction.norm() - 1.0).abs() < 1e-12);
                }
                assert!(t.exit.x > -1.0 && t.exit.x < 1.0);
            }
        }
    }
}

#[test]
fn walls_with_gaps_at_the_sides_wrap() {
    let cell = make_bumps_with_wall::<f64>(0.4, -0.3, 0.5).unwrap();
    let mut wrapped = 0;
    for k in 0..200 {
        let r = (k as f64 + 0.5) / 200.0;
        if let Ok(t) = trace_cell(&cell, r, -0.9) {
            wrapped += t.wraps;
        }
    }
    assert!(wrapped > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn time_reversal(cell_idx in 0usize..8, r in 0.0f64..1.0, x in -0.99f64..0.99) {
        let cell = &cells()[cell_idx];
        let Ok(forward) = trace_exit(cell, r, x) else { return Ok(()) };
        let Ok(back) = trace_exit(cell, forward.r, -forward.x) else { return Ok(()) };
        prop_assert!((back.x + x).abs() < 1e-9, "x: {} vs {}", back.x, -x);
        let dr = (back.r - r).abs();
        prop_assert!(dr.min(1.0 - dr) < 1e-9, "r: {} vs {}", back.r, r);
        prop_assert_eq!(back.collisions, forward.collisions);
    }

    #[test]
    fn mirror_equivariance(cell_idx in 0usize..8, r in 0.0f64..1.0, x in -0.99f64..0.99) {
        let cell = &cells()[cell_idx];
        let (Ok(a), Ok(b)) = (trace_exit(cell, r, x), trace_exit(cell, 1.0 - r, -x)) else {
            return Ok(());
        };
        prop_assert!((a.x + b.x).abs() < 1e-9);
    }

    #[test]
    fn flat_identity(r in 0.0f64..1.0, x in -0.999999f64..0.999999) {
        let flat = make_flat::<f64>().unwrap();
        let t = trace_exit(&flat, r, x).unwrap();
        prop_assert_eq!(t.x, x);
        prop_assert_eq!(t.collisions, 1);
    }
}

#[test]
fn f32_tracer_agrees_with_f64() {
    let c64 = make_bumps::<f64>(1.0).unwrap();
    let c32 = make_bumps::<f32>(1.0).unwrap();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let r = (k as f64 + 0.5) / 100.0;
        let (Ok(a), Ok(b)) = (trace_exit(&c64, r, 0.3), trace_exit(&c32, r as f32, 0.3f32)) else { continue };
        if a.collisions == b.collisions {
            worst = worst.max((a.x - b.x as f64).abs());
        }
    }
    assert!(worst < 1e-3, "{worst}");
}
