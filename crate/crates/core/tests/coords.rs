use proptest::prelude::*;
use tangleproof::coords::CoordChange;
use tangleproof::{IVec2, Interval};

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-1.2f64..1.2, -0.6f64..0.6).prop_map(|(x, u)| [x, u])
}

proptest! {
    #[test]
    fn float_round_trip(p in point()) {
        let c = CoordChange::default();
        let q = c.inv_f64(c.apply_f64(p));
        prop_assert!((q[0] - p[0]).abs() < 1e-13 && (q[1] - p[1]).abs() < 1e-13);
    }

    #[test]
    fn box_images_enclose_points(p in point(), r in 0.0f64..0.05, t in 0.0f64..=1.0, s in 0.0f64..=1.0) {
        let c = CoordChange::default();
        let b = IVec2::new(Interval::centered(p[0], r), Interval::centered(p[1], r));
        let q = [b.x.lo() + t * (b.x.hi() - b.x.lo()), b.u.lo() + s * (b.u.hi() - b.u.lo())];
        prop_assert!(c.apply(&b).contains_point(c.apply_f64(q)));
        let back = c.apply_inv(&c.apply(&b)).unwrap();
        prop_assert!(back.contains_point(q));
    }

    #[test]
    fn jacobian_has_constant_determinant(p in point(), r in 0.0f64..0.1) {
        let c = CoordChange::default();
        let b = IVec2::new(Interval::centered(p[0], r), Interval::centered(p[1], r));
        prop_assert!(c.jacobian(&b).det().contains(0.55 * 0.55));
        let j = c.jacobian(&b).mul_mat(&c.jacobian_inv_at(&b).unwrap());
        prop_assert!(j.a11.contains(1.0) && j.a12.contains(0.0) && j.a21.contains(0.0) && j.a22.contains(1.0));
    }
}

#[test]
fn identity_is_trivial() {
    let c = CoordChange::identity();
    assert_eq!(c.apply_f64([0.3, -0.2]), [0.3, -0.2]);
}
