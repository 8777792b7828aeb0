mod common;

use common::{distortion_exact, encloses_exact};
use proptest::prelude::*;
use tangleproof::dimension::{dim_lower, dim_upper, duarte_distortion, thicknesses};
use tangleproof::{Error, IVec2, Interval};

/// Root of `2τ^d = (1 + 2τ)^d`, i.e. `ln 2 / ln(2 + 1/τ)`.
fn symmetric_root(tau: f64) -> f64 {
    2f64.ln() / (2.0 + 1.0 / tau).ln()
}

fn pt(x: f64, u: f64) -> IVec2 {
    IVec2::new(Interval::point(x), Interval::point(u))
}

#[test]
fn cantor_roots() {
    for tau in [1.0, 0.5, 0.25] {
        let d = dim_lower(tau, tau, 0.0).unwrap();
        assert!((d.root.value() - symmetric_root(tau)).abs() < 1e-10, "tau {tau}");
    }
}

#[test]
fn thickness_of_unit_bridges() {
    // bridges [0, 1] and [2, 3] on a line, gap 1
    let (l, r) = thicknesses(&pt(2.0, 0.0), &pt(3.0, 0.0), &pt(0.0, 0.0), &pt(1.0, 0.0), 0.0).unwrap();
    assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
}

#[test]
fn overlapping_endpoints_are_rejected() {
    let a = IVec2::new(Interval::new(0.0, 1.0), Interval::ZERO);
    let e = thicknesses(&a, &pt(3.0, 0.0), &a, &pt(1.5, 0.0), 0.5);
    assert!(matches!(e, Err(Error::Order(_))));
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(dim_lower(0.0, 1.0, 0.0).is_err());
    assert!(dim_lower(1.0, 1.0, f64::INFINITY).is_err());
    assert!(dim_upper(1.0).is_err());
}

proptest! {
    #[test]
    fn distortion_encloses_exact_value(c in 0.0f64..100.0, e in 0.0f64..1.0, g in 0.0f64..100.0) {
        prop_assert!(encloses_exact(duarte_distortion(c, e, g), &distortion_exact(c, e, g)));
    }

    #[test]
    fn upper_bound_dominates(a in 1.01f64..100.0) {
        let u = dim_upper(a).unwrap();
        prop_assert!(u >= 4f64.ln() / a.ln() && u <= 4f64.ln() / a.ln() * (1.0 + 1e-12));
    }

    #[test]
    fn thickness_is_symmetric_and_scale_free(
        a in 0.1f64..1.0, g in 0.1f64..1.0, b in 0.1f64..1.0, k in 0.1f64..10.0, lip in 0.0f64..1.0
    ) {
        // k1 bridge [0, a], gap g, k0 bridge of length b
        let (l, r) = thicknesses(&pt(a + g, 0.0), &pt(a + g + b, 0.0), &pt(0.0, 0.0), &pt(a, 0.0), lip).unwrap();
        let (ls, rs) = thicknesses(
            &pt(k * (a + g), 0.0), &pt(k * (a + g + b), 0.0), &pt(0.0, 0.0), &pt(k * a, 0.0), lip,
        ).unwrap();
        prop_assert!((l - ls).abs() <= 1e-9 * l && (r - rs).abs() <= 1e-9 * r);
        // mirrored line swaps the two bridges
        let (ml, mr) = thicknesses(&pt(b + g, 0.0), &pt(a + g + b, 0.0), &pt(0.0, 0.0), &pt(b, 0.0), lip).unwrap();
        prop_assert!((ml - r).abs() <= 1e-9 * r.max(1e-300) && (mr - l).abs() <= 1e-9 * l.max(1e-300));
        let stretch = (1.0 + lip * lip).sqrt();
        prop_assert!(l <= b / g / stretch * (1.0 + 1e-12) && r <= a / g / stretch * (1.0 + 1e-12));
    }

    #[test]
    fn lower_bound_shrinks_with_distortion(tl in 0.01f64..2.0, tr in 0.01f64..2.0, d in 0.0f64..50.0) {
        let a = dim_lower(tl, tr, d).unwrap();
        let b = dim_lower(tl, tr, d + 1.0).unwrap();
        prop_assert!(a.root.ln >= b.root.ln && a.closed_form.ln >= b.closed_form.ln);
        prop_assert!(a.root.value() > 0.0 && a.root.value() < 1.0);
        prop_assert!(a.closed_form.ln <= a.root.ln + 1e-12);
    }
}
