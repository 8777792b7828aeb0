use tangleproof::coords::CoordChange;
use tangleproof::dimension::{
    duarte_constants, thicknesses, verify_horseshoe, ConeFieldSpec, DistortionBundle, HorseshoeSpec, SupDomain,
    SweepOptions,
};
use tangleproof::hsets::ChainOptions;
use tangleproof::toy::AffineHorseshoe;
use tangleproof::Interval;

fn sweep() -> SweepOptions {
    SweepOptions {
        grid: 4,
        max_depth: 4,
        domain: SupDomain::ImageMeetsComponents,
        ..SweepOptions::default()
    }
}

fn bundle(k: f64) -> (AffineHorseshoe, DistortionBundle) {
    let t = AffineHorseshoe::new(k).unwrap();
    let flat = vec![Interval::new(-1e-6, 1e-6); 2];
    let spec = HorseshoeSpec {
        components: t.components.clone(),
        links: t.links(),
        cones: ConeFieldSpec::new(flat.clone()).unwrap(),
        coord: CoordChange::identity(),
        chain: ChainOptions::default(),
        sweep: sweep(),
        slope_splits: 4,
        stable: Some(flat),
    };
    let h = verify_horseshoe(&t.source().unwrap(), &t.map, &spec).unwrap();
    assert_eq!(h.chain.links.len(), 4);
    let r = duarte_constants(&t.map, &CoordChange::identity(), &t.components, &sweep()).unwrap();
    assert!(r.all_ok(), "{:?}", r.clauses);
    let e = t.endpoints();
    let (l, rr) = thicknesses(&e.k0b, &e.k0t, &e.k1b, &e.k1t, 0.0).unwrap();
    let b = DistortionBundle::assemble(&r, l, rr, h.a_minus, 0.0).unwrap();
    (t, b)
}

#[test]
fn full_shift_with_zero_distortion() {
    for k in [3.0, 4.0, 6.0] {
        let (t, b) = bundle(k);
        assert_eq!(b.d, 0.0);
        assert!((b.tau_l - 1.0 / (k - 2.0)).abs() < 1e-9);
        assert!((b.dim_lower.root.value() - t.cantor_dim()).abs() < 1e-6, "k {k}");
        assert!(b.dim_upper >= 2.0 * t.cantor_dim() - 1e-12);
    }
}

#[test]
fn narrow_gap_is_rejected() {
    assert!(AffineHorseshoe::new(2.0).is_err());
}
