mod common;

use tangleproof::coords::CoordChange;
use tangleproof::dimension::thicknesses;
use tangleproof::hsets::ChainOptions;
use tangleproof::manifold::{enclose_stable_manifold, ManifoldOptions};
use tangleproof::map::{cells_cover_set, find_domain, DomainGrid, Iterate};
use tangleproof::pipeline::{endpoint_chain, endpoints_from_chains};
use tangleproof::tables::{run_chain, ChainReport, ChainTable, TABLE2, TABLE3, TABLE4, TABLE5};
use tangleproof::tangle::assemble_tangle;
use tangleproof::Error;

fn table2() -> ChainReport {
    let u = common::universal();
    let t = ChainTable::parse(TABLE2).unwrap();
    let sets = t.resolve(Some(&u.scalings)).unwrap();
    let opts = t.chain_options(&ChainOptions::default()).unwrap();
    run_chain(&t.name, &u.map, &sets, &t.chain_links(), &opts, 0.0)
}

#[test]
fn heteroclinic_chain_and_tangle() {
    let u = common::universal();
    let r = table2();
    assert!(r.verified, "{:?}", r.links.iter().find(|l| !l.ok));
    let p0 = u.map.fixed_point().unwrap().p0;
    let t = assemble_tangle(&r, &u.scalings, &p0, 1, 1).unwrap();
    assert_eq!(t.matrix, vec![vec![1, 1, 0], vec![1, 1, 1], vec![0, 1, 1]]);
    assert_eq!(t.points.iter().map(|p| p.period).collect::<Vec<_>>(), vec![1, 1, 2]);
    assert!(t.reach > p0.x.hi() && t.approach < p0.x.lo());
    assert_eq!(assemble_tangle(&r, &u.scalings, &p0, 0, 0).unwrap().matrix, vec![vec![1]]);
    let big = assemble_tangle(&r, &u.scalings, &p0, 3, 4).unwrap();
    assert!(big.reach > t.reach && big.approach < t.approach);

    let mut broken = r.clone();
    broken.verified = false;
    broken.links[3].ok = false;
    assert!(matches!(assemble_tangle(&broken, &u.scalings, &p0, 1, 1), Err(Error::Incomplete(_))));
}

#[test]
fn endpoint_chains_give_positive_thickness() {
    let u = common::universal();
    let tabs = [ChainTable::parse(TABLE4).unwrap(), ChainTable::parse(TABLE5).unwrap()];
    let runs: Vec<ChainReport> = tabs
        .iter()
        .map(|t| endpoint_chain(&u.map, t, &ChainOptions::default(), 0.0).unwrap())
        .collect();
    assert!(runs.iter().all(|r| r.verified));
    let g = Iterate::new(&u.map, 3);
    let refs: Vec<_> = tabs.iter().zip(&runs).collect();
    let k = endpoints_from_chains(&g, &CoordChange::default(), &refs).unwrap();
    let (l, r) = thicknesses(&k.k0b, &k.k0t, &k.k1b, &k.k1t, 0.95).unwrap();
    // frozen from the first build
    assert!((l - 0.0401619).abs() < 1e-6, "tau_L {l}");
    assert!((r - 0.0393182).abs() < 1e-6, "tau_R {r}");
}

#[test]
fn stable_manifold_cover() {
    let u = common::universal();
    let fp = u.map.fixed_point().unwrap();
    let opts = ManifoldOptions {
        seed_count: 12,
        depth: 6,
        ..ManifoldOptions::default()
    };
    let c = enclose_stable_manifold(&u.map, &fp, &CoordChange::default(), &opts).unwrap();
    assert_eq!(c.boxes.len(), 1 + 12 * 7);
    assert_eq!(c.seed_boxes(3).len(), 7);
    assert!(c.to_csv().lines().count() > c.boxes.len());
}

#[test]
fn domain_contains_the_horseshoe_components() {
    let u = common::universal();
    let grid = DomainGrid {
        x: (0.4, 0.9),
        u: (-0.2, 0.2),
        nx: 10,
        nu: 8,
        power: 3,
        refine: 3,
    };
    let cells = find_domain(&u.map, &grid);
    let t = ChainTable::parse(TABLE3).unwrap();
    let sets = t.resolve(None).unwrap();
    assert!(cells_cover_set(&cells, &sets[0]));
    let empty = DomainGrid { nx: 0, ..grid };
    assert!(find_domain(&u.map, &empty).is_empty());
}
