mod common;

use tangleproof::hsets::ChainOptions;
use tangleproof::tables::{run_chain, ChainTable, TABLE1, TABLE2, TABLE3, TABLE4, TABLE5};
use tangleproof::Error;

#[test]
fn shipped_tables_parse() {
    let sizes = [(TABLE1, 4, 4), (TABLE2, 12, 13), (TABLE3, 2, 4)];
    for (text, sets, links) in sizes {
        let t = ChainTable::parse(text).unwrap();
        assert_eq!((t.sets.len(), t.links.len()), (sets, links), "{}", t.name);
    }
    for text in [TABLE4, TABLE5] {
        let t = ChainTable::parse(text).unwrap();
        assert!(!t.endpoints.is_empty());
        t.resolve(None).unwrap();
    }
    assert!(ChainTable::parse(TABLE3).unwrap().cone_slopes().is_some());
}

#[test]
fn lambda_images_need_scalings() {
    let t = ChainTable::parse(TABLE2).unwrap();
    assert!(matches!(t.resolve(None), Err(Error::Incomplete(_))));
}

#[test]
fn syntax_errors_carry_a_line() {
    let bad = TABLE1.replacen("power = 2", "power = two", 1);
    let line = bad.lines().position(|l| l.contains("two")).unwrap() + 1;
    match ChainTable::parse(&bad) {
        Err(Error::Parse { line: l, .. }) => assert_eq!(l, line),
        other => panic!("{other:?}"),
    }
    assert!(ChainTable::parse(&TABLE1.replacen("scale", "scael", 1)).is_err());
}

#[test]
fn dangling_links_are_rejected() {
    let bad = format!("{TABLE1}\n[[link]]\nfrom = 0\nto = 9\npower = 1\n");
    assert!(matches!(ChainTable::parse(&bad), Err(Error::Domain(_))));
}

#[test]
fn corrupted_table_reports_its_first_failing_link() {
    let u = common::universal();
    let t = ChainTable::parse(TABLE1).unwrap();
    let mut sets = t.resolve(None).unwrap();
    sets[2].center[0] += 0.05;
    let opts = t.chain_options(&ChainOptions::default()).unwrap();
    let r = run_chain(&t.name, &u.map, &sets, &t.chain_links(), &opts, 0.0);
    assert!(!r.verified);
    let first = r.links.iter().find(|l| !l.ok).unwrap();
    assert_eq!((first.from, first.to), (1, 2));
    assert!(first.error.is_some());
    assert!(r.recentered.is_empty());
}

#[test]
fn recentering_repairs_a_displaced_set() {
    let u = common::universal();
    let t = ChainTable::parse(TABLE1).unwrap();
    let mut sets = t.resolve(None).unwrap();
    let es = sets[1].e_s;
    sets[1].center = [sets[1].center[0] + 0.006 * es[0], sets[1].center[1] + 0.006 * es[1]];
    let opts = t.chain_options(&ChainOptions::default()).unwrap();
    let literal = run_chain(&t.name, &u.map, &sets, &t.chain_links(), &opts, 0.0);
    assert!(!literal.verified);
    let max = 1e-2;
    let r = run_chain(&t.name, &u.map, &sets, &t.chain_links(), &opts, max);
    assert!(r.verified && !r.recentered.is_empty());
    for c in &r.recentered {
        assert!(c.shift[0].hypot(c.shift[1]) <= max * (1.0 + 1e-12));
        let (moved, orig) = (r.sets[c.set].center, sets[c.set].center);
        assert_eq!([orig[0] + c.shift[0], orig[1] + c.shift[1]], moved);
    }
}
