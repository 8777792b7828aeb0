//! Fixtures shared by the benchmarks.

use tangleproof::hsets::HSet;
use tangleproof::map::MapHandle;
use tangleproof::tables::{ChainTable, TABLE1};

/// Map of `s*` at `degree` and the Table 1 h-sets.
pub fn fixture(degree: usize) -> (MapHandle, Vec<HSet>) {
    let (_, m) = tangleproof::pipeline::universal_map(degree, 1e-9).expect("fixed point");
    let sets = ChainTable::parse(TABLE1).and_then(|t| t.resolve(None)).expect("table");
    (m, sets)
}
