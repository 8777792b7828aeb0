//! End-to-end steps shared by the command line driver and the tests.

use serde::{Deserialize, Serialize};

use crate::coords::CoordChange;
use crate::dimension::{
    markov_components, verify_horseshoe, ConeFieldSpec, EndpointRef, HorseshoeCert, HorseshoeSpec,
    MarkovComponents, SweepOptions,
};
use crate::error::{Error, Result};
use crate::genfunc::PolyBall;
use crate::hsets::{ChainCert, ChainOptions, IterateSource};
use crate::map::{Iterate, MapHandle, PlanarMap};
use crate::renorm::{approx_fixed_point, renormalize};
use crate::tables::{run_chain, ChainReport, ChainTable};

/// Computes `s*` at `degree` and builds the map for its ball inflated by
/// `inflate`.
pub fn universal_map(degree: usize, inflate: f64) -> Result<(PolyBall, MapHandle)> {
    let s = approx_fixed_point(degree, 40)?;
    let m = MapHandle::new(s.inflate_ball(inflate));
    Ok((s, m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeSettings {
    pub sweep: SweepOptions,
    pub slope_splits: usize,
    pub chain: ChainOptions,
}

impl Default for HorseshoeSettings {
    fn default() -> Self {
        HorseshoeSettings {
            sweep: SweepOptions {
                max_depth: 8,
                ..SweepOptions::default()
            },
            slope_splits: 8,
            chain: ChainOptions::default(),
        }
    }
}

/// Horseshoe spec from a table with a `[cones]` section.
pub fn horseshoe_spec(table: &ChainTable, coord: &CoordChange, settings: &HorseshoeSettings) -> Result<HorseshoeSpec> {
    let slopes = table
        .cone_slopes()
        .ok_or_else(|| Error::Incomplete(format!("table {} has no cones", table.name)))?;
    Ok(HorseshoeSpec {
        components: table.resolve(None)?,
        links: table.chain_links(),
        cones: ConeFieldSpec::new(slopes)?,
        coord: *coord,
        chain: table.chain_options(&settings.chain)?,
        sweep: settings.sweep,
        slope_splits: settings.slope_splits,
        stable: None,
    })
}

pub fn universal_horseshoe(m: &MapHandle, spec: &HorseshoeSpec) -> Result<HorseshoeCert> {
    let g = Iterate::new(m, 3);
    verify_horseshoe(m, &g, spec)
}

/// Runs an endpoint table as a chain.
pub fn endpoint_chain(src: &dyn IterateSource, table: &ChainTable, base: &ChainOptions, max_shift: f64) -> Result<ChainReport> {
    let sets = table.resolve(None)?;
    Ok(run_chain(&table.name, src, &sets, &table.chain_links(), &table.chain_options(base)?, max_shift))
}

/// The four endpoint enclosures from the endpoint tables and their runs.
/// Each endpoint is looked up by name in whichever table declares it.
pub fn endpoints_from_chains(
    g: &dyn PlanarMap,
    coord: &CoordChange,
    runs: &[(&ChainTable, &ChainReport)],
) -> Result<MarkovComponents> {
    let certs: Vec<Option<ChainCert>> = runs
        .iter()
        .map(|(_, r)| r.verified.then(ChainCert::default))
        .collect();
    let links: Vec<_> = runs.iter().map(|(t, _)| t.chain_links()).collect();
    let find = |name: &str| -> Result<EndpointRef> {
        for (i, (t, r)) in runs.iter().enumerate() {
            if let Some(e) = t.endpoints.iter().find(|e| e.name == name) {
                return Ok(EndpointRef {
                    sets: &r.sets,
                    links: &links[i],
                    cert: certs[i].as_ref(),
                    start: e.start,
                    steps: e.steps,
                });
            }
        }
        Err(Error::Incomplete(format!("no table declares endpoint {name}")))
    };
    markov_components(g, coord, &find("k0b")?, &find("k0t")?, &find("k1b")?, &find("k1t")?)
}

/// `‖R[s] − s‖_ρ`, upper bound, with `R` truncated at the degree of `s`.
pub fn fixed_point_residual(s: &PolyBall) -> Result<f64> {
    let (r, _) = renormalize(s, s.degree())?;
    Ok(r.sub(s).norm_rho().hi())
}
