//! Chain tables: h-sets, links and optional cone data, read from TOML.
//!
//! Scales are half side lengths. A set lists `e_u`, `e_s` or both; a
//! missing vector is the reflection `(x, −u)` of the other. A set may
//! instead be the image `Λ^k` of an earlier one.

use serde::{Deserialize, Serialize};

use crate::cones::QuadraticForm;
use crate::error::{Error, Result};
use crate::hsets::{
    transform_hset, verify_chain, ChainLink, ChainOptions, Direction, HSet, HSetTransform, IterateSource, LinkCert,
};
use crate::interval::Interval;
use crate::renorm::Scalings;

pub const TABLE1: &str = include_str!("../tables/table1.toml");
pub const TABLE2: &str = include_str!("../tables/table2.toml");
pub const TABLE3: &str = include_str!("../tables/table3.toml");
pub const TABLE4: &str = include_str!("../tables/table4.toml");
pub const TABLE5: &str = include_str!("../tables/table5.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub center: Option<[f64; 2]>,
    pub e_u: Option<[f64; 2]>,
    pub e_s: Option<[f64; 2]>,
    pub scale: Option<f64>,
    pub l_u: Option<f64>,
    pub l_s: Option<f64>,
    pub lambda_of: Option<usize>,
    pub lambda_power: Option<i32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: usize,
    pub to: usize,
    pub power: usize,
    #[serde(default = "forward")]
    pub direction: Direction,
}

fn forward() -> Direction {
    Direction::Forward
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSpec {
    pub name: String,
    pub start: usize,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub slopes: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTable {
    pub name: String,
    /// Lipschitz constant of the cones; no cone check when absent.
    pub lip: Option<f64>,
    #[serde(rename = "set")]
    pub sets: Vec<SetSpec>,
    #[serde(rename = "link", default)]
    pub links: Vec<LinkSpec>,
    #[serde(rename = "endpoint", default)]
    pub endpoints: Vec<EndpointSpec>,
    pub cones: Option<ConeSpec>,
}

fn reflect(v: [f64; 2]) -> [f64; 2] {
    [v[0], -v[1]]
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ChainTable {
    pub fn parse(text: &str) -> Result<Self> {
        let t: ChainTable = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let k = self.sets.len();
        for (i, l) in self.links.iter().enumerate() {
            if l.from >= k || l.to >= k || l.power == 0 {
                return Err(Error::Domain(format!("link {i} ({} -> {}, power {}) is invalid", l.from, l.to, l.power)));
            }
        }
        for e in &self.endpoints {
            if e.start >= k {
                return Err(Error::Domain(format!("endpoint {} starts at missing set {}", e.name, e.start)));
            }
        }
        if let Some(c) = &self.cones {
            if c.slopes.len() != k {
                return Err(Error::Domain(format!("{} cone ranges for {k} sets", c.slopes.len())));
            }
        }
        Ok(())
    }

    /// Builds the h-sets. Scalings are needed only for `Λ` images.
    pub fn resolve(&self, scalings: Option<&Scalings>) -> Result<Vec<HSet>> {
        let mut out: Vec<HSet> = Vec::with_capacity(self.sets.len());
        for (i, s) in self.sets.iter().enumerate() {
            let set = if let Some(j) = s.lambda_of {
                let sc = scalings.ok_or_else(|| Error::Incomplete(format!("set {i} needs the scalings")))?;
                let src = out
                    .get(j)
                    .ok_or_else(|| Error::Domain(format!("set {i} refers to later set {j}")))?;
                let op = HSetTransform::Lambda {
                    k: s.lambda_power.unwrap_or(-1),
                    lambda: sc.lambda,
                    mu: sc.mu,
                };
                transform_hset(src, op)?
            } else {
                let c = s.center.ok_or_else(|| Error::Domain(format!("set {i} has no centre")))?;
                let (eu, es) = match (s.e_u, s.e_s) {
                    (Some(u), Some(v)) => (u, v),
                    (Some(u), None) => (u, reflect(u)),
                    (None, Some(v)) => (reflect(v), v),
                    (None, None) => return Err(Error::Domain(format!("set {i} has no spanning vector"))),
                };
                let lu = s.l_u.or(s.scale).ok_or_else(|| Error::Domain(format!("set {i} has no scale")))?;
                let ls = s.l_s.or(s.scale).ok_or_else(|| Error::Domain(format!("set {i} has no scale")))?;
                HSet::new(c, eu, es, lu, ls)?
            };
            out.push(set);
        }
        Ok(out)
    }

    pub fn chain_links(&self) -> Vec<ChainLink> {
        self.links
            .iter()
            .map(|l| ChainLink {
                from: l.from,
                to: l.to,
                power: l.power,
                direction: l.direction,
            })
            .collect()
    }

    pub fn cone_slopes(&self) -> Option<Vec<Interval>> {
        self.cones
            .as_ref()
            .map(|c| c.slopes.iter().map(|s| Interval::new(s[0], s[1])).collect())
    }

    pub fn chain_options(&self, base: &ChainOptions) -> Result<ChainOptions> {
        let cone = match self.lip {
            Some(l) => Some(QuadraticForm::with_lipschitz(l)?),
            None => None,
        };
        Ok(ChainOptions { cone, ..*base })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub from: usize,
    pub to: usize,
    pub power: usize,
    pub ok: bool,
    pub margin: Option<f64>,
    pub cone_epsilon: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recentering {
    pub set: usize,
    pub shift: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub name: String,
    pub sets: Vec<HSet>,
    pub links: Vec<LinkOutcome>,
    pub recentered: Vec<Recentering>,
    pub verified: bool,
}

fn check_link(src: &dyn IterateSource, sets: &[HSet], l: &ChainLink, opts: &ChainOptions) -> Result<LinkCert> {
    let mut c = verify_chain(src, sets, std::slice::from_ref(l), opts)?;
    Ok(c.links.remove(0))
}

fn outcome(l: &ChainLink, r: &Result<LinkCert>) -> LinkOutcome {
    LinkOutcome {
        from: l.from,
        to: l.to,
        power: l.power,
        ok: r.is_ok(),
        margin: r.as_ref().ok().map(|c| c.cover.margin),
        cone_epsilon: r.as_ref().ok().and_then(|c| c.cone.map(|k| k.epsilon)),
        error: r.as_ref().err().map(|e| e.to_string()),
    }
}

/// Checks every link. When `max_shift > 0`, a failing link triggers a
/// search over shifted centres of its target set (then its source set)
/// within `max_shift` along the spanning directions; a shift is kept only
/// if every link touching the moved set then verifies.
pub fn run_chain(
    name: &str,
    src: &dyn IterateSource,
    sets: &[HSet],
    links: &[ChainLink],
    opts: &ChainOptions,
    max_shift: f64,
) -> ChainReport {
    let mut sets = sets.to_vec();
    let mut recentered = Vec::new();
    let mut results: Vec<Result<LinkCert>> = links.iter().map(|l| check_link(src, &sets, l, opts)).collect();
    if max_shift > 0.0 {
        for i in 0..links.len() {
            if results[i].is_ok() {
                continue;
            }
            let l = links[i];
            for &k in &[l.to, l.from] {
                if let Some((moved, shift)) = search_shift(src, &sets, links, k, opts, max_shift) {
                    sets[k] = moved;
                    recentered.push(Recentering { set: k, shift });
                    for (j, lj) in links.iter().enumerate() {
                        if lj.from == k || lj.to == k {
                            results[j] = check_link(src, &sets, lj, opts);
                        }
                    }
                    break;
                }
            }
        }
    }
    let outcomes: Vec<LinkOutcome> = links.iter().zip(&results).map(|(l, r)| outcome(l, r)).collect();
    let verified = !outcomes.is_empty() && outcomes.iter().all(|o| o.ok);
    ChainReport {
        name: name.to_string(),
        sets,
        links: outcomes,
        recentered,
        verified,
    }
}

fn search_shift(
    src: &dyn IterateSource,
    sets: &[HSet],
    links: &[ChainLink],
    k: usize,
    opts: &ChainOptions,
    max_shift: f64,
) -> Option<(HSet, [f64; 2])> {
    let touching: Vec<&ChainLink> = links.iter().filter(|l| l.from == k || l.to == k).collect();
    let base = sets[k];
    let unit = |v: [f64; 2]| {
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    };
    let (du, ds) = (unit(base.e_u), unit(base.e_s));
    let steps = [0.25, 0.5, 1.0];
    let mut cands = Vec::new();
    for &t in &steps {
        for &sg in &[1.0, -1.0] {
            let a = sg * t * max_shift;
            cands.push([ds[0] * a, ds[1] * a]);
            cands.push([du[0] * a, du[1] * a]);
        }
    }
    for shift in cands {
        let mut trial = sets.to_vec();
        trial[k].center = [base.center[0] + shift[0], base.center[1] + shift[1]];
        if touching.iter().all(|l| check_link(src, &trial, l, opts).is_ok()) {
            return Some((trial[k], shift));
        }
    }
    None
}
