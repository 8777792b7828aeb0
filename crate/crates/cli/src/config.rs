use std::path::{Path, PathBuf};

use serde::Deserialize;
use tangleproof::tables::{ChainTable, TABLE1, TABLE2, TABLE3, TABLE4, TABLE5};

use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub input: InputSection,
    #[serde(default)]
    pub fixed_point: FixedPointSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub horseshoe: HorseshoeSection,
    #[serde(default)]
    pub dimension: DimensionSection,
    #[serde(default)]
    pub tangle: TangleSection,
    /// Directory the config was read from; relative paths resolve here.
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSection {
    /// Generating function file. Computed at `degree` when absent.
    pub genfunc: Option<PathBuf>,
    pub degree: usize,
    pub inflate: f64,
}

impl Default for InputSection {
    fn default() -> Self {
        InputSection {
            genfunc: None,
            degree: 16,
            inflate: 1e-9,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointSection {
    pub max_iters: usize,
}

impl Default for FixedPointSection {
    fn default() -> Self {
        FixedPointSection { max_iters: 40 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub nx: usize,
    pub nu: usize,
    pub power: usize,
    /// Bisections of a failing cell.
    pub refine: usize,
    /// Tables whose sets must lie in the domain.
    pub contains: Vec<String>,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            x: [-1.0, 1.2],
            u: [-0.6, 0.6],
            nx: 88,
            nu: 48,
            power: 3,
            refine: 3,
            contains: vec!["table3".into()],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub tables: Vec<String>,
    /// Largest centre shift tried when a link fails; 0 disables it.
    pub max_shift: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            tables: vec!["table1".into()],
            max_shift: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Universal,
    Toy,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HorseshoeSection {
    pub model: Model,
    pub table: String,
    pub grid: usize,
    pub max_depth: usize,
    pub tolerance: f64,
    pub slope_splits: usize,
    /// Expansion of the affine toy map.
    pub toy_expansion: f64,
}

impl Default for HorseshoeSection {
    fn default() -> Self {
        HorseshoeSection {
            model: Model::Universal,
            table: "table3".into(),
            grid: 16,
            max_depth: 8,
            tolerance: 0.03,
            slope_splits: 8,
            toy_expansion: 3.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionSection {
    pub endpoint_tables: Vec<String>,
    pub seeds: usize,
    pub depth: usize,
    pub lip: f64,
    /// Skips the computation and evaluates the bounds on given constants.
    pub inject: Option<Injected>,
}

impl Default for DimensionSection {
    fn default() -> Self {
        DimensionSection {
            endpoint_tables: vec!["table4".into(), "table5".into()],
            seeds: 200,
            depth: 10,
            lip: 0.95,
            inject: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injected {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub tau_l: f64,
    pub tau_r: f64,
    pub a_minus: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TangleSection {
    pub n: usize,
    pub m: usize,
    pub table: String,
}

impl Default for TangleSection {
    fn default() -> Self {
        TangleSection {
            n: 1,
            m: 1,
            table: "table2".into(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check()?;
        Ok((cfg, text))
    }

    fn check(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if !(2..=40).contains(&self.input.degree) {
            return bad("input.degree must lie in 2..=40");
        }
        if !(self.input.inflate >= 0.0) {
            return bad("input.inflate must be non-negative");
        }
        if !(self.domain.x[0] < self.domain.x[1] && self.domain.u[0] < self.domain.u[1]) {
            return bad("domain ranges must be increasing");
        }
        if self.domain.refine > 8 {
            return bad("domain.refine must be at most 8");
        }
        if self.horseshoe.grid == 0 || self.horseshoe.max_depth > 16 {
            return bad("horseshoe.grid must be positive and max_depth at most 16");
        }
        if !(self.dimension.lip >= 0.0 && self.dimension.lip < 1.0) {
            return bad("dimension.lip must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// A built-in table name or a path to a table file. Returns the text.
    pub fn table_text(&self, name: &str) -> CliResult<String> {
        Ok(match name {
            "table1" => TABLE1.into(),
            "table2" => TABLE2.into(),
            "table3" => TABLE3.into(),
            "table4" => TABLE4.into(),
            "table5" => TABLE5.into(),
            path => {
                let p = self.resolve(Path::new(path));
                std::fs::read_to_string(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        })
    }

    pub fn table(&self, name: &str) -> CliResult<(ChainTable, String)> {
        let text = self.table_text(name)?;
        Ok((ChainTable::parse(&text)?, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(c.input.degree, 16);
        assert_eq!(c.verify.tables, vec!["table1".to_string()]);
        assert!(c.check().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[horseshoe]\nmodle = \"toy\"\n").is_err());
        assert!(toml::from_str::<PipelineConfig>("[horseshoe]\nmodel = \"other\"\n").is_err());
    }

    #[test]
    fn builtin_tables_resolve() {
        let c = PipelineConfig::default();
        for n in ["table1", "table2", "table3", "table4", "table5"] {
            c.table(n).unwrap();
        }
    }
}
