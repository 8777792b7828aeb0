use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ProofReport {
    pub command: String,
    pub verdict: String,
    pub steps: Vec<Step>,
    pub values: BTreeMap<String, f64>,
    /// sha256 of every input text.
    pub inputs: BTreeMap<String, String>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
    #[serde(skip)]
    clock: Option<Instant>,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

impl ProofReport {
    pub fn new(command: &str) -> Self {
        ProofReport {
            command: command.into(),
            verdict: String::new(),
            steps: Vec::new(),
            values: BTreeMap::new(),
            inputs: BTreeMap::new(),
            timings: Vec::new(),
            clock: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, name: &str, text: &str) {
        self.inputs.insert(name.into(), sha256_hex(text));
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.into(), v);
    }

    pub fn step(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        let t = self.clock.map_or(0.0, |c| c.elapsed().as_secs_f64());
        self.clock = Some(Instant::now());
        self.timings.push((name.into(), t));
        self.steps.push(Step {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }

    pub fn verified(&self) -> bool {
        !self.steps.is_empty() && self.steps.iter().all(|s| s.ok)
    }

    pub fn finish(&mut self) {
        self.verdict = if self.verified() { "VERIFIED" } else { "FAILED" }.into();
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "verdict = {}", self.verdict);
        for st in &self.steps {
            let _ = writeln!(s, "[{}] {} : {}", if st.ok { "ok" } else { "FAIL" }, st.name, st.detail);
        }
        for (k, v) in &self.values {
            let _ = writeln!(s, "value {k} = {v:e}");
        }
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "input {k} sha256 {v}");
        }
        s
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        let mut t = String::from("step,seconds\n");
        for (n, s) in &self.timings {
            let _ = writeln!(t, "{n},{s:.3}");
        }
        std::fs::write(dir.join("timings.csv"), t)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn verdict_needs_steps() {
        let mut r = ProofReport::new("x");
        r.finish();
        assert_eq!(r.verdict, "FAILED");
        r.step("a", true, "");
        r.finish();
        assert_eq!(r.verdict, "VERIFIED");
        r.step("b", false, "");
        r.finish();
        assert_eq!(r.verdict, "FAILED");
    }
}
