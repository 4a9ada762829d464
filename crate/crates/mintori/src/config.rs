//! Run configuration, read from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: usize,
    pub v: Vec<i64>,
    /// Calabi constant of the ambient cone metric.
    pub l: f64,
    /// Seed for randomized sampling (phase-portrait seeds, tests).
    pub seed: u64,
    pub tolerances: Tolerances,
    pub scan: ScanConfig,
    pub search: SearchConfig,
    pub mesh: MeshConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Integrator tolerance for scans.
    pub integrator: f64,
    /// Integrator tolerance for periodic refinement and reconstruction.
    pub refine: f64,
    /// Time resolution of return events.
    pub event: f64,
    /// Relative drift of the conserved level allowed before a run is rejected.
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub levels: usize,
    /// Scanned levels are `f_+ * [margin_low, 1 - margin_high]`.
    pub margin_low: f64,
    pub margin_high: f64,
    /// Also scan the mirrored levels `-s`.
    pub mirror: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub q_max: u32,
    /// Explicit level brackets `[lo, hi]`; when empty they come from a scan.
    pub brackets: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub rows: usize,
    pub cols: usize,
    /// Parametric finite-difference step.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 2,
            v: vec![2, 3],
            l: 1.0,
            seed: 7,
            tolerances: Tolerances::default(),
            scan: ScanConfig::default(),
            search: SearchConfig::default(),
            mesh: MeshConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { integrator: 1e-10, refine: 1e-12, event: 1e-14, drift: 1e-6 }
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { levels: 200, margin_low: 0.02, margin_high: 0.005, mirror: false }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { q_max: 12, brackets: Vec::new() }
    }
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { rows: 256, cols: 256, delta: 1e-3 }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Input(format!("config: {m}")));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.v.len() != self.n {
            return bad("v must have n entries");
        }
        let t = &self.tolerances;
        if ![t.integrator, t.refine, t.event, t.drift, self.l, self.mesh.delta].iter().all(|x| *x > 0.0 && x.is_finite()) {
            return bad("tolerances, l and mesh.delta must be positive");
        }
        let s = &self.scan;
        if s.levels == 0 || !(s.margin_low > 0.0 && s.margin_high > 0.0 && s.margin_low + s.margin_high < 1.0) {
            return bad("scan needs levels > 0 and margins in (0, 1)");
        }
        if self.search.q_max == 0 {
            return bad("search.q_max must be positive");
        }
        if self.search.brackets.iter().any(|b| !(b[0] < b[1]) || (b[0] < 0.0) != (b[1] < 0.0)) {
            return bad("brackets must be increasing and on one side of 0");
        }
        if self.mesh.rows < 16 || self.mesh.cols < 16 {
            return bad("mesh needs at least 16 x 16 samples");
        }
        Ok(())
    }

    /// SHA-256 of the normalized configuration, as lowercase hex.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(RunConfig::parse("n = 2\nv = [1, -1]\ntolerence = 1").is_err());
        assert!(RunConfig::parse("[scan]\nlevls = 3").is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = RunConfig::parse("v = [1, -1]\n[scan]\nlevels = 10").unwrap();
        assert_eq!(c.scan.levels, 10);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("v = [1, 2, 3]").is_err());
        assert!(RunConfig::parse("[tolerances]\ndrift = -1.0").is_err());
    }
}
