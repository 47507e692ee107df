//! Experiment configuration: explicit seeds, versioned schema, validated
//! before anything runs.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gdaudit_core::optimizers::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Known audit selectors.
pub const THEOREMS: &[&str] = &[
    "gd_convex",
    "ngd",
    "clip_gd",
    "rcd_mean",
    "strongly_convex",
    "strong_growth",
    "monotonicity",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunEntry {
    pub id: String,
    #[serde(flatten)]
    pub config: RunConfig,
}

/// One base run replicated over an explicit seed list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub id: String,
    pub seeds: Vec<u64>,
    pub base: RunConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditEntry {
    pub theorem: String,
    /// Run or sweep ids this audit consumes. Sweeps expand to their
    /// members; `rcd_mean` aggregates all referenced traces into one
    /// report, every other theorem audits each trace separately.
    pub runs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Target accuracy for `strong_growth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

impl AuditEntry {
    pub fn label(&self) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| format!("{}.{}", self.runs.join("+"), self.theorem))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub runs: Vec<RunEntry>,
    #[serde(default)]
    pub sweeps: Vec<SweepEntry>,
    #[serde(default)]
    pub audits: Vec<AuditEntry>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("config {} line {}: {e}", path.display(), e.line()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema != SCHEMA_VERSION {
            anyhow::bail!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema);
        }
        if self.runs.is_empty() && self.sweeps.is_empty() {
            anyhow::bail!("config declares no runs and no sweeps");
        }
        if self.formats.is_empty() {
            anyhow::bail!("formats must include csv and/or json");
        }
        let mut ids = HashSet::new();
        for r in &self.runs {
            if !ids.insert(r.id.clone()) {
                anyhow::bail!("duplicate run id '{}'", r.id);
            }
            r.config
                .validate()
                .map_err(|e| anyhow::anyhow!("run '{}': {e}", r.id))?;
        }
        for s in &self.sweeps {
            if !ids.insert(s.id.clone()) {
                anyhow::bail!("duplicate sweep id '{}'", s.id);
            }
            if s.seeds.is_empty() {
                anyhow::bail!("sweep '{}' lists no seeds", s.id);
            }
            let mut seen = HashSet::new();
            if !s.seeds.iter().all(|x| seen.insert(*x)) {
                anyhow::bail!("sweep '{}' repeats a seed", s.id);
            }
            s.base
                .validate()
                .map_err(|e| anyhow::anyhow!("sweep '{}': {e}", s.id))?;
        }
        for a in &self.audits {
            if !THEOREMS.contains(&a.theorem.as_str()) {
                anyhow::bail!(
                    "audit '{}': unknown theorem '{}' (known: {})",
                    a.label(),
                    a.theorem,
                    THEOREMS.join(", ")
                );
            }
            if a.runs.is_empty() {
                anyhow::bail!("audit '{}' references no runs", a.label());
            }
            for target in &a.runs {
                if !ids.contains(target) {
                    anyhow::bail!("audit '{}' references unknown run '{target}'", a.label());
                }
            }
            if a.theorem == "strong_growth" && a.eps.is_none() {
                anyhow::bail!("audit '{}': strong_growth requires eps", a.label());
            }
        }
        Ok(())
    }

    /// Expands sweeps into concrete runs. Sweep members are named
    /// `<sweep-id>-s<seed>`.
    pub fn expanded_runs(&self) -> Vec<(String, RunConfig)> {
        let mut out = Vec::new();
        for r in &self.runs {
            out.push((r.id.clone(), r.config.clone()));
        }
        for s in &self.sweeps {
            for &seed in &s.seeds {
                let mut cfg = s.base.clone();
                cfg.seed = seed;
                out.push((format!("{}-s{seed}", s.id), cfg));
            }
        }
        out
    }

    /// Run ids an audit target resolves to (a sweep id means its members).
    pub fn resolve_target(&self, target: &str) -> Vec<String> {
        if let Some(s) = self.sweeps.iter().find(|s| s.id == target) {
            s.seeds.iter().map(|seed| format!("{}-s{seed}", s.id)).collect()
        } else {
            vec![target.to_string()]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gdaudit_core::optimizers::Algorithm;
    use gdaudit_core::problems::suite_problem;
    use gdaudit_core::steprules::StepRule;

    fn minimal() -> ExperimentConfig {
        ExperimentConfig {
            schema: 1,
            output_dir: PathBuf::from("out"),
            parallelism: None,
            formats: default_formats(),
            runs: vec![RunEntry {
                id: "gd-cosh1".into(),
                config: RunConfig::new(
                    suite_problem("cosh1").unwrap(),
                    Algorithm::Gd,
                    StepRule::gd(),
                    50,
                    1,
                ),
            }],
            sweeps: vec![],
            audits: vec![AuditEntry {
                theorem: "gd_convex".into(),
                runs: vec!["gd-cosh1".into()],
                id: None,
                eps: None,
            }],
        }
    }

    #[test]
    fn minimal_config_validates_and_round_trips() {
        let cfg = minimal();
        cfg.validate().unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.runs[0].id, "gd-cosh1");
    }

    #[test]
    fn empty_runs_rejected() {
        let mut cfg = minimal();
        cfg.runs.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_audit_target_rejected() {
        let mut cfg = minimal();
        cfg.audits[0].runs = vec!["nope".into()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_theorem_rejected() {
        let mut cfg = minimal();
        cfg.audits[0].theorem = "fermat_last".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn wrong_schema_rejected() {
        let mut cfg = minimal();
        cfg.schema = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sweep_expansion_names_members_by_seed() {
        let mut cfg = minimal();
        cfg.sweeps.push(SweepEntry {
            id: "rcd".into(),
            seeds: vec![3, 9],
            base: RunConfig::new(
                suite_problem("cosh4").unwrap(),
                Algorithm::Rcd,
                StepRule::rcd(),
                10,
                0,
            ),
        });
        cfg.validate().unwrap();
        let runs = cfg.expanded_runs();
        assert_eq!(runs.len(), 3);
        assert_eq!(runs[1].0, "rcd-s3");
        assert_eq!(runs[2].0, "rcd-s9");
        assert_eq!(cfg.resolve_target("rcd"), vec!["rcd-s3", "rcd-s9"]);
        assert_eq!(cfg.resolve_target("gd-cosh1"), vec!["gd-cosh1"]);
    }
}
