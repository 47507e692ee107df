//! Experiment execution: expand the config into concrete runs, execute them
//! on a worker pool (parallel across runs only, never within one — the
//! in-run order is what keeps RNG consumption deterministic), persist
//! traces and audit reports, and write the roll-up summary.
//!
//! Rerunning the same config reproduces byte-identical CSV bodies.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;

use gdaudit_core::analysis::AuditReport;
use gdaudit_core::optimizers::{run, Trace};

use crate::audits::{audit_aggregate, audit_single, is_aggregate};
use crate::config::{ExperimentConfig, Format};

/// Environment variable overriding the config's `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "GDAUDIT_OUTPUT_DIR";

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    /// (run id, abort reason if any)
    pub runs: Vec<(String, Option<String>)>,
    /// (audit label, theorem, report or failure reason)
    pub audits: Vec<(String, String, Result<AuditReport, String>)>,
}

impl ExperimentOutcome {
    pub fn all_audits_pass(&self) -> bool {
        self.audits
            .iter()
            .all(|(_, _, rep)| matches!(rep, Ok(r) if r.pass()))
    }
}

/// Fixed trace CSV columns.
pub const TRACE_CSV_HEADER: &str = "k,f,gap,grad_norm,eta,lambda,coord,oracle_calls";

pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.records.len() * 64);
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        let gap = r.gap.map(|g| g.to_string()).unwrap_or_default();
        let coord = r.coord.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k, r.f_val, gap, r.grad_norm, r.eta, r.lambda, coord, r.oracle_calls
        );
    }
    out
}

fn effective_output_dir(cfg: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output_dir.clone())
}

/// Runs everything the config declares and writes artifacts under the
/// output directory: one trace file per run and format, one audit file per
/// (run, audit) — one per entry for aggregated audits — and `summary.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentOutcome> {
    cfg.validate()?;
    let out_dir = effective_output_dir(cfg);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;

    let expanded = cfg.expanded_runs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let results: Vec<(String, anyhow::Result<Trace>)> = pool.install(|| {
        expanded
            .par_iter()
            .map(|(id, rc)| (id.clone(), run(rc).map_err(Into::into)))
            .collect()
    });

    let mut run_rows = Vec::new();
    let mut traces: Vec<(String, Option<Trace>)> = Vec::new();
    for (id, result) in results {
        match result {
            Ok(trace) => {
                write_trace_files(&out_dir, &id, &trace, &cfg.formats)?;
                let abort = trace.abort.as_ref().map(|a| format!("k={}: {}", a.k, a.reason));
                run_rows.push((id.clone(), abort));
                traces.push((id, Some(trace)));
            }
            Err(e) => {
                run_rows.push((id.clone(), Some(e.to_string())));
                traces.push((id, None));
            }
        }
    }

    let find_trace = |id: &str| -> Option<&Trace> {
        traces
            .iter()
            .find(|(tid, _)| tid == id)
            .and_then(|(_, t)| t.as_ref())
    };

    let mut audit_rows: Vec<(String, String, Result<AuditReport, String>)> = Vec::new();
    for entry in &cfg.audits {
        let member_ids: Vec<String> = entry
            .runs
            .iter()
            .flat_map(|t| cfg.resolve_target(t))
            .collect();
        if is_aggregate(&entry.theorem) {
            let family: Vec<Trace> = member_ids
                .iter()
                .filter_map(|id| find_trace(id).cloned())
                .collect();
            let label = entry.label();
            let rep = if family.len() != member_ids.len() {
                Err("some referenced runs aborted or failed".to_string())
            } else {
                audit_aggregate(&entry.theorem, &family).map_err(|e| e.to_string())
            };
            if let Ok(r) = &rep {
                write_audit_file(&out_dir, &label, r)?;
            }
            audit_rows.push((label, entry.theorem.clone(), rep));
        } else {
            for id in &member_ids {
                let label = format!("{id}.{}", entry.theorem);
                let rep = match find_trace(id) {
                    Some(trace) => {
                        audit_single(&entry.theorem, trace, entry.eps).map_err(|e| e.to_string())
                    }
                    None => Err("referenced run aborted or failed".to_string()),
                };
                if let Ok(r) = &rep {
                    write_audit_file(&out_dir, &label, r)?;
                }
                audit_rows.push((label, entry.theorem.clone(), rep));
            }
        }
    }

    write_summary(&out_dir, &run_rows, &audit_rows)?;
    Ok(ExperimentOutcome {
        output_dir: out_dir,
        runs: run_rows,
        audits: audit_rows,
    })
}

fn write_trace_files(
    dir: &Path,
    id: &str,
    trace: &Trace,
    formats: &[Format],
) -> anyhow::Result<()> {
    for fmt in formats {
        match fmt {
            Format::Csv => {
                let path = dir.join(format!("{id}.trace.csv"));
                fs::write(&path, trace_to_csv(trace))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Format::Json => {
                let path = dir.join(format!("{id}.trace.json"));
                fs::write(&path, trace.to_json()?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn write_audit_file(dir: &Path, label: &str, report: &AuditReport) -> anyhow::Result<()> {
    let path = dir.join(format!("{label}.audit.json"));
    fs::write(&path, report.to_json()?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Summary rows: one per executed run, one per audit execution.
fn write_summary(
    dir: &Path,
    runs: &[(String, Option<String>)],
    audits: &[(String, String, Result<AuditReport, String>)],
) -> anyhow::Result<()> {
    let mut out = String::from("kind,id,theorem,status,detail\n");
    for (id, abort) in runs {
        match abort {
            None => {
                let _ = writeln!(out, "run,{id},,ok,");
            }
            Some(reason) => {
                let _ = writeln!(out, "run,{id},,aborted,{}", csv_escape(reason));
            }
        }
    }
    for (label, theorem, rep) in audits {
        match rep {
            Ok(r) => {
                let status = if r.pass() { "pass" } else { "fail" };
                let _ = writeln!(
                    out,
                    "audit,{label},{theorem},{status},worst_margin={} bound={} observed={}",
                    r.worst_step_margin, r.bound_value, r.observed_value
                );
            }
            Err(reason) => {
                let _ = writeln!(out, "audit,{label},{theorem},error,{}", csv_escape(reason));
            }
        }
    }
    let path = dir.join("summary.csv");
    fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // run_experiment reads GDAUDIT_OUTPUT_DIR; tests touching the process
    // environment must not interleave.
    static ENV_LOCK: std::sync::Mutex<()> = std::sync::Mutex::new(());
    use crate::config::{AuditEntry, RunEntry};
    use gdaudit_core::optimizers::{Algorithm, RunConfig};
    use gdaudit_core::problems::suite_problem;
    use gdaudit_core::steprules::StepRule;

    fn basic_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            schema: 1,
            output_dir: dir.to_path_buf(),
            parallelism: Some(2),
            formats: vec![Format::Csv, Format::Json],
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
    fn experiment_produces_trace_audit_summary() {
        let _guard = ENV_LOCK.lock().unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let cfg = basic_config(tmp.path());
        let outcome = run_experiment(&cfg).unwrap();
        assert!(outcome.all_audits_pass());
        assert!(tmp.path().join("gd-cosh1.trace.csv").exists());
        assert!(tmp.path().join("gd-cosh1.trace.json").exists());
        assert!(tmp.path().join("gd-cosh1.gd_convex.audit.json").exists());
        let summary = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
        // Header plus one run row plus one audit row.
        assert_eq!(summary.lines().count(), 3);
    }

    #[test]
    fn csv_header_is_pinned() {
        assert_eq!(TRACE_CSV_HEADER, "k,f,gap,grad_norm,eta,lambda,coord,oracle_calls");
    }

    #[test]
    fn trace_round_trips_through_json_file() {
        let _guard = ENV_LOCK.lock().unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let cfg = basic_config(tmp.path());
        run_experiment(&cfg).unwrap();
        let text = fs::read_to_string(tmp.path().join("gd-cosh1.trace.json")).unwrap();
        let trace = Trace::from_json(&text).unwrap();
        assert_eq!(trace.records.len(), 51);
        assert_eq!(trace.config.seed, 1);
    }

    #[test]
    fn failed_run_leaves_others_unaffected() {
        let _guard = ENV_LOCK.lock().unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = basic_config(tmp.path());
        // Negative diagonal passes config validation but fails problem
        // construction at execution time.
        cfg.runs.push(RunEntry {
            id: "bad-quad".into(),
            config: RunConfig::new(
                gdaudit_core::problems::ProblemSpec::quadratic(vec![-1.0], vec![1.0]),
                Algorithm::Gd,
                StepRule::gd(),
                10,
                0,
            ),
        });
        let outcome = run_experiment(&cfg).unwrap();
        assert!(outcome.all_audits_pass(), "healthy run's audit unaffected");
        let bad = outcome.runs.iter().find(|(id, _)| id == "bad-quad").unwrap();
        assert!(bad.1.is_some(), "failure recorded in summary");
        let good = outcome.runs.iter().find(|(id, _)| id == "gd-cosh1").unwrap();
        assert!(good.1.is_none());
        let summary = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
        assert!(summary.contains("bad-quad"));
        assert!(!tmp.path().join("bad-quad.trace.csv").exists());
    }

    #[test]
    fn env_var_overrides_output_dir() {
        let _guard = ENV_LOCK.lock().unwrap();
        // Serialized with other tests through the env-var guard below.
        let tmp = tempfile::tempdir().unwrap();
        let other = tempfile::tempdir().unwrap();
        let cfg = basic_config(tmp.path());
        std::env::set_var(OUTPUT_DIR_ENV, other.path());
        let outcome = run_experiment(&cfg);
        std::env::remove_var(OUTPUT_DIR_ENV);
        let outcome = outcome.unwrap();
        assert_eq!(outcome.output_dir, other.path());
        assert!(other.path().join("gd-cosh1.trace.csv").exists());
        assert!(!tmp.path().join("gd-cosh1.trace.csv").exists());
    }
}
