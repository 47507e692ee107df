use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gdaudit::audits::audit_single;
use gdaudit::config::ExperimentConfig;
use gdaudit::plotdata::{emit_plot_data, phase_for_trace};
use gdaudit::runner::run_experiment;

use gdaudit_core::objective::Objective;
use gdaudit_core::optimizers::Trace;
use gdaudit_core::problems::{make_problem, suite, suite_problem, Problem};
use gdaudit_core::rng::Rng;
use gdaudit_core::verify::{
    certify_coordinate_smoothness, certify_smoothness, certify_strong_convexity,
    check_cocoercivity, check_coord_descent_inequality, check_descent_inequality, CertOptions,
    CertReport,
};

/// Experiment runner and audit harness for gradient-descent variants under
/// generalized smoothness.
#[derive(Parser)]
#[command(name = "gdaudit", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute the runs and audits declared in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Execute a config that declares seeded sweeps (alias of `run` that
    /// insists sweeps are present).
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Audit stored traces against one theorem.
    Audit {
        /// JSON trace file(s); repeat for aggregated audits.
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        theorem: String,
        /// Target accuracy (strong_growth only).
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run the sampled certification suite on one problem.
    Certify {
        /// Suite preset name or a path to a problem manifest JSON.
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 10_000)]
        pairs: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Sampling box half-width.
        #[arg(long, default_value_t = 5.0)]
        region: f64,
    },
    /// Emit plot columns (k, gap, log10 gap, grad norm, eta, phase) from a
    /// stored trace.
    Plotdata {
        #[arg(long)]
        trace: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in problem presets.
    Problems,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Writes to stdout, exiting quietly if the consumer closed the pipe.
fn emit(body: &str) -> anyhow::Result<()> {
    use std::io::Write;
    if let Err(e) = std::io::stdout().write_all(body.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        return Err(e.into());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            execute(&cfg)
        }
        Cmd::Sweep { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            if cfg.sweeps.is_empty() {
                anyhow::bail!("sweep: config {} declares no sweeps", config.display());
            }
            execute(&cfg)
        }
        Cmd::Audit {
            traces,
            theorem,
            eps,
        } => {
            let loaded: Vec<Trace> = traces
                .iter()
                .map(|p| load_trace(p))
                .collect::<anyhow::Result<_>>()?;
            let reports: Vec<gdaudit_core::analysis::AuditReport> =
                if gdaudit::audits::is_aggregate(&theorem) {
                    vec![gdaudit::audits::audit_aggregate(&theorem, &loaded)?]
                } else {
                    loaded
                        .iter()
                        .map(|t| audit_single(&theorem, t, eps))
                        .collect::<anyhow::Result<_>>()?
                };
            let all_pass = reports.iter().all(|r| r.pass());
            emit(&format!("{}\n", serde_json::to_string_pretty(&reports)?))?;
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Certify {
            problem,
            pairs,
            seed,
            region,
        } => certify(&problem, pairs, seed, region),
        Cmd::Plotdata { trace, out } => {
            let t = load_trace(&trace)?;
            let phase = phase_for_trace(&t)?;
            let body = emit_plot_data(&t, &phase);
            match out {
                Some(path) => std::fs::write(&path, body)?,
                None => emit(&body)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Problems => {
            for (name, spec) in suite() {
                println!("{name}: {:?} d={}", spec.kind, spec.dim);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn execute(cfg: &ExperimentConfig) -> anyhow::Result<ExitCode> {
    let outcome = run_experiment(cfg)?;
    for (id, abort) in &outcome.runs {
        match abort {
            None => println!("run {id}: ok"),
            Some(reason) => println!("run {id}: aborted ({reason})"),
        }
    }
    let mut failed = 0usize;
    for (label, theorem, rep) in &outcome.audits {
        match rep {
            Ok(r) if r.pass() => println!("audit {label} [{theorem}]: pass"),
            Ok(r) => {
                failed += 1;
                println!(
                    "audit {label} [{theorem}]: FAIL (worst margin {}, bound {}, observed {})",
                    r.worst_step_margin, r.bound_value, r.observed_value
                );
            }
            Err(reason) => {
                failed += 1;
                println!("audit {label} [{theorem}]: ERROR ({reason})");
            }
        }
    }
    println!("artifacts written to {}", outcome.output_dir.display());
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn load_trace(path: &Path) -> anyhow::Result<Trace> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        anyhow::bail!(
            "{} is a CSV export; audits need the JSON trace (same stem, .trace.json)",
            path.display()
        );
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read trace {}: {e}", path.display()))?;
    Trace::from_json(&text).map_err(Into::into)
}

fn load_problem(name_or_path: &str) -> anyhow::Result<Problem> {
    if let Ok(spec) = suite_problem(name_or_path) {
        return Ok(make_problem(spec)?);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        return Ok(Problem::from_manifest_json(&text)?);
    }
    anyhow::bail!(
        "'{name_or_path}' is neither a suite preset ({}) nor a manifest file",
        suite().iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
    )
}

fn certify(problem: &str, pairs: u64, seed: u64, region: f64) -> anyhow::Result<ExitCode> {
    let p = load_problem(problem)?;
    let s = p.smoothness().clone();
    let opts = CertOptions {
        region_halfwidth: region,
        ..CertOptions::default()
    };
    let mut rng = Rng::from_seed(seed);
    let mut reports: BTreeMap<&str, CertReport> = BTreeMap::new();
    reports.insert(
        "smoothness",
        certify_smoothness(&p, s.l0, s.l1, pairs, &mut rng, opts),
    );
    reports.insert(
        "cocoercivity",
        check_cocoercivity(&p, s.l0, s.l1, pairs, &mut rng, opts),
    );
    reports.insert(
        "descent_form",
        check_descent_inequality(&p, s.l0, s.l1, pairs, &mut rng, opts),
    );
    if let (Some(c0), Some(c1)) = (&s.coord_l0, &s.coord_l1) {
        reports.insert(
            "coordinate_smoothness",
            certify_coordinate_smoothness(&p, c0, c1, pairs, &mut rng, opts),
        );
        reports.insert(
            "coordinate_descent_form",
            check_coord_descent_inequality(&p, c0, c1, pairs, &mut rng, opts),
        );
    }
    if s.mu > 0.0 {
        reports.insert(
            "strong_convexity",
            certify_strong_convexity(&p, s.mu, pairs, &mut rng, opts),
        );
    }
    emit(&format!("{}\n", serde_json::to_string_pretty(&reports)?))?;
    let all_pass = reports.values().all(|r| r.passed());
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
