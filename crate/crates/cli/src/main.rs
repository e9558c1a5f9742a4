use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use rffso_cli::config::{parse_methods, set_path, sweep_spec, SweepSpec};
use rffso_cli::gain::harq_gain;
use rffso_cli::output::emit;
use rffso_cli::presets;
use rffso_cli::sweep::run_sweep;
use rffso_cli::validate::{validate, Tolerances};
use rffso_cli::CliError;
use rffso_core::analysis::Method;

/// Throughput and outage of hybrid RF/FSO links with incremental-redundancy HARQ.
#[derive(Debug, Parser)]
#[command(name = "rffso", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Built-in configuration: fig3, fig4, fig5 or fig6.
    #[arg(long)]
    preset: Option<String>,
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Output file; `.json` selects JSON, anything else CSV. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Comma separated subset of exact,linearized,asymptotic,monte-carlo.
    #[arg(long)]
    methods: Option<String>,
    /// Override one config field, e.g. `--set harq.rate=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Omit the `# generated_unix=` line from CSV output.
    #[arg(long)]
    no_header_timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form methods only.
    Analyze(Common),
    /// Monte Carlo only.
    Simulate(Common),
    /// Any combination of methods.
    Sweep(Common),
    /// Compare methods against the exact integral and report PASS/FAIL.
    Validate {
        /// Preset name (alternative to --preset).
        name: Option<String>,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.02)]
        tol_linearized: f64,
        #[arg(long, default_value_t = 0.05)]
        tol_asymptotic: f64,
        /// Monte Carlo allowance in standard errors.
        #[arg(long, default_value_t = 3.0)]
        tol_mc_se: f64,
        /// Minimum Monte Carlo allowance.
        #[arg(long, default_value_t = 5e-3)]
        tol_mc_floor: f64,
    },
    /// SNR saved by HARQ at a target outage: `harq-gain [PRESET] TARGET`.
    HarqGain {
        #[arg(num_args = 1..=2, value_name = "[PRESET] TARGET")]
        args: Vec<String>,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        m_low: usize,
        #[arg(long, default_value_t = 3)]
        m_high: usize,
    },
}

fn load(common: &Common, name: Option<&str>) -> Result<SweepSpec, CliError> {
    let mut doc: Value = match (name.or(common.preset.as_deref()), &common.config) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either a preset or --config".into()));
        }
        (Some(p), None) => presets::preset(p).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset '{p}', expected one of {}",
                presets::NAMES.join(", ")
            ))
        })?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(CliError::Usage("a preset or --config is required".into())),
    };
    for s in &common.set {
        set_path(&mut doc, s)?;
    }
    if let Some(seed) = common.seed {
        doc["mc"]["seed"] = json!(seed);
    }
    if let Some(trials) = common.trials {
        doc["mc"]["trials"] = json!(trials);
    }
    let mut spec = sweep_spec(&doc)?;
    if let Some(list) = &common.methods {
        spec.methods = parse_methods(list)?;
    }
    Ok(spec)
}

fn emit_rows(common: &Common, spec: &SweepSpec) -> Result<(), CliError> {
    let rows = run_sweep(spec);
    emit(&rows, common.out.as_deref(), !common.no_header_timestamp)?;
    let bad = rows.iter().filter(|r| r.is_convergence_error()).count();
    if bad > 0 {
        return Err(CliError::Convergence(bad));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(common) => {
            let mut spec = load(&common, None)?;
            if common.methods.is_none() {
                spec.methods.retain(|m| m.is_analytic());
            }
            if spec.methods.iter().any(|m| !m.is_analytic()) || spec.methods.is_empty() {
                return Err(CliError::Usage(
                    "analyze runs closed-form methods only".into(),
                ));
            }
            emit_rows(&common, &spec)
        }
        Command::Simulate(common) => {
            let mut spec = load(&common, None)?;
            if common
                .methods
                .as_ref()
                .is_some_and(|_| spec.methods != [Method::MonteCarlo])
            {
                return Err(CliError::Usage("simulate runs monte-carlo only".into()));
            }
            spec.methods = vec![Method::MonteCarlo];
            emit_rows(&common, &spec)
        }
        Command::Sweep(common) => {
            let spec = load(&common, None)?;
            emit_rows(&common, &spec)
        }
        Command::Validate {
            name,
            common,
            tol_linearized,
            tol_asymptotic,
            tol_mc_se,
            tol_mc_floor,
        } => {
            let mut spec = load(&common, name.as_deref())?;
            if common.methods.is_none() {
                spec.methods = Method::ALL.to_vec();
            }
            if spec.methods.iter().all(|&m| m == Method::Exact) {
                return Err(CliError::Usage(
                    "nothing to compare against the exact method".into(),
                ));
            }
            let tol = Tolerances {
                linearized: tol_linearized,
                asymptotic: tol_asymptotic,
                mc_se: tol_mc_se,
                mc_floor: tol_mc_floor,
            };
            let report = validate(&spec, &tol);
            emit(
                &report.checks,
                common.out.as_deref(),
                !common.no_header_timestamp,
            )?;
            for method in report.methods() {
                let n = report.checks.iter().filter(|c| c.method == method).count();
                let failed = report
                    .checks
                    .iter()
                    .filter(|c| c.method == method && c.verdict != "PASS")
                    .count();
                eprintln!(
                    "{} {method} vs exact: max |delta| = {:e} over {n} checks, {failed} failed",
                    if failed == 0 { "PASS" } else { "FAIL" },
                    report.max_delta(method).unwrap_or(f64::NAN),
                );
            }
            let convergence = report
                .checks
                .iter()
                .filter(|c| c.status.starts_with("error: quadrature"))
                .count();
            if convergence > 0 {
                return Err(CliError::Convergence(convergence));
            }
            if report.passed() {
                eprintln!("PASS {}", spec.name);
                Ok(())
            } else {
                eprintln!("FAIL {}", spec.name);
                Err(CliError::ValidationFailed)
            }
        }
        Command::HarqGain {
            args,
            common,
            m_low,
            m_high,
        } => {
            let (name, target) = match args.as_slice() {
                [t] => (None, t),
                [p, t] => (Some(p.as_str()), t),
                _ => return Err(CliError::Usage("expected [PRESET] TARGET".into())),
            };
            let target: f64 = target.parse().map_err(|_| {
                CliError::Usage(format!("target outage '{target}' is not a number"))
            })?;
            let spec = load(&common, name)?;
            let gain = harq_gain(&spec, target, m_low, m_high)?;
            println!("{gain}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::ValidationFailed) {
                eprintln!("rffso: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
