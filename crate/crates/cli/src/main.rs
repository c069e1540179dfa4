//! `twistor` — desk-scale checks for surfaces in the twistor space of a
//! Riemannian 4-manifold.
//!
//! Scenario subcommands (`run`, `check-superminimal`, `check-lagrangian`,
//! `mean-curvature-l`) print a JSON report to stdout; `list-corpus` and
//! `verify-lie` print human-readable tables. Reports are byte-identical
//! between runs except for timing fields. With the default `parallel`
//! build, sweep width follows `RAYON_NUM_THREADS`.
//!
//! Exit codes: 0 — everything passed; 1 — a check failed or could not
//! execute; 2 — the configuration or a surface formula is invalid.

mod checks;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{
    parse_grid_spec, parse_tolerance_spec, CheckName, ConfigError, ScenarioConfig, SignName,
    SurfaceSpec,
};
use report::Report;
use twistor_core::corpus;

#[derive(Parser)]
#[command(
    name = "twistor",
    version,
    about = "Superminimality, Lagrangian-lift, and minimality checks on twistor spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks configured in a scenario JSON file.
    Run {
        /// Path to a scenario config (JSON).
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List the built-in surface corpus.
    ListCorpus,
    /// Run the exact so(5) identity suite and print its residual table.
    VerifyLie {
        /// Metric family parameters (comma-separated, repeatable).
        #[arg(long = "lambda", value_delimiter = ',', num_args = 1..)]
        lambda: Vec<f64>,
        /// Write the residual table as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override the analytic tolerance, e.g. --tolerance lie=1e-12.
        #[arg(long = "tolerance", value_name = "KEY=VALUE")]
        tolerance: Vec<String>,
    },
    /// Superminimality meters for one surface (corpus name or config path).
    CheckSuperminimal {
        /// Built-in surface name, or a scenario config path.
        target: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Lagrangian defect of the lifted surface for the whole metric family.
    CheckLagrangian {
        /// Built-in surface name, or a scenario config path.
        target: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Mean curvature of the lifted surface for the whole metric family.
    MeanCurvatureL {
        /// Built-in surface name, or a scenario config path.
        target: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Metric family parameters (comma-separated, repeatable).
    #[arg(long = "lambda", value_delimiter = ',', num_args = 1..)]
    lambda: Vec<f64>,
    /// Which almost complex structures to test: plus, minus, or both.
    #[arg(long)]
    sign: Option<String>,
    /// Surface sample grid: N (square) or NxM.
    #[arg(long)]
    grid: Option<String>,
    /// Number of fiber-circle samples on the lift.
    #[arg(long = "n-theta")]
    n_theta: Option<usize>,
    /// Write the defect table as CSV to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Override a named tolerance, e.g. --tolerance lagrangian=2e-5
    /// (repeatable).
    #[arg(long = "tolerance", value_name = "KEY=VALUE")]
    tolerance: Vec<String>,
}

impl Overrides {
    /// Apply the flags on top of a loaded or synthesized config, then
    /// re-validate the result.
    fn apply(&self, config: &mut ScenarioConfig) -> Result<(), ConfigError> {
        if !self.lambda.is_empty() {
            config.lambda_list = self.lambda.clone();
        }
        if let Some(sign) = &self.sign {
            config.signs = match sign.as_str() {
                "plus" => vec![SignName::Plus],
                "minus" => vec![SignName::Minus],
                "both" => vec![SignName::Plus, SignName::Minus],
                _ => return Err(ConfigError::BadSigns),
            };
        }
        if let Some(grid) = &self.grid {
            config.grid = Some(parse_grid_spec(grid)?);
        }
        if let Some(n_theta) = self.n_theta {
            config.n_theta = n_theta;
        }
        for spec in &self.tolerance {
            let (key, value) = parse_tolerance_spec(spec)?;
            config.tolerances.insert(key, value);
        }
        config.validate()
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, ConfigError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut scenario = ScenarioConfig::from_file(&config)?;
            overrides.apply(&mut scenario)?;
            emit_scenario(&scenario, overrides.csv.as_deref())
        }
        Command::ListCorpus => {
            print!("{}", corpus_table());
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyLie { lambda, csv, tolerance } => {
            let mut scenario = ScenarioConfig::lie_only();
            let overrides = Overrides {
                lambda,
                sign: None,
                grid: None,
                n_theta: None,
                csv,
                tolerance,
            };
            overrides.apply(&mut scenario)?;
            let report = checks::run_scenario(&scenario);
            write_csv(&report, overrides.csv.as_deref())?;
            print!("{}", lie_table(&report));
            Ok(exit_for(&report))
        }
        Command::CheckSuperminimal { target, overrides } => {
            scenario_command(&target, CheckName::Superminimal, &overrides)
        }
        Command::CheckLagrangian { target, overrides } => {
            scenario_command(&target, CheckName::Lagrangian, &overrides)
        }
        Command::MeanCurvatureL { target, overrides } => {
            scenario_command(&target, CheckName::MinimalL, &overrides)
        }
    }
}

fn scenario_command(
    target: &str,
    check: CheckName,
    overrides: &Overrides,
) -> Result<ExitCode, ConfigError> {
    let mut scenario = scenario_for_target(target, check)?;
    overrides.apply(&mut scenario)?;
    emit_scenario(&scenario, overrides.csv.as_deref())
}

/// Resolve a positional target: corpus surface name first, then config file.
fn scenario_for_target(target: &str, check: CheckName) -> Result<ScenarioConfig, ConfigError> {
    if corpus::entry(target).is_some() {
        return Ok(ScenarioConfig::for_surface(
            SurfaceSpec::Builtin { builtin: target.to_string() },
            vec![check],
        ));
    }
    let path = Path::new(target);
    if path.is_file() {
        let mut scenario = ScenarioConfig::from_file(path)?;
        scenario.checks = vec![check];
        scenario.validate()?;
        return Ok(scenario);
    }
    Err(ConfigError::TargetNotFound(target.to_string()))
}

fn emit_scenario(
    scenario: &ScenarioConfig,
    csv: Option<&Path>,
) -> Result<ExitCode, ConfigError> {
    let report = checks::run_scenario(scenario);
    write_csv(&report, csv)?;
    println!("{}", report.to_json());
    Ok(exit_for(&report))
}

fn write_csv(report: &Report, csv: Option<&Path>) -> Result<(), ConfigError> {
    if let Some(path) = csv {
        std::fs::write(path, report.to_csv()).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

fn exit_for(report: &Report) -> ExitCode {
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn corpus_table() -> String {
    let mut out = String::new();
    for entry in corpus::CORPUS.iter() {
        let model = config::ModelName::from_core(entry.model).label();
        out.push_str(&format!(
            "{:<12} model {:<18} expected {:<26} grid {}x{}\n",
            entry.name,
            model,
            entry.expected.label(),
            entry.grid[0],
            entry.grid[1]
        ));
        out.push_str(&format!(
            "    x(u, v) = ({}, {}, {}, {})   (u, v) in [{}, {}] x [{}, {}]\n",
            entry.formulas[0],
            entry.formulas[1],
            entry.formulas[2],
            entry.formulas[3],
            entry.domain[0][0],
            entry.domain[0][1],
            entry.domain[1][0],
            entry.domain[1][1]
        ));
        out.push_str(&format!("    note: {}\n", entry.note));
    }
    out
}

fn lie_table(report: &Report) -> String {
    let check = report
        .checks
        .iter()
        .find(|c| c.name == "lie")
        .expect("lie scenario always contains the lie check");
    let lambdas = report
        .config
        .lambda_list
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    let mut out = format!("so(5) identity suite at lambda = {lambdas}\n");
    let mut worst = 0.0_f64;
    for d in &check.defects {
        worst = worst.max(d.value);
        out.push_str(&format!(
            "  {}  {:<64} residual {:>10.3e}  tol {:>8.1e}\n",
            if d.passed { "PASS" } else { "FAIL" },
            d.name,
            d.value,
            d.tolerance
        ));
    }
    let verdict = if check.defects.iter().all(|d| d.passed) {
        "all pass"
    } else {
        "FAILURES above"
    };
    out.push_str(&format!(
        "{} checks, worst residual {:.3e} — {verdict}\n",
        check.defects.len(),
        worst
    ));
    out
}
