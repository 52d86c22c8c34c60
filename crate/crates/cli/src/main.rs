use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sizax::interp::{self, InputGen, Status};
use sizax::pipeline::{self, analyze, interpretation_lines, load, validate, Analysis, Options};
use sizax::solver::{self, SearchStrategy, SolverConfig};
use sizax::syntax::{parser, pretty};
use sizax::ticking::tick_program;

/// Size and running time analysis for small functional programs.
#[derive(Parser)]
#[command(name = "sizax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer sized types and running time bounds.
    Analyze(AnalyzeArgs),
    /// Check the sized type annotations of a program.
    Check(AnalyzeArgs),
    /// Print the clock-threading translation of a program.
    Tick { file: PathBuf },
    /// Solve a constraint file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        certify: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evaluate a closed expression.
    Run {
        file: PathBuf,
        expr: String,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
        /// Evaluate in the clock-threading translation and print the clock.
        #[arg(long)]
        ticked: bool,
    },
    /// Compare an analysis with runs on generated inputs.
    Validate {
        file: PathBuf,
        #[arg(long)]
        entry: Vec<String>,
        /// Largest size of a generated argument.
        #[arg(long, default_value_t = 15)]
        budget: u64,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
        #[arg(long)]
        check: bool,
        #[arg(long)]
        specialize: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// Skip the running time analysis.
    #[arg(long)]
    size_only: bool,
    /// Check user annotations instead of inferring every type.
    #[arg(long)]
    check: bool,
    /// Include the running time analysis (for `check`).
    #[arg(long)]
    tick: bool,
    /// Print the interpretation and its certificate.
    #[arg(long)]
    certify: bool,
    /// Print the generated size constraints.
    #[arg(long)]
    constraints: bool,
    #[arg(long)]
    specialize: bool,
    /// Restrict the report to these functions.
    #[arg(long)]
    entry: Vec<String>,
    /// Interpretation of symbols used in annotations, `F(x) = ...` per line.
    #[arg(long)]
    interp: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SolverArgs {
    /// Largest degree of interpretation polynomials.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Largest coefficient tried first.
    #[arg(long, default_value_t = 3)]
    coeff_bound: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Take the first solution found instead of one with least coefficient sum.
    #[arg(long)]
    backtracking: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig {
            max_degree: self.degree,
            coeff_bound: self.coeff_bound,
            seed: self.seed,
            timeout: Some(Duration::from_secs(30)),
            strategy: if self.backtracking { SearchStrategy::Backtracking } else { SearchStrategy::Restart },
            ..SolverConfig::default()
        };
        cfg = cfg.with_env_timeout();
        cfg
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run_analyze(a: &AnalyzeArgs, check_cmd: bool) -> Result<bool> {
    let prog = load(&read(&a.file)?)?;
    let given = match &a.interp {
        Some(p) => parser::parse_interpretation(&read(p)?)?,
        None => Default::default(),
    };
    let opts = Options {
        size_only: a.size_only || (check_cmd && !a.tick),
        check: a.check || check_cmd,
        specialize: a.specialize,
        solver: a.solver.config(),
        given,
    };
    let analysis: Analysis = analyze(&prog, &opts)?;
    let report = analysis.report(&a.entry);
    match a.format {
        Format::Text => {
            print!("{}", report.text(a.certify));
            if a.constraints {
                print!("\nconstraints:\n{}", analysis.sizes.constraints.export());
            }
        }
        Format::Json => print_json(&report)?,
    }
    Ok(report.all_bounded())
}

fn run_solve(file: &Path, solver: &SolverArgs, certify: bool, format: Format) -> Result<bool> {
    let cs = parser::parse_constraints(&read(file)?)?;
    let sol = match solver::solve(&cs, &solver.config()) {
        Ok(s) => s,
        Err(e) => {
            match format {
                Format::Text => println!("{e}"),
                Format::Json => print_json(&json!({ "error": e.to_string() }))?,
            }
            return Ok(false);
        }
    };
    let lines = interpretation_lines(&sol.interpretation);
    match format {
        Format::Text => {
            for l in &lines {
                println!("{l}");
            }
            if certify {
                let mut out = String::new();
                pipeline::certificate_text(&mut out, &sol.certificate);
                print!("{out}");
            }
        }
        Format::Json => print_json(&json!({
            "interpretation": lines,
            "groups": sol.groups,
            "certificate": if certify { Some(&sol.certificate) } else { None },
        }))?,
    }
    Ok(true)
}

fn run_expr(file: &Path, expr: &str, fuel: u64, ticked: bool) -> Result<bool> {
    let prog = load(&read(file)?)?;
    let prog = if ticked { tick_program(&prog)?.program } else { prog };
    let term = parser::parse_term(expr, &prog)?;
    let r = interp::reduce_cbv(&prog, &term, fuel)?;
    match (r.status, r.value) {
        (Status::Finished, Some(v)) => {
            println!("{v}");
            println!("steps: {}", r.steps);
            Ok(true)
        }
        _ => {
            println!("out of fuel after {} steps", r.steps);
            Ok(false)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_validate(
    file: &Path,
    entries: &[String],
    budget: u64,
    fuel: u64,
    check: bool,
    specialize: bool,
    solver: &SolverArgs,
    format: Format,
) -> Result<bool> {
    let prog = load(&read(file)?)?;
    let opts = Options { check, specialize, solver: solver.config(), ..Options::default() };
    let a = analyze(&prog, &opts)?;
    let entries = if entries.is_empty() { interp::entry_points(&a.program) } else { entries.to_vec() };
    let gen = InputGen { budget, seed: solver.seed, ..InputGen::default() };
    let mut reports = Vec::new();
    for e in &entries {
        if a.sizes.declaration(e).is_none() {
            if entries.len() == 1 {
                bail!("`{e}` has no sized type");
            }
            continue;
        }
        reports.push(validate(&a, e, &gen, fuel)?);
    }
    match format {
        Format::Text => {
            for r in &reports {
                print!("{}", r.text());
            }
        }
        Format::Json => print_json(&reports)?,
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(a) => run_analyze(a, false),
        Command::Check(a) => run_analyze(a, true),
        Command::Tick { file } => read(file)
            .and_then(|src| Ok(load(&src)?))
            .and_then(|p| Ok(tick_program(&p)?))
            .map(|t| {
                print!("{}", pretty::program(&t.program));
                true
            }),
        Command::Solve { file, solver, certify, format } => run_solve(file, solver, *certify, *format),
        Command::Run { file, expr, fuel, ticked } => run_expr(file, expr, *fuel, *ticked),
        Command::Validate { file, entry, budget, fuel, check, specialize, solver, format } => {
            run_validate(file, entry, *budget, *fuel, *check, *specialize, solver, *format)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
