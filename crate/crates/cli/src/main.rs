//! `incmeter`: analyze case streams against a shared rule set, generate
//! synthetic inputs, check the culpability postulates, and time the
//! pipeline.
//!
//! Exit status is 0 on success, 1 on bad input or configuration, and 2 when
//! an enumeration budget runs out.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use incmeter::bench::{bench_csv, run_bench, BenchConfig};
use incmeter::parser::render_case_jsonl;
use incmeter::postulates::{table_for, Postulate, TABLED_MEASURES};
use incmeter::report::{build_report, ReportOptions};
use incmeter::synth::{generate_cases, GenConfig, Shape};
use incmeter::{build_caseset, parse_cases, parse_rules, Budget, CaseFormat, Error, IngestOptions, Registry};

#[derive(Parser)]
#[command(
    name = "incmeter",
    version,
    about = "Inconsistency and culpability measurement for business rule bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the rules of a rule file by their culpability over a case stream.
    Analyze(AnalyzeArgs),
    /// Write a synthetic rule file and case stream.
    Generate(GenerateArgs),
    /// Fuzz the culpability postulates and print the compliance table.
    Check(CheckArgs),
    /// Time the analysis over a grid of synthetic inputs, as CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BudgetArgs {
    /// Minimal inconsistent subsets allowed per case.
    #[arg(long, env = "INCMETER_BUDGET_MIS", default_value_t = Budget::default().max_mis)]
    max_mis: usize,
    /// Minimal supports kept per literal during enumeration.
    #[arg(long, default_value_t = Budget::default().max_supports_per_literal)]
    max_supports: usize,
    /// Largest player set for exact Shapley enumeration.
    #[arg(long, default_value_t = Budget::default().max_players)]
    max_players: usize,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget {
            max_mis: self.max_mis,
            max_supports_per_literal: self.max_supports,
            max_players: self.max_players,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Rule file, one `body -> head.` per statement.
    #[arg(long)]
    rules: PathBuf,
    /// Case stream (JSONL or CSV).
    #[arg(long)]
    cases: PathBuf,
    /// Case format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<CaseFormat>,
    /// Comma-separated measure names.
    #[arg(long, value_delimiter = ',', default_value = "mi,cd,chash,adj-shapley-mi")]
    measures: Vec<String>,
    /// Culpability measure to rank by (default: the first one listed).
    #[arg(long)]
    rank_by: Option<String>,
    /// Report file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    output_format: ReportFormat,
    /// Render only the first k rules of the ranking.
    #[arg(long)]
    top: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Accept cases that assert both `a` and `-a`.
    #[arg(long)]
    allow_contradictory_facts: bool,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of rules.
    #[arg(long = "rules", default_value_t = 10)]
    n_rules: usize,
    /// Number of cases.
    #[arg(long = "cases", default_value_t = 100)]
    n_cases: usize,
    /// Probability that an atom is a fact of a case.
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `chain` or `random`.
    #[arg(long, default_value = "chain")]
    shape: Shape,
    /// Where to write the rule file.
    #[arg(long)]
    rules_out: PathBuf,
    /// Where to write the cases (JSONL).
    #[arg(long)]
    cases_out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    /// Postulates to check, comma-separated (default: all).
    #[arg(long, value_delimiter = ',')]
    postulate: Vec<String>,
    /// Culpability measures, comma-separated (default: cd, chash, adj-shapley-mi).
    #[arg(long, value_delimiter = ',')]
    measure: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: TableFormat,
}

#[derive(Args)]
struct BenchArgs {
    /// Rule counts, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "10,20")]
    sizes: Vec<usize>,
    /// Case counts, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000")]
    cases: Vec<usize>,
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "chain")]
    shape: Shape,
    /// Runs per cell; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "mi,cd,chash,shapley-mi")]
    measures: Vec<String>,
    /// CSV file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Generate(args) => generate(args),
        Command::Check(args) => check(args),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("incmeter: {e}");
            if e.is_budget() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn with_path(path: &Path, e: impl Into<Error>) -> Error {
    match e.into() {
        Error::Parse(p) => Error::InvalidConfig(format!("{}: {p}", path.display())),
        Error::Io(io) => Error::InvalidConfig(format!("{}: {io}", path.display())),
        other => other,
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| with_path(path, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let rules_text = fs::read_to_string(&args.rules).map_err(|e| with_path(&args.rules, e))?;
    let program = parse_rules(&rules_text).map_err(|e| with_path(&args.rules, e))?;

    let format = match args.format {
        Some(f) => f,
        None => CaseFormat::from_path(&args.cases).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}: cannot tell the case format from the extension; pass --format",
                args.cases.display()
            ))
        })?,
    };
    let file = File::open(&args.cases).map_err(|e| with_path(&args.cases, e))?;
    let options = IngestOptions {
        allow_contradictory_facts: args.allow_contradictory_facts,
    };
    let cases = parse_cases(BufReader::new(file), format, options).map_err(|e| with_path(&args.cases, e))?;

    let caseset = build_caseset(program, cases);
    let analysis = caseset.analyze(&args.budget.budget(), args.workers)?;
    let report = build_report(
        &analysis,
        &Registry::standard(),
        &ReportOptions {
            measures: args.measures,
            rank_by: args.rank_by,
        },
    )?;
    let text = match args.output_format {
        ReportFormat::Json => report.to_json(args.top),
        ReportFormat::Csv => report.to_csv(args.top)?,
    };
    emit(args.output.as_deref(), &text)
}

fn generate(args: GenerateArgs) -> Result<(), Error> {
    let caseset = generate_cases(&GenConfig {
        n_rules: args.n_rules,
        n_cases: args.n_cases,
        fact_probability: args.p,
        seed: args.seed,
        shape: args.shape,
    })?;
    fs::write(&args.rules_out, caseset.program().render()).map_err(|e| with_path(&args.rules_out, e))?;
    let mut jsonl = String::new();
    for case in caseset.cases() {
        jsonl.push_str(&render_case_jsonl(case));
        jsonl.push('\n');
    }
    fs::write(&args.cases_out, jsonl).map_err(|e| with_path(&args.cases_out, e))
}

fn check(args: CheckArgs) -> Result<(), Error> {
    let postulates = if args.postulate.is_empty() {
        Postulate::ALL.to_vec()
    } else {
        args.postulate
            .iter()
            .map(|p| p.parse())
            .collect::<Result<Vec<Postulate>, _>>()?
    };
    let measures: Vec<&str> = if args.measure.is_empty() {
        TABLED_MEASURES.to_vec()
    } else {
        args.measure.iter().map(String::as_str).collect()
    };
    let table = table_for(&Registry::standard(), &measures, &postulates, args.trials, args.seed)?;
    let text = match args.format {
        TableFormat::Text => table.render_text(),
        TableFormat::Json => table.to_json() + "\n",
    };
    emit(None, &text)
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let config = BenchConfig {
        sizes: args.sizes,
        cases: args.cases,
        fact_probability: args.p,
        seed: args.seed,
        shape: args.shape,
        measures: args.measures,
        workers: args.workers,
        repeats: args.repeats,
        budget: args.budget.budget(),
    };
    let cells = run_bench(&config, &Registry::standard())?;
    emit(args.output.as_deref(), &bench_csv(&cells))
}
