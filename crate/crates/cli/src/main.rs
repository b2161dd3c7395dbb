use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dyna_core::report::{Analysis, AnalysisReport};
use dyna_core::solver::{run_kind, BodyOrder, RunOptions, SolveError, DEFAULT_MAX_ITERS};
use dyna_core::syntax::{parse_analysis_spec, parse_program, AnalysisSpec, ParseError, Program};
use dyna_core::typeinfer::{InferError, InferOptions};
use dyna_core::SemiringKind;

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_NO_FIXPOINT: u8 = 4;

/// Type inference, space/time bounds and a reference interpreter for
/// semiring-weighted logic programs.
#[derive(Parser)]
#[command(name = "dyna-analyze", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer simple types of the items a program derives.
    Types(AnalyzeArgs),
    /// Infer types, then bound the chart size and the running time.
    Bound(AnalyzeArgs),
    /// Evaluate a program on ground data to a fixpoint.
    Run(RunArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Weighted program (.dyna).
    program: PathBuf,
    /// Input types, propagation rules and cardinality declarations (.dtype).
    spec: PathBuf,
    /// Maximum nesting depth of inferred heads; 0 disables truncation.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    /// Semiring the program is read under; inferred from the program if absent.
    #[arg(long)]
    semiring: Option<SemiringKind>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    /// Weighted program (.dyna).
    program: PathBuf,
    /// Ground axioms such as `word(a,0,1) += 1.` (.dyna).
    data: PathBuf,
    #[arg(long)]
    semiring: Option<SemiringKind>,
    /// Also report iteration and prefix-firing counts.
    #[arg(long)]
    stats: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn parse_error(path: &Path, e: ParseError) -> Failure {
    Failure::new(EXIT_PARSE, format!("{}:{e}", path.display()))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|e| parse_error(path, e))
}

fn load_spec(path: &Path) -> Result<AnalysisSpec, Failure> {
    parse_analysis_spec(&read(path)?).map_err(|e| parse_error(path, e))
}

fn semiring(chosen: Option<SemiringKind>, p: &Program) -> Result<SemiringKind, Failure> {
    match chosen {
        Some(k) => Ok(k),
        None => SemiringKind::for_program(p).map_err(|e| Failure::new(EXIT_PARSE, e.to_string())),
    }
}

fn analyze(args: &AnalyzeArgs, bounds: bool) -> Result<String, Failure> {
    let program = load_program(&args.program)?;
    let spec = load_spec(&args.spec)?;
    let kind = semiring(args.semiring, &program)?;
    let opts = InferOptions {
        depth: (args.depth > 0).then_some(args.depth),
        max_rounds: args.max_rounds,
        ..InferOptions::default()
    };
    let analysis = Analysis::new(program, spec, kind, &opts).map_err(|e| match e {
        InferError::Diverged { .. } => Failure::new(EXIT_DIVERGED, e.to_string()),
        InferError::Limit(l) => Failure::new(EXIT_DIVERGED, l.to_string()),
    })?;
    let report = if bounds {
        analysis.bounds_report()
    } else {
        analysis.types_report()
    }
    .map_err(|e| Failure::new(EXIT_DIVERGED, e.to_string()))?;
    Ok(render(&report, args.format, bounds))
}

fn render(report: &AnalysisReport, format: Format, bounds: bool) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Text if bounds => report.bounds_text(),
        Format::Text => report.types_text(),
    }
}

fn run(args: &RunArgs) -> Result<String, Failure> {
    let program = load_program(&args.program)?;
    let data = load_program(&args.data)?;
    let kind = semiring(args.semiring, &program)?;
    let opts = RunOptions {
        max_iters: args.max_iters,
    };
    let (values, stats) =
        run_kind(kind, &program, &data.rules, &opts, &BodyOrder).map_err(|e| match e {
            SolveError::NonConvergence { .. } => Failure::new(EXIT_NO_FIXPOINT, e.to_string()),
            e => Failure::new(EXIT_FAILURE, e.to_string()),
        })?;
    let mut out = String::new();
    match args.format {
        Format::Json => {
            let values: serde_json::Map<String, serde_json::Value> = values
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone())))
                .collect();
            let mut doc = serde_json::json!({ "semiring": kind.name(), "values": values });
            if args.stats {
                doc["stats"] = serde_json::to_value(&stats).expect("stats serialize");
            }
            out = serde_json::to_string_pretty(&doc).expect("json serializes") + "\n";
        }
        Format::Text => {
            for (k, v) in &values {
                out.push_str(&format!("{k} = {v}\n"));
            }
            if args.stats {
                out.push_str(&format!("% iterations: {}\n", stats.iterations));
                out.push_str(&format!("% prefix_firings: {}\n", stats.prefix_firings));
                let firings: Vec<String> = stats.rule_firings.iter().map(u64::to_string).collect();
                out.push_str(&format!("% rule_firings: {}\n", firings.join(" ")));
                out.push_str(&format!("% cyclic: {}\n", stats.cyclic));
            }
            if stats.cyclic {
                out.push_str("% warning: cyclic dependencies; time bounds do not apply\n");
            }
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Types(a) => analyze(a, false),
        Command::Bound(a) => analyze(a, true),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("dyna-analyze: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
