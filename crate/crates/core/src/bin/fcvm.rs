use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flatcurry::engine::WriteTracer;
use flatcurry::frontend::{parse_program_with, parse_restricted_with, parse_unchecked, ParseOptions};
use flatcurry::oracle::{compare_answers, run_oracle_restricted, CompareMode, OracleLimits, OracleStop};
use flatcurry::{pretty_print_restricted, restrict, validate_program, validate_restricted, Limits, Machine, RProgram, StopReason};

const EXIT_ANSWERS: u8 = 0;
const EXIT_NO_ANSWERS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TRUNCATED: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "fcvm", version, about = "Run, flatten and check FlatCurry programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the answers of `main`.
    Run(RunArgs),
    /// Print the restricted form of a program.
    Flatten {
        file: PathBuf,
    },
    /// Validate a program and print its diagnostics.
    Check {
        file: PathBuf,
        /// Also check the restricted-form shape rules.
        #[arg(long)]
        restricted: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Stop after N answers.
    #[arg(short = 'n', value_name = "N", value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "all")]
    limit: Option<u64>,
    /// Enumerate every answer (the default).
    #[arg(long)]
    all: bool,
    #[arg(long, value_name = "K", default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// Print one line per rule firing on standard error.
    #[arg(long)]
    trace: bool,
    /// Write the reachable graph at each answer and at exhaustion.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Cross-check the answers with the reference interpreter.
    #[arg(long)]
    oracle: bool,
    #[arg(long, conflicts_with = "multiset")]
    ordered: bool,
    #[arg(long)]
    multiset: bool,
    /// Print failed attempts as `<fail>`.
    #[arg(long)]
    show_failures: bool,
    /// The input is already in restricted form.
    #[arg(long)]
    restricted: bool,
}

fn read(file: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(file).map_err(|e| {
        eprintln!("fcvm: cannot read {}: {e}", file.display());
        ExitCode::from(EXIT_USAGE)
    })
}

fn options(file: &Path, generated_names: bool) -> ParseOptions {
    ParseOptions { file: file.display().to_string(), generated_names }
}

fn load(file: &Path, restricted: bool) -> Result<RProgram, ExitCode> {
    let text = read(file)?;
    let parsed = if restricted {
        parse_restricted_with(&text, &options(file, true))
    } else {
        parse_program_with(&text, &options(file, false)).map(|p| restrict(&p))
    };
    parsed.map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(EXIT_USAGE)
    })
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, ExitCode> {
    let program = load(&args.file, args.restricted)?;
    let limits = Limits {
        max_steps: args.max_steps,
        max_answers: args.limit.map(|n| n as usize),
        keep_failures: args.show_failures,
        ..Limits::default()
    };
    let mut machine = Machine::new(&program, limits).map_err(|e| {
        eprintln!("fcvm: {e}");
        ExitCode::from(EXIT_USAGE)
    })?;
    if args.trace {
        machine.set_tracer(Box::new(WriteTracer(io::stderr())));
    }

    let mut dots = Vec::new();
    let stdout = io::stdout();
    let result = machine.run_with(|m, root, answer| {
        if answer.is_value() || args.show_failures {
            let mut out = stdout.lock();
            let _ = writeln!(out, "{answer}");
            let _ = out.flush();
        }
        if args.dot.is_some() {
            dots.push(m.graph.to_dot_named(root, &format!("answer{}", dots.len() + 1)));
        }
    });
    if let (Some(path), Some(root)) = (&args.dot, machine.graph.root) {
        dots.push(machine.graph.to_dot_named(root, "final"));
        if let Err(e) = fs::write(path, dots.concat()) {
            eprintln!("fcvm: cannot write {}: {e}", path.display());
            return Err(ExitCode::from(EXIT_USAGE));
        }
    }

    let mut code = if result.values().is_empty() { EXIT_NO_ANSWERS } else { EXIT_ANSWERS };
    match &result.stop {
        StopReason::Exhausted | StopReason::AnswerLimit => {}
        StopReason::Truncated(e) => {
            eprintln!("fcvm: truncated: {e}");
            code = EXIT_TRUNCATED;
        }
        StopReason::Error(e) => {
            eprintln!("fcvm: {e}");
            return Err(ExitCode::from(EXIT_USAGE));
        }
    }

    if args.oracle {
        let limits = OracleLimits { max_steps: args.max_steps, max_answers: limits.max_answers, ..OracleLimits::default() };
        let reference = run_oracle_restricted(&program, limits).map_err(|e| {
            eprintln!("fcvm: oracle: {e}");
            ExitCode::from(EXIT_USAGE)
        })?;
        let truncated = match &reference.stop {
            OracleStop::Exhausted | OracleStop::AnswerLimit => false,
            OracleStop::Truncated(e) => {
                eprintln!("fcvm: oracle truncated: {e}");
                true
            }
            OracleStop::Error(e) => {
                eprintln!("fcvm: oracle: {e}");
                return Err(ExitCode::from(EXIT_USAGE));
            }
        };
        if truncated || result.is_truncated() {
            println!("ORACLE: INCONCLUSIVE");
            return Ok(ExitCode::from(EXIT_TRUNCATED));
        }
        let mode = if args.multiset { CompareMode::Multiset } else { CompareMode::Ordered };
        let cmp = compare_answers(&result.answers, &reference.answers, mode);
        println!("ORACLE: {cmp}");
        if !cmp.is_equal() {
            return Ok(ExitCode::from(EXIT_MISMATCH));
        }
    }
    Ok(ExitCode::from(code))
}

fn cmd_flatten(file: PathBuf) -> Result<ExitCode, ExitCode> {
    let program = load(&file, false)?;
    print!("{}", pretty_print_restricted(&program));
    Ok(ExitCode::from(EXIT_ANSWERS))
}

fn cmd_check(file: PathBuf, restricted: bool) -> Result<ExitCode, ExitCode> {
    let text = read(&file)?;
    let program = parse_unchecked(&text, &options(&file, restricted)).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(EXIT_USAGE)
    })?;
    let report = if restricted { validate_restricted(&program) } else { validate_program(&program) };
    if report.is_ok() {
        println!("OK");
        return Ok(ExitCode::from(EXIT_ANSWERS));
    }
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
    Err(ExitCode::from(EXIT_USAGE))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let r = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Flatten { file } => cmd_flatten(file),
        Command::Check { file, restricted } => cmd_check(file, restricted),
    };
    r.unwrap_or_else(|code| code)
}
