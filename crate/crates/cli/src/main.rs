use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eqnf_cli::{read_problem, run, CliError, Command, Overrides, EXIT_INVARIANT, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "eqnf",
    version,
    about = "Normal forms and periodic-point reduction for equivariant maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Jordan-Chevalley and semisimple-unipotent splitting of the linear part.
    Decompose(Args),
    /// Symmetry-preserving normal form up to the truncation order.
    NormalForm(Args),
    /// Reduction to the space of q-periodic candidates.
    Reduce(Args),
    /// Search for q-periodic points through the reduced equation.
    Periodic(Args),
    /// Run every invariant check against the problem.
    Verify(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Problem file (TOML).
    file: PathBuf,
    /// Truncation order k.
    #[arg(long)]
    order: Option<usize>,
    /// Period q.
    #[arg(long)]
    period: Option<usize>,
    /// Pass/fail threshold for residuals.
    #[arg(long)]
    tol: Option<f64>,
    /// Trust radius of the reduction.
    #[arg(long)]
    radius: Option<f64>,
    /// Parameter grid: start:end:count per parameter, comma separated.
    #[arg(long = "lambda-grid")]
    lambda_grid: Option<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Machine,
}

fn execute(cmd: Command, args: &Args) -> Result<i32, CliError> {
    let file = read_problem(&args.file)?;
    let overrides = Overrides {
        order: args.order,
        period: args.period,
        tol: args.tol,
        radius: args.radius,
        lambda_grid: args.lambda_grid.clone(),
    };
    let problem = file.resolve(&overrides)?;
    let report = run(cmd, &problem)?;
    let text = match args.format {
        Format::Text => report.to_text(),
        Format::Machine => report.to_json(),
    };
    match &args.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(if report.pass() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        Sub::Decompose(a) => (Command::Decompose, a),
        Sub::NormalForm(a) => (Command::NormalForm, a),
        Sub::Reduce(a) => (Command::Reduce, a),
        Sub::Periodic(a) => (Command::Periodic, a),
        Sub::Verify(a) => (Command::Verify, a),
    };
    let code = execute(cmd, args).unwrap_or_else(|e| {
        eprintln!("eqnf: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
