use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use limred_cli::experiment::{
    emit_report, run_experiment, Algorithm, ExperimentConfig, LimitConfig, PorkSide,
};
use limred_cli::model_io::load_model;
use limred_cli::{CliError, Result};

/// Frequency- and time-limited H2 model order reduction.
#[derive(Parser)]
#[command(name = "limred", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a model and write a report under the output directory.
    Reduce(ReduceArgs),
    /// Report how close a reduced model is to limited-H2 stationarity.
    Audit(AuditArgs),
    /// Run an experiment described by a JSON config file.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ReduceArgs {
    /// Model file: JSON bundle or manifest of Matrix Market files.
    #[arg(long)]
    model: PathBuf,
    /// Horizon, freq:<w1>:<w2> or time:<t1>:<t2>; band edges are the
    /// positive pair, the negative mirror is implicit.
    #[arg(long)]
    limit: String,
    /// Reduction algorithm.
    #[arg(long, value_enum)]
    algo: Algorithm,
    /// Reduced orders, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    orders: Vec<usize>,
    /// Seed for the default initial reduced models.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative shift-change threshold that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    max_iter: usize,
    /// Output directory for the report and plot data.
    #[arg(long)]
    out: PathBuf,
    /// Initial reduced model (JSON bundle) for the iterative algorithms.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Skip per-order response-curve files.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// Model file: JSON bundle or manifest of Matrix Market files.
    #[arg(long)]
    model: PathBuf,
    /// Reduced model file.
    #[arg(long)]
    rom: PathBuf,
    /// Horizon, freq:<w1>:<w2> or time:<t1>:<t2>.
    #[arg(long)]
    limit: String,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Reduce(args) => reduce(args),
        Command::Audit(args) => audit(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn reduce(args: ReduceArgs) -> Result<ExitCode> {
    let config = ExperimentConfig {
        model: args.model,
        limit: LimitConfig::parse(&args.limit)?,
        algorithm: args.algo,
        orders: args.orders,
        seed: args.seed,
        tolerance: args.tol,
        max_iterations: args.max_iter,
        out_dir: args.out,
        init: args.init,
        pork_side: PorkSide::default(),
        emit_plots: !args.no_plots,
    };
    run_and_emit(&config)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(args.config.clone())
        } else {
            CliError::Io {
                path: args.config.clone(),
                source: e,
            }
        }
    })?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: args.config.clone(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    run_and_emit(&config)
}

fn run_and_emit(config: &ExperimentConfig) -> Result<ExitCode> {
    let report = run_experiment(config)?;
    let files = emit_report(&report, &config.out_dir)?;
    for row in &report.rows {
        match &row.error {
            None => println!(
                "order {}: error_norm {:.6e}, converged {}, {} iteration(s)",
                row.order,
                row.error_norm.unwrap_or(f64::NAN),
                row.converged.unwrap_or(false),
                row.iterations.unwrap_or(0),
            ),
            Some(message) => println!("order {}: failed: {message}", row.order),
        }
    }
    for file in &files {
        println!("wrote {}", file.display());
    }
    let all_failed = !report.rows.is_empty() && report.rows.iter().all(|r| r.error.is_some());
    if all_failed {
        eprintln!("error: every requested order failed; see the report for details");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn audit(args: AuditArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let rom = load_model(&args.rom)?;
    let limit = LimitConfig::parse(&args.limit)?.to_spec()?;
    let report = limred::audit::gramian_conditions(&model, &rom, None, &limit)?;
    let norm = limred::gramians::limited_h2_error(&model, &rom, &limit)?;
    let max = |xs: &[f64]| xs.iter().cloned().fold(0.0, f64::max);
    let summary = serde_json::json!({
        "error_norm": norm,
        "res_B": report.res_b_relative(),
        "res_C": report.res_c_relative(),
        "res_A": report.res_a_relative(),
        "wilson_residual": report.wilson_res,
        "interp_right_max": max(&report.interp_right),
        "interp_left_max": max(&report.interp_left),
        "interp_hermite_max": max(&report.interp_hermite),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
    Ok(ExitCode::SUCCESS)
}
