//! Command-line front end: run experiment specs, compare measurement
//! frontiers, and prepare classification datasets.

use clap::{Args, Parser, Subcommand};
use shotgrad::harness::{
    build_task, first_crossing, frontier_curve, load_spec, merge_frontiers, run_ensemble,
    BuiltTask,
};
use shotgrad::tasks::{load_classification_data, write_split_csv, DataSource, SyntheticConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "shotgrad", about = "Finite-shot stochastic gradient descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ensemble described by a spec file and write CSV traces.
    Run(RunArgs),
    /// Run several specs of one task and merge their loss-vs-measurement
    /// curves.
    Compare(CompareArgs),
    /// Dataset utilities.
    Data {
        #[command(subcommand)]
        command: DataCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec file (key = value lines).
    spec: PathBuf,
    /// Concurrent runs (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory for trace and summary CSVs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override run.base_seed from the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the task circuit (one gate per line) before running.
    #[arg(long)]
    dump_circuit: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more spec files sharing one task.
    #[arg(required = true)]
    specs: Vec<PathBuf>,
    /// Loss threshold for the crossing report.
    #[arg(long)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory; the merged curve lands in compare.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DataCommand {
    /// Build the classification dataset cache (CSV, features then label).
    Prepare(PrepareArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// Data source.
    #[arg(long, value_parser = ["mnist", "synthetic"])]
    source: String,
    /// Output directory for train.csv and validation.csv.
    #[arg(long)]
    out: PathBuf,
    /// Directory holding the raw IDX files (mnist source); falls back to
    /// SHOTGRAD_DATA_DIR.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Synthetic: register size.
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    /// Synthetic: training instances per class.
    #[arg(long, default_value_t = 32)]
    train_per_class: usize,
    /// Synthetic: validation instances per class.
    #[arg(long, default_value_t = 24)]
    validation_per_class: usize,
    /// Synthetic: cluster spread.
    #[arg(long, default_value_t = 0.25)]
    noise: f64,
    /// Synthetic: generator seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn dump_circuit(task: &BuiltTask) -> String {
    match task {
        BuiltTask::Tfim(t) => t.circuit.to_text(),
        BuiltTask::MaxCut(t) => t.circuit.to_text(),
        BuiltTask::Classifier { task, .. } => task.encoding.circuit.to_text(),
    }
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> shotgrad::Error {
    shotgrad::Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn cmd_run(args: &RunArgs) -> shotgrad::Result<()> {
    let mut spec = load_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    if args.dump_circuit {
        print!("{}", dump_circuit(&build_task(&spec.task)?));
    }
    let result = run_ensemble(&spec, args.jobs, Some(&args.out))?;
    let last = result.summary.last().expect("nonempty summary");
    println!(
        "{} runs, {} steps, mc1={}",
        result.traces.len(),
        last.step + 1,
        result.mc1
    );
    println!(
        "final loss min/mean/max: {} / {} / {}",
        last.loss_min, last.loss_mean, last.loss_max
    );
    println!(
        "total measurements (mean): {} ({}x mc1)",
        last.meas_cum,
        last.meas_cum / result.mc1 as f64
    );
    println!("traces written to {}", args.out.display());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> shotgrad::Result<()> {
    let mut results = Vec::new();
    for (i, path) in args.specs.iter().enumerate() {
        let spec = load_spec(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("spec{i}"));
        let outdir = args.out.join(format!("cmp_{i}_{label}"));
        let result = run_ensemble(&spec, args.jobs, Some(&outdir))?;
        results.push((label, result));
    }
    let borrowed: Vec<(String, &shotgrad::harness::EnsembleResult)> = results
        .iter()
        .map(|(label, r)| (label.clone(), r))
        .collect();
    let merged = merge_frontiers(&borrowed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let csv_path = args.out.join("compare.csv");
    std::fs::write(&csv_path, merged.to_csv()).map_err(|e| io_error(&csv_path, e))?;

    println!("threshold {}:", args.threshold);
    for (label, result) in &results {
        let curve = frontier_curve(label.clone(), result);
        match first_crossing(&curve, args.threshold) {
            Some(x) => println!("  {label}: reached at {x} x mc1"),
            None => println!("  {label}: not reached"),
        }
    }
    println!("merged curve written to {}", csv_path.display());
    Ok(())
}

fn cmd_prepare(args: &PrepareArgs) -> shotgrad::Result<()> {
    let source = match args.source.as_str() {
        "mnist" => DataSource::MnistFiles {
            dir: args.data_dir.clone(),
        },
        _ => DataSource::Synthetic(SyntheticConfig {
            num_qubits: args.qubits,
            train_per_class: args.train_per_class,
            validation_per_class: args.validation_per_class,
            noise: args.noise,
            seed: args.seed,
        }),
    };
    let dataset = load_classification_data(&source)?;
    std::fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    write_split_csv(&args.out.join("train.csv"), &dataset.train)?;
    write_split_csv(&args.out.join("validation.csv"), &dataset.validation)?;
    println!(
        "wrote {} train and {} validation instances ({} features) to {}",
        dataset.train.len(),
        dataset.validation.len(),
        dataset.feature_dim(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Data { command } => match command {
            DataCommand::Prepare(args) => cmd_prepare(args),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
