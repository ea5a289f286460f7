//! Batch CLI: instance generation, single solves, experiment sweeps, and
//! report conversion.
//!
//! Exit codes: 0 on success, 2 when an instance is infeasible (budget below
//! the shortest start-end distance, or a disconnected roadmap), 1 on any
//! other error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use fieldpath_core::error::{Error, Result};
use fieldpath_core::estimator::PredictionSet;
use fieldpath_core::experiment::{
    emit_report, run_experiment, solve_record, write_csv, write_json, ExperimentSpec, Method,
    ReportFormat, ResultRecord,
};
use fieldpath_core::graphs::{grid_graph, prm_graph, Rect};
use fieldpath_core::instance::{load_instance, save_instance, LoadedInstance};
use fieldpath_core::model::{IppInstance, SparseSsInstance};
use fieldpath_core::randfield::{Kernel, Point, RandomFieldModel};
use fieldpath_core::rng::{derive_seed, SplitMix64};

#[derive(Parser)]
#[command(
    name = "fieldpath",
    version,
    about = "Budget-constrained measurement-path planning in random fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded problem instance from a generation spec
    Gen {
        /// Generation spec (JSON)
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance file to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance file with a chosen method
    Solve {
        /// Instance file (JSON)
        #[arg(long)]
        spec: PathBuf,
        /// miqp | bnb | greedy | oracle
        #[arg(long, default_value = "miqp")]
        method: String,
        /// Wall-clock limit in seconds
        #[arg(long)]
        time_limit: Option<f64>,
        /// Report file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv | json
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Run an experiment sweep from a spec file
    Bench {
        /// Experiment spec (JSON)
        #[arg(long)]
        spec: PathBuf,
        /// Override the spec's base seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the spec's per-method time limit in seconds
        #[arg(long)]
        time_limit: Option<f64>,
        /// Report file to write
        #[arg(long)]
        out: PathBuf,
        /// csv | json
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Convert a JSON results file into csv or json
    Report {
        /// Results file previously written with --format json
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// csv | json
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

/// Instance-generation description.
#[derive(Debug, Deserialize)]
struct GenSpec {
    /// grid | prm | sparse-ss
    kind: String,
    kernel: Kernel,
    noise_variance: f64,
    prediction_count: usize,
    /// grid side length
    n: Option<usize>,
    edge_length: Option<f64>,
    /// roadmap or observation-set size
    m: Option<usize>,
    connection_factor: Option<usize>,
    bounds: Option<Rect>,
    cardinality: Option<usize>,
    /// sampling box for scattered observation sets
    box_size: Option<[f64; 2]>,
    budget: Option<f64>,
    budget_factor: Option<f64>,
}

fn require<T>(v: Option<T>, what: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("'{what}' is required for kind '{kind}'")))
}

fn resolve_budget(spec: &GenSpec, shortest: f64) -> Result<f64> {
    match (spec.budget, spec.budget_factor) {
        (Some(b), None) => Ok(b),
        (None, Some(f)) => Ok(f * shortest),
        _ => Err(Error::InvalidParameter(
            "exactly one of budget / budget_factor is required".into(),
        )),
    }
}

fn generate(spec: &GenSpec, seed: u64) -> Result<LoadedInstance> {
    let field = RandomFieldModel::new(spec.kernel.clone(), spec.noise_variance)?;
    let mut rng = SplitMix64::new(derive_seed(seed, 0x0b5e55ed));
    let sample_omega = |rng: &mut SplitMix64, min: [f64; 2], max: [f64; 2]| -> Result<PredictionSet> {
        let pts: Vec<Point> = (0..spec.prediction_count)
            .map(|_| Point::xy(rng.next_range(min[0], max[0]), rng.next_range(min[1], max[1])))
            .collect();
        let w: Vec<f64> = (0..spec.prediction_count).map(|_| rng.next_f64()).collect();
        PredictionSet::new(pts, w)
    };

    match spec.kind.as_str() {
        "grid" => {
            let n = require(spec.n, "n", "grid")?;
            let graph = grid_graph(n, spec.edge_length.unwrap_or(1.0))?;
            let span = (n - 1) as f64 * spec.edge_length.unwrap_or(1.0);
            let omega = sample_omega(&mut rng, [0.0, 0.0], [span, span])?;
            let shortest = graph.shortest_from(graph.start())[graph.end()];
            let budget = resolve_budget(spec, shortest)?;
            Ok(LoadedInstance::Ipp(IppInstance::new(field, graph, omega, budget)?))
        }
        "prm" => {
            let m = require(spec.m, "m", "prm")?;
            let bounds = match spec.bounds {
                Some(b) => b,
                None => Rect::new([0.0, 0.0], [720.0, 1240.0])?,
            };
            let graph = prm_graph(&bounds, m, spec.connection_factor.unwrap_or(8), seed)?;
            let omega = sample_omega(&mut rng, bounds.min, bounds.max)?;
            let shortest = graph.shortest_from(graph.start())[graph.end()];
            let budget = resolve_budget(spec, shortest)?;
            Ok(LoadedInstance::Ipp(IppInstance::new(field, graph, omega, budget)?))
        }
        "sparse-ss" => {
            let m = require(spec.m, "m", "sparse-ss")?;
            let cardinality = require(spec.cardinality, "cardinality", "sparse-ss")?;
            let size = spec.box_size.unwrap_or([3.0, 3.0]);
            let mut theta_rng = SplitMix64::new(seed);
            let theta: Vec<Point> = (0..m)
                .map(|_| {
                    Point::xy(theta_rng.next_range(0.0, size[0]), theta_rng.next_range(0.0, size[1]))
                })
                .collect();
            let omega = sample_omega(&mut rng, [0.0, 0.0], size)?;
            Ok(LoadedInstance::SparseSs(SparseSsInstance::new(field, theta, omega, cardinality)?))
        }
        other => Err(Error::InvalidParameter(format!("unknown instance kind '{other}'"))),
    }
}

fn write_records(records: &[ResultRecord], format: ReportFormat, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => emit_report(records, format, path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match format {
                ReportFormat::Csv => write_csv(records, &mut lock)?,
                ReportFormat::Json => write_json(records, &mut lock)?,
            }
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { spec, seed, out } => {
            let text = std::fs::read_to_string(&spec)?;
            let gen_spec: GenSpec = serde_json::from_str(&text)?;
            let instance = generate(&gen_spec, seed)?;
            save_instance(&out, &instance)?;
            eprintln!("wrote {} instance to {}", instance.kind_name(), out.display());
            Ok(())
        }
        Command::Solve { spec, method, time_limit, out, format } => {
            let method: Method = method.parse()?;
            let format: ReportFormat = format.parse()?;
            let instance = load_instance(&spec)?;
            let id = spec
                .file_stem()
                .map_or_else(|| "instance".to_string(), |s| s.to_string_lossy().into_owned());
            let record = solve_record("solve", &id, &instance, method, time_limit, 50_000_000);
            let failed = record.status == "error";
            write_records(&[record], format, out.as_ref())?;
            if failed {
                return Err(Error::Internal("solve failed; see record status".into()));
            }
            Ok(())
        }
        Command::Bench { spec, seed, time_limit, out, format } => {
            let format: ReportFormat = format.parse()?;
            let text = std::fs::read_to_string(&spec)?;
            let mut exp_spec: ExperimentSpec = serde_json::from_str(&text)?;
            if let Some(seed) = seed {
                exp_spec.base_seed = seed;
                exp_spec.seeds = None;
            }
            if let Some(limit) = time_limit {
                exp_spec.time_limit_s = Some(limit);
            }
            let records = run_experiment(&exp_spec)?;
            emit_report(&records, format, &out)?;
            eprintln!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Report { spec, out, format } => {
            let format: ReportFormat = format.parse()?;
            let text = std::fs::read_to_string(&spec)?;
            let records: Vec<ResultRecord> = serde_json::from_str(&text)?;
            emit_report(&records, format, &out)?;
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InfeasibleBudget { .. } | Error::Disconnected { .. } => 2,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
