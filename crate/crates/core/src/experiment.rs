//! Experiment orchestration and report emission.
//!
//! A spec describes one scenario as a sweep over instance sizes and budgets,
//! repeated over seeded runs: per run the prediction set and its weights are
//! drawn uniformly at random, then every requested method runs under the
//! same time limit. Everything is reproducible from the spec and seeds
//! alone; per-record statuses capture timeouts and failures, and a failing
//! record never aborts the sweep.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{bnb_paths, brute_force_ipp, brute_force_ss, greedy_ss};
use crate::error::{Error, Result};
use crate::estimator::PredictionSet;
use crate::graphs::{grid_graph, prm_graph, Rect};
use crate::instance::LoadedInstance;
use crate::model::{build_ipp, build_sparse_ss, IppInstance};
use crate::randfield::{Kernel, Point, RandomFieldModel};
use crate::rng::{derive_seed, SplitMix64};
use crate::solver::{solve, SolveStatus, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    GridRuntimeVsBudget,
    GridScalingByCorrelation,
    GridQualityTimeout,
    PrmQualityVsBudget,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::GridRuntimeVsBudget => "grid-runtime-vs-budget",
            Scenario::GridScalingByCorrelation => "grid-scaling-by-correlation",
            Scenario::GridQualityTimeout => "grid-quality-timeout",
            Scenario::PrmQualityVsBudget => "prm-quality-vs-budget",
        }
    }

    fn is_prm(&self) -> bool {
        matches!(self, Scenario::PrmQualityVsBudget)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Miqp,
    Bnb,
    Greedy,
    Oracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Miqp => "miqp",
            Method::Bnb => "bnb",
            Method::Greedy => "greedy",
            Method::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "miqp" => Ok(Method::Miqp),
            "bnb" => Ok(Method::Bnb),
            "greedy" => Ok(Method::Greedy),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

fn default_connection_factor() -> usize {
    8
}
fn default_edge_length() -> f64 {
    1.0
}
fn default_oracle_cap() -> u64 {
    50_000_000
}
fn default_runs() -> usize {
    5
}

/// One scenario's sweep description. Budgets are given either absolutely or
/// as factors of each instance's shortest start-end distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Grid side length, or roadmap vertex count for the PRM scenario.
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub budgets: Vec<f64>,
    #[serde(default)]
    pub budget_factors: Vec<f64>,
    pub kernel: Kernel,
    pub noise_variance: f64,
    pub prediction_count: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Explicit per-run seeds; derived from `base_seed` when absent.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    pub methods: Vec<Method>,
    #[serde(default = "default_connection_factor")]
    pub connection_factor: usize,
    /// Sampling rectangle for roadmaps; the soil-survey field extent by
    /// default.
    #[serde(default)]
    pub bounds: Option<Rect>,
    #[serde(default = "default_edge_length")]
    pub edge_length: f64,
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidParameter("sizes sweep must be nonempty".into()));
        }
        if self.budgets.is_empty() == self.budget_factors.is_empty() {
            return Err(Error::InvalidParameter(
                "exactly one of budgets / budget_factors must be nonempty".into(),
            ));
        }
        if self.runs < 1 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.runs {
                return Err(Error::InvalidParameter(format!(
                    "seeds length {} != runs {}",
                    seeds.len(),
                    self.runs
                )));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("methods must be nonempty".into()));
        }
        self.kernel.validate()?;
        Ok(())
    }

    fn run_seed(&self, run: usize) -> u64 {
        match &self.seeds {
            Some(seeds) => seeds[run],
            None => derive_seed(self.base_seed, run as u64),
        }
    }
}

/// One method's result on one instance. The gap is present exactly for the
/// MIQP solver, which is the only method that certifies one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario: String,
    pub instance: String,
    pub method: String,
    pub objective: Option<f64>,
    pub time_s: f64,
    pub status: String,
    pub gap: Option<f64>,
    pub nodes: Option<u64>,
}

fn status_name(status: SolveStatus) -> String {
    status.to_string()
}

/// Deterministic instance for one sweep point and run.
pub fn generate_instance(
    spec: &ExperimentSpec,
    size: usize,
    budget_spec: f64,
    sweep_index: u64,
    run: usize,
) -> Result<IppInstance> {
    let seed = derive_seed(spec.run_seed(run), sweep_index);
    let field = RandomFieldModel::new(spec.kernel.clone(), spec.noise_variance)?;
    let (graph, box_min, box_max) = if spec.scenario.is_prm() {
        let bounds = match spec.bounds {
            Some(b) => b,
            None => Rect::new([0.0, 0.0], [720.0, 1240.0])?,
        };
        let graph = prm_graph(&bounds, size, spec.connection_factor, seed)?;
        (graph, bounds.min, bounds.max)
    } else {
        let graph = grid_graph(size, spec.edge_length)?;
        let span = (size - 1) as f64 * spec.edge_length;
        (graph, [0.0, 0.0], [span, span])
    };

    let mut rng = SplitMix64::new(derive_seed(seed, 0x0b5e55ed));
    let points: Vec<Point> = (0..spec.prediction_count)
        .map(|_| {
            Point::xy(rng.next_range(box_min[0], box_max[0]), rng.next_range(box_min[1], box_max[1]))
        })
        .collect();
    let weights: Vec<f64> = (0..spec.prediction_count).map(|_| rng.next_f64()).collect();
    let omega = PredictionSet::new(points, weights)?;

    let budget = if spec.budgets.is_empty() {
        let shortest = graph.shortest_from(graph.start())[graph.end()];
        budget_spec * shortest
    } else {
        budget_spec
    };
    IppInstance::new(field, graph, omega, budget)
}

/// Runs one method on a validated instance and packages the outcome. Errors
/// become a record with an error status, never a failure of the sweep.
pub fn solve_record(
    scenario: &str,
    instance_id: &str,
    inst: &LoadedInstance,
    method: Method,
    time_limit: Option<f64>,
    oracle_cap: u64,
) -> ResultRecord {
    let started = Instant::now();
    let mut record = ResultRecord {
        scenario: scenario.to_string(),
        instance: instance_id.to_string(),
        method: method.name().to_string(),
        objective: None,
        time_s: 0.0,
        status: String::new(),
        gap: None,
        nodes: None,
    };

    let outcome: Result<()> = (|| {
        match (inst, method) {
            (LoadedInstance::Ipp(ipp), Method::Miqp) => {
                let model = build_ipp(ipp)?;
                let cfg = SolverConfig { time_limit, ..SolverConfig::default() };
                let state = solve(&model, &cfg)?;
                record.objective = state.objective();
                record.status = status_name(state.status);
                record.gap = Some(state.gap);
                record.nodes = Some(state.nodes_explored);
            }
            (LoadedInstance::SparseSs(ss), Method::Miqp) => {
                let model = build_sparse_ss(ss)?;
                let cfg = SolverConfig { time_limit, ..SolverConfig::default() };
                let state = solve(&model, &cfg)?;
                record.objective = state.objective();
                record.status = status_name(state.status);
                record.gap = Some(state.gap);
                record.nodes = Some(state.nodes_explored);
            }
            (LoadedInstance::Ipp(ipp), Method::Bnb) => {
                let outcome = bnb_paths(ipp, time_limit)?;
                record.objective = outcome.solution.as_ref().map(|s| s.objective);
                record.status = status_name(outcome.status);
                record.nodes = Some(outcome.nodes);
            }
            (LoadedInstance::Ipp(ipp), Method::Oracle) => {
                let (sol, _) = brute_force_ipp(ipp, oracle_cap)?;
                record.objective = Some(sol.objective);
                record.status = "optimal".into();
            }
            (LoadedInstance::SparseSs(ss), Method::Oracle) => {
                let (_, value) = brute_force_ss(ss, oracle_cap)?;
                record.objective = Some(value);
                record.status = "optimal".into();
            }
            (LoadedInstance::SparseSs(ss), Method::Greedy) => {
                let (_, value) = greedy_ss(ss)?;
                record.objective = Some(value);
                record.status = "heuristic".into();
            }
            (LoadedInstance::Ipp(_), Method::Greedy) | (LoadedInstance::SparseSs(_), Method::Bnb) => {
                record.status = "unsupported".into();
            }
        }
        Ok(())
    })();

    record.time_s = started.elapsed().as_secs_f64();
    if let Err(err) = outcome {
        record.status = match err {
            Error::CapExceeded { .. } => "cap-exceeded".into(),
            Error::InfeasibleBudget { .. } => "infeasible".into(),
            _ => "error".into(),
        };
    }
    record
}

/// Runs the full sweep: for each size x budget x run, generate the seeded
/// instance and apply every requested method. Record order is fixed by the
/// sweep structure regardless of how long individual solves take.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    let budget_specs: &[f64] =
        if spec.budgets.is_empty() { &spec.budget_factors } else { &spec.budgets };
    let mut records = Vec::new();
    for (si, &size) in spec.sizes.iter().enumerate() {
        for (bi, &bspec) in budget_specs.iter().enumerate() {
            let sweep_index = (si * budget_specs.len() + bi) as u64;
            for run in 0..spec.runs {
                let instance_id = format!("n{size}-b{bspec}-r{run}");
                match generate_instance(spec, size, bspec, sweep_index, run) {
                    Ok(inst) => {
                        let loaded = LoadedInstance::Ipp(inst);
                        for &method in &spec.methods {
                            records.push(solve_record(
                                spec.scenario.name(),
                                &instance_id,
                                &loaded,
                                method,
                                spec.time_limit_s,
                                spec.oracle_cap,
                            ));
                        }
                    }
                    Err(err) => {
                        let status = match err {
                            Error::InfeasibleBudget { .. } => "infeasible",
                            Error::Disconnected { .. } => "disconnected",
                            _ => "error",
                        };
                        for &method in &spec.methods {
                            records.push(ResultRecord {
                                scenario: spec.scenario.name().to_string(),
                                instance: instance_id.clone(),
                                method: method.name().to_string(),
                                objective: None,
                                time_s: 0.0,
                                status: status.to_string(),
                                gap: None,
                                nodes: None,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: &str = "scenario,instance,method,objective,time_s,status,gap,nodes";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), |x| x.to_string())
}

pub fn write_csv<W: Write>(records: &[ResultRecord], out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.instance,
            r.method,
            opt(&r.objective),
            r.time_s,
            r.status,
            opt(&r.gap),
            opt(&r.nodes)
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write>(records: &[ResultRecord], out: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, records)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes records to `path` in the requested format.
pub fn emit_report<P: AsRef<Path>>(
    records: &[ResultRecord],
    format: ReportFormat,
    path: P,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(records, &mut w)?,
        ReportFormat::Json => write_json(records, &mut w)?,
    }
    w.flush()?;
    Ok(())
}
