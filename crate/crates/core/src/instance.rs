//! Versioned JSON instance files.
//!
//! Floats are written in shortest-roundtrip decimal (never more than 17
//! significant digits), so a load of a save reproduces every coordinate,
//! cost, weight, and budget bit-exactly. Loading validates the payload the
//! same way the constructors do; in particular a budget below the shortest
//! s-t distance is rejected as infeasible.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::PredictionSet;
use crate::graphs::{GraphArc, ObservationGraph};
use crate::model::{IppInstance, SparseSsInstance};
use crate::randfield::{Point, RandomFieldModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Payload {
    Ipp {
        observations: Vec<Point>,
        arcs: Vec<(usize, usize, f64)>,
        start: usize,
        end: usize,
        budget: f64,
    },
    SparseSs {
        observations: Vec<Point>,
        cardinality: usize,
    },
}

/// On-disk schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: u32,
    pub field: RandomFieldModel,
    #[serde(flatten)]
    payload: Payload,
    pub predictions: Vec<Point>,
    pub weights: Vec<f64>,
}

/// A validated instance of either problem family.
#[derive(Debug, Clone)]
pub enum LoadedInstance {
    Ipp(IppInstance),
    SparseSs(SparseSsInstance),
}

impl LoadedInstance {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LoadedInstance::Ipp(_) => "ipp",
            LoadedInstance::SparseSs(_) => "sparse-ss",
        }
    }
}

fn check_points(points: &[Point]) -> Result<()> {
    for p in points {
        if p.coords().is_empty() || p.coords().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("non-finite or empty point".into()));
        }
    }
    Ok(())
}

impl InstanceFile {
    pub fn from_instance(inst: &LoadedInstance) -> Self {
        match inst {
            LoadedInstance::Ipp(ipp) => InstanceFile {
                schema: SCHEMA_VERSION,
                field: ipp.field.clone(),
                payload: Payload::Ipp {
                    observations: ipp.graph.vertices().to_vec(),
                    arcs: ipp.graph.arcs().iter().map(|a| (a.from, a.to, a.cost)).collect(),
                    start: ipp.graph.start(),
                    end: ipp.graph.end(),
                    budget: ipp.budget,
                },
                predictions: ipp.omega.points().to_vec(),
                weights: ipp.omega.weights().to_vec(),
            },
            LoadedInstance::SparseSs(ss) => InstanceFile {
                schema: SCHEMA_VERSION,
                field: ss.field.clone(),
                payload: Payload::SparseSs {
                    observations: ss.theta.clone(),
                    cardinality: ss.cardinality,
                },
                predictions: ss.omega.points().to_vec(),
                weights: ss.omega.weights().to_vec(),
            },
        }
    }

    pub fn into_instance(self) -> Result<LoadedInstance> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch { found: self.schema, expected: SCHEMA_VERSION });
        }
        check_points(&self.predictions)?;
        let omega = PredictionSet::new(self.predictions, self.weights)?;
        match self.payload {
            Payload::Ipp { observations, arcs, start, end, budget } => {
                check_points(&observations)?;
                let arcs = arcs
                    .into_iter()
                    .map(|(from, to, cost)| GraphArc { from, to, cost })
                    .collect();
                let graph = ObservationGraph::new(observations, arcs, start, end)?;
                Ok(LoadedInstance::Ipp(IppInstance::new(self.field, graph, omega, budget)?))
            }
            Payload::SparseSs { observations, cardinality } => {
                check_points(&observations)?;
                Ok(LoadedInstance::SparseSs(SparseSsInstance::new(
                    self.field,
                    observations,
                    omega,
                    cardinality,
                )?))
            }
        }
    }
}

pub fn save_instance<P: AsRef<Path>>(path: P, inst: &LoadedInstance) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &InstanceFile::from_instance(inst))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_instance<P: AsRef<Path>>(path: P) -> Result<LoadedInstance> {
    let file = File::open(path)?;
    let parsed: InstanceFile = serde_json::from_reader(BufReader::new(file))?;
    parsed.into_instance()
}
