//! Budget-constrained measurement-path planning in discrete random fields.
//!
//! A zero-mean random field is specified by a covariance function and a
//! measurement-noise variance. Given a directed observation graph, a weighted
//! set of prediction locations, and a travel budget, the goal is an s-t path
//! whose visited measurements minimize the total weighted linear least-squares
//! estimation error over the prediction set.
//!
//! The crate builds two mixed-integer quadratic programs over estimator
//! coefficients and selection binaries, one for cardinality-constrained subset
//! selection and one for path planning with lazily separated subtour
//! elimination cuts, and solves them with a branch-and-bound engine whose node
//! relaxations are convex QPs handled by an operator-splitting method.
//! Path-space branch-and-bound and exhaustive enumerators serve as baselines
//! and ground-truth oracles.

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod graphs;
pub mod instance;
pub mod model;
pub mod qp;
pub mod randfield;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use estimator::{PredictionSet, QuadraticForm};
pub use graphs::{ObservationGraph, PathSolution};
pub use model::{IppInstance, MiqpModel, SparseSsInstance};
pub use randfield::{Kernel, Point, RandomFieldModel};
pub use solver::{SolveState, SolveStatus, SolverConfig};

