//! Mixed-integer quadratic programs for subset selection and path planning.
//!
//! Both programs minimize `sum_i w_i g_{x_i}(alpha_i)` over per-prediction
//! coefficient vectors plus selection binaries: one binary per observation
//! location for cardinality-constrained subset selection, one binary per arc
//! for budgeted path planning. A coefficient entry may be nonzero only when
//! its location is selected (for paths: when the vertex has a selected
//! outgoing arc; the path endpoints are always measured). The one-of pairing
//! is realized for the relaxation as big-M inequalities
//! `-M z <= alpha <= M z`, which leaves optima at integer points untouched
//! because M dominates every restricted optimizer.
//!
//! Subtour elimination constraints are not enumerated; the model carries a
//! generator that turns the cycles of an integer-feasible arc selection into
//! violated cuts, added lazily by the solver.

use std::collections::HashSet;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::estimator::{restricted_optimal_g, total_weighted_error, PredictionSet, QuadraticForm};
use crate::graphs::{find_subtours, ObservationGraph, PathSolution};
use crate::randfield::{
    covariance_matrix, cross_covariance, kernel_eval, reject_duplicates, Point, RandomFieldModel,
};

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

/// Linear constraint over the binary variables.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn lhs_at<F: Fn(usize) -> f64>(&self, value: F) -> f64 {
        self.terms.iter().map(|&(i, c)| c * value(i)).sum()
    }

    /// Feasibility check at a 0/1 assignment with a small absolute slack for
    /// accumulated floating-point error in the coefficients.
    pub fn satisfied_by(&self, assignment: &[bool], tol: f64) -> bool {
        let lhs = self.lhs_at(|i| if assignment[i] { 1.0 } else { 0.0 });
        match self.relation {
            Relation::Le => lhs <= self.rhs + tol,
            Relation::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Selection expression gating a coefficient entry.
#[derive(Debug, Clone)]
pub enum Gate {
    /// Entry is always free (the location is measured on every solution).
    Always,
    /// Entry may be nonzero only if at least one of these binaries is 1.
    AnyOf(Vec<usize>),
}

/// Pairing of one coefficient entry with its selection gate.
#[derive(Debug, Clone)]
pub struct IndicatorLink {
    /// Objective block (prediction point) index.
    pub block: usize,
    /// Coefficient entry within the block (observation index).
    pub entry: usize,
    pub gate: Gate,
}

/// One prediction point's share of the objective: `weight * g(alpha)`.
#[derive(Debug, Clone)]
pub struct ObjectiveBlock {
    pub weight: f64,
    pub form: QuadraticForm,
}

/// A lazily separated cut together with its dedup key (cycle vertex set).
#[derive(Debug, Clone)]
pub struct GeneratedCut {
    pub key: Vec<usize>,
    pub constraint: LinearConstraint,
}

pub type CutGenerator = Box<dyn Fn(&[bool]) -> Result<Vec<GeneratedCut>> + Send + Sync>;

/// Append-only pool of separated cuts. Readers take a consistent snapshot of
/// the current prefix; the version counter tells relaxation solvers when to
/// refresh their factorization.
#[derive(Debug, Default)]
pub struct CutPool {
    cuts: Vec<LinearConstraint>,
    keys: HashSet<Vec<usize>>,
    version: u64,
}

impl CutPool {
    pub fn cuts(&self) -> &[LinearConstraint] {
        &self.cuts
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn contains(&self, key: &[usize]) -> bool {
        self.keys.contains(key)
    }

    /// Inserts a cut unless its key is already present. Returns whether the
    /// pool grew.
    pub fn insert(&mut self, cut: GeneratedCut) -> bool {
        if !self.keys.insert(cut.key) {
            return false;
        }
        self.cuts.push(cut.constraint);
        self.version += 1;
        true
    }
}

/// Problem family the model was built from, with enough context to decode
/// solutions independently of the solver.
pub enum ModelKind {
    SparseSs {
        cardinality: usize,
    },
    Ipp {
        graph: Arc<ObservationGraph>,
        budget: f64,
    },
}

/// Block-diagonal convex MIQP over coefficient blocks and selection binaries.
pub struct MiqpModel {
    n_binary: usize,
    blocks: Vec<ObjectiveBlock>,
    big_m: f64,
    constraints: Vec<LinearConstraint>,
    links: Vec<IndicatorLink>,
    cuts: RwLock<CutPool>,
    pub cut_generator: Option<CutGenerator>,
    kind: ModelKind,
    field: RandomFieldModel,
    omega: PredictionSet,
    theta: Vec<Point>,
}

impl std::fmt::Debug for MiqpModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MiqpModel")
            .field("n_binary", &self.n_binary)
            .field("blocks", &self.blocks.len())
            .field("block_dim", &self.block_dim())
            .field("constraints", &self.constraints.len())
            .field("links", &self.links.len())
            .field("big_m", &self.big_m)
            .finish()
    }
}

impl MiqpModel {
    pub fn n_binary(&self) -> usize {
        self.n_binary
    }

    /// Objective blocks; predictions with zero weight are dropped at build
    /// time (they contribute nothing and their block would be degenerate).
    pub fn blocks(&self) -> &[ObjectiveBlock] {
        &self.blocks
    }

    /// Dimension of each coefficient block (number of observation locations).
    pub fn block_dim(&self) -> usize {
        self.theta.len()
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn links(&self) -> &[IndicatorLink] {
        &self.links
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn field(&self) -> &RandomFieldModel {
        &self.field
    }

    pub fn omega(&self) -> &PredictionSet {
        &self.omega
    }

    pub fn theta(&self) -> &[Point] {
        &self.theta
    }

    pub fn cut_pool(&self) -> &RwLock<CutPool> {
        &self.cuts
    }

    /// Snapshot of the current cut rows plus the pool version.
    pub fn cuts_snapshot(&self) -> (Vec<LinearConstraint>, u64) {
        let pool = self.cuts.read().expect("cut pool poisoned");
        (pool.cuts().to_vec(), pool.version())
    }

    /// Exact objective of measuring exactly `support`, via the restricted
    /// optimum of every block's quadratic.
    pub fn evaluate_support(&self, support: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for block in &self.blocks {
            let (_, value) = restricted_optimal_g(&block.form, support)?;
            total += block.weight * value;
        }
        Ok(total)
    }

    /// Objective when nothing is measured; a trivial upper bound on the
    /// optimum since the error only shrinks as measurements are added.
    pub fn empty_selection_objective(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.form.constant()).sum()
    }

    /// Vertices measured under a 0/1 assignment: the selected locations for
    /// subset selection, the endpoints of selected arcs plus the path
    /// endpoints for path planning.
    pub fn visited_vertices(&self, assignment: &[bool]) -> Vec<usize> {
        match &self.kind {
            ModelKind::SparseSs { .. } => (0..self.n_binary).filter(|&i| assignment[i]).collect(),
            ModelKind::Ipp { graph, .. } => {
                let mut seen = vec![false; graph.vertex_count()];
                seen[graph.start()] = true;
                seen[graph.end()] = true;
                for (ai, arc) in graph.arcs().iter().enumerate() {
                    if assignment[ai] {
                        seen[arc.from] = true;
                        seen[arc.to] = true;
                    }
                }
                (0..graph.vertex_count()).filter(|&v| seen[v]).collect()
            }
        }
    }
}

/// Cardinality-constrained subset selection instance.
#[derive(Debug, Clone)]
pub struct SparseSsInstance {
    pub field: RandomFieldModel,
    pub theta: Vec<Point>,
    pub omega: PredictionSet,
    pub cardinality: usize,
}

impl SparseSsInstance {
    pub fn new(
        field: RandomFieldModel,
        theta: Vec<Point>,
        omega: PredictionSet,
        cardinality: usize,
    ) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidInstance("empty observation set".into()));
        }
        reject_duplicates(&theta)?;
        if cardinality < 1 || cardinality > theta.len() {
            return Err(Error::InvalidInstance(format!(
                "cardinality {cardinality} outside 1..={}",
                theta.len()
            )));
        }
        Ok(Self { field, theta, omega, cardinality })
    }
}

/// Budgeted path-planning instance.
#[derive(Debug, Clone)]
pub struct IppInstance {
    pub field: RandomFieldModel,
    pub graph: ObservationGraph,
    pub omega: PredictionSet,
    pub budget: f64,
}

impl IppInstance {
    pub fn new(
        field: RandomFieldModel,
        graph: ObservationGraph,
        omega: PredictionSet,
        budget: f64,
    ) -> Result<Self> {
        let shortest = graph.shortest_from(graph.start())[graph.end()];
        if !budget.is_finite() || budget < shortest {
            return Err(Error::InfeasibleBudget { budget, shortest });
        }
        Ok(Self { field, graph, omega, budget })
    }

    /// Exact objective of measuring the vertices in `seq`.
    pub fn objective_of(&self, seq: &[usize]) -> Result<f64> {
        let pts: Vec<Point> = seq.iter().map(|&v| self.graph.vertices()[v].clone()).collect();
        total_weighted_error(&self.field, &self.omega, &pts)
    }
}

/// Coefficient bound dominating every restricted optimizer: any subset
/// optimum satisfies `|alpha| <= ||b||_2 / sigma^2` because the smallest
/// eigenvalue of every measurement covariance is at least the noise variance.
/// Degenerate all-zero cross-covariances are lifted to a floor of 1.
pub fn big_m_bound(field: &RandomFieldModel, theta: &[Point], omega: &PredictionSet) -> Result<f64> {
    let mut bound: f64 = 0.0;
    for x in omega.points() {
        let b = cross_covariance(field, x, theta)?;
        bound = bound.max(b.norm() / field.noise_variance);
    }
    Ok(bound.max(1.0))
}

fn objective_blocks(
    field: &RandomFieldModel,
    theta: &[Point],
    omega: &PredictionSet,
) -> Result<Vec<ObjectiveBlock>> {
    let c_theta = covariance_matrix(field, theta)?;
    let mut blocks = Vec::new();
    for (x, &w) in omega.points().iter().zip(omega.weights()) {
        if w == 0.0 {
            continue;
        }
        let b = cross_covariance(field, x, theta)?;
        let constant = kernel_eval(&field.kernel, x, x)?;
        blocks.push(ObjectiveBlock {
            weight: w,
            form: QuadraticForm::new(c_theta.clone(), 2.0 * b, constant)?,
        });
    }
    Ok(blocks)
}

/// Builds the subset-selection MIQP: one binary per observation location, a
/// cardinality equality, and a gate linking every coefficient entry to its
/// location's binary.
pub fn build_sparse_ss(inst: &SparseSsInstance) -> Result<MiqpModel> {
    let m = inst.theta.len();
    let blocks = objective_blocks(&inst.field, &inst.theta, &inst.omega)?;
    let big_m = big_m_bound(&inst.field, &inst.theta, &inst.omega)?;

    let cardinality = LinearConstraint {
        terms: (0..m).map(|i| (i, 1.0)).collect(),
        relation: Relation::Eq,
        rhs: inst.cardinality as f64,
    };

    let mut links = Vec::with_capacity(blocks.len() * m);
    for block in 0..blocks.len() {
        for entry in 0..m {
            links.push(IndicatorLink { block, entry, gate: Gate::AnyOf(vec![entry]) });
        }
    }

    Ok(MiqpModel {
        n_binary: m,
        blocks,
        big_m,
        constraints: vec![cardinality],
        links,
        cuts: RwLock::new(CutPool::default()),
        cut_generator: None,
        kind: ModelKind::SparseSs { cardinality: inst.cardinality },
        field: inst.field.clone(),
        omega: inst.omega.clone(),
        theta: inst.theta.clone(),
    })
}

/// Builds the path-planning MIQP: one binary per arc, a budget row, unit
/// out-flow at the start and in-flow at the end, flow conservation with
/// degree at most one at interior vertices, and gates linking each interior
/// vertex's coefficient entries to its outgoing arcs (endpoints are always
/// measured). Subtour elimination is attached as a lazy cut generator rather
/// than enumerated.
pub fn build_ipp(inst: &IppInstance) -> Result<MiqpModel> {
    let graph = Arc::new(inst.graph.clone());
    let theta = graph.vertices().to_vec();
    let blocks = objective_blocks(&inst.field, &theta, &inst.omega)?;
    let big_m = big_m_bound(&inst.field, &theta, &inst.omega)?;
    let (s, t) = (graph.start(), graph.end());

    let mut constraints = Vec::new();
    constraints.push(LinearConstraint {
        terms: graph.arcs().iter().enumerate().map(|(ai, a)| (ai, a.cost)).collect(),
        relation: Relation::Le,
        rhs: inst.budget,
    });
    constraints.push(LinearConstraint {
        terms: graph.out_arcs(s).iter().map(|&ai| (ai, 1.0)).collect(),
        relation: Relation::Eq,
        rhs: 1.0,
    });
    constraints.push(LinearConstraint {
        terms: graph.in_arcs(t).iter().map(|&ai| (ai, 1.0)).collect(),
        relation: Relation::Eq,
        rhs: 1.0,
    });
    for v in 0..graph.vertex_count() {
        if v == s || v == t {
            continue;
        }
        let mut balance: Vec<(usize, f64)> =
            graph.out_arcs(v).iter().map(|&ai| (ai, 1.0)).collect();
        balance.extend(graph.in_arcs(v).iter().map(|&ai| (ai, -1.0)));
        constraints.push(LinearConstraint { terms: balance, relation: Relation::Eq, rhs: 0.0 });
        constraints.push(LinearConstraint {
            terms: graph.out_arcs(v).iter().map(|&ai| (ai, 1.0)).collect(),
            relation: Relation::Le,
            rhs: 1.0,
        });
    }

    let mut links = Vec::with_capacity(blocks.len() * theta.len());
    for block in 0..blocks.len() {
        for entry in 0..theta.len() {
            let gate = if entry == s || entry == t {
                Gate::Always
            } else {
                Gate::AnyOf(graph.out_arcs(entry).to_vec())
            };
            links.push(IndicatorLink { block, entry, gate });
        }
    }

    let gen_graph = Arc::clone(&graph);
    let cut_generator: CutGenerator = Box::new(move |assignment: &[bool]| {
        let selected: Vec<(usize, usize)> = gen_graph
            .arcs()
            .iter()
            .enumerate()
            .filter(|&(ai, _)| assignment[ai])
            .map(|(_, a)| (a.from, a.to))
            .collect();
        let cycles = find_subtours(&gen_graph, &selected)?;
        Ok(cycles
            .into_iter()
            .map(|cycle| {
                let inside: Vec<(usize, f64)> = gen_graph
                    .arcs()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| {
                        cycle.binary_search(&a.from).is_ok() && cycle.binary_search(&a.to).is_ok()
                    })
                    .map(|(ai, _)| (ai, 1.0))
                    .collect();
                let rhs = cycle.len() as f64 - 1.0;
                GeneratedCut {
                    key: cycle,
                    constraint: LinearConstraint { terms: inside, relation: Relation::Le, rhs },
                }
            })
            .collect())
    });

    Ok(MiqpModel {
        n_binary: graph.arcs().len(),
        blocks,
        big_m,
        constraints,
        links,
        cuts: RwLock::new(CutPool::default()),
        cut_generator: Some(cut_generator),
        kind: ModelKind::Ipp { graph, budget: inst.budget },
        field: inst.field.clone(),
        omega: inst.omega.clone(),
        theta,
    })
}

/// Decodes a subtour-free integer assignment into an ordered s-t path. The
/// objective is recomputed independently from the field model rather than
/// read off the optimizer.
pub fn extract_path(model: &MiqpModel, assignment: &[bool]) -> Result<PathSolution> {
    let ModelKind::Ipp { graph, .. } = &model.kind else {
        return Err(Error::Internal("extract_path on a subset-selection model".into()));
    };
    if assignment.len() != model.n_binary {
        return Err(Error::DimensionMismatch { expected: model.n_binary, got: assignment.len() });
    }
    let selected: Vec<(usize, usize)> = graph
        .arcs()
        .iter()
        .enumerate()
        .filter(|&(ai, _)| assignment[ai])
        .map(|(_, a)| (a.from, a.to))
        .collect();
    let cycles = find_subtours(graph, &selected)?;
    if !cycles.is_empty() {
        return Err(Error::Internal(format!(
            "{} subtour(s) in accepted assignment",
            cycles.len()
        )));
    }

    let mut succ = vec![None; graph.vertex_count()];
    for &(from, to) in &selected {
        succ[from] = Some(to);
    }
    let mut seq = vec![graph.start()];
    let mut consumed = 0usize;
    while let Some(next) = succ[*seq.last().expect("nonempty")] {
        seq.push(next);
        consumed += 1;
        if next == graph.end() {
            break;
        }
    }
    if seq.last() != Some(&graph.end()) || consumed != selected.len() {
        return Err(Error::Internal("selected arcs do not chain from start to end".into()));
    }

    let pts: Vec<Point> = seq.iter().map(|&v| graph.vertices()[v].clone()).collect();
    let objective = total_weighted_error(&model.field, &model.omega, &pts)?;
    PathSolution::from_sequence(graph, seq, objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::grid_graph;
    use crate::randfield::Kernel;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    fn se_field() -> RandomFieldModel {
        RandomFieldModel::new(
            Kernel::SquaredExponential { std_dev: 1.0, length_scale: 1.0 },
            0.25,
        )
        .unwrap()
    }

    fn random_omega(g: &mut SplitMix64, n: usize, span: f64) -> PredictionSet {
        let pts = (0..n)
            .map(|_| Point::xy(g.next_range(0.0, span), g.next_range(0.0, span)))
            .collect();
        let w = (0..n).map(|_| g.next_f64()).collect();
        PredictionSet::new(pts, w).unwrap()
    }

    #[test]
    fn sparse_ss_counts() {
        let mut g = SplitMix64::new(1);
        let theta = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)];
        let omega = random_omega(&mut g, 2, 2.0);
        let inst = SparseSsInstance::new(se_field(), theta, omega, 2).unwrap();
        let model = build_sparse_ss(&inst).unwrap();
        assert_eq!(model.n_binary(), 3);
        assert_eq!(model.blocks().len(), 2);
        assert_eq!(model.blocks().len() * model.block_dim(), 6);
        assert_eq!(model.constraints().len(), 1);
        assert_eq!(model.links().len(), 6);
        assert!(model.cut_generator.is_none());
    }

    #[test]
    fn big_m_floor_when_cross_covariance_vanishes() {
        let field =
            RandomFieldModel::new(Kernel::Spherical { sill: 0.01519, range: 439.2 }, 0.001)
                .unwrap();
        let theta = vec![Point::xy(0.0, 0.0), Point::xy(10.0, 0.0)];
        let omega = PredictionSet::new(vec![Point::xy(5000.0, 5000.0)], vec![1.0]).unwrap();
        assert_eq!(big_m_bound(&field, &theta, &omega).unwrap(), 1.0);
    }

    #[test]
    fn big_m_analytic_single_point() {
        let field = se_field();
        let theta = vec![Point::xy(0.0, 0.0)];
        let omega = PredictionSet::new(vec![Point::xy(0.0, 0.0)], vec![1.0]).unwrap();
        // ||b|| / sigma^2 = 1 / 0.25
        assert_relative_eq!(big_m_bound(&field, &theta, &omega).unwrap(), 4.0);
    }

    #[test]
    fn big_m_dominates_restricted_optimizers() {
        let field = se_field();
        let mut g = SplitMix64::new(7);
        let theta: Vec<Point> = (0..6)
            .map(|_| Point::xy(g.next_range(0.0, 3.0), g.next_range(0.0, 3.0)))
            .collect();
        let omega = random_omega(&mut g, 3, 3.0);
        let bound = big_m_bound(&field, &theta, &omega).unwrap();
        for x in omega.points() {
            let form = QuadraticForm::for_prediction(&field, x, &theta).unwrap();
            for mask in 1u32..(1 << 6) {
                let support: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
                let (alpha, _) = restricted_optimal_g(&form, &support).unwrap();
                assert!(alpha.amax() <= bound + 1e-12, "mask={mask}");
            }
        }
    }

    #[test]
    fn ipp_model_structure_on_2x2_grid() {
        let graph = grid_graph(2, 1.0).unwrap();
        let mut g = SplitMix64::new(3);
        let omega = random_omega(&mut g, 2, 1.0);
        let inst = IppInstance::new(se_field(), graph, omega, 2.0).unwrap();
        let model = build_ipp(&inst).unwrap();
        assert_eq!(model.n_binary(), 8);
        // budget + start + end + 2 rows per interior vertex (2 interior)
        assert_eq!(model.constraints().len(), 7);
        // endpoints always measured, interior gated by outgoing arcs
        let always = model
            .links()
            .iter()
            .filter(|l| matches!(l.gate, Gate::Always))
            .count();
        assert_eq!(always, 2 * model.blocks().len());
    }

    #[test]
    fn ipp_rejects_infeasible_budget() {
        let graph = grid_graph(3, 1.0).unwrap();
        let mut g = SplitMix64::new(4);
        let omega = random_omega(&mut g, 2, 2.0);
        let err = IppInstance::new(se_field(), graph, omega, 3.0);
        assert!(matches!(err, Err(Error::InfeasibleBudget { .. })));
    }

    #[test]
    fn cut_generator_emits_cycle_cut() {
        let graph = grid_graph(3, 1.0).unwrap();
        let mut g = SplitMix64::new(5);
        let omega = random_omega(&mut g, 2, 2.0);
        let inst = IppInstance::new(se_field(), graph.clone(), omega, 4.0).unwrap();
        let model = build_ipp(&inst).unwrap();

        // s-t geodesic 0 -> 1 -> 2 -> 5 -> 8 plus the cycle 3 -> 4 -> 3
        let mut assignment = vec![false; model.n_binary()];
        let mut select = |from: usize, to: usize| {
            let ai = graph
                .arcs()
                .iter()
                .position(|a| a.from == from && a.to == to)
                .unwrap();
            assignment[ai] = true;
        };
        select(0, 1);
        select(1, 2);
        select(2, 5);
        select(5, 8);
        select(3, 4);
        select(4, 3);

        let cuts = (model.cut_generator.as_ref().unwrap())(&assignment).unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].key, vec![3, 4]);
        assert_eq!(cuts[0].constraint.rhs, 1.0);
        // the offending assignment violates its own cut by >= 1
        let lhs = cuts[0]
            .constraint
            .lhs_at(|i| if assignment[i] { 1.0 } else { 0.0 });
        assert!(lhs >= cuts[0].constraint.rhs + 1.0);

        // pool deduplicates by vertex set
        let mut pool = CutPool::default();
        assert!(pool.insert(cuts[0].clone()));
        assert!(!pool.insert(cuts[0].clone()));
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn extract_path_single_arc() {
        let vertices = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)];
        let arcs = vec![
            crate::graphs::GraphArc { from: 0, to: 1, cost: 1.0 },
            crate::graphs::GraphArc { from: 1, to: 0, cost: 1.0 },
        ];
        let graph = ObservationGraph::new(vertices, arcs, 0, 1).unwrap();
        let omega = PredictionSet::new(vec![Point::xy(0.5, 0.0)], vec![1.0]).unwrap();
        let inst = IppInstance::new(se_field(), graph, omega, 1.0).unwrap();
        let model = build_ipp(&inst).unwrap();
        let assignment = vec![true, false];
        let sol = extract_path(&model, &assignment).unwrap();
        assert_eq!(sol.vertex_sequence, vec![0, 1]);
        assert_eq!(sol.length, 1.0);
    }

    #[test]
    fn extract_path_objective_matches_restricted_route() {
        let graph = grid_graph(3, 1.0).unwrap();
        let mut g = SplitMix64::new(9);
        let omega = random_omega(&mut g, 3, 2.0);
        let inst = IppInstance::new(se_field(), graph.clone(), omega, 4.0).unwrap();
        let model = build_ipp(&inst).unwrap();

        let seq = [0usize, 3, 4, 5, 8];
        let mut assignment = vec![false; model.n_binary()];
        for w in seq.windows(2) {
            let ai = graph
                .arcs()
                .iter()
                .position(|a| a.from == w[0] && a.to == w[1])
                .unwrap();
            assignment[ai] = true;
        }
        let sol = extract_path(&model, &assignment).unwrap();
        assert_eq!(sol.vertex_sequence, seq.to_vec());
        assert_eq!(sol.length, 4.0);
        // independent evaluation routes agree: covariance assembly from the
        // visited points vs restricted optimum on the full-theta quadratic
        let restricted = model.evaluate_support(&seq).unwrap();
        assert!((sol.objective - restricted).abs() < 1e-7);
    }

    #[test]
    fn extract_path_rejects_subtours_and_broken_chains() {
        let graph = grid_graph(3, 1.0).unwrap();
        let mut g = SplitMix64::new(10);
        let omega = random_omega(&mut g, 2, 2.0);
        let inst = IppInstance::new(se_field(), graph.clone(), omega, 4.0).unwrap();
        let model = build_ipp(&inst).unwrap();

        let select = |assignment: &mut Vec<bool>, from: usize, to: usize| {
            let ai = graph
                .arcs()
                .iter()
                .position(|a| a.from == from && a.to == to)
                .unwrap();
            assignment[ai] = true;
        };

        let mut with_cycle = vec![false; model.n_binary()];
        for (u, v) in [(0, 1), (1, 2), (2, 5), (5, 8), (3, 4), (4, 3)] {
            select(&mut with_cycle, u, v);
        }
        assert!(extract_path(&model, &with_cycle).is_err());

        let mut broken = vec![false; model.n_binary()];
        for (u, v) in [(0, 1), (2, 5), (5, 8)] {
            select(&mut broken, u, v);
        }
        assert!(extract_path(&model, &broken).is_err());
    }
}
