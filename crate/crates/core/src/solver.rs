//! Branch-and-bound engine for the selection MIQPs.
//!
//! Node relaxations are convex QPs solved by the operator-splitting engine;
//! fixing a binary only moves bound rows, so one factorization serves the
//! whole tree until the cut pool grows. Every node carries a safe dual lower
//! bound, so pruning and the reported optimality gap stay valid even when a
//! relaxation is stopped early.
//!
//! Integer candidates are never trusted from the relaxation: the rounded
//! selection is checked exactly against every binary row, subtour cuts are
//! separated and the candidate rejected if any cycle appears, and accepted
//! incumbents get their coefficients re-optimized exactly on the visited
//! support. The incumbent stream is therefore nonincreasing and always
//! integer-feasible and subtour-free, and the bound stream nondecreasing:
//! stopping at the time limit yields a feasible solution plus a certified
//! gap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::restricted_optimal_g;
use crate::model::{Gate, LinearConstraint, MiqpModel, ModelKind, Relation};
use crate::qp::{QpBlock, QpData, QpEngine, QpSettings, QpWarmStart, SparseRow};

/// Open-node ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeSelection {
    #[default]
    BestBound,
    DepthFirst,
}

/// Branching variable choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchingRule {
    #[default]
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Wall-clock limit in seconds; `None` runs to optimality.
    pub time_limit: Option<f64>,
    /// Relative optimality gap at which a node (and the search) closes.
    pub gap_tolerance: f64,
    pub node_selection: NodeSelection,
    pub branching: BranchingRule,
    pub qp_abs_tol: f64,
    pub qp_rel_tol: f64,
    /// Iteration budget per relaxation solve; re-queued nodes double it.
    pub max_qp_iterations: usize,
    /// Reserved for randomized strategies; the default rules are
    /// deterministic and ignore it.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit: None,
            gap_tolerance: 1e-6,
            node_selection: NodeSelection::default(),
            branching: BranchingRule::default(),
            qp_abs_tol: 1e-8,
            qp_rel_tol: 1e-6,
            max_qp_iterations: 20_000,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit = Some(seconds);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    TimeoutFeasible,
    TimeoutNoIncumbent,
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeoutFeasible => "timeout-feasible",
            SolveStatus::TimeoutNoIncumbent => "timeout-no-incumbent",
            SolveStatus::Infeasible => "infeasible",
        };
        f.write_str(s)
    }
}

/// Best integer-feasible solution found, with exactly re-optimized
/// coefficients per objective block.
#[derive(Debug, Clone)]
pub struct Incumbent {
    pub assignment: Vec<bool>,
    pub coefficients: Vec<DVector<f64>>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum LogEvent {
    Node { id: u64, bound: f64 },
    Cut { added: usize },
    Incumbent { objective: f64 },
    Bound { lower: f64 },
}

/// One solve-trace record: seconds since solve start plus the event.
#[derive(Debug, Clone, Serialize)]
pub struct LogRecord {
    pub t: f64,
    #[serde(flatten)]
    pub event: LogEvent,
}

/// Outcome of a solve: the anytime contract. The incumbent is always
/// integer-feasible and subtour-free; the lower bound and gap are valid
/// certificates at any termination point.
#[derive(Debug)]
pub struct SolveState {
    pub incumbent: Option<Incumbent>,
    pub global_lower_bound: f64,
    pub gap: f64,
    pub nodes_explored: u64,
    pub cuts_added: u64,
    pub status: SolveStatus,
    pub log: Vec<LogRecord>,
}

impl SolveState {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|i| i.objective)
    }
}

const INT_TOL: f64 = 1e-6;
const INCUMBENT_TOL: f64 = 1e-9;
const MAX_REQUEUES: u32 = 2;

const FREE: u8 = 2;

#[derive(Clone)]
struct Node {
    id: u64,
    bound: f64,
    fixings: Vec<u8>,
    depth: u32,
    warm: Option<QpWarmStart>,
    qp_budget: usize,
    requeues: u32,
    branch_info: Option<BranchInfo>,
}

#[derive(Clone, Copy)]
struct BranchInfo {
    var: usize,
    up: bool,
    parent_bound: f64,
    frac_dist: f64,
}

struct HeapNode(Node);

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}
impl Eq for HeapNode {}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (bound, id)
        other.0.bound.total_cmp(&self.0.bound).then_with(|| other.0.id.cmp(&self.0.id))
    }
}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Queue {
    Best(BinaryHeap<HeapNode>),
    Depth(Vec<Node>),
}

impl Queue {
    fn new(selection: NodeSelection) -> Self {
        match selection {
            NodeSelection::BestBound => Queue::Best(BinaryHeap::new()),
            NodeSelection::DepthFirst => Queue::Depth(Vec::new()),
        }
    }

    fn push(&mut self, node: Node) {
        match self {
            Queue::Best(h) => h.push(HeapNode(node)),
            Queue::Depth(v) => v.push(node),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Queue::Best(h) => h.pop().map(|n| n.0),
            Queue::Depth(v) => v.pop(),
        }
    }

    fn min_bound(&self) -> f64 {
        match self {
            Queue::Best(h) => h.peek().map_or(f64::INFINITY, |n| n.0.bound),
            Queue::Depth(v) => v.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Relaxation rows plus the bookkeeping that maps model entities to rows.
struct EngineBundle {
    engine: QpEngine,
    default_lower: Vec<f64>,
    default_upper: Vec<f64>,
    alpha_id_row: Vec<Vec<usize>>,
    z_id_row: Vec<usize>,
}

fn build_engine(model: &MiqpModel, cuts: &[LinearConstraint]) -> Result<EngineBundle> {
    let n_bin = model.n_binary();
    let dim = model.block_dim();
    let n_blocks = model.blocks().len();
    let n_cont = n_blocks * dim;
    let var_of = |block: usize, entry: usize| block * dim + entry;
    let zvar = |i: usize| n_cont + i;

    // Per-block coefficient cap, tighter than the model's global bound: a
    // restricted optimizer satisfies alpha' C_S alpha = b' C_S^-1 b <=
    // phi(x,x), so ||alpha||_2 <= sqrt(phi / sigma^2). Tight caps are what
    // keep the relaxation from freeing every coefficient at once.
    let sigma2 = model.field().noise_variance;
    let block_cap: Vec<f64> = model
        .blocks()
        .iter()
        .map(|b| {
            let b_norm = (b.form.linear() / 2.0).norm();
            model
                .big_m()
                .min(b_norm / sigma2)
                .min((b.form.constant() / sigma2).sqrt())
        })
        .collect();

    let mut rows: Vec<SparseRow> = Vec::new();
    let binary_row = |c: &LinearConstraint| {
        let terms: Vec<(usize, f64)> = c.terms.iter().map(|&(i, coef)| (zvar(i), coef)).collect();
        match c.relation {
            Relation::Le => SparseRow { terms, lower: f64::NEG_INFINITY, upper: c.rhs, eq: false },
            Relation::Eq => SparseRow { terms, lower: c.rhs, upper: c.rhs, eq: true },
        }
    };
    for c in model.constraints() {
        rows.push(binary_row(c));
    }

    let mut alpha_id_row = vec![vec![usize::MAX; dim]; n_blocks];
    for link in model.links() {
        let v = var_of(link.block, link.entry);
        let cap = block_cap[link.block];
        if let Gate::AnyOf(gates) = &link.gate {
            let mut up = vec![(v, 1.0)];
            up.extend(gates.iter().map(|&g| (zvar(g), -cap)));
            rows.push(SparseRow { terms: up, lower: f64::NEG_INFINITY, upper: 0.0, eq: false });
            let mut lo = vec![(v, 1.0)];
            lo.extend(gates.iter().map(|&g| (zvar(g), cap)));
            rows.push(SparseRow { terms: lo, lower: 0.0, upper: f64::INFINITY, eq: false });
        }
        // bound row; doubles as the handle for exact zero-fixing
        alpha_id_row[link.block][link.entry] = rows.len();
        rows.push(SparseRow { terms: vec![(v, 1.0)], lower: -cap, upper: cap, eq: false });
    }

    let mut z_id_row = Vec::with_capacity(n_bin);
    for i in 0..n_bin {
        z_id_row.push(rows.len());
        rows.push(SparseRow { terms: vec![(zvar(i), 1.0)], lower: 0.0, upper: 1.0, eq: false });
    }

    for cut in cuts {
        rows.push(binary_row(cut));
    }

    let blocks: Vec<QpBlock> = model
        .blocks()
        .iter()
        .map(|b| QpBlock { weight: b.weight, b: b.form.linear() / 2.0 })
        .collect();
    let c_matrix = if n_blocks > 0 {
        model.blocks()[0].form.q().clone()
    } else {
        nalgebra::DMatrix::zeros(0, 0)
    };
    let constant = model.empty_selection_objective();

    let engine = QpEngine::new(QpData {
        block_dim: dim,
        blocks,
        c_matrix,
        n_binary: n_bin,
        rows,
        constant,
    })?;
    let (default_lower, default_upper) = engine.default_bounds();
    Ok(EngineBundle { engine, default_lower, default_upper, alpha_id_row, z_id_row })
}

/// Node bounds: fixed binaries pin their bound rows, and a coefficient whose
/// whole gate is fixed to zero is pinned to zero exactly.
fn node_bounds(bundle: &EngineBundle, model: &MiqpModel, fixings: &[u8]) -> (Vec<f64>, Vec<f64>) {
    let mut lower = bundle.default_lower.clone();
    let mut upper = bundle.default_upper.clone();
    for (i, &f) in fixings.iter().enumerate() {
        if f != FREE {
            let row = bundle.z_id_row[i];
            lower[row] = f as f64;
            upper[row] = f as f64;
        }
    }
    for link in model.links() {
        if let Gate::AnyOf(gates) = &link.gate {
            if gates.iter().all(|&g| fixings[g] == 0) {
                let row = bundle.alpha_id_row[link.block][link.entry];
                lower[row] = 0.0;
                upper[row] = 0.0;
            }
        }
    }
    (lower, upper)
}

/// Arcs no simple in-budget s-t path can use are fixed to zero up front:
/// arcs entering the start or leaving the end, and arcs whose cheapest
/// completing route already exceeds the budget.
fn presolve_fixings(model: &MiqpModel) -> Vec<u8> {
    let mut fixings = vec![FREE; model.n_binary()];
    if let ModelKind::Ipp { graph, budget } = model.kind() {
        let from_s = graph.shortest_from(graph.start());
        let to_t = graph.shortest_to(graph.end());
        for (ai, arc) in graph.arcs().iter().enumerate() {
            if arc.to == graph.start() || arc.from == graph.end() {
                fixings[ai] = 0;
                continue;
            }
            let through = from_s[arc.from] + arc.cost + to_t[arc.to];
            if !(through <= budget + 1e-9) {
                fixings[ai] = 0;
            }
        }
    }
    fixings
}

/// Cheap feasible starting point: the shortest s-t path for path planning, a
/// greedy k-subset for subset selection.
fn root_incumbent(model: &MiqpModel) -> Result<Option<Vec<bool>>> {
    match model.kind() {
        ModelKind::Ipp { graph, .. } => {
            let Some(seq) = graph.shortest_path_between(graph.start(), graph.end()) else {
                return Ok(None);
            };
            let mut assignment = vec![false; model.n_binary()];
            for w in seq.windows(2) {
                let ai = graph
                    .arc_index(w[0], w[1])
                    .ok_or_else(|| Error::Internal("shortest path uses unknown arc".into()))?;
                assignment[ai] = true;
            }
            Ok(Some(assignment))
        }
        ModelKind::SparseSs { cardinality } => {
            let m = model.block_dim();
            let mut support: Vec<usize> = Vec::new();
            for _ in 0..*cardinality {
                let mut best: Option<(usize, f64)> = None;
                for cand in 0..m {
                    if support.contains(&cand) {
                        continue;
                    }
                    let mut trial = support.clone();
                    trial.push(cand);
                    trial.sort_unstable();
                    let value = model.evaluate_support(&trial)?;
                    if best.is_none_or(|(_, v)| value < v) {
                        best = Some((cand, value));
                    }
                }
                support.push(best.expect("cardinality <= m").0);
            }
            let mut assignment = vec![false; model.n_binary()];
            for &i in &support {
                assignment[i] = true;
            }
            Ok(Some(assignment))
        }
    }
}

/// Exact evaluation of an integer candidate: coefficients re-optimized on the
/// visited support, one restricted solve per objective block.
fn exact_candidate(model: &MiqpModel, assignment: &[bool]) -> Result<Incumbent> {
    let support = model.visited_vertices(assignment);
    let mut coefficients = Vec::with_capacity(model.blocks().len());
    let mut objective = 0.0;
    for block in model.blocks() {
        let (alpha, value) = restricted_optimal_g(&block.form, &support)?;
        objective += block.weight * value;
        coefficients.push(alpha);
    }
    Ok(Incumbent { assignment: assignment.to_vec(), coefficients, objective })
}

/// Fractional-guided dive: walk from the start toward the end, preferring
/// vertices whose relaxed visit mass is largest while keeping the end
/// reachable within budget. Yields an integer-feasible path candidate cheaply
/// during the search; dead ends just abandon the dive.
fn dive_path(model: &MiqpModel, z: &[f64], to_t: &[f64]) -> Option<Vec<bool>> {
    let ModelKind::Ipp { graph, budget } = model.kind() else {
        return None;
    };
    let (s, t) = (graph.start(), graph.end());
    let visit_mass = |v: usize| -> f64 {
        graph.out_arcs(v).iter().map(|&ai| z[ai].clamp(0.0, 1.0)).sum()
    };
    let mut visited = vec![false; graph.vertex_count()];
    visited[s] = true;
    let mut seq = vec![s];
    let mut spent = 0.0;
    let mut head = s;
    while head != t {
        let mut best: Option<(usize, f64, f64)> = None;
        for &ai in graph.out_arcs(head) {
            let arc = &graph.arcs()[ai];
            if visited[arc.to] || spent + arc.cost + to_t[arc.to] > budget + 1e-9 {
                continue;
            }
            // the end is a last resort: measure as much as the budget allows
            let score = if arc.to == t { -1.0 } else { visit_mass(arc.to) };
            if best.is_none_or(|(_, s0, _)| score > s0) {
                best = Some((arc.to, score, arc.cost));
            }
        }
        let (next, _, cost) = best?;
        visited[next] = true;
        seq.push(next);
        spent += cost;
        head = next;
    }
    let mut assignment = vec![false; model.n_binary()];
    for w in seq.windows(2) {
        assignment[graph.arc_index(w[0], w[1])?] = true;
    }
    Some(assignment)
}

fn rows_feasible(model: &MiqpModel, cuts: &[LinearConstraint], assignment: &[bool]) -> bool {
    let tol = |c: &LinearConstraint| 1e-9 * (1.0 + c.rhs.abs());
    model.constraints().iter().all(|c| c.satisfied_by(assignment, tol(c)))
        && cuts.iter().all(|c| c.satisfied_by(assignment, tol(c)))
}

pub(crate) fn most_fractional(z: &[f64], fixings: &[u8]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &f) in fixings.iter().enumerate() {
        if f != FREE {
            continue;
        }
        let frac = z[i].clamp(0.0, 1.0);
        let score = frac.min(1.0 - frac);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Clone)]
struct PseudoCosts {
    up_sum: Vec<f64>,
    up_cnt: Vec<u32>,
    down_sum: Vec<f64>,
    down_cnt: Vec<u32>,
}

impl PseudoCosts {
    fn new(n: usize) -> Self {
        Self { up_sum: vec![0.0; n], up_cnt: vec![0; n], down_sum: vec![0.0; n], down_cnt: vec![0; n] }
    }

    fn record(&mut self, info: &BranchInfo, child_bound: f64) {
        if !child_bound.is_finite() || !info.parent_bound.is_finite() {
            return;
        }
        let gain = (child_bound - info.parent_bound).max(0.0);
        let per_unit = gain / info.frac_dist.max(1e-6);
        if info.up {
            self.up_sum[info.var] += per_unit;
            self.up_cnt[info.var] += 1;
        } else {
            self.down_sum[info.var] += per_unit;
            self.down_cnt[info.var] += 1;
        }
    }

    /// Product of estimated up/down degradations; variables without history
    /// score by fractionality, and uninitialized variables are preferred so
    /// the estimates build up.
    fn select(&self, z: &[f64], fixings: &[u8]) -> Option<usize> {
        let mut best: Option<(usize, f64, bool)> = None;
        for (i, &f) in fixings.iter().enumerate() {
            if f != FREE {
                continue;
            }
            let frac = z[i].clamp(0.0, 1.0);
            let dist = frac.min(1.0 - frac);
            if dist <= INT_TOL {
                continue;
            }
            let initialized = self.up_cnt[i] > 0 && self.down_cnt[i] > 0;
            let score = if initialized {
                let up = self.up_sum[i] / self.up_cnt[i] as f64;
                let down = self.down_sum[i] / self.down_cnt[i] as f64;
                (up * (1.0 - frac)).max(1e-12) * (down * frac).max(1e-12)
            } else {
                dist
            };
            let better = match best {
                None => true,
                Some((_, s, init)) => (!initialized && init) || (initialized == init && score > s),
            };
            if better {
                best = Some((i, score, initialized));
            }
        }
        // fall back to any fractional-free variable even at tiny distance
        best.map(|(i, _, _)| i).or_else(|| most_fractional(z, fixings))
    }
}

/// Result of one relaxation at a partial fixing: a safe value that
/// lower-bounds every completion, the per-block coefficients, and the
/// (possibly fractional) selection variables.
#[derive(Debug, Clone)]
pub struct QpRelaxation {
    pub value: f64,
    pub alphas: Vec<DVector<f64>>,
    pub z: Vec<f64>,
}

/// Solves one relaxation of `model` under the given partial fixing,
/// including all currently pooled cuts.
pub fn qp_relax(
    model: &MiqpModel,
    fixings: &[Option<bool>],
    cfg: &SolverConfig,
) -> Result<QpRelaxation> {
    if fixings.len() != model.n_binary() {
        return Err(Error::DimensionMismatch { expected: model.n_binary(), got: fixings.len() });
    }
    let coded: Vec<u8> = fixings.iter().map(|f| f.map_or(FREE, u8::from)).collect();
    let (cuts, _) = model.cuts_snapshot();
    let bundle = build_engine(model, &cuts)?;
    let (lower, upper) = node_bounds(&bundle, model, &coded);
    let settings =
        QpSettings { abs_tol: cfg.qp_abs_tol, rel_tol: cfg.qp_rel_tol, check_interval: 25 };
    let out = bundle.engine.solve(
        &lower,
        &upper,
        &bundle.z_id_row,
        None,
        &settings,
        cfg.max_qp_iterations,
        f64::INFINITY,
    );
    let dim = model.block_dim();
    let alphas = (0..model.blocks().len())
        .map(|j| DVector::from_fn(dim, |e, _| out.x[j * dim + e]))
        .collect();
    let n_cont = model.blocks().len() * dim;
    let z = out.x[n_cont..].to_vec();
    Ok(QpRelaxation { value: out.dual_bound, alphas, z })
}

/// Branch-and-bound solve of a selection MIQP.
pub fn solve(model: &MiqpModel, cfg: &SolverConfig) -> Result<SolveState> {
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|s| start + std::time::Duration::from_secs_f64(s));

    let n_bin = model.n_binary();
    if n_bin == 0 {
        return Err(Error::Internal("model has no binary variables".into()));
    }
    let n_cont = model.blocks().len() * model.block_dim();
    let trivial_ub = model.empty_selection_objective();
    let gap_slack = |ub: f64| cfg.gap_tolerance * ub.abs().max(1e-10);

    let mut log: Vec<LogRecord> = Vec::new();
    let mut cuts_added: u64 = 0;
    let mut nodes_explored: u64 = 0;

    let mut incumbent: Option<Incumbent> = None;
    if let Some(assignment) = root_incumbent(model)? {
        let cand = exact_candidate(model, &assignment)?;
        log.push(LogRecord {
            t: start.elapsed().as_secs_f64(),
            event: LogEvent::Incumbent { objective: cand.objective },
        });
        incumbent = Some(cand);
    }

    let (mut cuts, mut pool_version) = model.cuts_snapshot();
    let mut bundle = build_engine(model, &cuts)?;
    let qp_settings =
        QpSettings { abs_tol: cfg.qp_abs_tol, rel_tol: cfg.qp_rel_tol, check_interval: 25 };

    let mut queue = Queue::new(cfg.node_selection);
    let mut next_id: u64 = 0;
    queue.push(Node {
        id: next_id,
        bound: f64::NEG_INFINITY,
        fixings: presolve_fixings(model),
        depth: 0,
        warm: None,
        qp_budget: cfg.max_qp_iterations,
        requeues: 0,
        branch_info: None,
    });
    next_id += 1;

    let mut pseudo = PseudoCosts::new(n_bin);
    let mut global_lb = f64::NEG_INFINITY;
    let mut closed_min = f64::INFINITY;
    let mut timed_out = false;
    let dive_to_t = match model.kind() {
        ModelKind::Ipp { graph, .. } => Some(graph.shortest_to(graph.end())),
        ModelKind::SparseSs { .. } => None,
    };

    while let Some(node) = queue.pop() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            queue.push(node);
            timed_out = true;
            break;
        }
        nodes_explored += 1;

        // valid global lower bound: every open or closed subtree is covered
        let lb_now = queue.min_bound().min(node.bound).min(closed_min);
        if lb_now > global_lb {
            global_lb = lb_now;
            if global_lb.is_finite() {
                log.push(LogRecord {
                    t: start.elapsed().as_secs_f64(),
                    event: LogEvent::Bound { lower: global_lb },
                });
            }
        }

        let ub = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
        let cutoff = if ub.is_finite() { ub - gap_slack(ub) } else { f64::INFINITY };
        if node.bound >= cutoff {
            closed_min = closed_min.min(node.bound);
            continue;
        }

        // refresh relaxation rows if cuts arrived since the factorization
        {
            let pool = model.cut_pool().read().expect("cut pool poisoned");
            if pool.version() != pool_version {
                cuts = pool.cuts().to_vec();
                pool_version = pool.version();
                drop(pool);
                bundle = build_engine(model, &cuts)?;
            }
        }

        let (lower, upper) = node_bounds(&bundle, model, &node.fixings);
        let out = bundle.engine.solve_until(
            &lower,
            &upper,
            &bundle.z_id_row,
            node.warm.as_ref(),
            &qp_settings,
            node.qp_budget,
            cutoff,
            deadline,
        );
        let node_bound = node.bound.max(out.dual_bound);
        log.push(LogRecord {
            t: start.elapsed().as_secs_f64(),
            event: LogEvent::Node { id: node.id, bound: node_bound },
        });
        if let Some(info) = &node.branch_info {
            pseudo.record(info, node_bound);
        }

        if node_bound >= cutoff {
            closed_min = closed_min.min(node_bound);
            continue;
        }
        // bound above the no-measurement objective certifies an empty subtree
        if node_bound > trivial_ub + 1e-9 * (1.0 + trivial_ub.abs()) {
            continue;
        }

        let z = &out.x[n_cont..];
        let integral = node
            .fixings
            .iter()
            .enumerate()
            .all(|(i, &f)| f != FREE || (z[i] - z[i].round()).abs() <= INT_TOL);

        if integral {
            let assignment: Vec<bool> = node
                .fixings
                .iter()
                .enumerate()
                .map(|(i, &f)| if f == FREE { z[i].round() == 1.0 } else { f == 1 })
                .collect();

            if !rows_feasible(model, &cuts, &assignment) {
                let warm = QpWarmStart { x: out.x.clone(), y: out.y.clone() };
                requeue_or_branch(node, &mut queue, &mut next_id, &mut closed_min, warm, node_bound);
                continue;
            }

            if let Some(generator) = &model.cut_generator {
                let violated = generator(&assignment)?;
                if !violated.is_empty() {
                    let mut added = 0usize;
                    {
                        let mut pool = model.cut_pool().write().expect("cut pool poisoned");
                        for cut in violated {
                            if pool.insert(cut) {
                                added += 1;
                            }
                        }
                    }
                    cuts_added += added as u64;
                    log.push(LogRecord {
                        t: start.elapsed().as_secs_f64(),
                        event: LogEvent::Cut { added },
                    });
                    // candidate rejected; the node re-solves against the cuts
                    let mut n = node;
                    n.bound = node_bound;
                    n.warm = Some(QpWarmStart { x: out.x.clone(), y: out.y.clone() });
                    queue.push(n);
                    continue;
                }
            }

            let cand = exact_candidate(model, &assignment)?;
            let cand_obj = cand.objective;
            if cand_obj < ub - INCUMBENT_TOL {
                log.push(LogRecord {
                    t: start.elapsed().as_secs_f64(),
                    event: LogEvent::Incumbent { objective: cand_obj },
                });
                incumbent = Some(cand);
            }

            let all_fixed = node.fixings.iter().all(|&f| f != FREE);
            if all_fixed {
                closed_min = closed_min.min(cand_obj);
            } else if node_bound >= cand_obj - gap_slack(cand_obj) {
                closed_min = closed_min.min(node_bound);
            } else {
                // bound not yet tight enough to certify this subtree
                let warm = QpWarmStart { x: out.x.clone(), y: out.y.clone() };
                requeue_or_branch(node, &mut queue, &mut next_id, &mut closed_min, warm, node_bound);
            }
            continue;
        }

        // periodic primal dive off the fractional point
        if nodes_explored % 20 == 1 {
            if let Some(to_t) = &dive_to_t {
                if let Some(assignment) = dive_path(model, z, to_t) {
                    let cand = exact_candidate(model, &assignment)?;
                    let ub_now = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
                    if cand.objective < ub_now - INCUMBENT_TOL {
                        log.push(LogRecord {
                            t: start.elapsed().as_secs_f64(),
                            event: LogEvent::Incumbent { objective: cand.objective },
                        });
                        incumbent = Some(cand);
                    }
                }
            }
        }

        // fractional: branch
        let var = match cfg.branching {
            BranchingRule::MostFractional => most_fractional(z, &node.fixings),
            BranchingRule::PseudoCost => pseudo.select(z, &node.fixings),
        }
        .ok_or_else(|| Error::Internal("fractional node without free variable".into()))?;
        let frac = z[var].clamp(0.0, 1.0);
        let warm = QpWarmStart { x: out.x.clone(), y: out.y.clone() };

        let child = |value: u8, info: BranchInfo, id: u64| {
            let mut fx = node.fixings.clone();
            fx[var] = value;
            Node {
                id,
                bound: node_bound,
                fixings: fx,
                depth: node.depth + 1,
                warm: Some(warm.clone()),
                qp_budget: cfg.max_qp_iterations,
                requeues: 0,
                branch_info: Some(info),
            }
        };
        let down = child(
            0,
            BranchInfo { var, up: false, parent_bound: node_bound, frac_dist: frac },
            next_id,
        );
        let up = child(
            1,
            BranchInfo { var, up: true, parent_bound: node_bound, frac_dist: 1.0 - frac },
            next_id + 1,
        );
        next_id += 2;
        match cfg.node_selection {
            NodeSelection::BestBound => {
                queue.push(down);
                queue.push(up);
            }
            NodeSelection::DepthFirst => {
                // push the rounding direction last so it pops first
                if frac >= 0.5 {
                    queue.push(down);
                    queue.push(up);
                } else {
                    queue.push(up);
                    queue.push(down);
                }
            }
        }
    }

    let lb_now = queue.min_bound().min(closed_min);
    if lb_now > global_lb {
        global_lb = lb_now;
        if global_lb.is_finite() {
            log.push(LogRecord {
                t: start.elapsed().as_secs_f64(),
                event: LogEvent::Bound { lower: global_lb },
            });
        }
    }

    let status = match (&incumbent, timed_out) {
        (Some(_), false) => SolveStatus::Optimal,
        (Some(_), true) => SolveStatus::TimeoutFeasible,
        (None, true) => SolveStatus::TimeoutNoIncumbent,
        (None, false) => SolveStatus::Infeasible,
    };
    let gap = match &incumbent {
        Some(inc) => {
            let ub = inc.objective;
            if status == SolveStatus::Optimal && !global_lb.is_finite() {
                // degenerate: tree closed before any finite bound was logged
                global_lb = ub;
            }
            ((ub - global_lb) / ub.abs().max(1e-10)).max(0.0)
        }
        None => f64::INFINITY,
    };

    Ok(SolveState {
        incumbent,
        global_lower_bound: global_lb,
        gap,
        nodes_explored,
        cuts_added,
        status,
        log,
    })
}

/// Re-queues a node whose relaxation could not yet be certified, doubling its
/// iteration budget; after the retry cap it splits on the lowest-index free
/// variable instead so the search always progresses.
fn requeue_or_branch(
    node: Node,
    queue: &mut Queue,
    next_id: &mut u64,
    closed_min: &mut f64,
    warm: QpWarmStart,
    bound: f64,
) {
    if node.requeues < MAX_REQUEUES {
        let mut n = node;
        n.bound = bound;
        n.warm = Some(warm);
        n.qp_budget *= 2;
        n.requeues += 1;
        queue.push(n);
    } else if let Some(var) = node.fixings.iter().position(|&f| f == FREE) {
        for value in [0u8, 1u8] {
            let mut fx = node.fixings.clone();
            fx[var] = value;
            queue.push(Node {
                id: *next_id,
                bound,
                fixings: fx,
                depth: node.depth + 1,
                warm: Some(warm.clone()),
                qp_budget: node.qp_budget,
                requeues: 0,
                branch_info: None,
            });
            *next_id += 1;
        }
    } else {
        *closed_min = closed_min.min(bound);
    }
}
