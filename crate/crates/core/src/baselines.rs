//! Comparison algorithms and ground-truth oracles.
//!
//! The path-space branch-and-bound baseline extends partial paths
//! depth-first. Its node bound exploits set monotonicity of the estimation
//! error: the vertices of any completion lie inside the partial path plus
//! everything still reachable from the path head and able to reach the end
//! within the remaining budget, so the error of that superset lower-bounds
//! the error of every completion. Children are explored in ascending bound
//! order. The exhaustive enumerators are the test oracles; greedy subset
//! selection is the classical heuristic reference.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::estimator::total_weighted_error;
use crate::graphs::PathSolution;
use crate::model::{IppInstance, SparseSsInstance};
use crate::randfield::Point;
use crate::solver::{LogEvent, LogRecord, SolveStatus};

/// Partial path from the start vertex with its spent budget and lower bound.
#[derive(Debug, Clone)]
pub struct BnbPathNode {
    pub path: Vec<usize>,
    pub spent: f64,
    pub bound: f64,
}

/// Outcome of the path-space baseline.
#[derive(Debug)]
pub struct BnbOutcome {
    pub solution: Option<PathSolution>,
    pub status: SolveStatus,
    pub nodes: u64,
    pub log: Vec<LogRecord>,
}

const EDGE_TOL: f64 = 1e-9;

fn vertices_of(inst: &IppInstance, seq: &[usize]) -> Vec<Point> {
    seq.iter().map(|&v| inst.graph.vertices()[v].clone()).collect()
}

/// Bound of a partial path: the exact error of the superset
/// `path + {v : dist(head, v) + dist(v, t) <= remaining}`.
fn node_bound(inst: &IppInstance, path: &[usize], remaining: f64, to_t: &[f64]) -> Result<f64> {
    let head = *path.last().expect("nonempty path");
    let from_head = inst.graph.shortest_from(head);
    let mut on_path = vec![false; inst.graph.vertex_count()];
    for &v in path {
        on_path[v] = true;
    }
    let mut superset: Vec<usize> = path.to_vec();
    for v in 0..inst.graph.vertex_count() {
        if !on_path[v] && from_head[v] + to_t[v] <= remaining + EDGE_TOL {
            superset.push(v);
        }
    }
    total_weighted_error(&inst.field, &inst.omega, &vertices_of(inst, &superset))
}

/// Depth-first branch and bound over partial s-t paths.
pub fn bnb_paths(inst: &IppInstance, time_limit: Option<f64>) -> Result<BnbOutcome> {
    let start = Instant::now();
    let deadline = time_limit.map(|s| start + std::time::Duration::from_secs_f64(s));
    let graph = &inst.graph;
    let (s, t) = (graph.start(), graph.end());
    let to_t = graph.shortest_to(t);

    let mut log = Vec::new();
    let mut nodes: u64 = 0;
    let mut incumbent: Option<(Vec<usize>, f64)> = None;
    let mut timed_out = false;

    let root_bound = node_bound(inst, &[s], inst.budget, &to_t)?;
    let mut stack = vec![BnbPathNode { path: vec![s], spent: 0.0, bound: root_bound }];

    while let Some(node) = stack.pop() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            break;
        }
        nodes += 1;
        log.push(LogRecord {
            t: start.elapsed().as_secs_f64(),
            event: LogEvent::Node { id: nodes, bound: node.bound },
        });

        if let Some((_, best)) = &incumbent {
            if node.bound >= *best {
                continue;
            }
        }

        let head = *node.path.last().expect("nonempty path");
        if head == t {
            let objective =
                total_weighted_error(&inst.field, &inst.omega, &vertices_of(inst, &node.path))?;
            let better = incumbent.as_ref().is_none_or(|(_, best)| objective < *best);
            if better {
                log.push(LogRecord {
                    t: start.elapsed().as_secs_f64(),
                    event: LogEvent::Incumbent { objective },
                });
                incumbent = Some((node.path.clone(), objective));
            }
            continue;
        }

        let mut children: Vec<BnbPathNode> = Vec::new();
        for &ai in graph.out_arcs(head) {
            let arc = &graph.arcs()[ai];
            if node.path.contains(&arc.to) {
                continue;
            }
            let spent = node.spent + arc.cost;
            if spent + to_t[arc.to] > inst.budget + EDGE_TOL {
                continue;
            }
            let mut path = node.path.clone();
            path.push(arc.to);
            let bound = node_bound(inst, &path, inst.budget - spent, &to_t)?;
            children.push(BnbPathNode { path, spent, bound });
        }
        // ascending bound order; stack pops the most promising child first
        children.sort_by(|a, b| {
            b.bound.total_cmp(&a.bound).then_with(|| b.path.cmp(&a.path))
        });
        stack.extend(children);
    }

    let status = match (&incumbent, timed_out) {
        (Some(_), false) => SolveStatus::Optimal,
        (Some(_), true) => SolveStatus::TimeoutFeasible,
        (None, true) => SolveStatus::TimeoutNoIncumbent,
        (None, false) => SolveStatus::Infeasible,
    };
    let solution = match incumbent {
        Some((seq, objective)) => Some(PathSolution::from_sequence(graph, seq, objective)?),
        None => None,
    };
    Ok(BnbOutcome { solution, status, nodes, log })
}

/// Exhaustive enumeration of all simple in-budget s-t paths. Returns the
/// optimum and the number of complete paths evaluated. Ties break toward
/// shorter length, then lexicographically smaller vertex sequence.
pub fn brute_force_ipp(inst: &IppInstance, cap: u64) -> Result<(PathSolution, u64)> {
    let graph = &inst.graph;
    let (s, t) = (graph.start(), graph.end());
    let to_t = graph.shortest_to(t);

    struct Frame {
        path: Vec<usize>,
        spent: f64,
    }

    let mut stack = vec![Frame { path: vec![s], spent: 0.0 }];
    let mut expanded: u64 = 0;
    let mut evaluated: u64 = 0;
    let mut best: Option<(f64, f64, Vec<usize>)> = None;

    while let Some(frame) = stack.pop() {
        expanded += 1;
        if expanded > cap {
            return Err(Error::CapExceeded { cap });
        }
        let head = *frame.path.last().expect("nonempty path");
        if head == t {
            evaluated += 1;
            let objective =
                total_weighted_error(&inst.field, &inst.omega, &vertices_of(inst, &frame.path))?;
            let candidate = (objective, frame.spent, frame.path);
            let replace = match &best {
                None => true,
                Some((obj, len, seq)) => {
                    candidate.0 < *obj
                        || (candidate.0 == *obj && candidate.1 < *len)
                        || (candidate.0 == *obj && candidate.1 == *len && candidate.2 < *seq)
                }
            };
            if replace {
                best = Some(candidate);
            }
            continue;
        }
        // deterministic expansion order: arcs as stored in the graph
        for &ai in graph.out_arcs(head).iter().rev() {
            let arc = &graph.arcs()[ai];
            if frame.path.contains(&arc.to) {
                continue;
            }
            let spent = frame.spent + arc.cost;
            if spent + to_t[arc.to] > inst.budget + EDGE_TOL {
                continue;
            }
            let mut path = frame.path.clone();
            path.push(arc.to);
            stack.push(Frame { path, spent });
        }
    }

    let (objective, _, seq) =
        best.ok_or_else(|| Error::Internal("no feasible path in validated instance".into()))?;
    Ok((PathSolution::from_sequence(graph, seq, objective)?, evaluated))
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact minimum over all k-subsets of the observation set.
pub fn brute_force_ss(inst: &SparseSsInstance, cap: u64) -> Result<(Vec<usize>, f64)> {
    use itertools::Itertools;

    let m = inst.theta.len();
    if binomial(m, inst.cardinality) > cap as u128 {
        return Err(Error::CapExceeded { cap });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in (0..m).combinations(inst.cardinality) {
        let pts: Vec<Point> = subset.iter().map(|&i| inst.theta[i].clone()).collect();
        let value = total_weighted_error(&inst.field, &inst.omega, &pts)?;
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((subset, value));
        }
    }
    Ok(best.expect("cardinality >= 1"))
}

/// Greedy subset selection: k rounds, each adding the point that most reduces
/// the total weighted error, ties toward the lowest index.
pub fn greedy_ss(inst: &SparseSsInstance) -> Result<(Vec<usize>, f64)> {
    let m = inst.theta.len();
    let mut chosen: Vec<usize> = Vec::new();
    let mut value = 0.0;
    for _ in 0..inst.cardinality {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..m {
            if chosen.contains(&cand) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(cand);
            let pts: Vec<Point> = trial.iter().map(|&i| inst.theta[i].clone()).collect();
            let trial_value = total_weighted_error(&inst.field, &inst.omega, &pts)?;
            if best.is_none_or(|(_, v)| trial_value < v) {
                best = Some((cand, trial_value));
            }
        }
        let (cand, v) = best.expect("cardinality <= m");
        chosen.push(cand);
        value = v;
    }
    chosen.sort_unstable();
    Ok((chosen, value))
}
