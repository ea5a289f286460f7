//! Observation graphs, path arithmetic, and subtour detection.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::randfield::{reject_duplicates, Point};
use crate::rng::SplitMix64;

/// Directed arc with a positive travel cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphArc {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

/// Directed observation graph: vertices are measurement locations, arc costs
/// are travel distances, `start`/`end` are the required path endpoints.
#[derive(Debug, Clone)]
pub struct ObservationGraph {
    vertices: Vec<Point>,
    arcs: Vec<GraphArc>,
    start: usize,
    end: usize,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
    arc_lookup: HashMap<(usize, usize), usize>,
}

impl ObservationGraph {
    pub fn new(vertices: Vec<Point>, arcs: Vec<GraphArc>, start: usize, end: usize) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidParameter("graph needs >= 2 vertices".into()));
        }
        if start >= vertices.len() || end >= vertices.len() {
            return Err(Error::InvalidParameter("endpoint index out of range".into()));
        }
        if start == end {
            return Err(Error::InvalidParameter("start and end must differ".into()));
        }
        reject_duplicates(&vertices)?;
        let mut out_arcs = vec![Vec::new(); vertices.len()];
        let mut in_arcs = vec![Vec::new(); vertices.len()];
        let mut arc_lookup = HashMap::new();
        for (idx, arc) in arcs.iter().enumerate() {
            if arc.from >= vertices.len() || arc.to >= vertices.len() {
                return Err(Error::InvalidParameter("arc endpoint out of range".into()));
            }
            if arc.from == arc.to {
                return Err(Error::InvalidParameter("self-loop arc".into()));
            }
            if !(arc.cost > 0.0) || !arc.cost.is_finite() {
                return Err(Error::InvalidParameter("arc cost must be finite and > 0".into()));
            }
            if arc_lookup.insert((arc.from, arc.to), idx).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate arc ({}, {})",
                    arc.from, arc.to
                )));
            }
            out_arcs[arc.from].push(idx);
            in_arcs[arc.to].push(idx);
        }
        Ok(Self { vertices, arcs, start, end, out_arcs, in_arcs, arc_lookup })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn arcs(&self) -> &[GraphArc] {
        &self.arcs
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Arc indices leaving `v`.
    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out_arcs[v]
    }

    /// Arc indices entering `v`.
    pub fn in_arcs(&self, v: usize) -> &[usize] {
        &self.in_arcs[v]
    }

    pub fn arc_between(&self, from: usize, to: usize) -> Option<&GraphArc> {
        self.arc_lookup.get(&(from, to)).map(|&i| &self.arcs[i])
    }

    pub fn arc_index(&self, from: usize, to: usize) -> Option<usize> {
        self.arc_lookup.get(&(from, to)).copied()
    }

    /// Shortest distances from `source` to every vertex (Dijkstra).
    pub fn shortest_from(&self, source: usize) -> Vec<f64> {
        self.dijkstra(source, false)
    }

    /// Shortest distances from every vertex to `target` (reverse Dijkstra).
    pub fn shortest_to(&self, target: usize) -> Vec<f64> {
        self.dijkstra(target, true)
    }

    /// One shortest path between two vertices, or `None` if disconnected.
    pub fn shortest_path_between(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        let mut parent = vec![usize::MAX; self.vertices.len()];
        dist[from] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { cost: 0.0, vertex: from });
        while let Some(HeapEntry { cost, vertex }) = heap.pop() {
            if cost > dist[vertex] {
                continue;
            }
            for &ai in &self.out_arcs[vertex] {
                let arc = &self.arcs[ai];
                let cand = cost + arc.cost;
                if cand < dist[arc.to] {
                    dist[arc.to] = cand;
                    parent[arc.to] = vertex;
                    heap.push(HeapEntry { cost: cand, vertex: arc.to });
                }
            }
        }
        if !dist[to].is_finite() {
            return None;
        }
        let mut seq = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur];
            seq.push(cur);
        }
        seq.reverse();
        Some(seq)
    }

    fn dijkstra(&self, origin: usize, reverse: bool) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        dist[origin] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { cost: 0.0, vertex: origin });
        while let Some(HeapEntry { cost, vertex }) = heap.pop() {
            if cost > dist[vertex] {
                continue;
            }
            let arcs = if reverse { &self.in_arcs[vertex] } else { &self.out_arcs[vertex] };
            for &ai in arcs {
                let arc = &self.arcs[ai];
                let next = if reverse { arc.from } else { arc.to };
                let cand = cost + arc.cost;
                if cand < dist[next] {
                    dist[next] = cand;
                    heap.push(HeapEntry { cost: cand, vertex: next });
                }
            }
        }
        dist
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, vertex)
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A simple s-t path together with its achieved weighted estimation error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSolution {
    pub vertex_sequence: Vec<usize>,
    pub arc_set: Vec<(usize, usize)>,
    pub length: f64,
    pub objective: f64,
}

impl PathSolution {
    /// Builds a solution from an ordered vertex sequence, validating that
    /// consecutive vertices are joined by arcs and that no vertex repeats.
    pub fn from_sequence(graph: &ObservationGraph, seq: Vec<usize>, objective: f64) -> Result<Self> {
        if seq.first() != Some(&graph.start()) || seq.last() != Some(&graph.end()) {
            return Err(Error::InvalidParameter("path must run from start to end".into()));
        }
        let mut seen = vec![false; graph.vertex_count()];
        for &v in &seq {
            if seen[v] {
                return Err(Error::InvalidParameter(format!("vertex {v} repeated on path")));
            }
            seen[v] = true;
        }
        let length = path_length(graph, &seq)?;
        let arc_set = seq.windows(2).map(|w| (w[0], w[1])).collect();
        Ok(Self { vertex_sequence: seq, arc_set, length, objective })
    }
}

/// Square grid graph: `n^2` vertices on an integer lattice scaled by
/// `edge_length`, arcs in both directions between 4-neighbors, start at one
/// corner and end at the diagonally opposite corner.
pub fn grid_graph(n: usize, edge_length: f64) -> Result<ObservationGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter("grid needs n >= 2".into()));
    }
    if !(edge_length > 0.0) {
        return Err(Error::InvalidParameter("edge length must be > 0".into()));
    }
    let mut vertices = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            vertices.push(Point::xy(col as f64 * edge_length, row as f64 * edge_length));
        }
    }
    let mut arcs = Vec::new();
    let idx = |row: usize, col: usize| row * n + col;
    for row in 0..n {
        for col in 0..n {
            if col + 1 < n {
                arcs.push(GraphArc { from: idx(row, col), to: idx(row, col + 1), cost: edge_length });
                arcs.push(GraphArc { from: idx(row, col + 1), to: idx(row, col), cost: edge_length });
            }
            if row + 1 < n {
                arcs.push(GraphArc { from: idx(row, col), to: idx(row + 1, col), cost: edge_length });
                arcs.push(GraphArc { from: idx(row + 1, col), to: idx(row, col), cost: edge_length });
            }
        }
    }
    ObservationGraph::new(vertices, arcs, 0, n * n - 1)
}

/// Axis-aligned sampling rectangle for roadmap construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        if min[0] >= max[0] || min[1] >= max[1] {
            return Err(Error::InvalidParameter("degenerate sampling rectangle".into()));
        }
        Ok(Self { min, max })
    }
}

const PRM_RETRY_CAP: u32 = 16;

/// Probabilistic roadmap: `m` vertices sampled uniformly in `bounds`, each
/// connected bidirectionally to its `connection_factor` nearest Euclidean
/// neighbors (an arc pair is added whenever either endpoint selects the
/// other). Start and end are the mutually farthest vertex pair. Deterministic
/// given the seed; if start and end land in different components the seed is
/// incremented and sampling retried a bounded number of times.
pub fn prm_graph(
    bounds: &Rect,
    m: usize,
    connection_factor: usize,
    seed: u64,
) -> Result<ObservationGraph> {
    if m < 2 {
        return Err(Error::InvalidParameter("roadmap needs m >= 2".into()));
    }
    if connection_factor < 1 {
        return Err(Error::InvalidParameter("connection factor must be >= 1".into()));
    }
    for attempt in 0..PRM_RETRY_CAP {
        let graph = build_prm(bounds, m, connection_factor, seed.wrapping_add(attempt as u64))?;
        if graph.shortest_from(graph.start())[graph.end()].is_finite() {
            return Ok(graph);
        }
    }
    Err(Error::Disconnected { attempts: PRM_RETRY_CAP })
}

fn build_prm(
    bounds: &Rect,
    m: usize,
    connection_factor: usize,
    seed: u64,
) -> Result<ObservationGraph> {
    let mut rng = SplitMix64::new(seed);
    let vertices: Vec<Point> = (0..m)
        .map(|_| {
            Point::xy(
                rng.next_range(bounds.min[0], bounds.max[0]),
                rng.next_range(bounds.min[1], bounds.max[1]),
            )
        })
        .collect();

    let dist = |i: usize, j: usize| vertices[i].distance(&vertices[j]).expect("planar points");

    let mut arcs = Vec::new();
    let mut present: HashMap<(usize, usize), ()> = HashMap::new();
    for i in 0..m {
        let mut others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        for &j in others.iter().take(connection_factor) {
            for (u, v) in [(i, j), (j, i)] {
                if present.insert((u, v), ()).is_none() {
                    arcs.push(GraphArc { from: u, to: v, cost: dist(u, v) });
                }
            }
        }
    }

    let mut best = (0usize, 1usize, -1.0f64);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = dist(i, j);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    ObservationGraph::new(vertices, arcs, best.0, best.1)
}

/// Sum of arc costs along a vertex sequence.
pub fn path_length(graph: &ObservationGraph, seq: &[usize]) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::InvalidParameter("path needs >= 2 vertices".into()));
    }
    let mut total = 0.0;
    for w in seq.windows(2) {
        let arc = graph
            .arc_between(w[0], w[1])
            .ok_or(Error::MissingArc { from: w[0], to: w[1] })?;
        total += arc.cost;
    }
    Ok(total)
}

/// Decomposes a degree-feasible arc selection into the walk leaving `start`
/// plus zero or more disjoint directed cycles, and returns the cycles (each as
/// its sorted vertex set). An empty result means the selection is a single
/// simple s-t path.
pub fn find_subtours(graph: &ObservationGraph, selection: &[(usize, usize)]) -> Result<Vec<Vec<usize>>> {
    let n = graph.vertex_count();
    let mut succ: Vec<Option<usize>> = vec![None; n];
    let mut used: HashMap<(usize, usize), bool> = HashMap::new();
    for &(from, to) in selection {
        if graph.arc_between(from, to).is_none() {
            return Err(Error::MissingArc { from, to });
        }
        if succ[from].is_some() {
            return Err(Error::DegreeInfeasible(format!("vertex {from} has out-degree > 1")));
        }
        succ[from] = Some(to);
        used.insert((from, to), false);
    }

    let mut cycles = Vec::new();

    // Walk the component leaving the start vertex. Returning to an earlier
    // vertex means the walk closed a directed cycle, which is a subtour.
    let mut on_walk = vec![usize::MAX; n];
    let mut walk = vec![graph.start()];
    on_walk[graph.start()] = 0;
    while let Some(next) = succ[*walk.last().expect("walk nonempty")] {
        let head = *walk.last().expect("walk nonempty");
        *used.get_mut(&(head, next)).expect("selected arc") = true;
        if on_walk[next] != usize::MAX {
            if next == graph.start() {
                let mut set: Vec<usize> = walk.clone();
                set.sort_unstable();
                cycles.push(set);
                break;
            }
            return Err(Error::DegreeInfeasible(format!("vertex {next} has in-degree > 1")));
        }
        on_walk[next] = walk.len();
        walk.push(next);
    }

    // Every remaining arc must lie on a disjoint cycle.
    let mut order: Vec<(usize, usize)> = used
        .iter()
        .filter(|(_, consumed)| !**consumed)
        .map(|(&arc, _)| arc)
        .collect();
    order.sort_unstable();
    for (from, to) in order {
        if *used.get(&(from, to)).expect("selected arc") {
            continue;
        }
        let mut cycle = vec![from];
        *used.get_mut(&(from, to)).expect("selected arc") = true;
        let mut cur = to;
        while cur != from {
            cycle.push(cur);
            let next = succ[cur].ok_or_else(|| {
                Error::DegreeInfeasible(format!("dangling chain at vertex {cur}"))
            })?;
            let consumed = used
                .get_mut(&(cur, next))
                .ok_or_else(|| Error::DegreeInfeasible(format!("arc ({cur}, {next}) reused")))?;
            if *consumed {
                return Err(Error::DegreeInfeasible(format!("arc ({cur}, {next}) reused")));
            }
            *consumed = true;
            cur = next;
        }
        cycle.sort_unstable();
        cycles.push(cycle);
    }

    Ok(cycles)
}
