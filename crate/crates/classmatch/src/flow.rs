//! Integral minimum-cost flow over explicit supply/demand networks.
//!
//! The solver runs successive shortest augmenting paths with node
//! potentials. Negative-cost arcs are admitted by starting them fully
//! saturated and moving their capacity onto the endpoint imbalances, which
//! keeps every residual cost nonnegative from the first iteration on (and
//! handles negative-cost cycles, which a Bellman-Ford bootstrap would not).
//! Supplies and demands are routed through an internal super source/sink
//! pair; the problem is infeasible exactly when they cannot be saturated.
//!
//! Everything is integer arithmetic. Capacities and costs are `i64`,
//! shortest-path labels are `i128` so path sums cannot wrap, and the final
//! cost accumulation is checked.

use thiserror::Error;

pub type NodeId = usize;
pub type ArcId = usize;

#[derive(Clone, Debug)]
pub struct Arc {
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: i64,
    pub cost: i64,
}

/// Directed network with per-node supplies (positive) and demands (negative).
#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    supplies: Vec<i64>,
    arcs: Vec<Arc>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("no feasible flow: {0}")]
    Infeasible(&'static str),
    #[error("cost accumulation overflows 64-bit range")]
    Overflow,
}

impl FlowNetwork {
    pub fn new() -> Self {
        FlowNetwork::default()
    }

    pub fn add_node(&mut self, supply: i64) -> NodeId {
        self.supplies.push(supply);
        self.supplies.len() - 1
    }

    pub fn add_arc(&mut self, from: NodeId, to: NodeId, capacity: i64, cost: i64) -> ArcId {
        assert!(from < self.supplies.len() && to < self.supplies.len());
        assert!(capacity >= 0, "arc capacities are nonnegative");
        self.arcs.push(Arc {
            from,
            to,
            capacity,
            cost,
        });
        self.arcs.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.supplies.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn supply(&self, v: NodeId) -> i64 {
        self.supplies[v]
    }

    pub fn is_balanced(&self) -> bool {
        self.supplies.iter().sum::<i64>() == 0
    }
}

/// An integral feasible flow of minimum total cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flow {
    per_arc: Vec<i64>,
    total_cost: i64,
}

impl Flow {
    pub fn value(&self, arc: ArcId) -> i64 {
        self.per_arc[arc]
    }

    pub fn per_arc(&self) -> &[i64] {
        &self.per_arc
    }

    pub fn total_cost(&self) -> i64 {
        self.total_cost
    }
}

const INF: i128 = i128::MAX / 4;

/// Residual edge; `twin ^ 1` trick pairs forward and backward directions.
struct REdge {
    to: usize,
    residual: i64,
    cost: i64,
}

struct Solver {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<REdge>,
}

impl Solver {
    fn new(nodes: usize) -> Self {
        Solver {
            adjacency: vec![Vec::new(); nodes],
            edges: Vec::new(),
        }
    }

    fn link(&mut self, from: usize, to: usize, forward_residual: i64, cost: i64, total: i64) {
        let e = self.edges.len();
        self.edges.push(REdge {
            to,
            residual: forward_residual,
            cost,
        });
        self.edges.push(REdge {
            to: from,
            residual: total - forward_residual,
            cost: -cost,
        });
        self.adjacency[from].push(e);
        self.adjacency[to].push(e + 1);
    }
}

/// Solve for a minimum-cost b-flow. Deterministic: arcs are scanned in
/// insertion order and shortest-path ties resolve by node index, so a fixed
/// input always yields the same flow.
pub fn solve_min_cost_flow(network: &FlowNetwork) -> Result<Flow, FlowError> {
    if !network.is_balanced() {
        return Err(FlowError::Infeasible("supplies and demands do not cancel"));
    }
    let n = network.node_count();
    let source = n;
    let sink = n + 1;
    let mut solver = Solver::new(n + 2);

    // Excess supply per node once negative arcs start out saturated.
    let mut excess: Vec<i64> = (0..n).map(|v| network.supply(v)).collect();
    for arc in network.arcs() {
        if arc.cost < 0 {
            solver.link(arc.from, arc.to, 0, arc.cost, arc.capacity);
            excess[arc.from] -= arc.capacity;
            excess[arc.to] += arc.capacity;
        } else {
            solver.link(arc.from, arc.to, arc.capacity, arc.cost, arc.capacity);
        }
    }

    let mut required: i64 = 0;
    for (v, &e) in excess.iter().enumerate() {
        if e > 0 {
            solver.link(source, v, e, 0, e);
            required += e;
        } else if e < 0 {
            solver.link(v, sink, -e, 0, -e);
        }
    }

    let mut potential = vec![0i128; n + 2];
    let mut dist = vec![INF; n + 2];
    let mut parent_edge = vec![usize::MAX; n + 2];
    let mut pushed: i64 = 0;

    while pushed < required {
        // Dijkstra on reduced costs; all residual costs are nonnegative.
        dist.fill(INF);
        parent_edge.fill(usize::MAX);
        dist[source] = 0;
        let mut heap = std::collections::BinaryHeap::new();
        heap.push(std::cmp::Reverse((0i128, source)));
        while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == sink {
                break;
            }
            for &e in &solver.adjacency[u] {
                let edge = &solver.edges[e];
                if edge.residual <= 0 {
                    continue;
                }
                let v = edge.to;
                let next = d + edge.cost as i128 + potential[u] - potential[v];
                debug_assert!(next >= d, "negative reduced cost on residual edge");
                if next < dist[v] {
                    dist[v] = next;
                    parent_edge[v] = e;
                    heap.push(std::cmp::Reverse((next, v)));
                }
            }
        }
        if dist[sink] >= INF {
            return Err(FlowError::Infeasible(
                "capacities cannot carry all supplies to their demands",
            ));
        }
        // Capped potential update keeps reduced costs valid with early exit.
        let cap = dist[sink];
        for v in 0..n + 2 {
            potential[v] += dist[v].min(cap);
        }

        let mut bottleneck = required - pushed;
        let mut v = sink;
        while v != source {
            let e = parent_edge[v];
            bottleneck = bottleneck.min(solver.edges[e].residual);
            v = solver.edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = parent_edge[v];
            solver.edges[e].residual -= bottleneck;
            solver.edges[e ^ 1].residual += bottleneck;
            v = solver.edges[e ^ 1].to;
        }
        pushed += bottleneck;
    }

    // Arc i occupies residual edge pair (2i, 2i+1); flow = backward residual.
    let mut per_arc = Vec::with_capacity(network.arcs().len());
    let mut total_cost: i64 = 0;
    for (i, arc) in network.arcs().iter().enumerate() {
        let f = solver.edges[2 * i + 1].residual;
        debug_assert!(0 <= f && f <= arc.capacity);
        per_arc.push(f);
        let term = arc.cost.checked_mul(f).ok_or(FlowError::Overflow)?;
        total_cost = total_cost.checked_add(term).ok_or(FlowError::Overflow)?;
    }
    Ok(Flow {
        per_arc,
        total_cost,
    })
}

/// Optimality certificate: a feasible flow has minimum cost iff its residual
/// network contains no negative-cost directed cycle. Checked with
/// Bellman-Ford from a virtual root, independent of the solver's internals.
pub fn residual_has_negative_cycle(network: &FlowNetwork, flow: &Flow) -> bool {
    let n = network.node_count();
    let mut residual: Vec<(usize, usize, i64)> = Vec::new();
    for (i, arc) in network.arcs().iter().enumerate() {
        let f = flow.value(i);
        if f < arc.capacity {
            residual.push((arc.from, arc.to, arc.cost));
        }
        if f > 0 {
            residual.push((arc.to, arc.from, -arc.cost));
        }
    }
    // dist = 0 everywhere plays the role of edges from a virtual root.
    let mut dist = vec![0i128; n];
    for round in 0..n {
        let mut relaxed = false;
        for &(u, v, c) in &residual {
            if dist[u] + (c as i128) < dist[v] {
                dist[v] = dist[u] + c as i128;
                relaxed = true;
            }
        }
        if !relaxed {
            return false;
        }
        if round == n - 1 {
            return true;
        }
    }
    false
}

/// Check conservation and capacity constraints of `flow` against `network`.
pub fn is_feasible(network: &FlowNetwork, flow: &Flow) -> bool {
    let mut balance = vec![0i64; network.node_count()];
    for (i, arc) in network.arcs().iter().enumerate() {
        let f = flow.value(i);
        if f < 0 || f > arc.capacity {
            return false;
        }
        balance[arc.from] += f;
        balance[arc.to] -= f;
    }
    (0..network.node_count()).all(|v| balance[v] == network.supply(v))
}
