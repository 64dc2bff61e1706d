//! Dijkstra search with deterministic tie-breaking, plus a gear-aware
//! variant that charges gear changes at the junctions between chains.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::path::Direction;
use crate::quality::QualitySpec;

/// A minimum-cost route as the list of edge ids followed.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub cost: f64,
    pub edges: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    cost: f64,
    hops: u32,
}

impl Label {
    fn cmp(&self, other: &Label) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.hops.cmp(&other.hops))
    }
}

struct HeapEntry {
    label: Label,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.label.cmp(&self.label).then(other.node.cmp(&self.node))
    }
}

/// Directed graph given by edge endpoints and per-node outgoing edge lists.
pub struct Digraph<'a> {
    pub num_nodes: usize,
    pub ends: &'a [(usize, usize)],
    pub out: &'a [Vec<usize>],
}

/// Builds sorted outgoing edge lists from endpoint pairs.
pub fn out_lists(num_nodes: usize, ends: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); num_nodes];
    for (e, &(u, _)) in ends.iter().enumerate() {
        out[u].push(e);
    }
    out
}

/// Minimum-cost path from `source` to `target`.
///
/// `weight` returns a non-negative cost, or `None` for an edge that must not
/// be used; it is called at most once per edge. Among equal-cost paths the
/// one with fewer edges wins, then the lexicographically smaller node
/// sequence, then lower edge ids.
pub fn shortest_path<W>(g: &Digraph<'_>, source: usize, target: usize, mut weight: W) -> Option<Route>
where
    W: FnMut(usize) -> Option<f64>,
{
    if source == target {
        return Some(Route {
            cost: 0.0,
            edges: Vec::new(),
        });
    }
    let mut memo: Vec<Option<Option<f64>>> = vec![None; g.ends.len()];
    let mut w = |e: usize| *memo[e].get_or_insert_with(|| weight(e));
    let mut dist: Vec<Option<Label>> = vec![None; g.num_nodes];
    let mut settled = vec![false; g.num_nodes];
    let mut order = Vec::new();
    let mut heap = BinaryHeap::new();
    dist[source] = Some(Label { cost: 0.0, hops: 0 });
    heap.push(HeapEntry {
        label: Label { cost: 0.0, hops: 0 },
        node: source,
    });
    while let Some(HeapEntry { label, node: u }) = heap.pop() {
        if settled[u] || dist[u].is_some_and(|d| d.cmp(&label) != Ordering::Equal) {
            continue;
        }
        settled[u] = true;
        order.push(u);
        if u == target {
            break;
        }
        for &e in &g.out[u] {
            let v = g.ends[e].1;
            if settled[v] {
                continue;
            }
            let Some(we) = w(e) else { continue };
            debug_assert!(we >= 0.0, "negative edge weight");
            let cand = Label {
                cost: label.cost + we,
                hops: label.hops + 1,
            };
            if dist[v].is_none_or(|d| cand.cmp(&d) == Ordering::Less) {
                dist[v] = Some(cand);
                heap.push(HeapEntry { label: cand, node: v });
            }
        }
    }
    let goal = dist[target].filter(|_| settled[target])?;

    // tight edges between settled nodes: the union of all optimal routes
    let mut tight_in: Vec<Vec<usize>> = vec![Vec::new(); g.num_nodes];
    for &u in &order {
        let du = dist[u].expect("settled nodes have labels");
        for &e in &g.out[u] {
            let v = g.ends[e].1;
            if !settled[v] || v == u {
                continue;
            }
            if let Some(Some(we)) = memo[e] {
                let via = Label {
                    cost: du.cost + we,
                    hops: du.hops + 1,
                };
                if dist[v].is_some_and(|dv| via.cmp(&dv) == Ordering::Equal) {
                    tight_in[v].push(e);
                }
            }
        }
    }
    let mut reaches = vec![false; g.num_nodes];
    let mut stack = vec![target];
    reaches[target] = true;
    while let Some(v) = stack.pop() {
        for &e in &tight_in[v] {
            let u = g.ends[e].0;
            if !reaches[u] {
                reaches[u] = true;
                stack.push(u);
            }
        }
    }
    let mut tight_out: Vec<Vec<usize>> = vec![Vec::new(); g.num_nodes];
    for (v, list) in tight_in.iter().enumerate() {
        if reaches[v] {
            for &e in list {
                tight_out[g.ends[e].0].push(e);
            }
        }
    }

    // greedy walk: smallest next node, then smallest edge id
    let mut edges = Vec::with_capacity(goal.hops as usize);
    let mut u = source;
    while u != target {
        let e = *tight_out[u]
            .iter()
            .min_by_key(|&&e| (g.ends[e].1, e))
            .expect("a tight edge leads on towards the target");
        edges.push(e);
        u = g.ends[e].1;
    }
    Some(Route { cost: goal.cost, edges })
}

/// An edge carrying a primitive chain; `None` gears mean an empty chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GearEdge {
    pub from: usize,
    pub to: usize,
    pub first: Option<Direction>,
    pub last: Option<Direction>,
}

const GEARS: usize = 3;

fn gear_slot(g: Option<Direction>) -> usize {
    match g {
        None => 0,
        Some(Direction::Forward) => 1,
        Some(Direction::Reverse) => 2,
    }
}

fn slot_gear(slot: usize) -> Option<Direction> {
    match slot {
        0 => None,
        1 => Some(Direction::Forward),
        _ => Some(Direction::Reverse),
    }
}

/// Shortest route where each edge's standalone cost is corrected for the
/// gear the car arrives in, so route totals equal the cost of the
/// concatenated chain. States are `(node, current gear)`; the source starts
/// with no gear engaged.
pub fn gear_shortest_path<W>(
    num_nodes: usize,
    edges: &[GearEdge],
    source: usize,
    target: usize,
    spec: &QualitySpec,
    mut standalone: W,
) -> Option<Route>
where
    W: FnMut(usize) -> Option<f64>,
{
    let state = |node: usize, slot: usize| node * GEARS + slot;
    let sink = num_nodes * GEARS;
    let mut ends = Vec::new();
    let mut base = Vec::new();
    let mut adjust = Vec::new();
    for (id, e) in edges.iter().enumerate() {
        // the no-gear state persists across empty chains
        for slot in 0..GEARS {
            let incoming = slot_gear(slot);
            let out_slot = match e.last {
                Some(d) => gear_slot(Some(d)),
                None => slot,
            };
            ends.push((state(e.from, slot), state(e.to, out_slot)));
            base.push(Some(id));
            adjust.push(e.first.map_or(0.0, |first| spec.junction_adjustment(incoming, first)));
        }
    }
    for slot in 0..GEARS {
        ends.push((state(target, slot), sink));
        base.push(None);
        adjust.push(0.0);
    }
    let out = out_lists(sink + 1, &ends);
    let graph = Digraph {
        num_nodes: sink + 1,
        ends: &ends,
        out: &out,
    };
    let mut memo: Vec<Option<Option<f64>>> = vec![None; edges.len()];
    let route = shortest_path(&graph, state(source, 0), sink, |x| match base[x] {
        None => Some(0.0),
        Some(id) => {
            let w = *memo[id].get_or_insert_with(|| standalone(id));
            // rounding can push a corrected weight a hair below zero
            w.map(|w| (w + adjust[x]).max(0.0))
        }
    })?;
    Some(Route {
        cost: route.cost,
        edges: route.edges.into_iter().filter_map(|x| base[x]).collect(),
    })
}
