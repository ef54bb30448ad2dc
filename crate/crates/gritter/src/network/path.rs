//! Travel-time shortest paths.
//!
//! Edge weight is `length_km / speed_limit` (hours). Paths are extracted by
//! running Dijkstra from the *target* on the reversed graph, then walking
//! forward from the source along "tight" edges (`dist[v] + w(e) == dist[u]`,
//! exact float equality). Edge weights are strictly positive, so the tight
//! subgraph is acyclic and the walk always terminates at the target. Taking
//! the smallest edge id at every step yields the lexicographically smallest
//! edge-id sequence among exactly time-optimal paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{EdgeId, NodeId, RoadNetwork};
use crate::{Error, Result};

/// A realized shortest path: total time, traversed distance and the edge
/// sequence. `from == to` yields the empty path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub time_hours: f64,
    pub distance_km: f64,
    pub edges: Vec<EdgeId>,
}

/// One-to-all / all-to-one travel times from a fixed anchor node.
///
/// Immutable after construction; queries are read-only, so instances may be
/// shared across threads freely.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    anchor: usize,
    reverse: bool,
    time: Vec<f64>,
}

impl ShortestPaths {
    /// Times from `source` to every node (forward Dijkstra).
    pub fn from_source(network: &RoadNetwork, source: NodeId) -> Result<Self> {
        let pos = network
            .node_pos(source)
            .ok_or(Error::InvalidInput(format!("unknown node {source}")))?;
        Ok(ShortestPaths {
            anchor: pos,
            reverse: false,
            time: dijkstra(network, pos, false),
        })
    }

    /// Times from every node to `target` (Dijkstra on the reversed graph).
    pub fn toward(network: &RoadNetwork, target: NodeId) -> Result<Self> {
        let pos = network
            .node_pos(target)
            .ok_or(Error::InvalidInput(format!("unknown node {target}")))?;
        Ok(ShortestPaths {
            anchor: pos,
            reverse: true,
            time: dijkstra(network, pos, true),
        })
    }

    /// Travel time in hours from the anchor to `node` (forward mode).
    pub fn time_to(&self, network: &RoadNetwork, node: NodeId) -> Option<f64> {
        debug_assert!(!self.reverse);
        let pos = network.node_pos(node)?;
        let t = self.time[pos];
        t.is_finite().then_some(t)
    }

    /// Travel time in hours from `node` to the anchor (reverse mode).
    pub fn time_from(&self, network: &RoadNetwork, node: NodeId) -> Option<f64> {
        debug_assert!(self.reverse);
        let pos = network.node_pos(node)?;
        let t = self.time[pos];
        t.is_finite().then_some(t)
    }

    /// Reconstructs the lexicographically smallest time-optimal path from
    /// `source` to the anchor. Reverse mode only.
    pub fn path_from(&self, network: &RoadNetwork, source: NodeId) -> Result<PathResult> {
        assert!(self.reverse, "path_from requires a `toward` instance");
        let start = network
            .node_pos(source)
            .ok_or(Error::InvalidInput(format!("unknown node {source}")))?;
        if !self.time[start].is_finite() {
            return Err(Error::Unreachable {
                from: source,
                to: network.node_at(self.anchor).id,
            });
        }
        let mut edges = Vec::new();
        let mut distance_km = 0.0;
        let mut at = start;
        while at != self.anchor {
            let mut chosen = None;
            for &ei in network.out_edges_at(at) {
                let e = network.edge_at(ei);
                let head = network.node_pos(e.to).unwrap();
                if self.time[head].is_finite()
                    && self.time[head] + e.deadhead_hours() == self.time[at]
                {
                    chosen = Some((ei, head));
                    break; // out-edge lists are id-sorted: first tight = min id
                }
            }
            let (ei, head) = chosen.expect("settled node always has a tight out-edge");
            let e = network.edge_at(ei);
            edges.push(e.id);
            distance_km += e.length_km;
            at = head;
        }
        Ok(PathResult {
            time_hours: self.time[start],
            distance_km,
            edges,
        })
    }
}

/// See [`RoadNetwork::shortest_travel_time`].
pub fn shortest_travel_time(
    network: &RoadNetwork,
    from: NodeId,
    to: NodeId,
) -> Result<PathResult> {
    ShortestPaths::toward(network, to)?.path_from(network, from)
}

#[derive(PartialEq)]
struct HeapKey(f64, usize);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| self.1.cmp(&other.1))
    }
}

fn dijkstra(network: &RoadNetwork, anchor: usize, reverse: bool) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; network.node_count()];
    dist[anchor] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(HeapKey(0.0, anchor)));
    while let Some(Reverse(HeapKey(t, v))) = heap.pop() {
        if t > dist[v] {
            continue;
        }
        let incident = if reverse {
            network.in_edges_at(v)
        } else {
            network.out_edges_at(v)
        };
        for &ei in incident {
            let e = network.edge_at(ei);
            let w = if reverse {
                network.node_pos(e.from).unwrap()
            } else {
                network.node_pos(e.to).unwrap()
            };
            let cand = t + e.deadhead_hours();
            if cand < dist[w] {
                dist[w] = cand;
                heap.push(Reverse(HeapKey(cand, w)));
            }
        }
    }
    dist
}
