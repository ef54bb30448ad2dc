//! Largest strongly connected component extraction (iterative Kosaraju).

use super::RoadNetwork;
use crate::Result;

/// Restricts the network to its maximum-cardinality SCC. Edges survive iff
/// both endpoints survive. Equal-size components break ties by discovery
/// order, which is deterministic given the sorted adjacency lists.
pub fn largest_scc(network: &RoadNetwork) -> Result<RoadNetwork> {
    if network.node_count() == 0 {
        return Err(crate::Error::InvalidInput(
            "cannot take SCC of an empty network".into(),
        ));
    }
    let comps = kosaraju(network);
    let largest = comps
        .iter()
        .max_by_key(|c| c.len())
        .expect("nonempty network has at least one SCC");

    let mut keep = vec![false; network.node_count()];
    for &v in largest {
        keep[v] = true;
    }

    let nodes = network
        .nodes()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, n)| *n)
        .collect();
    let edges = network
        .edges()
        .iter()
        .filter(|e| {
            keep[network.node_pos(e.from).unwrap()] && keep[network.node_pos(e.to).unwrap()]
        })
        .cloned()
        .collect();
    RoadNetwork::new(network.name.clone(), network.speed_unit, nodes, edges)
}

/// SCCs as lists of node positions, in discovery order.
fn kosaraju(network: &RoadNetwork) -> Vec<Vec<usize>> {
    let n = network.node_count();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    // First pass: finish order on the forward graph, iterative DFS.
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let out = network.out_edges_at(v);
            if *next < out.len() {
                let w = network.node_pos(network.edge_at(out[*next]).to).unwrap();
                *next += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }

    // Second pass: collect components on the reverse graph.
    visited.fill(false);
    let mut comps = Vec::new();
    for &start in order.iter().rev() {
        if visited[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        visited[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &ei in network.in_edges_at(v) {
                let w = network.node_pos(network.edge_at(ei).from).unwrap();
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        comps.push(comp);
    }
    comps
}
