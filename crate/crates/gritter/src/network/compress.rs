//! Degree-2 chain compression.
//!
//! Repeatedly merges interior pass-through nodes whose incident chain edges
//! agree on oneway, speed limit, lane count and treatment flag. Lengths add,
//! geometry polylines concatenate, and the merged edge takes the smallest
//! member id. Two patterns qualify:
//!
//!   - one-way chain: exactly one in-edge `a->v` and one out-edge `v->c`
//!   - two-way chain: exactly two in / two out forming reciprocal pairs
//!     with two distinct neighbours; both directions merge symmetrically
//!
//! Merges that would create a self-loop (`a == c`) are skipped so treated
//! length and travel times are preserved; protected nodes (depots, caller
//! keeps) are never merged. Applying the operation twice is the identity.

use std::collections::{BTreeMap, BTreeSet};

use super::{NodeId, RoadEdge, RoadNetwork};
use crate::Result;

pub fn compress_chains(network: &RoadNetwork, protected: &BTreeSet<NodeId>) -> Result<RoadNetwork> {
    let mut edges: BTreeMap<u64, RoadEdge> = network
        .edges()
        .iter()
        .map(|e| (e.id.0, e.clone()))
        .collect();
    let mut out: BTreeMap<NodeId, BTreeSet<u64>> = BTreeMap::new();
    let mut inc: BTreeMap<NodeId, BTreeSet<u64>> = BTreeMap::new();
    for n in network.nodes() {
        out.insert(n.id, BTreeSet::new());
        inc.insert(n.id, BTreeSet::new());
    }
    for e in edges.values() {
        out.get_mut(&e.from).unwrap().insert(e.id.0);
        inc.get_mut(&e.to).unwrap().insert(e.id.0);
    }

    let mut removed: BTreeSet<NodeId> = BTreeSet::new();
    let mut worklist: BTreeSet<NodeId> = network
        .nodes()
        .iter()
        .map(|n| n.id)
        .filter(|id| !protected.contains(id))
        .collect();

    while let Some(v) = worklist.pop_first() {
        if removed.contains(&v) {
            continue;
        }
        let in_ids: Vec<u64> = inc[&v].iter().copied().collect();
        let out_ids: Vec<u64> = out[&v].iter().copied().collect();

        let merge = match (in_ids.len(), out_ids.len()) {
            (1, 1) => plan_oneway_merge(&edges, v, in_ids[0], out_ids[0]),
            (2, 2) => plan_twoway_merge(&edges, v, &in_ids, &out_ids),
            _ => None,
        };
        let Some(pairs) = merge else { continue };

        let mut touched = BTreeSet::new();
        for (in_id, out_id) in pairs {
            let e_in = edges.remove(&in_id).unwrap();
            let e_out = edges.remove(&out_id).unwrap();
            out.get_mut(&e_in.from).unwrap().remove(&in_id);
            inc.get_mut(&v).unwrap().remove(&in_id);
            out.get_mut(&v).unwrap().remove(&out_id);
            inc.get_mut(&e_out.to).unwrap().remove(&out_id);

            let merged = RoadEdge {
                id: super::EdgeId(in_id.min(out_id)),
                from: e_in.from,
                to: e_out.to,
                length_km: e_in.length_km + e_out.length_km,
                speed_limit: e_in.speed_limit,
                lanes: e_in.lanes,
                oneway: e_in.oneway,
                requires_treatment: e_in.requires_treatment,
                geometry: concat_geometry(e_in.geometry, e_out.geometry),
            };
            out.get_mut(&merged.from).unwrap().insert(merged.id.0);
            inc.get_mut(&merged.to).unwrap().insert(merged.id.0);
            touched.insert(merged.from);
            touched.insert(merged.to);
            edges.insert(merged.id.0, merged);
        }
        removed.insert(v);
        out.remove(&v);
        inc.remove(&v);
        for t in touched {
            if !protected.contains(&t) && !removed.contains(&t) {
                worklist.insert(t);
            }
        }
    }

    let nodes = network
        .nodes()
        .iter()
        .filter(|n| !removed.contains(&n.id))
        .copied()
        .collect();
    RoadNetwork::new(
        network.name.clone(),
        network.speed_unit,
        nodes,
        edges.into_values().collect(),
    )
}

/// (in-edge, out-edge) pairs to merge at `v`, or None when `v` is not a
/// mergeable pass-through.
fn plan_oneway_merge(
    edges: &BTreeMap<u64, RoadEdge>,
    v: NodeId,
    in_id: u64,
    out_id: u64,
) -> Option<Vec<(u64, u64)>> {
    let e_in = &edges[&in_id];
    let e_out = &edges[&out_id];
    let a = e_in.from;
    let c = e_out.to;
    if a == v || c == v || a == c {
        return None;
    }
    attrs_match(e_in, e_out).then(|| vec![(in_id, out_id)])
}

fn plan_twoway_merge(
    edges: &BTreeMap<u64, RoadEdge>,
    v: NodeId,
    in_ids: &[u64],
    out_ids: &[u64],
) -> Option<Vec<(u64, u64)>> {
    let in_from: Vec<NodeId> = in_ids.iter().map(|id| edges[id].from).collect();
    let out_to: Vec<NodeId> = out_ids.iter().map(|id| edges[id].to).collect();
    let mut neighbours: BTreeSet<NodeId> = in_from.iter().copied().collect();
    neighbours.extend(out_to.iter().copied());
    if neighbours.len() != 2 || neighbours.contains(&v) {
        return None;
    }
    if in_from[0] == in_from[1] || out_to[0] == out_to[1] {
        return None; // parallel pair, not a reciprocal chain
    }
    let a = *neighbours.first().unwrap();
    let c = *neighbours.last().unwrap();

    let pick = |from: Option<NodeId>, to: Option<NodeId>| -> u64 {
        if let Some(f) = from {
            *in_ids.iter().find(|id| edges[*id].from == f).unwrap()
        } else {
            let t = to.unwrap();
            *out_ids.iter().find(|id| edges[*id].to == t).unwrap()
        }
    };
    let fwd_in = pick(Some(a), None); // a -> v
    let fwd_out = pick(None, Some(c)); // v -> c
    let bwd_in = pick(Some(c), None); // c -> v
    let bwd_out = pick(None, Some(a)); // v -> a

    (attrs_match(&edges[&fwd_in], &edges[&fwd_out])
        && attrs_match(&edges[&bwd_in], &edges[&bwd_out]))
    .then(|| vec![(fwd_in, fwd_out), (bwd_in, bwd_out)])
}

fn attrs_match(a: &RoadEdge, b: &RoadEdge) -> bool {
    a.oneway == b.oneway
        && a.speed_limit == b.speed_limit
        && a.lanes == b.lanes
        && a.requires_treatment == b.requires_treatment
}

fn concat_geometry(
    first: Option<Vec<(f64, f64)>>,
    second: Option<Vec<(f64, f64)>>,
) -> Option<Vec<(f64, f64)>> {
    match (first, second) {
        (Some(mut a), Some(b)) => {
            let skip_joint = a.last() == b.first();
            a.extend(b.into_iter().skip(usize::from(skip_joint)));
            Some(a)
        }
        _ => None,
    }
}
