//! Type-filtered reachability used to bound the work of each phase.

use std::collections::{BTreeSet, VecDeque};

use crate::graph::{Graph, NodeId};
use crate::matcher::Candidates;
use crate::network::ViewModule;
use crate::types::NodeTypeId;

fn positive_inputs(module: &ViewModule) -> impl Iterator<Item = (&str, NodeTypeId)> + '_ {
    module
        .inputs
        .iter()
        .filter(|c| !c.negative)
        .map(|c| (c.name.as_str(), c.required_type))
}

/// Visits the connected components of the changed nodes over all edges in
/// both directions and collects every visited node conforming to an input
/// connector.
pub fn reachability_missing(graph: &Graph, changed: &BTreeSet<NodeId>, module: &ViewModule) -> Candidates {
    let inputs: Vec<(&str, NodeTypeId)> = positive_inputs(module).collect();
    let mut out: Candidates = inputs
        .iter()
        .map(|(n, _)| (n.to_string(), BTreeSet::new()))
        .collect();
    let types = graph.types();
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    let mut queue = VecDeque::new();
    for &start in changed {
        if !graph.contains_node(start) || !seen.insert(start) {
            continue;
        }
        queue.push_back(start);
        while let Some(n) = queue.pop_front() {
            let node = graph.node(n).expect("visited nodes exist");
            if !node.obsolete {
                for (name, ty) in &inputs {
                    if types.conforms(node.ty, *ty) {
                        out.get_mut(*name).unwrap().insert(n);
                    }
                }
            }
            let next = graph
                .out_edges(n)
                .map(|e| e.target)
                .chain(graph.in_edges(n).map(|e| e.source));
            for m in next {
                if graph.contains_node(m) && seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
    }
    out
}

/// Every node conforming to each input connector.
pub fn all_candidates(graph: &Graph, module: &ViewModule) -> Candidates {
    positive_inputs(module)
        .map(|(name, ty)| {
            let set = graph
                .nodes_conforming(ty)
                .into_iter()
                .filter(|n| !graph.node(*n).unwrap().obsolete)
                .collect();
            (name.to_owned(), set)
        })
        .collect()
}

/// Markers of `dependent` reachable from the created markers through nodes
/// typed like the positive nodes of the dependent's pattern. Empty unless
/// the dependent negates a view node.
pub fn reachability_suspicious(graph: &Graph, created: &[NodeId], dependent: &ViewModule) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    if !dependent.has_complex_nac() || created.is_empty() {
        return out;
    }
    let types = graph.types();
    let pattern = &dependent.pattern;
    let walkable: Vec<NodeTypeId> = pattern.positive_vars().map(|v| pattern.nodes[v].ty).collect();
    let marker = dependent.marker_type();
    let mut seen: BTreeSet<NodeId> = created.iter().copied().collect();
    let mut queue: VecDeque<NodeId> = created
        .iter()
        .copied()
        .filter(|n| graph.contains_node(*n))
        .collect();
    while let Some(n) = queue.pop_front() {
        let next: Vec<NodeId> = graph
            .out_edges(n)
            .map(|e| e.target)
            .chain(graph.in_edges(n).map(|e| e.source))
            .collect();
        for m in next {
            let Some(ty) = graph.node_type(m) else { continue };
            if !seen.insert(m) {
                continue;
            }
            if ty == marker {
                out.insert(m);
            } else if walkable.iter().any(|w| types.conforms(ty, *w)) {
                queue.push_back(m);
            }
        }
    }
    out
}
