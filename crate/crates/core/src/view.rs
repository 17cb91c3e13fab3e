//! Canonical form of a view layer, independent of marker ids.
//!
//! A marker is identified by its type and the targets of its key roles in
//! declared order. Base targets appear by id; view targets appear by their
//! own canonical key, so the wiring between markers is part of the key.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::graph::{Graph, NodeId};
use crate::network::Network;
use crate::types::NodeLayer;

/// Canonical marker keys with their multiplicities.
pub type CanonicalView = BTreeMap<String, usize>;

pub fn canonical_key(graph: &Graph, network: &Network, marker: NodeId) -> String {
    let mut memo = HashMap::new();
    key_of(graph, network, marker, &mut memo, &mut BTreeSet::new())
}

fn key_of(
    graph: &Graph,
    network: &Network,
    node: NodeId,
    memo: &mut HashMap<NodeId, String>,
    active: &mut BTreeSet<NodeId>,
) -> String {
    if let Some(k) = memo.get(&node) {
        return k.clone();
    }
    let Some(n) = graph.node(node) else {
        return format!("!{node}");
    };
    let types = graph.types();
    if types.node_layer(n.ty) == NodeLayer::Base {
        return format!("#{node}");
    }
    if !active.insert(node) {
        return format!("@{node}");
    }
    let mut key = types.node_name(n.ty).to_owned();
    if n.obsolete {
        key.push('~');
    }
    key.push('(');
    let module = n.origin.as_deref().and_then(|o| network.module(o));
    let roles: Vec<_> = match module {
        Some(m) => m.pattern.marking.key_roles().map(|r| r.edge).collect(),
        None => {
            let mut r: Vec<_> = graph
                .marking_edges(node)
                .filter(|e| types.edge_layer(e.ty) == crate::types::EdgeLayer::ViewRole)
                .map(|e| e.ty)
                .collect();
            r.sort();
            r.dedup();
            r
        }
    };
    let mut parts = Vec::with_capacity(roles.len());
    for ty in roles {
        let mut targets: Vec<NodeId> = graph
            .marking_edges(node)
            .filter(|e| e.ty == ty)
            .map(|e| e.target)
            .collect();
        targets.sort();
        let t: Vec<String> = targets
            .into_iter()
            .map(|t| key_of(graph, network, t, memo, active))
            .collect();
        parts.push(format!("{}={}", types.edge_name(ty), t.join("|")));
    }
    key.push_str(&parts.join(","));
    key.push(')');
    active.remove(&node);
    memo.insert(node, key.clone());
    key
}

/// Canonical keys of every view-layer node.
pub fn canonical_view(graph: &Graph, network: &Network) -> CanonicalView {
    let mut memo = HashMap::new();
    let mut out = CanonicalView::new();
    for n in graph.nodes() {
        if graph.types().node_layer(n.ty) == NodeLayer::View {
            let k = key_of(graph, network, n.id, &mut memo, &mut BTreeSet::new());
            *out.entry(k).or_default() += 1;
        }
    }
    out
}

/// Keeps only keys whose marker type is in `types`.
pub fn restrict(view: &CanonicalView, types: &BTreeSet<String>) -> CanonicalView {
    view.iter()
        .filter(|(k, _)| {
            let name = k.split(['(', '~']).next().unwrap_or_default();
            types.contains(name)
        })
        .map(|(k, c)| (k.clone(), *c))
        .collect()
}

/// Human-readable difference, empty when equal.
pub fn diff(left: &CanonicalView, right: &CanonicalView) -> Vec<String> {
    let keys: BTreeSet<&String> = left.keys().chain(right.keys()).collect();
    keys.into_iter()
        .filter_map(|k| {
            let (a, b) = (left.get(k).copied().unwrap_or(0), right.get(k).copied().unwrap_or(0));
            (a != b).then(|| format!("{k}: {a} vs {b}"))
        })
        .collect()
}
