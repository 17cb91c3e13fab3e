//! Classification of change events into work sets.

use std::collections::BTreeSet;

use crate::event::{ChangeEvent, EventBatch};
use crate::graph::{Graph, NodeId};

/// Nodes touched by attribute changes and both endpoints of added or
/// removed edges, whether or not they still exist.
pub fn modified_nodes(batch: &EventBatch) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for ev in &batch.events {
        match ev {
            ChangeEvent::AttributeChanged { id, .. } => {
                out.insert(*id);
            }
            ChangeEvent::EdgeAdded { src, dst, .. } => {
                out.insert(*src);
                out.insert(*dst);
            }
            ChangeEvent::EdgeRemoved {
                snapshot: Some(s), ..
            } => {
                out.insert(s.src);
                out.insert(s.dst);
            }
            _ => {}
        }
    }
    out
}

/// Existing markers that mark a modified node, or a node within `halo`
/// hops of one.
pub fn suspicious_nodes(graph: &Graph, batch: &EventBatch, halo: usize) -> BTreeSet<NodeId> {
    let mut around = modified_nodes(batch);
    let mut frontier: Vec<NodeId> = around.iter().copied().collect();
    for _ in 0..halo {
        let mut next = Vec::new();
        for n in frontier {
            for m in graph.neighbors(n) {
                if !graph.is_view_node(m) && around.insert(m) {
                    next.push(m);
                }
            }
        }
        frontier = next;
    }
    around
        .into_iter()
        .flat_map(|n| graph.backward_marks(n))
        .filter(|m| graph.contains_node(*m))
        .collect()
}

/// Existing markers holding a role edge or scope to a node deleted in the
/// batch.
pub fn obsolete_nodes(graph: &Graph, batch: &EventBatch) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for ev in &batch.events {
        if let ChangeEvent::NodeDeleted { id, snapshot } = ev {
            if let Some(s) = snapshot {
                out.extend(s.markers.iter().copied());
            }
            out.extend(graph.backward_marks(*id));
        }
    }
    out.retain(|m| graph.contains_node(*m));
    out
}

/// Created and modified nodes that still exist.
pub fn changed_nodes(graph: &Graph, batch: &EventBatch) -> BTreeSet<NodeId> {
    let mut out = modified_nodes(batch);
    for ev in &batch.events {
        if let ChangeEvent::NodeCreated { id, .. } = ev {
            out.insert(*id);
        }
    }
    out.retain(|n| graph.contains_node(*n));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::*;
    use crate::types::EdgeTypeId;
    use std::sync::Arc;

    #[test]
    fn classifies_edge_and_node_events() {
        let mut g = Graph::new(Arc::new(type_graph()));
        let a = add_class(&mut g, "A").unwrap();
        let b = add_class(&mut g, "B").unwrap();
        let (ncr, cr) = add_extends(&mut g, a, b).unwrap();
        g.take_events();

        // hand-made marker over a, b with scopes on ncr, cr
        let t = g.types().clone();
        let m = g.insert_view_node(t.node_type("Generalization").unwrap(), "Generalization");
        g.insert_view_edge(t.edge_type("SubRole").unwrap(), m, a);
        g.insert_view_edge(t.edge_type("SuperRole").unwrap(), m, b);
        g.insert_view_edge(EdgeTypeId::SCOPE, m, ncr);
        g.insert_view_edge(EdgeTypeId::SCOPE, m, cr);

        // edge between two unmarked nodes
        let x = add_class(&mut g, "X").unwrap();
        let f = g.create_node("Field", []).unwrap();
        g.add_edge("fields", x, f).unwrap();
        let batch = g.take_events();
        assert!(suspicious_nodes(&g, &batch, 0).is_empty());
        assert_eq!(changed_nodes(&g, &batch), BTreeSet::from([x, f]));

        // attribute change on a marked class
        g.set_attr(a, "name", "A2").unwrap();
        let batch = g.take_events();
        assert_eq!(suspicious_nodes(&g, &batch, 0), BTreeSet::from([m]));

        // deleting a scoped node makes the marker obsolete
        g.delete_node(ncr).unwrap();
        let batch = g.take_events();
        assert_eq!(obsolete_nodes(&g, &batch), BTreeSet::from([m]));
        assert_eq!(suspicious_nodes(&g, &batch, 0), BTreeSet::from([m]));
        assert!(!changed_nodes(&g, &batch).contains(&ncr));

        // deleting an unmarked node
        g.delete_node(f).unwrap();
        let batch = g.take_events();
        assert!(obsolete_nodes(&g, &batch).is_empty());
    }
}
