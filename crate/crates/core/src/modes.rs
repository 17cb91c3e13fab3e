//! Create, Update and Delete modes of a single view module.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{Graph, NodeId};
use crate::matcher::{extend_match, find_matches, Candidates, Match};
use crate::network::ViewModule;
use crate::pattern::PatternError;
use crate::types::EdgeTypeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModeError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("node {node} is not a marker of module `{module}`")]
    NotOwned { module: String, node: NodeId },
    #[error("marker {0} is neither obsolete nor dangling")]
    NotObsolete(NodeId),
}

/// Result of re-checking one marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Recheck {
    Valid,
    /// Roles still match, but through other scoped nodes.
    Repaired,
    Obsolete,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub obsolete: BTreeSet<NodeId>,
    pub repaired: BTreeSet<NodeId>,
    pub valid: BTreeSet<NodeId>,
}

fn check_owner(module: &ViewModule, graph: &Graph, node: NodeId) -> Result<(), ModeError> {
    match graph.node(node) {
        Some(n) if n.origin.as_deref() == Some(module.name.as_str()) => Ok(()),
        _ => Err(ModeError::NotOwned {
            module: module.name.clone(),
            node,
        }),
    }
}

/// Existing non-obsolete marker of the module's type with the same key-role
/// targets as `m`.
pub fn find_marker(module: &ViewModule, graph: &Graph, m: &Match) -> Option<NodeId> {
    let marking = &module.pattern.marking;
    let mut keys = marking.key_roles();
    let first = keys.next()?;
    let rest: Vec<(EdgeTypeId, NodeId)> = keys.map(|r| (r.edge, m.get(r.var).unwrap())).collect();
    let anchor = m.get(first.var)?;
    graph
        .in_edges(anchor)
        .filter(|e| e.ty == first.edge)
        .map(|e| e.source)
        .find(|&s| {
            graph.node(s).is_some_and(|n| {
                n.ty == marking.marker_type
                    && !n.obsolete
                    && rest.iter().all(|&(ty, t)| graph.has_edge(s, ty, t))
            })
        })
}

fn mark(module: &ViewModule, graph: &mut Graph, m: &Match) -> NodeId {
    let marking = &module.pattern.marking;
    let marker = graph.insert_view_node(marking.marker_type, &module.name);
    for r in &marking.roles {
        graph.insert_view_edge(r.edge, marker, m.get(r.var).expect("positive var"));
    }
    for &v in &marking.scoped {
        graph.insert_view_edge(EdgeTypeId::SCOPE, marker, m.get(v).expect("positive var"));
    }
    marker
}

/// Marks every unmarked match drawn from the candidates. Returns the new
/// markers in creation order.
pub fn execute_create(
    module: &ViewModule,
    graph: &mut Graph,
    candidates: &Candidates,
) -> Result<Vec<NodeId>, ModeError> {
    let matches = find_matches(graph, &module.pattern, candidates)?;
    let mut created = Vec::new();
    for m in matches {
        if find_marker(module, graph, &m).is_none() {
            created.push(mark(module, graph, &m));
        }
    }
    Ok(created)
}

/// Re-checks a marker against the module's pattern, repairing scopes when
/// the roles still match through different scoped nodes.
pub fn recheck(module: &ViewModule, graph: &mut Graph, marker: NodeId) -> Result<Recheck, ModeError> {
    check_owner(module, graph, marker)?;
    if graph.node(marker).is_some_and(|n| n.obsolete) || graph.has_dangling_marks(marker) {
        return Ok(Recheck::Obsolete);
    }
    let pattern = &module.pattern;
    let mut fixed = Vec::with_capacity(pattern.marking.roles.len());
    for r in &pattern.marking.roles {
        let mut targets = graph
            .marking_edges(marker)
            .filter(|e| e.ty == r.edge)
            .map(|e| e.target);
        match (targets.next(), targets.next()) {
            (Some(t), None) => fixed.push((r.var, t)),
            _ => return Ok(Recheck::Obsolete),
        }
    }
    let scopes: BTreeSet<NodeId> = graph
        .marking_edges(marker)
        .filter(|e| e.ty == EdgeTypeId::SCOPE)
        .map(|e| e.target)
        .collect();
    let restrict: Vec<(usize, &BTreeSet<NodeId>)> =
        pattern.marking.scoped.iter().map(|&v| (v, &scopes)).collect();
    if extend_match(graph, pattern, &fixed, &restrict).is_some() {
        return Ok(Recheck::Valid);
    }
    let Some(m) = extend_match(graph, pattern, &fixed, &[]) else {
        return Ok(Recheck::Obsolete);
    };
    let old: Vec<_> = graph
        .marking_edges(marker)
        .filter(|e| e.ty == EdgeTypeId::SCOPE)
        .map(|e| e.id)
        .collect();
    for e in old {
        graph.remove_view_edge(e);
    }
    for &v in &pattern.marking.scoped {
        graph.insert_view_edge(EdgeTypeId::SCOPE, marker, m.get(v).unwrap());
    }
    Ok(Recheck::Repaired)
}

/// Re-checks suspicious markers; invalid ones are flagged obsolete and
/// stripped of their role edges and scopes.
pub fn execute_update(
    module: &ViewModule,
    graph: &mut Graph,
    suspicious: &BTreeSet<NodeId>,
) -> Result<UpdateOutcome, ModeError> {
    let mut out = UpdateOutcome::default();
    for &node in suspicious {
        match recheck(module, graph, node)? {
            Recheck::Valid => {
                out.valid.insert(node);
            }
            Recheck::Repaired => {
                out.repaired.insert(node);
            }
            Recheck::Obsolete => {
                if !graph.node(node).is_some_and(|n| n.obsolete) {
                    graph.mark_obsolete(node);
                }
                out.obsolete.insert(node);
            }
        }
    }
    Ok(out)
}

/// Deletes obsolete or dangling markers. Returns every node they marked,
/// whether or not it still exists.
pub fn execute_delete(
    module: &ViewModule,
    graph: &mut Graph,
    obsoletes: &BTreeSet<NodeId>,
) -> Result<BTreeSet<NodeId>, ModeError> {
    let mut marked = BTreeSet::new();
    for &node in obsoletes {
        if !graph.contains_node(node) {
            continue;
        }
        check_owner(module, graph, node)?;
        let n = graph.node(node).unwrap();
        if !n.obsolete && !graph.has_dangling_marks(node) {
            return Err(ModeError::NotObsolete(node));
        }
        marked.extend(n.former_marks.iter().copied());
        marked.extend(graph.marked_nodes(node));
        graph.remove_view_node(node);
    }
    Ok(marked)
}
