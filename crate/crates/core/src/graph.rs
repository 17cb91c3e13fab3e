//! Typed property graph holding the base layer and the view layer.
//!
//! Base-layer mutations go through [`Graph::apply_change`], which validates
//! the change, enriches deletions with adjacency snapshots and appends the
//! resulting events to the pending change log. The maintenance engine edits
//! the view layer through the unlogged `*_view_*` methods.
//!
//! Deleting a node removes its outgoing edges and its incoming base edges.
//! Role edges and scopes that point at the deleted node are left dangling
//! until the Delete phase removes their owners.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{ChangeEvent, EdgeSnapshot, EventBatch, NodeSnapshot};
use crate::types::{EdgeLayer, EdgeTypeId, NodeLayer, NodeTypeId, TypeGraph, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub ty: NodeTypeId,
    pub attrs: BTreeMap<String, Value>,
    /// Creating view module; view-layer nodes only.
    pub origin: Option<String>,
    pub obsolete: bool,
    /// Nodes marked before Update stripped the role edges and scopes of an
    /// obsolete marker.
    pub former_marks: Vec<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub ty: EdgeTypeId,
    pub source: NodeId,
    pub target: NodeId,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),
    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),
    #[error("node type `{0}` is abstract")]
    AbstractType(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("id {0} is not fresh")]
    DuplicateId(u64),
    #[error("edge type `{edge}` does not admit {source_type} -> {target_type}")]
    EndpointMismatch {
        edge: String,
        source_type: String,
        target_type: String,
    },
    #[error("attribute `{attr}` not valid for node type `{ty}`")]
    Attribute { ty: String, attr: String },
    #[error("view node of type `{0}` needs a module of origin")]
    MissingOrigin(String),
    #[error("base node of type `{0}` cannot carry a module of origin")]
    UnexpectedOrigin(String),
    #[error("type graph is not an extension of the graph's current type graph")]
    IncompatibleTypeGraph,
}

#[derive(Clone, Debug)]
struct Slot {
    node: Node,
    out: Vec<EdgeId>,
    inc: Vec<EdgeId>,
}

/// Ids of view nodes and view edges start here, so change scripts written
/// against the base layer replay unchanged on a maintained graph.
pub const VIEW_ID_BASE: u64 = 1 << 48;

#[derive(Clone, Debug)]
pub struct Graph {
    types: Arc<TypeGraph>,
    nodes: BTreeMap<NodeId, Slot>,
    edges: BTreeMap<EdgeId, Edge>,
    // incoming view edges of nodes that no longer exist
    dangling_in: HashMap<NodeId, Vec<EdgeId>>,
    by_type: Vec<BTreeSet<NodeId>>,
    next_id: u64,
    next_view_id: u64,
    log: Vec<ChangeEvent>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        *self.types == *other.types
            && self.next_id == other.next_id
            && self.edges == other.edges
            && self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .values()
                .zip(other.nodes.values())
                .all(|(a, b)| a.node == b.node)
    }
}

impl Graph {
    pub fn new(types: Arc<TypeGraph>) -> Graph {
        let n = types.node_type_ids().count();
        Graph {
            types,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            dangling_in: HashMap::new(),
            by_type: vec![BTreeSet::new(); n],
            next_id: 1,
            next_view_id: VIEW_ID_BASE,
            log: Vec::new(),
        }
    }

    pub fn types(&self) -> &Arc<TypeGraph> {
        &self.types
    }

    /// Switches to an extended type graph (e.g. one with emulated Rete join
    /// types). Fails unless the current type graph is a prefix of `types`.
    pub fn rebind_types(&mut self, types: Arc<TypeGraph>) -> Result<(), GraphError> {
        if !self.types.is_prefix_of(&types) {
            return Err(GraphError::IncompatibleTypeGraph);
        }
        self.by_type
            .resize(types.node_type_ids().count(), BTreeSet::new());
        self.types = types;
        Ok(())
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn next_view_id(&self) -> u64 {
        self.next_view_id
    }

    pub(crate) fn set_next_id(&mut self, next: u64) {
        self.next_id = self.next_id.max(next);
    }

    pub(crate) fn set_next_view_id(&mut self, next: u64) {
        self.next_view_id = self.next_view_id.max(next);
    }

    fn fresh_view_id(&mut self) -> u64 {
        let id = self.next_view_id;
        self.next_view_id += 1;
        id
    }

    fn bump(&mut self, id: u64) {
        if id >= VIEW_ID_BASE {
            self.next_view_id = self.next_view_id.max(id + 1);
        } else {
            self.next_id = self.next_id.max(id + 1);
        }
    }

    fn claim_id(&mut self, id: u64) -> Result<(), GraphError> {
        if id < self.next_id || id >= VIEW_ID_BASE {
            return Err(GraphError::DuplicateId(id));
        }
        self.next_id = id + 1;
        Ok(())
    }

    // ------------------------------------------------------------------
    // Queries
    // ------------------------------------------------------------------

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id).map(|s| &s.node)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node_type(&self, id: NodeId) -> Option<NodeTypeId> {
        self.node(id).map(|n| n.ty)
    }

    pub fn node_layer(&self, id: NodeId) -> Option<NodeLayer> {
        self.node(id).map(|n| self.types.node_layer(n.ty))
    }

    pub fn is_view_node(&self, id: NodeId) -> bool {
        self.node_layer(id) == Some(NodeLayer::View)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.values().map(|s| &s.node)
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn count_layer(&self, layer: NodeLayer) -> usize {
        self.types
            .node_type_ids()
            .filter(|t| self.types.node_layer(*t) == layer)
            .map(|t| self.by_type[t.index()].len())
            .sum()
    }

    /// Nodes whose type conforms to `ty`, ascending by id.
    pub fn nodes_conforming(&self, ty: NodeTypeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .types
            .subtypes(ty)
            .flat_map(|t| self.by_type[t.index()].iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Nodes of exactly this type, ascending by id.
    pub fn nodes_of_exact_type(&self, ty: NodeTypeId) -> impl Iterator<Item = NodeId> + '_ {
        self.by_type[ty.index()].iter().copied()
    }

    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.nodes
            .get(&id)
            .into_iter()
            .flat_map(|s| s.out.iter())
            .map(move |e| &self.edges[e])
    }

    /// Incoming edges, including dangling view edges of a deleted node.
    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        let live = self.nodes.get(&id).map(|s| s.inc.as_slice());
        let dangling = self.dangling_in.get(&id).map(|v| v.as_slice());
        live.unwrap_or(&[])
            .iter()
            .chain(dangling.unwrap_or(&[]).iter())
            .map(move |e| &self.edges[e])
    }

    /// Adjacent existing nodes over edges of either direction, deduplicated.
    pub fn neighbors(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.out_edges(id)
            .map(|e| e.target)
            .chain(self.in_edges(id).map(|e| e.source))
            .filter(|n| *n != id && self.contains_node(*n))
            .collect()
    }

    /// View nodes that own a role edge or scope targeting `id`. Works for
    /// deleted nodes as long as their dangling edges still exist.
    pub fn backward_marks(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.in_edges(id)
            .filter(|e| self.types.edge_layer(e.ty).is_view())
            .map(|e| e.source)
            .filter(|s| self.is_view_node(*s))
            .collect()
    }

    /// Role edges and scopes owned by a view node.
    pub fn marking_edges(&self, marker: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.out_edges(marker)
            .filter(|e| self.types.edge_layer(e.ty).is_view())
    }

    /// Targets of the marker's role edges and scopes, ascending, including
    /// targets that no longer exist.
    pub fn marked_nodes(&self, marker: NodeId) -> BTreeSet<NodeId> {
        self.marking_edges(marker).map(|e| e.target).collect()
    }

    /// A view edge is dangling when its target node is gone.
    pub fn has_dangling_marks(&self, marker: NodeId) -> bool {
        self.marking_edges(marker)
            .any(|e| !self.contains_node(e.target))
    }

    pub fn dangling_edge_count(&self) -> usize {
        self.dangling_in.values().map(Vec::len).sum()
    }

    /// True when an edge of this exact type runs from `source` to `target`.
    pub fn has_edge(&self, source: NodeId, ty: EdgeTypeId, target: NodeId) -> bool {
        self.out_edges(source)
            .any(|e| e.ty == ty && e.target == target)
    }

    pub fn pending_events(&self) -> &[ChangeEvent] {
        &self.log
    }

    /// Drains the pending change log.
    pub fn take_events(&mut self) -> EventBatch {
        EventBatch::new(std::mem::take(&mut self.log))
    }

    // ------------------------------------------------------------------
    // Logged mutations
    // ------------------------------------------------------------------

    /// Applies a change, appending it (and any cascaded edge removals) to the
    /// pending log. Returns the enriched event.
    pub fn apply_change(&mut self, change: ChangeEvent) -> Result<ChangeEvent, GraphError> {
        match change {
            ChangeEvent::NodeCreated {
                id,
                ty,
                attrs,
                origin,
            } => {
                let tid = self
                    .types
                    .node_type(&ty)
                    .ok_or_else(|| GraphError::UnknownNodeType(ty.clone()))?;
                self.check_new_node(tid, &attrs, origin.as_deref())?;
                if self.nodes.contains_key(&id) || self.edges.contains_key(&EdgeId(id.0)) {
                    return Err(GraphError::DuplicateId(id.0));
                }
                self.claim_id(id.0)?;
                self.insert_node(Node {
                    id,
                    ty: tid,
                    attrs: attrs.clone(),
                    origin: origin.clone(),
                    obsolete: false,
                    former_marks: Vec::new(),
                });
                let ev = ChangeEvent::NodeCreated {
                    id,
                    ty,
                    attrs,
                    origin,
                };
                self.log.push(ev.clone());
                Ok(ev)
            }
            ChangeEvent::NodeDeleted { id, .. } => {
                let ev = self.delete_node_logged(id)?;
                Ok(ev)
            }
            ChangeEvent::EdgeAdded { id, ty, src, dst } => {
                let tid = self
                    .types
                    .edge_type(&ty)
                    .ok_or_else(|| GraphError::UnknownEdgeType(ty.clone()))?;
                self.check_edge(tid, src, dst)?;
                if self.nodes.contains_key(&NodeId(id.0)) || self.edges.contains_key(&id) {
                    return Err(GraphError::DuplicateId(id.0));
                }
                self.claim_id(id.0)?;
                self.insert_edge(Edge {
                    id,
                    ty: tid,
                    source: src,
                    target: dst,
                });
                let ev = ChangeEvent::EdgeAdded { id, ty, src, dst };
                self.log.push(ev.clone());
                Ok(ev)
            }
            ChangeEvent::EdgeRemoved { id, .. } => {
                let edge = *self.edges.get(&id).ok_or(GraphError::UnknownEdge(id))?;
                self.detach_edge(id);
                let ev = self.edge_removed_event(&edge);
                self.log.push(ev.clone());
                Ok(ev)
            }
            ChangeEvent::AttributeChanged {
                id, name, value, ..
            } => {
                let ty = self.node(id).ok_or(GraphError::UnknownNode(id))?.ty;
                if self.types.attribute_kind(ty, &name) != Some(value.kind()) {
                    return Err(GraphError::Attribute {
                        ty: self.types.node_name(ty).to_owned(),
                        attr: name,
                    });
                }
                let slot = self.nodes.get_mut(&id).expect("checked above");
                let old = slot.node.attrs.insert(name.clone(), value.clone());
                let ev = ChangeEvent::AttributeChanged {
                    id,
                    name,
                    value,
                    old,
                };
                self.log.push(ev.clone());
                Ok(ev)
            }
        }
    }

    /// Creates a node with an engine-assigned id (logged).
    pub fn create_node(
        &mut self,
        ty: &str,
        attrs: impl IntoIterator<Item = (String, Value)>,
    ) -> Result<NodeId, GraphError> {
        let id = NodeId(self.next_id);
        self.apply_change(ChangeEvent::NodeCreated {
            id,
            ty: ty.to_owned(),
            attrs: attrs.into_iter().collect(),
            origin: None,
        })?;
        Ok(id)
    }

    /// Adds an edge with an engine-assigned id (logged).
    pub fn add_edge(&mut self, ty: &str, src: NodeId, dst: NodeId) -> Result<EdgeId, GraphError> {
        let id = EdgeId(self.next_id);
        self.apply_change(ChangeEvent::add_edge(id.0, ty, src, dst))?;
        Ok(id)
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<(), GraphError> {
        self.apply_change(ChangeEvent::remove_edge(id)).map(|_| ())
    }

    pub fn delete_node(&mut self, id: NodeId) -> Result<(), GraphError> {
        self.apply_change(ChangeEvent::delete_node(id)).map(|_| ())
    }

    pub fn set_attr(&mut self, id: NodeId, name: &str, value: impl Into<Value>) -> Result<(), GraphError> {
        self.apply_change(ChangeEvent::set_attr(id, name, value))
            .map(|_| ())
    }

    /// First edge of the given type name between two nodes.
    pub fn find_edge(&self, src: NodeId, ty: &str, dst: NodeId) -> Option<EdgeId> {
        let tid = self.types.edge_type(ty)?;
        self.out_edges(src)
            .find(|e| e.ty == tid && e.target == dst)
            .map(|e| e.id)
    }

    fn check_new_node(
        &self,
        ty: NodeTypeId,
        attrs: &BTreeMap<String, Value>,
        origin: Option<&str>,
    ) -> Result<(), GraphError> {
        let def = self.types.node_def(ty);
        if def.is_abstract {
            return Err(GraphError::AbstractType(def.name.clone()));
        }
        for (name, value) in attrs {
            if self.types.attribute_kind(ty, name) != Some(value.kind()) {
                return Err(GraphError::Attribute {
                    ty: def.name.clone(),
                    attr: name.clone(),
                });
            }
        }
        match (def.layer, origin) {
            (NodeLayer::View, None) => Err(GraphError::MissingOrigin(def.name.clone())),
            (NodeLayer::Base, Some(_)) => Err(GraphError::UnexpectedOrigin(def.name.clone())),
            _ => Ok(()),
        }
    }

    fn check_edge(&self, ty: EdgeTypeId, src: NodeId, dst: NodeId) -> Result<(), GraphError> {
        let s = self.node(src).ok_or(GraphError::UnknownNode(src))?.ty;
        let d = self.node(dst).ok_or(GraphError::UnknownNode(dst))?.ty;
        if !self.types.edge_admits(ty, s, d) {
            return Err(GraphError::EndpointMismatch {
                edge: self.types.edge_name(ty).to_owned(),
                source_type: self.types.node_name(s).to_owned(),
                target_type: self.types.node_name(d).to_owned(),
            });
        }
        Ok(())
    }

    fn edge_removed_event(&self, edge: &Edge) -> ChangeEvent {
        ChangeEvent::EdgeRemoved {
            id: edge.id,
            snapshot: Some(EdgeSnapshot {
                ty: self.types.edge_name(edge.ty).to_owned(),
                src: edge.source,
                dst: edge.target,
            }),
        }
    }

    fn delete_node_logged(&mut self, id: NodeId) -> Result<ChangeEvent, GraphError> {
        let slot = self.nodes.get(&id).ok_or(GraphError::UnknownNode(id))?;
        let markers: Vec<NodeId> = self.backward_marks(id).into_iter().collect();
        let mut doomed: Vec<EdgeId> = slot.out.clone();
        doomed.extend(
            slot.inc
                .iter()
                .copied()
                .filter(|e| !self.types.edge_layer(self.edges[e].ty).is_view()),
        );
        doomed.sort_unstable();
        doomed.dedup();

        let mut neighbors = BTreeSet::new();
        for e in &doomed {
            let edge = &self.edges[e];
            let other = if edge.source == id { edge.target } else { edge.source };
            if other != id {
                neighbors.insert(other);
            }
        }

        for e in doomed {
            let edge = self.edges[&e];
            self.detach_edge(e);
            let ev = self.edge_removed_event(&edge);
            self.log.push(ev);
        }

        let slot = self.remove_node_slot(id);
        let ev = ChangeEvent::NodeDeleted {
            id,
            snapshot: Some(NodeSnapshot {
                ty: self.types.node_name(slot.node.ty).to_owned(),
                attrs: slot.node.attrs,
                neighbors: neighbors.into_iter().collect(),
                markers,
            }),
        };
        self.log.push(ev.clone());
        Ok(ev)
    }

    // ------------------------------------------------------------------
    // Unlogged primitives
    // ------------------------------------------------------------------

    fn insert_node(&mut self, node: Node) {
        self.by_type[node.ty.index()].insert(node.id);
        let inc = self.dangling_in.remove(&node.id).unwrap_or_default();
        self.nodes.insert(
            node.id,
            Slot {
                node,
                out: Vec::new(),
                inc,
            },
        );
    }

    fn insert_edge(&mut self, edge: Edge) {
        self.nodes
            .get_mut(&edge.source)
            .expect("source exists")
            .out
            .push(edge.id);
        self.nodes
            .get_mut(&edge.target)
            .expect("target exists")
            .inc
            .push(edge.id);
        self.edges.insert(edge.id, edge);
    }

    fn detach_edge(&mut self, id: EdgeId) -> Option<Edge> {
        let edge = self.edges.remove(&id)?;
        if let Some(s) = self.nodes.get_mut(&edge.source) {
            s.out.retain(|e| *e != id);
        }
        match self.nodes.get_mut(&edge.target) {
            Some(s) => s.inc.retain(|e| *e != id),
            None => {
                if let Some(v) = self.dangling_in.get_mut(&edge.target) {
                    v.retain(|e| *e != id);
                    if v.is_empty() {
                        self.dangling_in.remove(&edge.target);
                    }
                }
            }
        }
        Some(edge)
    }

    /// Removes the node slot; remaining incoming edges become dangling.
    fn remove_node_slot(&mut self, id: NodeId) -> Slot {
        let slot = self.nodes.remove(&id).expect("node exists");
        self.by_type[slot.node.ty.index()].remove(&id);
        let inc: Vec<EdgeId> = slot
            .inc
            .iter()
            .copied()
            .filter(|e| self.edges.contains_key(e))
            .collect();
        if !inc.is_empty() {
            self.dangling_in.entry(id).or_default().extend(inc);
        }
        slot
    }

    /// Inserts a view node without logging. Used by view modules.
    pub fn insert_view_node(&mut self, ty: NodeTypeId, origin: &str) -> NodeId {
        debug_assert_eq!(self.types.node_layer(ty), NodeLayer::View);
        let id = NodeId(self.fresh_view_id());
        self.insert_node(Node {
            id,
            ty,
            attrs: BTreeMap::new(),
            origin: Some(origin.to_owned()),
            obsolete: false,
            former_marks: Vec::new(),
        });
        id
    }

    /// Inserts a role edge or scope without logging.
    pub fn insert_view_edge(&mut self, ty: EdgeTypeId, source: NodeId, target: NodeId) -> EdgeId {
        debug_assert!(self.types.edge_layer(ty).is_view());
        let id = EdgeId(self.fresh_view_id());
        self.insert_edge(Edge {
            id,
            ty,
            source,
            target,
        });
        id
    }

    pub fn remove_view_edge(&mut self, id: EdgeId) {
        self.detach_edge(id);
    }

    /// Removes a view node and the edges it owns without logging. Edges of
    /// other view nodes pointing at it become dangling.
    pub fn remove_view_node(&mut self, id: NodeId) {
        let out: Vec<EdgeId> = match self.nodes.get(&id) {
            Some(s) => s.out.clone(),
            None => return,
        };
        for e in out {
            self.detach_edge(e);
        }
        self.remove_node_slot(id);
    }

    /// Sets the obsolete flag and strips all role edges and scopes, keeping
    /// the former targets for the Delete phase.
    pub fn mark_obsolete(&mut self, id: NodeId) {
        let marks: Vec<NodeId> = self.marked_nodes(id).into_iter().collect();
        let owned: Vec<EdgeId> = self.marking_edges(id).map(|e| e.id).collect();
        for e in owned {
            self.detach_edge(e);
        }
        if let Some(slot) = self.nodes.get_mut(&id) {
            slot.node.obsolete = true;
            slot.node.former_marks = marks;
        }
    }

    /// Restores a node exactly as stored in a snapshot. Loading only.
    pub(crate) fn restore_node(&mut self, node: Node) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateId(node.id.0));
        }
        self.bump(node.id.0);
        self.insert_node(node);
        Ok(())
    }

    /// Restores an edge from a snapshot. View edges may dangle.
    pub(crate) fn restore_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        if self.edges.contains_key(&edge.id) {
            return Err(GraphError::DuplicateId(edge.id.0));
        }
        if !self.contains_node(edge.source) {
            return Err(GraphError::UnknownNode(edge.source));
        }
        let layer = self.types.edge_layer(edge.ty);
        if !self.contains_node(edge.target) && !layer.is_view() {
            return Err(GraphError::UnknownNode(edge.target));
        }
        if let (Some(s), Some(t)) = (self.node_type(edge.source), self.node_type(edge.target)) {
            if !self.types.edge_admits(edge.ty, s, t) {
                return Err(GraphError::EndpointMismatch {
                    edge: self.types.edge_name(edge.ty).to_owned(),
                    source_type: self.types.node_name(s).to_owned(),
                    target_type: self.types.node_name(t).to_owned(),
                });
            }
        }
        self.bump(edge.id.0);
        self.nodes.get_mut(&edge.source).unwrap().out.push(edge.id);
        match self.nodes.get_mut(&edge.target) {
            Some(s) => s.inc.push(edge.id),
            None => self.dangling_in.entry(edge.target).or_default().push(edge.id),
        }
        self.edges.insert(edge.id, edge);
        Ok(())
    }

    /// Copy containing only the base layer, with the same id counter.
    pub fn base_layer(&self) -> Graph {
        let mut g = Graph::new(self.types.clone());
        for slot in self.nodes.values() {
            if self.types.node_layer(slot.node.ty) == NodeLayer::Base {
                g.insert_node(slot.node.clone());
            }
        }
        for e in self.edges.values() {
            if self.types.edge_layer(e.ty) == EdgeLayer::Base {
                g.insert_edge(*e);
            }
        }
        g.next_id = self.next_id;
        g
    }

    /// Structural invariants: base edges never dangle; each marker reaches
    /// each node it marks through exactly one role edge or scope.
    pub fn check_consistency(&self) -> Result<(), String> {
        for e in self.edges.values() {
            if !self.contains_node(e.source) {
                return Err(format!("edge {} has no source", e.id));
            }
            if self.types.edge_layer(e.ty) == EdgeLayer::Base && !self.contains_node(e.target) {
                return Err(format!("base edge {} dangles", e.id));
            }
        }
        for slot in self.nodes.values() {
            let node = &slot.node;
            match self.types.node_layer(node.ty) {
                NodeLayer::Base => {
                    if node.origin.is_some() || node.obsolete {
                        return Err(format!("base node {} carries view metadata", node.id));
                    }
                }
                NodeLayer::View => {
                    if node.origin.is_none() {
                        return Err(format!("view node {} has no origin", node.id));
                    }
                    let mut seen = BTreeSet::new();
                    for e in self.marking_edges(node.id) {
                        if !seen.insert(e.target) {
                            return Err(format!(
                                "view node {} marks {} more than once",
                                node.id, e.target
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
