//! Change events and event batches.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{EdgeId, NodeId};
use crate::types::Value;

/// Former neighborhood of a deleted node, captured before removal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, Value>,
    /// Nodes adjacent over the edges removed together with the node.
    #[serde(default)]
    pub neighbors: Vec<NodeId>,
    /// View nodes whose role edges or scopes targeted the node.
    #[serde(default)]
    pub markers: Vec<NodeId>,
}

/// Endpoints of a removed edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSnapshot {
    #[serde(rename = "type")]
    pub ty: String,
    pub src: NodeId,
    pub dst: NodeId,
}

/// One atomic change of a graph. Deletions are enriched by
/// [`Graph::apply_change`](crate::graph::Graph::apply_change) with the data
/// needed for backward look-ups after the element is gone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChangeEvent {
    NodeCreated {
        id: NodeId,
        #[serde(rename = "type")]
        ty: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attrs: BTreeMap<String, Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<String>,
    },
    NodeDeleted {
        id: NodeId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snapshot: Option<NodeSnapshot>,
    },
    EdgeAdded {
        id: EdgeId,
        #[serde(rename = "type")]
        ty: String,
        src: NodeId,
        dst: NodeId,
    },
    EdgeRemoved {
        id: EdgeId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snapshot: Option<EdgeSnapshot>,
    },
    AttributeChanged {
        id: NodeId,
        name: String,
        value: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        old: Option<Value>,
    },
}

impl ChangeEvent {
    pub fn create_node(id: u64, ty: &str) -> ChangeEvent {
        ChangeEvent::NodeCreated {
            id: NodeId(id),
            ty: ty.to_owned(),
            attrs: BTreeMap::new(),
            origin: None,
        }
    }

    pub fn delete_node(id: NodeId) -> ChangeEvent {
        ChangeEvent::NodeDeleted { id, snapshot: None }
    }

    pub fn add_edge(id: u64, ty: &str, src: NodeId, dst: NodeId) -> ChangeEvent {
        ChangeEvent::EdgeAdded {
            id: EdgeId(id),
            ty: ty.to_owned(),
            src,
            dst,
        }
    }

    pub fn remove_edge(id: EdgeId) -> ChangeEvent {
        ChangeEvent::EdgeRemoved { id, snapshot: None }
    }

    pub fn set_attr(id: NodeId, name: &str, value: impl Into<Value>) -> ChangeEvent {
        ChangeEvent::AttributeChanged {
            id,
            name: name.to_owned(),
            value: value.into(),
            old: None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ChangeEvent::NodeCreated { .. } => "node-created",
            ChangeEvent::NodeDeleted { .. } => "node-deleted",
            ChangeEvent::EdgeAdded { .. } => "edge-added",
            ChangeEvent::EdgeRemoved { .. } => "edge-removed",
            ChangeEvent::AttributeChanged { .. } => "attribute-changed",
        }
    }
}

/// Events accumulated since the last maintenance run, in application order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventBatch {
    pub events: Vec<ChangeEvent>,
}

impl EventBatch {
    pub fn new(events: Vec<ChangeEvent>) -> Self {
        EventBatch { events }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }
}
