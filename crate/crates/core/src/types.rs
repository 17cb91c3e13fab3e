//! Type graph shared by base and view layers.
//!
//! Node types form a single-inheritance forest; every edge type names the
//! node types it connects. View-layer node types describe kinds of pattern
//! matches, view-role edge types describe the role a node plays in a match.
//! The untyped `scope` edge kind is built in and is always edge type 0.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the built-in scope edge type.
pub const SCOPE: &str = "scope";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeTypeId(pub(crate) u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeTypeId(pub(crate) u32);

impl NodeTypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeTypeId {
    pub const SCOPE: EdgeTypeId = EdgeTypeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeLayer {
    Base,
    View,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeLayer {
    Base,
    ViewRole,
    Scope,
}

impl EdgeLayer {
    pub fn is_view(self) -> bool {
        !matches!(self, EdgeLayer::Base)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    String,
    Integer,
    Boolean,
}

/// Attribute value. Serialized as a bare JSON string, integer or boolean.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Bool(_) => ValueKind::Boolean,
            Value::Int(_) => ValueKind::Integer,
            Value::Str(_) => ValueKind::String,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTypeDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supertype: Option<String>,
    pub layer: NodeLayer,
    #[serde(default, rename = "abstract", skip_serializing_if = "std::ops::Not::not")]
    pub is_abstract: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<AttributeDef>,
}

impl NodeTypeDef {
    pub fn base(name: &str) -> Self {
        NodeTypeDef {
            name: name.to_owned(),
            supertype: None,
            layer: NodeLayer::Base,
            is_abstract: false,
            attributes: Vec::new(),
        }
    }

    pub fn view(name: &str) -> Self {
        NodeTypeDef {
            layer: NodeLayer::View,
            ..NodeTypeDef::base(name)
        }
    }

    pub fn extends(mut self, supertype: &str) -> Self {
        self.supertype = Some(supertype.to_owned());
        self
    }

    pub fn abstract_(mut self) -> Self {
        self.is_abstract = true;
        self
    }

    pub fn attr(mut self, name: &str, kind: ValueKind) -> Self {
        self.attributes.push(AttributeDef {
            name: name.to_owned(),
            kind,
        });
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeTypeDef {
    pub name: String,
    pub source: String,
    pub target: String,
    pub layer: EdgeLayer,
}

impl EdgeTypeDef {
    pub fn base(name: &str, source: &str, target: &str) -> Self {
        EdgeTypeDef {
            name: name.to_owned(),
            source: source.to_owned(),
            target: target.to_owned(),
            layer: EdgeLayer::Base,
        }
    }

    pub fn role(name: &str, source: &str, target: &str) -> Self {
        EdgeTypeDef {
            layer: EdgeLayer::ViewRole,
            ..EdgeTypeDef::base(name, source, target)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeGraphError {
    #[error("duplicate type name `{0}`")]
    Duplicate(String),
    #[error("unknown type `{0}`")]
    Unknown(String),
    #[error("supertype `{supertype}` of `{name}` is in a different layer")]
    LayerMismatch { name: String, supertype: String },
    #[error("supertype chain of `{0}` is cyclic")]
    CyclicSupertype(String),
    #[error("edge type `{name}`: {reason}")]
    BadEdgeType { name: String, reason: String },
    #[error("attribute `{attr}` redeclared on `{name}`")]
    DuplicateAttribute { name: String, attr: String },
}

#[derive(Clone, Debug)]
struct EdgeEnds {
    source: Option<NodeTypeId>,
    target: Option<NodeTypeId>,
}

/// Resolved type graph. Ids are positions in declaration order, so a type
/// graph extended by appending definitions keeps every existing id.
#[derive(Clone, Debug)]
pub struct TypeGraph {
    node_types: Vec<NodeTypeDef>,
    edge_types: Vec<EdgeTypeDef>,
    node_index: HashMap<String, NodeTypeId>,
    edge_index: HashMap<String, EdgeTypeId>,
    supertypes: Vec<Option<NodeTypeId>>,
    // conforms[a][b] == a is b or a subtype of b
    conforms: Vec<Vec<bool>>,
    attributes: Vec<HashMap<String, ValueKind>>,
    edge_ends: Vec<EdgeEnds>,
}

impl PartialEq for TypeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.node_types == other.node_types && self.edge_types == other.edge_types
    }
}

/// Serialized form; the scope edge type is implicit.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TypeGraphDef {
    pub node_types: Vec<NodeTypeDef>,
    #[serde(default)]
    pub edge_types: Vec<EdgeTypeDef>,
}

impl TypeGraph {
    pub fn new(
        node_types: Vec<NodeTypeDef>,
        edge_types: Vec<EdgeTypeDef>,
    ) -> Result<TypeGraph, TypeGraphError> {
        let mut node_index = HashMap::new();
        for (i, def) in node_types.iter().enumerate() {
            if node_index
                .insert(def.name.clone(), NodeTypeId(i as u32))
                .is_some()
            {
                return Err(TypeGraphError::Duplicate(def.name.clone()));
            }
        }

        let mut supertypes = Vec::with_capacity(node_types.len());
        for def in &node_types {
            let sup = match &def.supertype {
                None => None,
                Some(s) => {
                    let id = *node_index
                        .get(s)
                        .ok_or_else(|| TypeGraphError::Unknown(s.clone()))?;
                    if node_types[id.index()].layer != def.layer {
                        return Err(TypeGraphError::LayerMismatch {
                            name: def.name.clone(),
                            supertype: s.clone(),
                        });
                    }
                    Some(id)
                }
            };
            supertypes.push(sup);
        }

        let n = node_types.len();
        let mut conforms = vec![vec![false; n]; n];
        for start in 0..n {
            let mut cur = Some(NodeTypeId(start as u32));
            let mut steps = 0;
            while let Some(t) = cur {
                if steps > n {
                    return Err(TypeGraphError::CyclicSupertype(
                        node_types[start].name.clone(),
                    ));
                }
                conforms[start][t.index()] = true;
                cur = supertypes[t.index()];
                steps += 1;
            }
        }

        let mut attributes = Vec::with_capacity(n);
        for start in 0..n {
            let mut attrs = HashMap::new();
            let mut cur = Some(NodeTypeId(start as u32));
            while let Some(t) = cur {
                for a in &node_types[t.index()].attributes {
                    if attrs.insert(a.name.clone(), a.kind).is_some() {
                        return Err(TypeGraphError::DuplicateAttribute {
                            name: node_types[start].name.clone(),
                            attr: a.name.clone(),
                        });
                    }
                }
                cur = supertypes[t.index()];
            }
            attributes.push(attrs);
        }

        let mut all_edges = Vec::with_capacity(edge_types.len() + 1);
        all_edges.push(EdgeTypeDef {
            name: SCOPE.to_owned(),
            source: "*".to_owned(),
            target: "*".to_owned(),
            layer: EdgeLayer::Scope,
        });
        all_edges.extend(edge_types);

        let mut edge_index = HashMap::new();
        let mut edge_ends = Vec::with_capacity(all_edges.len());
        for (i, def) in all_edges.iter().enumerate() {
            if edge_index
                .insert(def.name.clone(), EdgeTypeId(i as u32))
                .is_some()
            {
                return Err(TypeGraphError::Duplicate(def.name.clone()));
            }
            if i == 0 {
                edge_ends.push(EdgeEnds {
                    source: None,
                    target: None,
                });
                continue;
            }
            let bad = |reason: &str| TypeGraphError::BadEdgeType {
                name: def.name.clone(),
                reason: reason.to_owned(),
            };
            if def.layer == EdgeLayer::Scope {
                return Err(bad("only the built-in `scope` edge type may use the scope layer"));
            }
            let source = *node_index
                .get(&def.source)
                .ok_or_else(|| TypeGraphError::Unknown(def.source.clone()))?;
            let target = *node_index
                .get(&def.target)
                .ok_or_else(|| TypeGraphError::Unknown(def.target.clone()))?;
            let src_layer = node_types[source.index()].layer;
            let dst_layer = node_types[target.index()].layer;
            match def.layer {
                EdgeLayer::Base if src_layer != NodeLayer::Base || dst_layer != NodeLayer::Base => {
                    return Err(bad("base edges must connect base node types"));
                }
                EdgeLayer::ViewRole if src_layer != NodeLayer::View => {
                    return Err(bad("view-role edges need a view-layer source type"));
                }
                _ => {}
            }
            edge_ends.push(EdgeEnds {
                source: Some(source),
                target: Some(target),
            });
        }

        Ok(TypeGraph {
            node_types,
            edge_types: all_edges,
            node_index,
            edge_index,
            supertypes,
            conforms,
            attributes,
            edge_ends,
        })
    }

    pub fn from_def(def: TypeGraphDef) -> Result<TypeGraph, TypeGraphError> {
        TypeGraph::new(def.node_types, def.edge_types)
    }

    pub fn to_def(&self) -> TypeGraphDef {
        TypeGraphDef {
            node_types: self.node_types.clone(),
            edge_types: self.edge_types[1..].to_vec(),
        }
    }

    /// Returns a type graph with additional definitions appended. Existing
    /// ids stay valid in the result.
    pub fn extended(
        &self,
        node_types: Vec<NodeTypeDef>,
        edge_types: Vec<EdgeTypeDef>,
    ) -> Result<TypeGraph, TypeGraphError> {
        let mut nodes = self.node_types.clone();
        nodes.extend(node_types);
        let mut edges = self.edge_types[1..].to_vec();
        edges.extend(edge_types);
        TypeGraph::new(nodes, edges)
    }

    /// True when every type of `self` is declared identically at the same
    /// position in `other`.
    pub fn is_prefix_of(&self, other: &TypeGraph) -> bool {
        self.node_types.len() <= other.node_types.len()
            && self.edge_types.len() <= other.edge_types.len()
            && self.node_types[..] == other.node_types[..self.node_types.len()]
            && self.edge_types[..] == other.edge_types[..self.edge_types.len()]
    }

    pub fn node_type(&self, name: &str) -> Option<NodeTypeId> {
        self.node_index.get(name).copied()
    }

    pub fn edge_type(&self, name: &str) -> Option<EdgeTypeId> {
        self.edge_index.get(name).copied()
    }

    pub fn node_type_or_err(&self, name: &str) -> Result<NodeTypeId, TypeGraphError> {
        self.node_type(name)
            .ok_or_else(|| TypeGraphError::Unknown(name.to_owned()))
    }

    pub fn edge_type_or_err(&self, name: &str) -> Result<EdgeTypeId, TypeGraphError> {
        self.edge_type(name)
            .ok_or_else(|| TypeGraphError::Unknown(name.to_owned()))
    }

    pub fn node_def(&self, id: NodeTypeId) -> &NodeTypeDef {
        &self.node_types[id.index()]
    }

    pub fn edge_def(&self, id: EdgeTypeId) -> &EdgeTypeDef {
        &self.edge_types[id.index()]
    }

    pub fn node_name(&self, id: NodeTypeId) -> &str {
        &self.node_types[id.index()].name
    }

    pub fn edge_name(&self, id: EdgeTypeId) -> &str {
        &self.edge_types[id.index()].name
    }

    pub fn node_layer(&self, id: NodeTypeId) -> NodeLayer {
        self.node_types[id.index()].layer
    }

    pub fn edge_layer(&self, id: EdgeTypeId) -> EdgeLayer {
        self.edge_types[id.index()].layer
    }

    pub fn supertype(&self, id: NodeTypeId) -> Option<NodeTypeId> {
        self.supertypes[id.index()]
    }

    pub fn node_type_ids(&self) -> impl Iterator<Item = NodeTypeId> + '_ {
        (0..self.node_types.len() as u32).map(NodeTypeId)
    }

    pub fn edge_type_ids(&self) -> impl Iterator<Item = EdgeTypeId> + '_ {
        (0..self.edge_types.len() as u32).map(EdgeTypeId)
    }

    /// `actual` equals `required` or has it as a transitive supertype.
    pub fn conforms(&self, actual: NodeTypeId, required: NodeTypeId) -> bool {
        self.conforms[actual.index()][required.index()]
    }

    /// All types conforming to `required`, including itself.
    pub fn subtypes(&self, required: NodeTypeId) -> impl Iterator<Item = NodeTypeId> + '_ {
        self.node_type_ids()
            .filter(move |t| self.conforms(*t, required))
    }

    /// Declared plus inherited attribute kind.
    pub fn attribute_kind(&self, ty: NodeTypeId, attr: &str) -> Option<ValueKind> {
        self.attributes[ty.index()].get(attr).copied()
    }

    /// Declared source node type; `None` for the scope edge type.
    pub fn edge_source(&self, id: EdgeTypeId) -> Option<NodeTypeId> {
        self.edge_ends[id.index()].source
    }

    pub fn edge_target(&self, id: EdgeTypeId) -> Option<NodeTypeId> {
        self.edge_ends[id.index()].target
    }

    /// Endpoint check for an edge of type `edge` from a `source` node to a
    /// `target` node.
    pub fn edge_admits(&self, edge: EdgeTypeId, source: NodeTypeId, target: NodeTypeId) -> bool {
        let ends = &self.edge_ends[edge.index()];
        match (ends.source, ends.target) {
            (Some(s), Some(t)) => self.conforms(source, s) && self.conforms(target, t),
            _ => self.node_layer(source) == NodeLayer::View,
        }
    }
}

/// Compatibility of `actual` with `required`: equal, or `required` is a
/// transitive supertype of `actual`.
pub fn type_conforms(types: &TypeGraph, actual: NodeTypeId, required: NodeTypeId) -> bool {
    types.conforms(actual, required)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TypeGraph {
        TypeGraph::new(
            vec![
                NodeTypeDef::base("Classifier").abstract_().attr("name", ValueKind::String),
                NodeTypeDef::base("Class").extends("Classifier"),
                NodeTypeDef::base("Interface").extends("Classifier"),
                NodeTypeDef::view("Generalization"),
                NodeTypeDef::view("MultiLevelGeneralization").extends("Generalization"),
                NodeTypeDef::view("Association").abstract_(),
                NodeTypeDef::view("BoundedAssociation").extends("Association"),
            ],
            vec![
                EdgeTypeDef::role("SubRole", "Generalization", "Class"),
                EdgeTypeDef::base("implements", "Class", "Interface"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn conformance_follows_supertype_chain() {
        let tg = small();
        let g = tg.node_type("Generalization").unwrap();
        let mlg = tg.node_type("MultiLevelGeneralization").unwrap();
        let ba = tg.node_type("BoundedAssociation").unwrap();
        assert!(type_conforms(&tg, mlg, g));
        assert!(type_conforms(&tg, g, g));
        assert!(!type_conforms(&tg, ba, g));
        assert!(!type_conforms(&tg, g, mlg));
    }

    #[test]
    fn inherited_attributes_resolve() {
        let tg = small();
        let class = tg.node_type("Class").unwrap();
        assert_eq!(tg.attribute_kind(class, "name"), Some(ValueKind::String));
        assert_eq!(tg.attribute_kind(class, "size"), None);
    }

    #[test]
    fn scope_is_builtin() {
        let tg = small();
        assert_eq!(tg.edge_type(SCOPE), Some(EdgeTypeId::SCOPE));
        assert_eq!(tg.edge_layer(EdgeTypeId::SCOPE), EdgeLayer::Scope);
        let g = tg.node_type("Generalization").unwrap();
        let class = tg.node_type("Class").unwrap();
        assert!(tg.edge_admits(EdgeTypeId::SCOPE, g, class));
        assert!(!tg.edge_admits(EdgeTypeId::SCOPE, class, g));
    }

    #[test]
    fn rejects_bad_definitions() {
        let cyclic = TypeGraph::new(
            vec![
                NodeTypeDef::base("A").extends("B"),
                NodeTypeDef::base("B").extends("A"),
            ],
            vec![],
        );
        assert!(matches!(cyclic, Err(TypeGraphError::CyclicSupertype(_))));

        let layer = TypeGraph::new(
            vec![NodeTypeDef::base("A"), NodeTypeDef::view("V").extends("A")],
            vec![],
        );
        assert!(matches!(layer, Err(TypeGraphError::LayerMismatch { .. })));

        let role_from_base = TypeGraph::new(
            vec![NodeTypeDef::base("A")],
            vec![EdgeTypeDef::role("R", "A", "A")],
        );
        assert!(matches!(role_from_base, Err(TypeGraphError::BadEdgeType { .. })));

        let dup = TypeGraph::new(vec![NodeTypeDef::base("A"), NodeTypeDef::base("A")], vec![]);
        assert!(matches!(dup, Err(TypeGraphError::Duplicate(_))));
    }

    #[test]
    fn extension_keeps_ids() {
        let tg = small();
        let ext = tg
            .extended(vec![NodeTypeDef::view("Extra")], vec![])
            .unwrap();
        assert!(tg.is_prefix_of(&ext));
        assert_eq!(tg.node_type("Class"), ext.node_type("Class"));
        assert!(!ext.is_prefix_of(&tg));
    }
}
