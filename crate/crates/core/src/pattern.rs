//! Graph patterns and marking instructions.
//!
//! A pattern is a connected positive graph plus negated elements (simple
//! NACs), each negated node being adjacent to a positive node. The marking
//! spec says which marker node to create for a match and which role edge or
//! scope marks each positive node.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NodeId};
use crate::types::{EdgeLayer, EdgeTypeId, NodeLayer, NodeTypeId, TypeGraph, TypeGraphError, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error(transparent)]
    Type(#[from] TypeGraphError),
    #[error("duplicate pattern variable `{0}`")]
    DuplicateVar(String),
    #[error("unknown pattern variable `{0}`")]
    UnknownVar(String),
    #[error("pattern edge {index} ({edge}) cannot connect `{source_var}` to `{target_var}`")]
    EdgeEnds {
        index: usize,
        edge: String,
        source_var: String,
        target_var: String,
    },
    #[error("attribute `{attr}` is not a valid predicate on `{var}`")]
    Predicate { var: String, attr: String },
    #[error("positive part of the pattern is not connected")]
    Disconnected,
    #[error("pattern has no positive node")]
    Empty,
    #[error("negated node `{0}` is not adjacent to a positive node")]
    DetachedNac(String),
    #[error("marking: {0}")]
    Marking(String),
    #[error("connector `{0}` is bound to more than one pattern node")]
    SharedConnector(String),
    #[error("pattern type `{0}` does not exist in the graph's type graph")]
    ForeignType(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub attr: String,
    pub op: Comparator,
    pub value: Value,
}

impl Predicate {
    pub fn holds(&self, attrs: &BTreeMap<String, Value>) -> bool {
        let actual = attrs.get(&self.attr);
        match self.op {
            Comparator::Eq => actual == Some(&self.value),
            Comparator::Ne => actual != Some(&self.value),
        }
    }
}

// ----------------------------------------------------------------------
// Serialized definitions
// ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternNodeDef {
    pub var: String,
    #[serde(rename = "type")]
    pub ty: String,
    /// Input connector this node is bound to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predicates: Vec<Predicate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEdgeDef {
    pub src: String,
    pub dst: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegatedDef {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<String>,
    /// Indexes into the pattern's edge list.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<usize>,
}

impl NegatedDef {
    fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDef {
    pub edge: String,
    pub var: String,
    /// Whether the role target belongs to the duplicate-marking key.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub key: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkingDef {
    pub marker: String,
    pub roles: Vec<RoleDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scopes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternDef {
    pub nodes: Vec<PatternNodeDef>,
    #[serde(default)]
    pub edges: Vec<PatternEdgeDef>,
    #[serde(default, skip_serializing_if = "NegatedDef::is_empty")]
    pub negated: NegatedDef,
    pub marking: MarkingDef,
}

// ----------------------------------------------------------------------
// Resolved pattern
// ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct PatternNode {
    pub var: String,
    pub ty: NodeTypeId,
    pub layer: NodeLayer,
    pub negated: bool,
    pub input: Option<String>,
    pub predicates: Vec<Predicate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatternEdge {
    pub source: usize,
    pub target: usize,
    pub ty: EdgeTypeId,
    pub negated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoleSpec {
    pub edge: EdgeTypeId,
    pub var: usize,
    pub key: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkingSpec {
    pub marker_type: NodeTypeId,
    pub roles: Vec<RoleSpec>,
    pub scoped: Vec<usize>,
}

impl MarkingSpec {
    pub fn key_roles(&self) -> impl Iterator<Item = &RoleSpec> + '_ {
        self.roles.iter().filter(|r| r.key)
    }
}

/// One negative application condition: a connected group of negated nodes
/// together with every negated edge touching them, or a single negated edge
/// between two positive nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NacGroup {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub nodes: Vec<PatternNode>,
    pub edges: Vec<PatternEdge>,
    pub marking: MarkingSpec,
    pub nacs: Vec<NacGroup>,
    vars: HashMap<String, usize>,
    // (id, name) pairs used to detect type graph mismatches
    type_names: Vec<(NodeTypeId, String)>,
    edge_names: Vec<(EdgeTypeId, String)>,
}

impl Pattern {
    pub fn resolve(def: &PatternDef, types: &TypeGraph) -> Result<Pattern, PatternError> {
        let mut vars = HashMap::new();
        let mut nodes = Vec::with_capacity(def.nodes.len());
        let mut connectors = BTreeSet::new();
        for (i, n) in def.nodes.iter().enumerate() {
            if vars.insert(n.var.clone(), i).is_some() {
                return Err(PatternError::DuplicateVar(n.var.clone()));
            }
            let ty = types.node_type_or_err(&n.ty)?;
            for p in &n.predicates {
                if types.attribute_kind(ty, &p.attr) != Some(p.value.kind()) {
                    return Err(PatternError::Predicate {
                        var: n.var.clone(),
                        attr: p.attr.clone(),
                    });
                }
            }
            if let Some(c) = &n.input {
                if !connectors.insert(c.clone()) {
                    return Err(PatternError::SharedConnector(c.clone()));
                }
            }
            nodes.push(PatternNode {
                var: n.var.clone(),
                ty,
                layer: types.node_layer(ty),
                negated: false,
                input: n.input.clone(),
                predicates: n.predicates.clone(),
            });
        }
        if nodes.is_empty() {
            return Err(PatternError::Empty);
        }
        let var_of = |name: &str| {
            vars.get(name)
                .copied()
                .ok_or_else(|| PatternError::UnknownVar(name.to_owned()))
        };

        for v in &def.negated.nodes {
            nodes[var_of(v)?].negated = true;
        }

        let mut edges = Vec::with_capacity(def.edges.len());
        for (index, e) in def.edges.iter().enumerate() {
            let source = var_of(&e.src)?;
            let target = var_of(&e.dst)?;
            let ty = types.edge_type_or_err(&e.ty)?;
            if !edge_compatible(types, ty, nodes[source].ty, nodes[target].ty) {
                return Err(PatternError::EdgeEnds {
                    index,
                    edge: e.ty.clone(),
                    source_var: e.src.clone(),
                    target_var: e.dst.clone(),
                });
            }
            let negated = def.negated.edges.contains(&index)
                || nodes[source].negated
                || nodes[target].negated;
            edges.push(PatternEdge {
                source,
                target,
                ty,
                negated,
            });
        }
        for &i in &def.negated.edges {
            if i >= edges.len() {
                return Err(PatternError::UnknownVar(format!("edge #{i}")));
            }
        }

        let positive: Vec<usize> = (0..nodes.len()).filter(|&i| !nodes[i].negated).collect();
        if positive.is_empty() {
            return Err(PatternError::Empty);
        }
        if !connected(&positive, edges.iter().filter(|e| !e.negated)) {
            return Err(PatternError::Disconnected);
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.negated {
                let attached = edges.iter().any(|e| {
                    (e.source == i && !nodes[e.target].negated)
                        || (e.target == i && !nodes[e.source].negated)
                });
                if !attached {
                    return Err(PatternError::DetachedNac(n.var.clone()));
                }
            }
        }

        let marking = resolve_marking(&def.marking, types, &nodes, &var_of)?;
        let nacs = nac_groups(&nodes, &edges);

        let mut type_names: Vec<(NodeTypeId, String)> = nodes
            .iter()
            .map(|n| n.ty)
            .chain(std::iter::once(marking.marker_type))
            .map(|t| (t, types.node_name(t).to_owned()))
            .collect();
        type_names.sort();
        type_names.dedup();
        let mut edge_names: Vec<(EdgeTypeId, String)> = edges
            .iter()
            .map(|e| e.ty)
            .chain(marking.roles.iter().map(|r| r.edge))
            .map(|t| (t, types.edge_name(t).to_owned()))
            .collect();
        edge_names.sort();
        edge_names.dedup();

        Ok(Pattern {
            nodes,
            edges,
            marking,
            nacs,
            vars,
            type_names,
            edge_names,
        })
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.vars.get(name).copied()
    }

    pub fn positive_vars(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| !self.nodes[i].negated)
    }

    pub fn input_vars(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].input.is_some())
    }

    pub fn has_view_nac(&self) -> bool {
        self.nodes
            .iter()
            .any(|n| n.negated && n.layer == NodeLayer::View)
    }

    /// Fails if the pattern was resolved against a different type graph.
    pub fn check_types(&self, types: &TypeGraph) -> Result<(), PatternError> {
        for (id, name) in &self.type_names {
            if types.node_type(name) != Some(*id) {
                return Err(PatternError::ForeignType(name.clone()));
            }
        }
        for (id, name) in &self.edge_names {
            if types.edge_type(name) != Some(*id) {
                return Err(PatternError::ForeignType(name.clone()));
            }
        }
        Ok(())
    }

    /// Serializable form.
    pub fn to_def(&self, types: &TypeGraph) -> PatternDef {
        let var = |i: usize| self.nodes[i].var.clone();
        let negated_nodes: Vec<String> = self
            .nodes
            .iter()
            .filter(|n| n.negated)
            .map(|n| n.var.clone())
            .collect();
        let negated_edges: Vec<usize> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.negated && !self.nodes[e.source].negated && !self.nodes[e.target].negated)
            .map(|(i, _)| i)
            .collect();
        PatternDef {
            nodes: self
                .nodes
                .iter()
                .map(|n| PatternNodeDef {
                    var: n.var.clone(),
                    ty: types.node_name(n.ty).to_owned(),
                    input: n.input.clone(),
                    predicates: n.predicates.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| PatternEdgeDef {
                    src: var(e.source),
                    dst: var(e.target),
                    ty: types.edge_name(e.ty).to_owned(),
                })
                .collect(),
            negated: NegatedDef {
                nodes: negated_nodes,
                edges: negated_edges,
            },
            marking: MarkingDef {
                marker: types.node_name(self.marking.marker_type).to_owned(),
                roles: self
                    .marking
                    .roles
                    .iter()
                    .map(|r| RoleDef {
                        edge: types.edge_name(r.edge).to_owned(),
                        var: var(r.var),
                        key: r.key,
                    })
                    .collect(),
                scopes: self.marking.scoped.iter().map(|&v| var(v)).collect(),
            },
        }
    }

    /// Checks a node against a pattern variable's type and predicates.
    pub fn node_fits(&self, graph: &Graph, var: usize, node: NodeId) -> bool {
        let p = &self.nodes[var];
        match graph.node(node) {
            Some(n) => {
                !n.obsolete
                    && graph.types().conforms(n.ty, p.ty)
                    && p.predicates.iter().all(|pr| pr.holds(&n.attrs))
            }
            None => false,
        }
    }
}

fn edge_compatible(types: &TypeGraph, ty: EdgeTypeId, source: NodeTypeId, target: NodeTypeId) -> bool {
    let related = |a: NodeTypeId, b: NodeTypeId| types.conforms(a, b) || types.conforms(b, a);
    match (types.edge_source(ty), types.edge_target(ty)) {
        (Some(s), Some(t)) => related(source, s) && related(target, t),
        _ => types.node_layer(source) == NodeLayer::View,
    }
}

fn connected<'a>(vars: &[usize], edges: impl Iterator<Item = &'a PatternEdge>) -> bool {
    let edges: Vec<&PatternEdge> = edges.collect();
    let mut seen = BTreeSet::from([vars[0]]);
    let mut stack = vec![vars[0]];
    while let Some(v) = stack.pop() {
        for e in &edges {
            let other = if e.source == v {
                e.target
            } else if e.target == v {
                e.source
            } else {
                continue;
            };
            if seen.insert(other) {
                stack.push(other);
            }
        }
    }
    vars.iter().all(|v| seen.contains(v))
}

fn nac_groups(nodes: &[PatternNode], edges: &[PatternEdge]) -> Vec<NacGroup> {
    let mut groups = Vec::new();
    let mut assigned = vec![false; nodes.len()];
    for start in 0..nodes.len() {
        if !nodes[start].negated || assigned[start] {
            continue;
        }
        let mut members = vec![start];
        assigned[start] = true;
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            for e in edges {
                let other = if e.source == v {
                    e.target
                } else if e.target == v {
                    e.source
                } else {
                    continue;
                };
                if nodes[other].negated && !assigned[other] {
                    assigned[other] = true;
                    members.push(other);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        let group_edges = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| members.contains(&e.source) || members.contains(&e.target))
            .map(|(i, _)| i)
            .collect();
        groups.push(NacGroup {
            nodes: members,
            edges: group_edges,
        });
    }
    for (i, e) in edges.iter().enumerate() {
        if e.negated && !nodes[e.source].negated && !nodes[e.target].negated {
            groups.push(NacGroup {
                nodes: Vec::new(),
                edges: vec![i],
            });
        }
    }
    groups
}

fn resolve_marking(
    def: &MarkingDef,
    types: &TypeGraph,
    nodes: &[PatternNode],
    var_of: &dyn Fn(&str) -> Result<usize, PatternError>,
) -> Result<MarkingSpec, PatternError> {
    let bad = |m: String| PatternError::Marking(m);
    let marker_type = types.node_type_or_err(&def.marker)?;
    let mdef = types.node_def(marker_type);
    if mdef.layer != NodeLayer::View {
        return Err(bad(format!("marker type `{}` is not a view type", def.marker)));
    }
    if mdef.is_abstract {
        return Err(bad(format!("marker type `{}` is abstract", def.marker)));
    }
    let mut covered = vec![0usize; nodes.len()];
    let mut roles = Vec::new();
    let mut role_types = BTreeSet::new();
    for r in &def.roles {
        let edge = types.edge_type_or_err(&r.edge)?;
        if types.edge_layer(edge) != EdgeLayer::ViewRole {
            return Err(bad(format!("`{}` is not a view-role edge type", r.edge)));
        }
        if !role_types.insert(edge) {
            return Err(bad(format!("role `{}` used twice", r.edge)));
        }
        let var = var_of(&r.var)?;
        if !types.edge_admits(edge, marker_type, nodes[var].ty)
            && !types
                .edge_target(edge)
                .is_some_and(|t| types.conforms(t, nodes[var].ty))
        {
            return Err(bad(format!(
                "role `{}` cannot run from `{}` to `{}`",
                r.edge, def.marker, r.var
            )));
        }
        if !types
            .edge_source(edge)
            .is_some_and(|s| types.conforms(marker_type, s))
        {
            return Err(bad(format!("role `{}` is not owned by `{}`", r.edge, def.marker)));
        }
        covered[var] += 1;
        roles.push(RoleSpec {
            edge,
            var,
            key: r.key,
        });
    }
    let mut scoped = Vec::new();
    for s in &def.scopes {
        let var = var_of(s)?;
        covered[var] += 1;
        scoped.push(var);
    }
    for (i, n) in nodes.iter().enumerate() {
        match (n.negated, covered[i]) {
            (false, 1) | (true, 0) => {}
            (false, c) => {
                return Err(bad(format!("positive node `{}` is marked {c} times", n.var)));
            }
            (true, _) => return Err(bad(format!("negated node `{}` is marked", n.var))),
        }
    }
    if !roles.iter().any(|r| r.key) {
        return Err(bad("at least one role must belong to the key".into()));
    }
    let marks_base = roles
        .iter()
        .map(|r| r.var)
        .chain(scoped.iter().copied())
        .any(|v| nodes[v].layer == NodeLayer::Base);
    if !marks_base {
        return Err(bad("a marker must mark at least one base node".into()));
    }
    Ok(MarkingSpec {
        marker_type,
        roles,
        scoped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{EdgeTypeDef, NodeTypeDef};

    fn types() -> TypeGraph {
        TypeGraph::new(
            vec![
                NodeTypeDef::base("A"),
                NodeTypeDef::base("B"),
                NodeTypeDef::view("M"),
            ],
            vec![
                EdgeTypeDef::base("ab", "A", "B"),
                EdgeTypeDef::base("bb", "B", "B"),
                EdgeTypeDef::role("RA", "M", "A"),
                EdgeTypeDef::role("RB", "M", "B"),
            ],
        )
        .unwrap()
    }

    fn node(var: &str, ty: &str) -> PatternNodeDef {
        PatternNodeDef {
            var: var.into(),
            ty: ty.into(),
            input: None,
            predicates: vec![],
        }
    }

    fn edge(src: &str, dst: &str, ty: &str) -> PatternEdgeDef {
        PatternEdgeDef {
            src: src.into(),
            dst: dst.into(),
            ty: ty.into(),
        }
    }

    fn base_def() -> PatternDef {
        PatternDef {
            nodes: vec![node("a", "A"), node("b", "B")],
            edges: vec![edge("a", "b", "ab")],
            negated: NegatedDef::default(),
            marking: MarkingDef {
                marker: "M".into(),
                roles: vec![RoleDef {
                    edge: "RA".into(),
                    var: "a".into(),
                    key: true,
                }],
                scopes: vec!["b".into()],
            },
        }
    }

    #[test]
    fn resolves_valid_pattern() {
        let p = Pattern::resolve(&base_def(), &types()).unwrap();
        assert_eq!(p.positive_vars().count(), 2);
        assert!(p.nacs.is_empty());
        let back = p.to_def(&types());
        assert_eq!(back, base_def());
    }

    #[test]
    fn rejects_disconnected_positive_part() {
        let mut def = base_def();
        def.edges.clear();
        assert_eq!(
            Pattern::resolve(&def, &types()),
            Err(PatternError::Disconnected)
        );
    }

    #[test]
    fn rejects_incomplete_marking() {
        let mut def = base_def();
        def.marking.scopes.clear();
        assert!(matches!(
            Pattern::resolve(&def, &types()),
            Err(PatternError::Marking(_))
        ));
        let mut def = base_def();
        def.marking.scopes.push("a".into());
        assert!(matches!(
            Pattern::resolve(&def, &types()),
            Err(PatternError::Marking(_))
        ));
    }

    #[test]
    fn groups_negated_elements() {
        let mut def = base_def();
        def.nodes.push(node("n", "B"));
        def.edges.push(edge("b", "n", "bb"));
        def.negated.nodes.push("n".into());
        def.nodes.push(node("c", "B"));
        def.edges.push(edge("b", "c", "bb"));
        def.edges.push(edge("c", "b", "bb"));
        def.negated.edges.push(3);
        def.marking.scopes.push("c".into());
        let p = Pattern::resolve(&def, &types()).unwrap();
        assert_eq!(p.nacs.len(), 2);
        assert_eq!(p.nacs[0].nodes, vec![2]);
        assert_eq!(p.nacs[0].edges, vec![1]);
        assert!(p.nacs[1].nodes.is_empty());
        assert_eq!(p.nacs[1].edges, vec![3]);
    }

    #[test]
    fn rejects_detached_nac() {
        let mut def = base_def();
        def.nodes.push(node("n", "B"));
        def.nodes.push(node("m", "B"));
        def.edges.push(edge("n", "m", "bb"));
        def.negated.nodes.extend(["n".to_string(), "m".to_string()]);
        assert!(matches!(
            Pattern::resolve(&def, &types()),
            Err(PatternError::DetachedNac(_))
        ));
    }

    #[test]
    fn predicates_check_attribute_kinds() {
        let mut def = base_def();
        def.nodes[0].predicates.push(Predicate {
            attr: "missing".into(),
            op: Comparator::Eq,
            value: Value::Int(1),
        });
        assert!(matches!(
            Pattern::resolve(&def, &types()),
            Err(PatternError::Predicate { .. })
        ));
    }
}
