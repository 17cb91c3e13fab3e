//! Design-pattern recovery over Java-like abstract syntax graphs.
//!
//! Provides the type graph, patterns and networks used throughout the tests
//! and benchmarks, plus small builders for syntax-graph fixtures.

use std::collections::BTreeMap;

use crate::graph::{Graph, GraphError, NodeId};
use crate::network::{ModuleDef, NetworkDef, Wire};
use crate::pattern::{
    Comparator, MarkingDef, NegatedDef, PatternDef, PatternEdgeDef, PatternNodeDef, Predicate,
    RoleDef,
};
use crate::types::{EdgeTypeDef, NodeTypeDef, TypeGraph, Value, ValueKind};

pub fn type_graph() -> TypeGraph {
    use ValueKind::String as S;
    let nodes = vec![
        NodeTypeDef::base("Classifier").abstract_().attr("name", S),
        NodeTypeDef::base("Class").extends("Classifier"),
        NodeTypeDef::base("Interface").extends("Classifier"),
        NodeTypeDef::base("Field").attr("name", S),
        NodeTypeDef::base("Method").attr("name", S),
        NodeTypeDef::base("Public"),
        NodeTypeDef::base("ArrayDimension"),
        NodeTypeDef::base("QualifiedTypeArgument"),
        NodeTypeDef::base("TypeReference").abstract_(),
        NodeTypeDef::base("NamespaceClassifierReference").extends("TypeReference"),
        NodeTypeDef::base("ClassifierReference").extends("TypeReference"),
        NodeTypeDef::view("Specialization").abstract_(),
        NodeTypeDef::view("Generalization").extends("Specialization"),
        NodeTypeDef::view("MultiLevelGeneralization").extends("Generalization"),
        NodeTypeDef::view("InterfaceImplementation").extends("Specialization"),
        NodeTypeDef::view("Association").abstract_(),
        NodeTypeDef::view("BoundedAssociation").extends("Association"),
        NodeTypeDef::view("UnboundedAssociation").extends("Association"),
        NodeTypeDef::view("Composite"),
        NodeTypeDef::view("ExtractInterface"),
    ];
    let edges = vec![
        EdgeTypeDef::base("fields", "Class", "Field"),
        EdgeTypeDef::base("methods", "Class", "Method"),
        EdgeTypeDef::base("modifiers", "Method", "Public"),
        EdgeTypeDef::base("extends", "Class", "NamespaceClassifierReference"),
        EdgeTypeDef::base("implements", "Class", "NamespaceClassifierReference"),
        EdgeTypeDef::base("typeReference", "Field", "NamespaceClassifierReference"),
        EdgeTypeDef::base(
            "classifierReferences",
            "NamespaceClassifierReference",
            "ClassifierReference",
        ),
        EdgeTypeDef::base("target", "ClassifierReference", "Classifier"),
        EdgeTypeDef::base("arrayDimensions", "Field", "ArrayDimension"),
        EdgeTypeDef::base("typeArguments", "ClassifierReference", "QualifiedTypeArgument"),
        EdgeTypeDef::base(
            "argTypeReference",
            "QualifiedTypeArgument",
            "NamespaceClassifierReference",
        ),
        EdgeTypeDef::role("SubRole", "Specialization", "Class"),
        EdgeTypeDef::role("SuperRole", "Specialization", "Classifier"),
        EdgeTypeDef::role("LowerGen", "MultiLevelGeneralization", "Generalization"),
        EdgeTypeDef::role("UpperGen", "MultiLevelGeneralization", "Generalization"),
        EdgeTypeDef::role("Reference", "Association", "Field"),
        EdgeTypeDef::role("Target", "Association", "Classifier"),
        EdgeTypeDef::role("CompositeRole", "Composite", "Class"),
        EdgeTypeDef::role("ComponentRole", "Composite", "Classifier"),
        EdgeTypeDef::role("GeneralizationRole", "Composite", "Generalization"),
        EdgeTypeDef::role("AssociationRole", "Composite", "Association"),
        EdgeTypeDef::role("Candidate", "ExtractInterface", "Class"),
    ];
    TypeGraph::new(nodes, edges).expect("example type graph is valid")
}

fn node(var: &str, ty: &str, input: bool) -> PatternNodeDef {
    PatternNodeDef {
        var: var.into(),
        ty: ty.into(),
        input: input.then(|| var.to_owned()),
        predicates: Vec::new(),
    }
}

fn edge(src: &str, ty: &str, dst: &str) -> PatternEdgeDef {
    PatternEdgeDef {
        src: src.into(),
        dst: dst.into(),
        ty: ty.into(),
    }
}

fn role(edge: &str, var: &str) -> RoleDef {
    RoleDef {
        edge: edge.into(),
        var: var.into(),
        key: true,
    }
}

fn marking(marker: &str, roles: Vec<RoleDef>, scopes: &[&str]) -> MarkingDef {
    MarkingDef {
        marker: marker.into(),
        roles,
        scopes: scopes.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn generalization() -> PatternDef {
    PatternDef {
        nodes: vec![
            node("sub", "Class", true),
            node("ncr", "NamespaceClassifierReference", true),
            node("cr", "ClassifierReference", true),
            node("super", "Classifier", true),
        ],
        edges: vec![
            edge("sub", "extends", "ncr"),
            edge("ncr", "classifierReferences", "cr"),
            edge("cr", "target", "super"),
        ],
        negated: NegatedDef::default(),
        marking: marking(
            "Generalization",
            vec![role("SubRole", "sub"), role("SuperRole", "super")],
            &["ncr", "cr"],
        ),
    }
}

pub fn interface_implementation() -> PatternDef {
    PatternDef {
        nodes: vec![
            node("class", "Class", true),
            node("ncr", "NamespaceClassifierReference", true),
            node("cr", "ClassifierReference", true),
            node("iface", "Interface", true),
        ],
        edges: vec![
            edge("class", "implements", "ncr"),
            edge("ncr", "classifierReferences", "cr"),
            edge("cr", "target", "iface"),
        ],
        negated: NegatedDef::default(),
        marking: marking(
            "InterfaceImplementation",
            vec![role("SubRole", "class"), role("SuperRole", "iface")],
            &["ncr", "cr"],
        ),
    }
}

pub fn bounded_association() -> PatternDef {
    PatternDef {
        nodes: vec![
            node("field", "Field", true),
            node("dim", "ArrayDimension", true),
            node("ncr", "NamespaceClassifierReference", true),
            node("cr", "ClassifierReference", true),
            node("target", "Classifier", true),
        ],
        edges: vec![
            edge("field", "arrayDimensions", "dim"),
            edge("field", "typeReference", "ncr"),
            edge("ncr", "classifierReferences", "cr"),
            edge("cr", "target", "target"),
        ],
        negated: NegatedDef::default(),
        marking: marking(
            "BoundedAssociation",
            vec![role("Reference", "field"), role("Target", "target")],
            &["dim", "ncr", "cr"],
        ),
    }
}

pub fn unbounded_association() -> PatternDef {
    let mut list = node("list", "Class", true);
    list.predicates.push(Predicate {
        attr: "name".into(),
        op: Comparator::Eq,
        value: Value::Str("List".into()),
    });
    PatternDef {
        nodes: vec![
            node("field", "Field", true),
            node("ncr", "NamespaceClassifierReference", true),
            node("cr", "ClassifierReference", true),
            list,
            node("qta", "QualifiedTypeArgument", true),
            node("argNcr", "NamespaceClassifierReference", true),
            node("argCr", "ClassifierReference", true),
            node("target", "Classifier", true),
        ],
        edges: vec![
            edge("field", "typeReference", "ncr"),
            edge("ncr", "classifierReferences", "cr"),
            edge("cr", "target", "list"),
            edge("cr", "typeArguments", "qta"),
            edge("qta", "argTypeReference", "argNcr"),
            edge("argNcr", "classifierReferences", "argCr"),
            edge("argCr", "target", "target"),
        ],
        negated: NegatedDef::default(),
        marking: marking(
            "UnboundedAssociation",
            vec![role("Reference", "field"), role("Target", "target")],
            &["ncr", "cr", "list", "qta", "argNcr", "argCr"],
        ),
    }
}

pub fn composite() -> PatternDef {
    PatternDef {
        nodes: vec![
            node("gen", "Generalization", true),
            node("assoc", "Association", true),
            node("composite", "Class", false),
            node("component", "Classifier", false),
            node("field", "Field", false),
        ],
        edges: vec![
            edge("gen", "SubRole", "composite"),
            edge("gen", "SuperRole", "component"),
            edge("composite", "fields", "field"),
            edge("assoc", "Reference", "field"),
            edge("assoc", "Target", "component"),
        ],
        negated: NegatedDef::default(),
        marking: marking(
            "Composite",
            vec![
                role("CompositeRole", "composite"),
                role("ComponentRole", "component"),
                role("GeneralizationRole", "gen"),
                role("AssociationRole", "assoc"),
            ],
            &["field"],
        ),
    }
}

/// Chains two generalizations into one spanning both. Only the outer
/// classes form the duplicate key, so every pair of classes connected by a
/// chain is marked once.
pub fn multi_level_generalization() -> PatternDef {
    let mut lower = role("LowerGen", "lower");
    lower.key = false;
    let mut upper = role("UpperGen", "upper");
    upper.key = false;
    PatternDef {
        nodes: vec![
            node("lower", "Generalization", true),
            node("upper", "Generalization", true),
            node("sub", "Class", false),
            node("mid", "Class", false),
            node("super", "Classifier", false),
        ],
        edges: vec![
            edge("lower", "SubRole", "sub"),
            edge("lower", "SuperRole", "mid"),
            edge("upper", "SubRole", "mid"),
            edge("upper", "SuperRole", "super"),
        ],
        negated: NegatedDef::default(),
        marking: marking(
            "MultiLevelGeneralization",
            vec![
                role("SubRole", "sub"),
                role("SuperRole", "super"),
                lower,
                upper,
            ],
            &["mid"],
        ),
    }
}

/// Classes owning public methods that implement no interface.
pub fn extract_interface() -> PatternDef {
    PatternDef {
        nodes: vec![
            node("class", "Class", true),
            node("method", "Method", true),
            node("public", "Public", true),
            node("impl", "InterfaceImplementation", true),
        ],
        edges: vec![
            edge("class", "methods", "method"),
            edge("method", "modifiers", "public"),
            edge("impl", "SubRole", "class"),
        ],
        negated: NegatedDef {
            nodes: vec!["impl".into()],
            edges: Vec::new(),
        },
        marking: marking(
            "ExtractInterface",
            vec![role("Candidate", "class")],
            &["method", "public"],
        ),
    }
}

pub fn patterns() -> BTreeMap<String, PatternDef> {
    BTreeMap::from([
        ("Generalization".to_owned(), generalization()),
        ("InterfaceImplementation".to_owned(), interface_implementation()),
        ("BoundedAssociation".to_owned(), bounded_association()),
        ("UnboundedAssociation".to_owned(), unbounded_association()),
        ("Composite".to_owned(), composite()),
        ("MultiLevelGeneralization".to_owned(), multi_level_generalization()),
        ("ExtractInterface".to_owned(), extract_interface()),
    ])
}

fn module(name: &str) -> ModuleDef {
    ModuleDef {
        name: name.into(),
        pattern: name.into(),
        inputs: None,
        output: None,
    }
}

fn wire(from: &str, to: &str, input: &str) -> Wire {
    Wire {
        from: from.into(),
        to: to.into(),
        input: input.into(),
    }
}

fn network(modules: &[&str], wires: Vec<Wire>, cycles: Vec<Vec<String>>) -> NetworkDef {
    let all = patterns();
    NetworkDef {
        patterns: modules
            .iter()
            .map(|m| (m.to_string(), all[*m].clone()))
            .collect(),
        modules: modules.iter().map(|m| module(m)).collect(),
        wires,
        cycles,
    }
}

/// Generalization, both associations and Composite. The association
/// modules feed one Association-typed input.
pub fn composite_network() -> NetworkDef {
    network(
        &[
            "Generalization",
            "BoundedAssociation",
            "UnboundedAssociation",
            "Composite",
        ],
        vec![
            wire("Generalization", "Composite", "gen"),
            wire("BoundedAssociation", "Composite", "assoc"),
            wire("UnboundedAssociation", "Composite", "assoc"),
        ],
        Vec::new(),
    )
}

/// Generalization feeding the self-recursive multi-level generalization.
pub fn recursion_network() -> NetworkDef {
    network(
        &["Generalization", "MultiLevelGeneralization"],
        vec![
            wire("Generalization", "MultiLevelGeneralization", "lower"),
            wire("Generalization", "MultiLevelGeneralization", "upper"),
            wire("MultiLevelGeneralization", "MultiLevelGeneralization", "lower"),
            wire("MultiLevelGeneralization", "MultiLevelGeneralization", "upper"),
        ],
        vec![vec!["MultiLevelGeneralization".into()]],
    )
}

/// Interface implementations and the complex NAC consuming them.
pub fn interface_network() -> NetworkDef {
    network(
        &["InterfaceImplementation", "ExtractInterface"],
        vec![wire("InterfaceImplementation", "ExtractInterface", "impl")],
        Vec::new(),
    )
}

/// The running example plus the interface modules: every acyclic example
/// module in one network.
pub fn acyclic_network() -> NetworkDef {
    let mut wires = composite_network().wires;
    wires.extend(interface_network().wires);
    network(
        &[
            "Generalization",
            "BoundedAssociation",
            "UnboundedAssociation",
            "Composite",
            "InterfaceImplementation",
            "ExtractInterface",
        ],
        wires,
        Vec::new(),
    )
}

/// Every example module in one network.
pub fn full_network() -> NetworkDef {
    let mut wires = composite_network().wires;
    wires.extend(recursion_network().wires);
    wires.extend(interface_network().wires);
    wires.push(wire("MultiLevelGeneralization", "Composite", "gen"));
    network(
        &[
            "Generalization",
            "MultiLevelGeneralization",
            "BoundedAssociation",
            "UnboundedAssociation",
            "Composite",
            "InterfaceImplementation",
            "ExtractInterface",
        ],
        wires,
        vec![vec!["MultiLevelGeneralization".into()]],
    )
}

// ----------------------------------------------------------------------
// Fixture builders (logged base-layer changes)
// ----------------------------------------------------------------------

fn named(name: &str) -> [(String, Value); 1] {
    [("name".to_owned(), Value::Str(name.to_owned()))]
}

pub fn add_class(g: &mut Graph, name: &str) -> Result<NodeId, GraphError> {
    g.create_node("Class", named(name))
}

pub fn add_interface(g: &mut Graph, name: &str) -> Result<NodeId, GraphError> {
    g.create_node("Interface", named(name))
}

/// Adds a namespace/classifier reference pair targeting `target`.
pub fn add_reference(g: &mut Graph, target: NodeId) -> Result<(NodeId, NodeId), GraphError> {
    let ncr = g.create_node("NamespaceClassifierReference", [])?;
    let cr = g.create_node("ClassifierReference", [])?;
    g.add_edge("classifierReferences", ncr, cr)?;
    g.add_edge("target", cr, target)?;
    Ok((ncr, cr))
}

/// `sub extends sup`; returns the reference nodes.
pub fn add_extends(g: &mut Graph, sub: NodeId, sup: NodeId) -> Result<(NodeId, NodeId), GraphError> {
    let (ncr, cr) = add_reference(g, sup)?;
    g.add_edge("extends", sub, ncr)?;
    Ok((ncr, cr))
}

pub fn add_implements(g: &mut Graph, class: NodeId, iface: NodeId) -> Result<(NodeId, NodeId), GraphError> {
    let (ncr, cr) = add_reference(g, iface)?;
    g.add_edge("implements", class, ncr)?;
    Ok((ncr, cr))
}

/// Field of type `element[]` owned by `owner`.
pub fn add_array_field(g: &mut Graph, owner: NodeId, name: &str, element: NodeId) -> Result<NodeId, GraphError> {
    let field = g.create_node("Field", named(name))?;
    g.add_edge("fields", owner, field)?;
    let dim = g.create_node("ArrayDimension", [])?;
    g.add_edge("arrayDimensions", field, dim)?;
    let (ncr, _) = add_reference(g, element)?;
    g.add_edge("typeReference", field, ncr)?;
    Ok(field)
}

/// Field of type `list<element>` owned by `owner`.
pub fn add_list_field(
    g: &mut Graph,
    owner: NodeId,
    name: &str,
    list: NodeId,
    element: NodeId,
) -> Result<NodeId, GraphError> {
    let field = g.create_node("Field", named(name))?;
    g.add_edge("fields", owner, field)?;
    let (ncr, cr) = add_reference(g, list)?;
    g.add_edge("typeReference", field, ncr)?;
    let qta = g.create_node("QualifiedTypeArgument", [])?;
    g.add_edge("typeArguments", cr, qta)?;
    let (arg, _) = add_reference(g, element)?;
    g.add_edge("argTypeReference", qta, arg)?;
    Ok(field)
}

/// Public method owned by `class`.
pub fn add_public_method(g: &mut Graph, class: NodeId, name: &str) -> Result<NodeId, GraphError> {
    let m = g.create_node("Method", named(name))?;
    g.add_edge("methods", class, m)?;
    let p = g.create_node("Public", [])?;
    g.add_edge("modifiers", m, p)?;
    Ok(m)
}

/// Handles of [`composite_fixture`].
#[derive(Clone, Copy, Debug)]
pub struct CompositeFixture {
    pub component: NodeId,
    pub composite: NodeId,
    pub children: NodeId,
}

/// A `Composite` class extending `Component` and owning a `Component[]`
/// field.
pub fn composite_fixture(g: &mut Graph) -> Result<CompositeFixture, GraphError> {
    let component = add_class(g, "Component")?;
    let composite = add_class(g, "Composite")?;
    add_extends(g, composite, component)?;
    let children = add_array_field(g, composite, "children", component)?;
    Ok(CompositeFixture {
        component,
        composite,
        children,
    })
}

/// Linear inheritance chain `c0 <- c1 <- ... <- c(n-1)`, each class
/// extending its predecessor.
pub fn inheritance_chain(g: &mut Graph, n: usize) -> Result<Vec<NodeId>, GraphError> {
    let mut classes = Vec::with_capacity(n);
    for i in 0..n {
        let c = add_class(g, &format!("C{i}"))?;
        if let Some(&prev) = classes.last() {
            add_extends(g, c, prev)?;
        }
        classes.push(c);
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;
    use crate::pattern::Pattern;
    use crate::plan::{plan_execution, PlanStep};
    use std::sync::Arc;

    #[test]
    fn all_patterns_resolve() {
        let t = type_graph();
        for (name, def) in patterns() {
            Pattern::resolve(&def, &t).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn networks_build_and_plan() {
        let t = Arc::new(type_graph());
        let net = build_network(&composite_network(), t.clone()).unwrap();
        assert_eq!(net.modules().len(), 4);
        let plan = plan_execution(&net).unwrap();
        assert_eq!(plan.order().last(), Some(&"Composite"));

        let net = build_network(&recursion_network(), t.clone()).unwrap();
        let plan = plan_execution(&net).unwrap();
        assert_eq!(
            plan.steps,
            vec![
                PlanStep::Module("Generalization".into()),
                PlanStep::Cycle {
                    modules: vec!["MultiLevelGeneralization".into()],
                    fixpoint: "MultiLevelGeneralization".into(),
                },
            ]
        );

        let net = build_network(&full_network(), t.clone()).unwrap();
        let plan = plan_execution(&net).unwrap();
        let order = plan.order();
        for w in net.wires() {
            if w.from != w.to {
                assert!(plan.position(&w.from) < plan.position(&w.to), "{w:?} in {order:?}");
            }
        }
        assert_eq!(plan.nac_halo, 0);
    }

    #[test]
    fn undeclared_self_cycle_is_rejected() {
        let mut def = recursion_network();
        def.cycles.clear();
        let err = build_network(&def, Arc::new(type_graph())).unwrap_err();
        assert!(matches!(err, crate::network::NetworkError::UndeclaredCycle(_)));
    }

    #[test]
    fn fixtures_are_well_typed() {
        let mut g = Graph::new(Arc::new(type_graph()));
        composite_fixture(&mut g).unwrap();
        let list = add_class(&mut g, "List").unwrap();
        let a = add_class(&mut g, "A").unwrap();
        add_list_field(&mut g, a, "items", list, a).unwrap();
        add_public_method(&mut g, a, "run").unwrap();
        let i = add_interface(&mut g, "I").unwrap();
        add_implements(&mut g, a, i).unwrap();
        inheritance_chain(&mut g, 4).unwrap();
        g.check_consistency().unwrap();
    }
}
