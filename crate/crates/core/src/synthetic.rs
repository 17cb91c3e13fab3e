//! Seeded synthetic syntax graphs and change scripts.
//!
//! The graph consists of independent clusters. Each cluster owns a `List`
//! class and a mix of seeded pattern occurrences and decoys, where a decoy
//! is a partial occurrence that matches no pattern. The expected number of
//! markers per view type is known by construction. Edits stay inside one
//! cluster, so connected components stay small as the graph grows.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::event::{ChangeEvent, EventBatch};
use crate::example::type_graph;
use crate::graph::{Graph, NodeId};
use crate::types::{EdgeLayer, EdgeTypeId, NodeLayer, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Base nodes to reach; decoys fill whatever the occurrences leave.
    pub base_nodes: usize,
    pub cluster_size: usize,
    pub generalizations: usize,
    pub bounded_associations: usize,
    pub unbounded_associations: usize,
    pub composites: usize,
    pub interface_implementations: usize,
    pub extract_interfaces: usize,
    /// Extra decoy edges per decoy node.
    pub edge_density: f64,
    /// Number of change events in the script.
    pub script_length: usize,
    /// Edits per event batch.
    pub batch_edits: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 1,
            base_nodes: 200,
            cluster_size: 40,
            generalizations: 4,
            bounded_associations: 2,
            unbounded_associations: 2,
            composites: 2,
            interface_implementations: 2,
            extract_interfaces: 2,
            edge_density: 0.5,
            script_length: 50,
            batch_edits: 1,
        }
    }
}

impl SyntheticSpec {
    /// Occurrence counts proportional to the graph size: about one
    /// occurrence per 15 base nodes.
    pub fn scaled(base_nodes: usize, seed: u64) -> SyntheticSpec {
        let unit = (base_nodes / 120).max(1);
        SyntheticSpec {
            seed,
            base_nodes,
            generalizations: 2 * unit,
            bounded_associations: unit,
            unbounded_associations: unit,
            composites: unit,
            interface_implementations: unit,
            extract_interfaces: unit,
            ..SyntheticSpec::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticWorkload {
    pub spec: SyntheticSpec,
    /// Base layer only, with no pending events.
    pub graph: Graph,
    pub script: Vec<EventBatch>,
    /// Expected marker count per view type on the initial graph.
    pub truth: BTreeMap<String, usize>,
}

struct Gen {
    g: Graph,
    rng: ChaCha8Rng,
    clusters: Vec<Vec<NodeId>>,
    lists: Vec<NodeId>,
    removed: Vec<(EdgeTypeId, NodeId, NodeId)>,
    out: Vec<ChangeEvent>,
    record: bool,
    counter: usize,
}

impl Gen {
    fn node(&mut self, cluster: usize, ty: &str, name: Option<&str>) -> NodeId {
        let id = NodeId(self.g.next_id());
        let mut ev = ChangeEvent::create_node(id.0, ty);
        if let (ChangeEvent::NodeCreated { attrs, .. }, Some(n)) = (&mut ev, name) {
            attrs.insert("name".into(), Value::Str(n.to_owned()));
        }
        self.apply(ev);
        self.clusters[cluster].push(id);
        id
    }

    fn edge(&mut self, ty: &str, src: NodeId, dst: NodeId) {
        let id = self.g.next_id();
        self.apply(ChangeEvent::add_edge(id, ty, src, dst));
    }

    fn apply(&mut self, ev: ChangeEvent) {
        self.g.apply_change(ev.clone()).expect("generated change is valid");
        if self.record {
            self.out.push(ev);
        }
    }

    fn fresh_name(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}", self.counter)
    }

    fn class(&mut self, c: usize) -> NodeId {
        let name = self.fresh_name("C");
        self.node(c, "Class", Some(&name))
    }

    fn reference(&mut self, c: usize, target: NodeId) -> (NodeId, NodeId) {
        let ncr = self.node(c, "NamespaceClassifierReference", None);
        let cr = self.node(c, "ClassifierReference", None);
        self.edge("classifierReferences", ncr, cr);
        self.edge("target", cr, target);
        (ncr, cr)
    }

    fn extends(&mut self, c: usize, sub: NodeId, sup: NodeId) {
        let (ncr, _) = self.reference(c, sup);
        self.edge("extends", sub, ncr);
    }

    fn array_field(&mut self, c: usize, owner: NodeId, element: NodeId) {
        let name = self.fresh_name("f");
        let f = self.node(c, "Field", Some(&name));
        self.edge("fields", owner, f);
        let d = self.node(c, "ArrayDimension", None);
        self.edge("arrayDimensions", f, d);
        let (ncr, _) = self.reference(c, element);
        self.edge("typeReference", f, ncr);
    }

    fn list_field(&mut self, c: usize, owner: NodeId, element: NodeId) {
        let name = self.fresh_name("f");
        let f = self.node(c, "Field", Some(&name));
        self.edge("fields", owner, f);
        let list = self.lists[c];
        let (ncr, cr) = self.reference(c, list);
        self.edge("typeReference", f, ncr);
        let q = self.node(c, "QualifiedTypeArgument", None);
        self.edge("typeArguments", cr, q);
        let (arg, _) = self.reference(c, element);
        self.edge("argTypeReference", q, arg);
    }

    fn public_method(&mut self, c: usize, owner: NodeId) {
        let name = self.fresh_name("m");
        let m = self.node(c, "Method", Some(&name));
        self.edge("methods", owner, m);
        let p = self.node(c, "Public", None);
        self.edge("modifiers", m, p);
    }

    fn implements(&mut self, c: usize, class: NodeId, iface: NodeId) {
        let (ncr, _) = self.reference(c, iface);
        self.edge("implements", class, ncr);
    }

    /// Seeds one occurrence of the given kind into cluster `c`.
    fn occurrence(&mut self, c: usize, kind: usize) {
        match kind {
            0 => {
                let (a, b) = (self.class(c), self.class(c));
                self.extends(c, a, b);
            }
            1 => {
                let (a, b) = (self.class(c), self.class(c));
                self.array_field(c, a, b);
            }
            2 => {
                let (a, b) = (self.class(c), self.class(c));
                self.list_field(c, a, b);
            }
            3 => {
                let (component, composite) = (self.class(c), self.class(c));
                self.extends(c, composite, component);
                self.array_field(c, composite, component);
            }
            4 => {
                let a = self.class(c);
                let name = self.fresh_name("I");
                let i = self.node(c, "Interface", Some(&name));
                self.implements(c, a, i);
            }
            _ => {
                let a = self.class(c);
                self.public_method(c, a);
            }
        }
    }

    /// Adds one decoy structure that matches no pattern.
    fn decoy(&mut self, c: usize) {
        let hub = self.clusters[c][1];
        match self.rng.random_range(0..5) {
            0 => {
                // reference chain without a target
                let ncr = self.node(c, "NamespaceClassifierReference", None);
                let cr = self.node(c, "ClassifierReference", None);
                self.edge("classifierReferences", ncr, cr);
                self.edge("extends", hub, ncr);
            }
            1 => {
                // array field without a type
                let name = self.fresh_name("f");
                let f = self.node(c, "Field", Some(&name));
                self.edge("fields", hub, f);
                let d = self.node(c, "ArrayDimension", None);
                self.edge("arrayDimensions", f, d);
            }
            2 => {
                // non-public method
                let name = self.fresh_name("m");
                let m = self.node(c, "Method", Some(&name));
                self.edge("methods", hub, m);
            }
            3 => {
                let _ = self.class(c);
            }
            _ => {
                let _ = self.node(c, "Public", None);
            }
        }
    }

    fn base_edge_types(&self) -> Vec<EdgeTypeId> {
        let t = self.g.types();
        t.edge_type_ids()
            .filter(|&e| t.edge_layer(e) == EdgeLayer::Base)
            .collect()
    }

    fn live(&self, c: usize) -> Vec<NodeId> {
        self.clusters[c]
            .iter()
            .copied()
            .filter(|n| self.g.contains_node(*n))
            .collect()
    }

    fn random_edge_in(&mut self, c: usize) -> Option<(EdgeTypeId, NodeId, NodeId)> {
        let types = self.g.types().clone();
        let et = *self.base_edge_types().choose(&mut self.rng)?;
        let (s, t) = (types.edge_source(et)?, types.edge_target(et)?);
        let live = self.live(c);
        let of = |ty| -> Vec<NodeId> {
            live.iter()
                .copied()
                .filter(|n| types.conforms(self.g.node_type(*n).unwrap(), ty))
                .collect()
        };
        let (srcs, dsts) = (of(s), of(t));
        let a = *srcs.choose(&mut self.rng)?;
        let b = *dsts.choose(&mut self.rng)?;
        (a != b && !self.g.has_edge(a, et, b)).then_some((et, a, b))
    }

    /// One random edit inside a random cluster.
    fn edit(&mut self) {
        let c = self.rng.random_range(0..self.clusters.len());
        let roll = self.rng.random_range(0..100);
        let live = self.live(c);
        match roll {
            0..=24 => {
                let edges: Vec<_> = live
                    .iter()
                    .flat_map(|n| self.g.out_edges(*n).map(|e| (e.id, e.ty, e.source, e.target)))
                    .collect();
                if let Some(&(id, ty, s, t)) = edges.choose(&mut self.rng) {
                    self.removed.push((ty, s, t));
                    self.apply(ChangeEvent::remove_edge(id));
                }
            }
            25..=44 => {
                if let Some((et, a, b)) = self.random_edge_in(c) {
                    let name = self.g.types().edge_name(et).to_owned();
                    self.edge(&name, a, b);
                }
            }
            45..=54 => {
                if !self.removed.is_empty() {
                    let i = self.rng.random_range(0..self.removed.len());
                    let (et, a, b) = self.removed.swap_remove(i);
                    if self.g.contains_node(a) && self.g.contains_node(b) && !self.g.has_edge(a, et, b) {
                        let name = self.g.types().edge_name(et).to_owned();
                        self.edge(&name, a, b);
                    }
                }
            }
            55..=64 => {
                let hub = self.clusters[c][1];
                let list = self.lists[c];
                let victims: Vec<NodeId> = live.into_iter().filter(|n| *n != hub && *n != list).collect();
                if let Some(&v) = victims.choose(&mut self.rng) {
                    self.apply(ChangeEvent::delete_node(v));
                }
            }
            65..=74 => {
                let kind = self.rng.random_range(0..6);
                self.occurrence(c, kind);
            }
            75..=84 => {
                let types = self.g.types().clone();
                let classes: Vec<NodeId> = live
                    .into_iter()
                    .filter(|n| types.node_name(self.g.node_type(*n).unwrap()) == "Class")
                    .collect();
                if let Some(&k) = classes.choose(&mut self.rng) {
                    let current = self.g.node(k).unwrap().attrs.get("name").cloned();
                    let next = if current == Some(Value::Str("List".into())) {
                        self.fresh_name("C")
                    } else {
                        "List".to_owned()
                    };
                    self.apply(ChangeEvent::set_attr(k, "name", next));
                }
            }
            85..=89 => {
                let types = self.g.types().clone();
                let classes: Vec<NodeId> = live
                    .into_iter()
                    .filter(|n| types.node_name(self.g.node_type(*n).unwrap()) == "Class")
                    .collect();
                if let Some(&k) = classes.choose(&mut self.rng) {
                    self.public_method(c, k);
                }
            }
            _ => {
                let types = self.g.types().clone();
                let classifiers: Vec<NodeId> = live
                    .iter()
                    .copied()
                    .filter(|n| {
                        let t = types.node_name(self.g.node_type(*n).unwrap());
                        t == "Class" || t == "Interface"
                    })
                    .collect();
                let classes: Vec<NodeId> = classifiers
                    .iter()
                    .copied()
                    .filter(|n| types.node_name(self.g.node_type(*n).unwrap()) == "Class")
                    .collect();
                let (Some(&a), Some(&b)) = (classes.choose(&mut self.rng), classifiers.choose(&mut self.rng)) else {
                    return;
                };
                if a == b {
                    return;
                }
                if types.node_name(self.g.node_type(b).unwrap()) == "Interface" {
                    self.implements(c, a, b);
                } else {
                    self.extends(c, a, b);
                }
            }
        }
    }
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticWorkload {
    let types = Arc::new(type_graph());
    let clusters = (spec.base_nodes / spec.cluster_size.max(1)).max(1);
    let mut gen = Gen {
        g: Graph::new(types),
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        clusters: vec![Vec::new(); clusters],
        lists: Vec::new(),
        removed: Vec::new(),
        out: Vec::new(),
        record: false,
        counter: 0,
    };
    for c in 0..clusters {
        let list = gen.node(c, "Class", Some("List"));
        gen.lists.push(list);
        let name = format!("Hub{c}");
        gen.node(c, "Class", Some(&name));
    }

    let kinds = [
        spec.generalizations,
        spec.bounded_associations,
        spec.unbounded_associations,
        spec.composites,
        spec.interface_implementations,
        spec.extract_interfaces,
    ];
    let mut order: Vec<usize> = kinds
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k, n))
        .collect();
    // spread occurrences across clusters deterministically
    for i in (1..order.len()).rev() {
        let j = gen.rng.random_range(0..=i);
        order.swap(i, j);
    }
    for (i, kind) in order.into_iter().enumerate() {
        gen.occurrence(i % clusters, kind);
    }
    let extra = (spec.edge_density * spec.base_nodes as f64 / 10.0) as usize;
    while gen.g.count_layer(NodeLayer::Base) + extra < spec.base_nodes {
        let c = gen.rng.random_range(0..clusters);
        gen.decoy(c);
    }
    for _ in 0..extra {
        // decoy-only edges: fields and methods of hubs never complete a pattern
        let c = gen.rng.random_range(0..clusters);
        let hub = gen.clusters[c][1];
        let name = gen.fresh_name("m");
        let m = gen.node(c, "Method", Some(&name));
        gen.edge("methods", hub, m);
    }
    gen.g.take_events();

    let mut truth = BTreeMap::new();
    truth.insert("Generalization".to_owned(), spec.generalizations + spec.composites);
    truth.insert("MultiLevelGeneralization".to_owned(), 0);
    truth.insert(
        "BoundedAssociation".to_owned(),
        spec.bounded_associations + spec.composites,
    );
    truth.insert("UnboundedAssociation".to_owned(), spec.unbounded_associations);
    truth.insert("Composite".to_owned(), spec.composites);
    truth.insert(
        "InterfaceImplementation".to_owned(),
        spec.interface_implementations,
    );
    truth.insert("ExtractInterface".to_owned(), spec.extract_interfaces);

    let graph = gen.g.clone();
    gen.record = true;
    let mut script = Vec::new();
    let mut total = 0;
    while total < spec.script_length {
        for _ in 0..spec.batch_edits.max(1) {
            gen.edit();
        }
        let events = std::mem::take(&mut gen.out);
        gen.g.take_events();
        if events.is_empty() {
            continue;
        }
        total += events.len();
        script.push(EventBatch::new(events));
    }

    SyntheticWorkload {
        spec: spec.clone(),
        graph,
        script,
        truth,
    }
}
