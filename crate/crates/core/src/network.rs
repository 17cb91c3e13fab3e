//! View modules, connectors and their wiring into a network.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern::{Pattern, PatternDef, PatternError};
use crate::types::{NodeLayer, NodeTypeId, TypeGraph, TypeGraphError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error(transparent)]
    Type(#[from] TypeGraphError),
    #[error("module `{module}`: {source}")]
    Pattern {
        module: String,
        source: PatternError,
    },
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("duplicate module `{0}`")]
    DuplicateModule(String),
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("module `{module}` has no input connector `{connector}`")]
    UnknownConnector { module: String, connector: String },
    #[error("module `{module}`: connector `{connector}` does not fit its pattern node")]
    ConnectorMismatch { module: String, connector: String },
    #[error("module `{0}`: output type differs from the pattern's marker type")]
    OutputMismatch(String),
    #[error("view type `{ty}` is produced by both `{first}` and `{second}`")]
    DuplicateProducer {
        ty: String,
        first: String,
        second: String,
    },
    #[error("wire {producer} -> {consumer}.{input}: output type does not conform to the input")]
    IncompatibleWire {
        producer: String,
        consumer: String,
        input: String,
    },
    #[error("input `{module}.{input}` has a view type but no producer")]
    UnfedInput { module: String, input: String },
    #[error("undeclared cycle through modules {0:?}")]
    UndeclaredCycle(Vec<String>),
    #[error("declared cycle {0:?} is not a cycle of wires")]
    BadCycle(Vec<String>),
    #[error("cycle {0:?} has no eligible fix-point module")]
    NoFixpoint(Vec<String>),
    #[error("network contains recursion cycles")]
    Recursive,
    #[error("{0}")]
    Lowering(String),
    #[error("cannot emulate module `{0}` with binary joins: more than one negative input")]
    Rete(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connector {
    pub module: String,
    pub name: String,
    pub direction: Direction,
    pub required_type: NodeTypeId,
    /// Bound to a negated pattern node (complex NAC input).
    pub negative: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewModule {
    pub name: String,
    pub pattern_name: String,
    pub pattern: Arc<Pattern>,
    pub inputs: Vec<Connector>,
    pub output: Connector,
}

impl ViewModule {
    pub fn marker_type(&self) -> NodeTypeId {
        self.pattern.marking.marker_type
    }

    pub fn input(&self, name: &str) -> Option<&Connector> {
        self.inputs.iter().find(|c| c.name == name)
    }

    /// Has a negated view-layer node, i.e. consumes a complex NAC.
    pub fn has_complex_nac(&self) -> bool {
        self.pattern.has_view_nac()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Wire {
    pub from: String,
    pub to: String,
    pub input: String,
}

// ----------------------------------------------------------------------
// Definitions
// ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectorDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDef {
    pub name: String,
    pub pattern: String,
    /// Defaults to one connector per input-bound pattern node, typed like
    /// the node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<ConnectorDef>>,
    /// Defaults to the pattern's marker type.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDef {
    #[serde(default)]
    pub patterns: BTreeMap<String, PatternDef>,
    pub modules: Vec<ModuleDef>,
    #[serde(default)]
    pub wires: Vec<Wire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cycles: Vec<Vec<String>>,
}

// ----------------------------------------------------------------------
// Network
// ----------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Network {
    types: Arc<TypeGraph>,
    modules: Vec<ViewModule>,
    index: HashMap<String, usize>,
    wires: Vec<Wire>,
    cycles: Vec<Vec<String>>,
    patterns: BTreeMap<String, PatternDef>,
}

impl Network {
    pub fn types(&self) -> &Arc<TypeGraph> {
        &self.types
    }

    pub fn modules(&self) -> &[ViewModule] {
        &self.modules
    }

    pub fn module(&self, name: &str) -> Option<&ViewModule> {
        self.index.get(name).map(|&i| &self.modules[i])
    }

    pub fn module_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn cycles(&self) -> &[Vec<String>] {
        &self.cycles
    }

    pub fn producers(&self, module: &str, input: &str) -> Vec<&str> {
        self.wires
            .iter()
            .filter(|w| w.to == module && w.input == input)
            .map(|w| w.from.as_str())
            .collect()
    }

    /// Modules consuming the output of `module`, ascending by name.
    pub fn dependents(&self, module: &str) -> BTreeSet<&str> {
        self.wires
            .iter()
            .filter(|w| w.from == module)
            .map(|w| w.to.as_str())
            .collect()
    }

    pub fn is_terminal(&self, module: &str) -> bool {
        self.dependents(module).is_empty()
    }

    /// Module producing markers of exactly this type.
    pub fn producer_of(&self, ty: NodeTypeId) -> Option<&ViewModule> {
        self.modules.iter().find(|m| m.marker_type() == ty)
    }

    pub fn to_def(&self) -> NetworkDef {
        NetworkDef {
            patterns: self.patterns.clone(),
            modules: self
                .modules
                .iter()
                .map(|m| ModuleDef {
                    name: m.name.clone(),
                    pattern: m.pattern_name.clone(),
                    inputs: Some(
                        m.inputs
                            .iter()
                            .map(|c| ConnectorDef {
                                name: c.name.clone(),
                                ty: self.types.node_name(c.required_type).to_owned(),
                            })
                            .collect(),
                    ),
                    output: Some(self.types.node_name(m.output.required_type).to_owned()),
                })
                .collect(),
            wires: self.wires.clone(),
            cycles: self.cycles.clone(),
        }
    }

    /// Wire graph over module indexes, in declaration order.
    pub(crate) fn wire_graph(&self) -> DiGraph<usize, ()> {
        let mut g = DiGraph::new();
        let ids: Vec<NodeIndex> = (0..self.modules.len()).map(|i| g.add_node(i)).collect();
        let mut seen = BTreeSet::new();
        for w in &self.wires {
            let (a, b) = (self.index[&w.from], self.index[&w.to]);
            if seen.insert((a, b)) {
                g.add_edge(ids[a], ids[b], ());
            }
        }
        g
    }

    /// Pairs (producer, consumer) lying on declared cycles.
    pub(crate) fn cycle_edges(&self) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        for c in &self.cycles {
            for i in 0..c.len() {
                out.insert((c[i].clone(), c[(i + 1) % c.len()].clone()));
            }
        }
        out
    }
}

pub fn build_network(def: &NetworkDef, types: Arc<TypeGraph>) -> Result<Network, NetworkError> {
    let mut modules = Vec::with_capacity(def.modules.len());
    let mut index = HashMap::new();
    let mut produced: HashMap<NodeTypeId, String> = HashMap::new();
    let mut resolved: HashMap<&str, Arc<Pattern>> = HashMap::new();

    for m in &def.modules {
        if index.insert(m.name.clone(), modules.len()).is_some() {
            return Err(NetworkError::DuplicateModule(m.name.clone()));
        }
        let pattern = match resolved.get(m.pattern.as_str()) {
            Some(p) => p.clone(),
            None => {
                let pdef = def
                    .patterns
                    .get(&m.pattern)
                    .ok_or_else(|| NetworkError::UnknownPattern(m.pattern.clone()))?;
                let p = Arc::new(Pattern::resolve(pdef, &types).map_err(|source| {
                    NetworkError::Pattern {
                        module: m.name.clone(),
                        source,
                    }
                })?);
                resolved.insert(&m.pattern, p.clone());
                p
            }
        };
        let marker = pattern.marking.marker_type;
        if let Some(out) = &m.output {
            if types.node_type_or_err(out)? != marker {
                return Err(NetworkError::OutputMismatch(m.name.clone()));
            }
        }
        if let Some(first) = produced.insert(marker, m.name.clone()) {
            return Err(NetworkError::DuplicateProducer {
                ty: types.node_name(marker).to_owned(),
                first,
                second: m.name.clone(),
            });
        }
        let inputs = resolve_inputs(m, &pattern, &types)?;
        modules.push(ViewModule {
            name: m.name.clone(),
            pattern_name: m.pattern.clone(),
            pattern,
            inputs,
            output: Connector {
                module: m.name.clone(),
                name: "out".into(),
                direction: Direction::Output,
                required_type: marker,
                negative: false,
            },
        });
    }

    let mut wires = def.wires.clone();
    wires.sort();
    wires.dedup();
    for w in &wires {
        let producer = index
            .get(&w.from)
            .map(|&i| &modules[i])
            .ok_or_else(|| NetworkError::UnknownModule(w.from.clone()))?;
        let consumer = index
            .get(&w.to)
            .map(|&i| &modules[i])
            .ok_or_else(|| NetworkError::UnknownModule(w.to.clone()))?;
        let input = consumer
            .input(&w.input)
            .ok_or_else(|| NetworkError::UnknownConnector {
                module: w.to.clone(),
                connector: w.input.clone(),
            })?;
        if !types.conforms(producer.marker_type(), input.required_type) {
            return Err(NetworkError::IncompatibleWire {
                producer: w.from.clone(),
                consumer: w.to.clone(),
                input: w.input.clone(),
            });
        }
    }
    for m in &modules {
        for c in &m.inputs {
            let fed = wires.iter().any(|w| w.to == m.name && w.input == c.name);
            if !fed && types.node_layer(c.required_type) == NodeLayer::View {
                return Err(NetworkError::UnfedInput {
                    module: m.name.clone(),
                    input: c.name.clone(),
                });
            }
        }
    }

    let network = Network {
        types,
        modules,
        index,
        wires,
        cycles: def.cycles.clone(),
        patterns: def.patterns.clone(),
    };
    check_cycles(&network)?;
    Ok(network)
}

fn resolve_inputs(
    m: &ModuleDef,
    pattern: &Pattern,
    types: &TypeGraph,
) -> Result<Vec<Connector>, NetworkError> {
    let bound: Vec<usize> = pattern.input_vars().collect();
    let connector = |name: &str, ty: NodeTypeId, negative: bool| Connector {
        module: m.name.clone(),
        name: name.to_owned(),
        direction: Direction::Input,
        required_type: ty,
        negative,
    };
    let Some(defs) = &m.inputs else {
        return Ok(bound
            .iter()
            .map(|&v| {
                let n = &pattern.nodes[v];
                connector(n.input.as_deref().unwrap(), n.ty, n.negated)
            })
            .collect());
    };
    let mut out = Vec::with_capacity(defs.len());
    for d in defs {
        let ty = types.node_type_or_err(&d.ty)?;
        let var = bound
            .iter()
            .copied()
            .find(|&v| pattern.nodes[v].input.as_deref() == Some(d.name.as_str()))
            .ok_or_else(|| NetworkError::ConnectorMismatch {
                module: m.name.clone(),
                connector: d.name.clone(),
            })?;
        let vt = pattern.nodes[var].ty;
        if !types.conforms(ty, vt) && !types.conforms(vt, ty) {
            return Err(NetworkError::ConnectorMismatch {
                module: m.name.clone(),
                connector: d.name.clone(),
            });
        }
        out.push(connector(&d.name, ty, pattern.nodes[var].negated));
    }
    if out.len() != bound.len() {
        let missing = bound
            .iter()
            .map(|&v| pattern.nodes[v].input.clone().unwrap())
            .find(|name| !out.iter().any(|c| &c.name == name))
            .unwrap_or_default();
        return Err(NetworkError::ConnectorMismatch {
            module: m.name.clone(),
            connector: missing,
        });
    }
    Ok(out)
}

fn check_cycles(net: &Network) -> Result<(), NetworkError> {
    let declared = net.cycle_edges();
    for c in net.cycles() {
        if c.is_empty() {
            return Err(NetworkError::BadCycle(c.clone()));
        }
        for i in 0..c.len() {
            let (a, b) = (&c[i], &c[(i + 1) % c.len()]);
            if net.module(a).is_none() {
                return Err(NetworkError::UnknownModule(a.clone()));
            }
            if !net.wires().iter().any(|w| &w.from == a && &w.to == b) {
                return Err(NetworkError::BadCycle(c.clone()));
            }
        }
    }
    let g = net.wire_graph();
    let mut component = vec![usize::MAX; net.modules().len()];
    for (ci, scc) in tarjan_scc(&g).into_iter().enumerate() {
        for n in scc {
            component[g[n]] = ci;
        }
    }
    for w in net.wires() {
        let (a, b) = (net.index[&w.from], net.index[&w.to]);
        if component[a] == component[b] && !declared.contains(&(w.from.clone(), w.to.clone())) {
            let mut members: Vec<String> = (0..component.len())
                .filter(|&i| component[i] == component[a])
                .map(|i| net.modules[i].name.clone())
                .collect();
            members.sort();
            return Err(NetworkError::UndeclaredCycle(members));
        }
    }
    Ok(())
}
