//! Lowering of nested graph conditions to network fragments.
//!
//! * An atomic condition becomes one module over base types.
//! * A conjunction becomes a consumer module with one input per conjunct.
//! * A disjunction wires all of its producers into the same input.
//! * A negation bound to a connector becomes a producer plus a consumer
//!   whose pattern negates the producer's marker (complex NAC).
//! * A negated atomic condition without a connector shares variables with
//!   the consumer by name. When each of its other nodes is adjacent to a
//!   shared variable and it forms a single part, it is embedded in the
//!   consumer's pattern (simple NAC). Otherwise it is split off as above,
//!   with the consumer's negated marker joined to the shared variables
//!   through the condition's key roles.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::network::{ModuleDef, NetworkDef, NetworkError, Wire};
use crate::pattern::{PatternDef, PatternEdgeDef, PatternNodeDef};
use crate::types::{NodeLayer, TypeGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ConditionAst {
    Atomic {
        name: String,
        pattern: PatternDef,
    },
    /// `pattern` is the consumer's pattern. Each entry of `inputs` feeds the
    /// connector of the same name, or is an unbound negated atomic
    /// condition.
    And {
        name: String,
        pattern: PatternDef,
        #[serde(default)]
        inputs: BTreeMap<String, ConditionAst>,
    },
    Or {
        children: Vec<ConditionAst>,
    },
    Not {
        child: Box<ConditionAst>,
    },
}

impl ConditionAst {
    pub fn atomic(name: &str, pattern: PatternDef) -> Self {
        ConditionAst::Atomic {
            name: name.to_owned(),
            pattern,
        }
    }

    pub fn and(name: &str, pattern: PatternDef, inputs: Vec<(&str, ConditionAst)>) -> Self {
        ConditionAst::And {
            name: name.to_owned(),
            pattern,
            inputs: inputs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
        }
    }

    pub fn or(children: Vec<ConditionAst>) -> Self {
        ConditionAst::Or { children }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: ConditionAst) -> Self {
        ConditionAst::Not { child: Box::new(child) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub network: NetworkDef,
    /// Modules producing the markers of the top condition.
    pub outputs: Vec<String>,
}

pub fn lower_condition(ast: &ConditionAst, types: &TypeGraph) -> Result<Fragment, NetworkError> {
    let mut l = Lowerer {
        types,
        out: NetworkDef::default(),
    };
    let outputs = l.lower(ast)?;
    Ok(Fragment {
        network: l.out,
        outputs,
    })
}

fn err(msg: impl Into<String>) -> NetworkError {
    NetworkError::Lowering(msg.into())
}

struct Lowerer<'a> {
    types: &'a TypeGraph,
    out: NetworkDef,
}

impl Lowerer<'_> {
    fn lower(&mut self, ast: &ConditionAst) -> Result<Vec<String>, NetworkError> {
        match ast {
            ConditionAst::Atomic { name, pattern } => {
                for n in &pattern.nodes {
                    let ty = self.types.node_type_or_err(&n.ty)?;
                    if self.types.node_layer(ty) != NodeLayer::Base {
                        return Err(err(format!("atomic condition `{name}` refers to view type `{}`", n.ty)));
                    }
                }
                self.add_module(name, pattern.clone())?;
                Ok(vec![name.clone()])
            }
            ConditionAst::And { name, pattern, inputs } => {
                let mut pattern = pattern.clone();
                let mut wires = Vec::new();
                for (conn, child) in inputs {
                    let bound = pattern
                        .nodes
                        .iter()
                        .find(|n| n.input.as_deref() == Some(conn.as_str()))
                        .map(|n| pattern.negated.nodes.contains(&n.var));
                    let producers = match (child, bound) {
                        (ConditionAst::Not { child }, Some(true)) => self.lower(child)?,
                        (ConditionAst::Not { child }, None) => match child.as_ref() {
                            ConditionAst::Atomic { pattern: c, .. } => {
                                let at = |m: String| err(format!("`{name}`.{conn}: {m}"));
                                if directly_attached(&pattern, c).map_err(at)? {
                                    embed(&mut pattern, c);
                                    continue;
                                }
                                attach_marker(&mut pattern, conn, c).map_err(at)?;
                                self.lower(child)?
                            }
                            _ => return Err(err(format!("`{name}`.{conn}: negated condition needs a connector"))),
                        },
                        (ConditionAst::Not { .. }, Some(false)) => {
                            return Err(err(format!("`{name}`.{conn}: negation bound to a positive node")))
                        }
                        (_, Some(false)) => self.lower(child)?,
                        (_, Some(true)) => {
                            return Err(err(format!("`{name}`.{conn}: positive condition bound to a negated node")))
                        }
                        (_, None) => {
                            return Err(NetworkError::UnknownConnector {
                                module: name.clone(),
                                connector: conn.clone(),
                            })
                        }
                    };
                    wires.extend(producers.into_iter().map(|from| Wire {
                        from,
                        to: name.clone(),
                        input: conn.clone(),
                    }));
                }
                self.add_module(name, pattern)?;
                self.out.wires.extend(wires);
                Ok(vec![name.clone()])
            }
            ConditionAst::Or { children } => {
                let mut outputs = Vec::new();
                for c in children {
                    outputs.extend(self.lower(c)?);
                }
                self.common_view_supertype(&outputs)?;
                Ok(outputs)
            }
            ConditionAst::Not { .. } => Err(err("negation outside of a conjunction")),
        }
    }

    fn add_module(&mut self, name: &str, pattern: PatternDef) -> Result<(), NetworkError> {
        match self.out.patterns.get(name) {
            Some(p) if *p == pattern => return Ok(()),
            Some(_) => return Err(NetworkError::DuplicateModule(name.to_owned())),
            None => {}
        }
        self.out.patterns.insert(name.to_owned(), pattern);
        self.out.modules.push(ModuleDef {
            name: name.to_owned(),
            pattern: name.to_owned(),
            inputs: None,
            output: None,
        });
        Ok(())
    }

    fn common_view_supertype(&self, modules: &[String]) -> Result<(), NetworkError> {
        let markers = modules
            .iter()
            .map(|m| self.types.node_type_or_err(&self.out.patterns[m].marking.marker))
            .collect::<Result<Vec<_>, _>>()?;
        let Some(&first) = markers.first() else {
            return Err(err("empty disjunction"));
        };
        let mut cur = Some(first);
        while let Some(t) = cur {
            if self.types.node_layer(t) == NodeLayer::View && markers.iter().all(|&m| self.types.conforms(m, t)) {
                return Ok(());
            }
            cur = self.types.supertype(t);
        }
        Err(err(format!("disjunction of {modules:?} has no common view supertype")))
    }
}

fn positive_vars(p: &PatternDef) -> BTreeSet<&str> {
    p.nodes
        .iter()
        .map(|n| n.var.as_str())
        .filter(|v| !p.negated.nodes.iter().any(|n| n == v))
        .collect()
}

/// Whether `child` can become one simple NAC of `target`: every node not
/// shared with the consumer is adjacent to a shared one, and the negated
/// elements form one part. Separate parts would be read as separate NACs.
fn directly_attached(target: &PatternDef, child: &PatternDef) -> Result<bool, String> {
    if !child.negated.nodes.is_empty() || !child.negated.edges.is_empty() {
        return Err("nested negation is not supported".into());
    }
    let positive = positive_vars(target);
    let shared: BTreeSet<&str> = child
        .nodes
        .iter()
        .map(|n| n.var.as_str())
        .filter(|v| positive.contains(v))
        .collect();
    if shared.is_empty() {
        return Err("negated condition shares no variable with the consumer".into());
    }
    if let Some(n) = child
        .nodes
        .iter()
        .find(|n| !shared.contains(n.var.as_str()) && target.nodes.iter().any(|t| t.var == n.var))
    {
        return Err(format!("variable `{}` is negated in the consumer already", n.var));
    }
    let fresh: BTreeSet<&str> = child
        .nodes
        .iter()
        .map(|n| n.var.as_str())
        .filter(|v| !shared.contains(v))
        .collect();
    let attached = fresh.iter().all(|v| {
        child.edges.iter().any(|e| {
            (e.src == *v && shared.contains(e.dst.as_str())) || (e.dst == *v && shared.contains(e.src.as_str()))
        })
    });
    let edges_between_shared = child
        .edges
        .iter()
        .filter(|e| shared.contains(e.src.as_str()) && shared.contains(e.dst.as_str()))
        .count();
    let parts = components(&fresh, child) + edges_between_shared;
    Ok(attached && parts == 1)
}

/// Connected components of `vars` over the edges of `p` among them.
fn components(vars: &BTreeSet<&str>, p: &PatternDef) -> usize {
    let mut seen = BTreeSet::new();
    let mut count = 0;
    for &start in vars {
        if !seen.insert(start) {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for e in &p.edges {
                let next = if e.src == v {
                    e.dst.as_str()
                } else if e.dst == v {
                    e.src.as_str()
                } else {
                    continue;
                };
                if vars.contains(next) && seen.insert(next) {
                    stack.push(next);
                }
            }
        }
    }
    count
}

/// Adds the nodes and edges of `child` to `target` as one simple NAC,
/// identifying variables of the same name.
fn embed(target: &mut PatternDef, child: &PatternDef) {
    let positive: BTreeSet<String> = positive_vars(target).into_iter().map(str::to_owned).collect();
    for n in child.nodes.iter().filter(|n| !positive.contains(&n.var)) {
        let mut n = n.clone();
        n.input = None;
        target.negated.nodes.push(n.var.clone());
        target.nodes.push(n);
    }
    for e in &child.edges {
        if positive.contains(&e.src) && positive.contains(&e.dst) {
            target.negated.edges.push(target.edges.len());
        }
        target.edges.push(e.clone());
    }
}

/// Adds a negated marker node of `child`'s marker type, bound to connector
/// `conn` and joined to the shared variables through key roles.
fn attach_marker(target: &mut PatternDef, conn: &str, child: &PatternDef) -> Result<(), String> {
    let positive: BTreeSet<String> = positive_vars(target).into_iter().map(str::to_owned).collect();
    if target.nodes.iter().any(|n| n.var == conn) {
        return Err(format!("variable `{conn}` already used by the consumer"));
    }
    let shared: Vec<&str> = child
        .nodes
        .iter()
        .map(|n| n.var.as_str())
        .filter(|v| positive.contains(*v))
        .collect();
    target.nodes.push(PatternNodeDef {
        var: conn.to_owned(),
        ty: child.marking.marker.clone(),
        input: Some(conn.to_owned()),
        predicates: Vec::new(),
    });
    target.negated.nodes.push(conn.to_owned());
    for v in shared {
        let role = child
            .marking
            .roles
            .iter()
            .find(|r| r.key && r.var == v)
            .ok_or_else(|| format!("shared variable `{v}` is not a key role of the negated condition"))?;
        target.edges.push(PatternEdgeDef {
            src: conn.to_owned(),
            dst: v.to_owned(),
            ty: role.edge.clone(),
        });
    }
    Ok(())
}
