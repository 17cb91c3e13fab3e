//! Emulation of a Rete network with a network of binary view modules.
//!
//! A module with more than two inputs is split into a left-associative chain
//! of join modules. Join `k` of module `M` produces markers of the fresh view
//! type `M__join<k>`, whose role edges `M__join<k>__<var>` bind every
//! positive variable joined so far. The last module of the chain keeps the
//! name, marker type and marking of `M`, so top-level markers are unchanged.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::network::{build_network, ConnectorDef, ModuleDef, Network, NetworkDef, NetworkError, Wire};
use crate::pattern::{MarkingDef, NegatedDef, PatternDef, PatternEdgeDef, PatternNodeDef, RoleDef};
use crate::types::{EdgeTypeDef, NodeTypeDef};

const PREV: &str = "__prev";

pub fn join_name(module: &str, k: usize) -> String {
    format!("{module}__join{k}")
}

fn role_name(join: &str, var: &str) -> String {
    format!("{join}__{var}")
}

/// True for marker types introduced by [`emulate_rete`].
pub fn is_join_type(name: &str) -> bool {
    name.rsplit_once("__join")
        .is_some_and(|(_, k)| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()))
}

/// Splits every module with more than two inputs into binary joins. Fails
/// on recursive networks.
pub fn emulate_rete(network: &Network) -> Result<Network, NetworkError> {
    if !network.cycles().is_empty() {
        return Err(NetworkError::Recursive);
    }
    let def = network.to_def();
    let mut out = NetworkDef {
        patterns: BTreeMap::new(),
        modules: Vec::new(),
        wires: Vec::new(),
        cycles: Vec::new(),
    };
    let mut new_nodes = Vec::new();
    let mut new_edges = Vec::new();
    // (module, connector) -> module that now owns the connector
    let mut moved: BTreeMap<(String, String), String> = BTreeMap::new();

    for m in &def.modules {
        let pattern = &def.patterns[&m.pattern];
        let connectors = m.inputs.clone().unwrap_or_default();
        let steps = plan_joins(pattern);
        if steps.len() <= 1 {
            out.patterns.insert(m.pattern.clone(), pattern.clone());
            out.modules.push(m.clone());
            continue;
        }
        let negatives = pattern
            .nodes
            .iter()
            .filter(|n| n.input.is_some() && pattern.negated.nodes.contains(&n.var))
            .count();
        if negatives > 1 {
            return Err(NetworkError::Rete(m.name.clone()));
        }

        let ty_of: BTreeMap<&str, &str> = pattern
            .nodes
            .iter()
            .map(|n| (n.var.as_str(), n.ty.as_str()))
            .collect();
        let mut done_vars: Vec<&str> = Vec::new();
        let mut done_edges = BTreeSet::new();
        for (k, added) in steps.iter().enumerate() {
            let last = k + 1 == steps.len();
            let name = if last { m.name.clone() } else { join_name(&m.name, k + 1) };
            let prev = (k > 0).then(|| join_name(&m.name, k));
            let mut nodes = Vec::new();
            let mut edges = Vec::new();
            let mut negated = NegatedDef::default();
            let mut inputs = Vec::new();
            if let Some(prev) = &prev {
                nodes.push(PatternNodeDef {
                    var: PREV.into(),
                    ty: prev.clone(),
                    input: Some(PREV.into()),
                    predicates: Vec::new(),
                });
                inputs.push(ConnectorDef {
                    name: PREV.into(),
                    ty: prev.clone(),
                });
                out.wires.push(Wire {
                    from: prev.clone(),
                    to: name.clone(),
                    input: PREV.into(),
                });
                for v in &done_vars {
                    nodes.push(PatternNodeDef {
                        var: (*v).to_owned(),
                        ty: ty_of[v].to_owned(),
                        input: None,
                        predicates: Vec::new(),
                    });
                    edges.push(PatternEdgeDef {
                        src: PREV.into(),
                        dst: (*v).to_owned(),
                        ty: role_name(prev, v),
                    });
                }
            }
            let added_set: BTreeSet<&str> = added.iter().map(String::as_str).collect();
            for n in pattern.nodes.iter().filter(|n| added_set.contains(n.var.as_str())) {
                nodes.push(n.clone());
                if pattern.negated.nodes.contains(&n.var) {
                    negated.nodes.push(n.var.clone());
                }
                if let Some(c) = &n.input {
                    let cd = connectors
                        .iter()
                        .find(|d| &d.name == c)
                        .cloned()
                        .unwrap_or_else(|| ConnectorDef {
                            name: c.clone(),
                            ty: n.ty.clone(),
                        });
                    inputs.push(cd);
                    moved.insert((m.name.clone(), c.clone()), name.clone());
                }
            }
            let present: BTreeSet<&str> = done_vars.iter().copied().chain(added_set.iter().copied()).collect();
            for (i, e) in pattern.edges.iter().enumerate() {
                let inside = present.contains(e.src.as_str()) && present.contains(e.dst.as_str());
                if inside && !done_edges.contains(&i) && (last || !pattern.negated.edges.contains(&i)) {
                    if pattern.negated.edges.contains(&i) {
                        negated.edges.push(edges.len());
                    }
                    edges.push(e.clone());
                    done_edges.insert(i);
                }
            }

            let marking = if last {
                let mut mk = pattern.marking.clone();
                if prev.is_some() {
                    mk.scopes.push(PREV.into());
                }
                mk
            } else {
                let positive: Vec<&str> = present
                    .iter()
                    .copied()
                    .filter(|v| !pattern.negated.nodes.iter().any(|n| n == v))
                    .collect();
                new_nodes.push(NodeTypeDef::view(&name));
                for v in &positive {
                    new_edges.push(EdgeTypeDef::role(&role_name(&name, v), &name, ty_of[v]));
                }
                MarkingDef {
                    marker: name.clone(),
                    roles: positive
                        .iter()
                        .map(|v| RoleDef {
                            edge: role_name(&name, v),
                            var: (*v).to_owned(),
                            key: true,
                        })
                        .collect(),
                    scopes: prev.iter().map(|_| PREV.to_owned()).collect(),
                }
            };
            let pattern_name = if last { m.pattern.clone() } else { name.clone() };
            out.patterns.insert(
                pattern_name.clone(),
                PatternDef {
                    nodes,
                    edges,
                    negated,
                    marking,
                },
            );
            out.modules.push(ModuleDef {
                name: name.clone(),
                pattern: pattern_name,
                inputs: Some(inputs),
                output: None,
            });
            done_vars.extend(
                added
                    .iter()
                    .map(String::as_str)
                    .filter(|v| !pattern.negated.nodes.iter().any(|n| n == v)),
            );
        }
    }

    for w in &def.wires {
        let to = moved
            .get(&(w.to.clone(), w.input.clone()))
            .cloned()
            .unwrap_or_else(|| w.to.clone());
        out.wires.push(Wire {
            from: w.from.clone(),
            to,
            input: w.input.clone(),
        });
    }

    let types = network
        .types()
        .extended(new_nodes, new_edges)
        .map_err(|e| NetworkError::Lowering(e.to_string()))?;
    build_network(&out, Arc::new(types))
}

/// Variables added by each binary step, in order. A single step means the
/// module already has at most two inputs.
fn plan_joins(p: &PatternDef) -> Vec<Vec<String>> {
    let negated: BTreeSet<&str> = p.negated.nodes.iter().map(String::as_str).collect();
    let positive_inputs: Vec<&str> = p
        .nodes
        .iter()
        .filter(|n| n.input.is_some() && !negated.contains(n.var.as_str()))
        .map(|n| n.var.as_str())
        .collect();
    let negative_inputs: Vec<&str> = p
        .nodes
        .iter()
        .filter(|n| n.input.is_some() && negated.contains(n.var.as_str()))
        .map(|n| n.var.as_str())
        .collect();
    let all: Vec<String> = p.nodes.iter().map(|n| n.var.clone()).collect();
    if positive_inputs.len() + negative_inputs.len() <= 2 {
        return vec![all];
    }
    let inputs: BTreeSet<&str> = positive_inputs.iter().copied().collect();
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (i, e) in p.edges.iter().enumerate() {
        let neg = p.negated.edges.contains(&i)
            || negated.contains(e.src.as_str())
            || negated.contains(e.dst.as_str());
        if !neg {
            adj.entry(&e.src).or_default().push(&e.dst);
            adj.entry(&e.dst).or_default().push(&e.src);
        }
    }

    let mut prefix: BTreeSet<&str> = BTreeSet::from([positive_inputs[0]]);
    let mut remaining: Vec<&str> = positive_inputs[1..].to_vec();
    let mut steps: Vec<Vec<String>> = Vec::new();
    let mut pending = vec![positive_inputs[0].to_owned()];
    while !remaining.is_empty() {
        // first remaining input reachable from the prefix through free vars
        let (i, path) = remaining
            .iter()
            .enumerate()
            .find_map(|(i, &c)| free_path(&adj, &inputs, &prefix, c).map(|p| (i, p)))
            .expect("positive part is connected");
        let c = remaining.remove(i);
        for v in path {
            prefix.insert(v);
            pending.push(v.to_owned());
        }
        prefix.insert(c);
        pending.push(c.to_owned());
        steps.push(std::mem::take(&mut pending));
    }
    if !negative_inputs.is_empty() {
        steps.push(negative_inputs.iter().map(|s| s.to_string()).collect());
    }
    // the last step also takes the remaining free and negated variables
    let placed: BTreeSet<String> = steps.iter().flatten().cloned().collect();
    let last = steps.last_mut().expect("at least one join");
    last.extend(all.into_iter().filter(|v| !placed.contains(v)));
    steps
}

/// Free variables on a shortest path from `to` back to the prefix, nearest
/// the prefix first. `None` if the path must cross another input.
fn free_path<'a>(
    adj: &BTreeMap<&'a str, Vec<&'a str>>,
    inputs: &BTreeSet<&str>,
    prefix: &BTreeSet<&'a str>,
    to: &'a str,
) -> Option<Vec<&'a str>> {
    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
    let mut queue = VecDeque::from([to]);
    let mut seen = BTreeSet::from([to]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(v).into_iter().flatten() {
            if prefix.contains(w) {
                let mut path = Vec::new();
                let mut cur = v;
                while cur != to {
                    path.push(cur);
                    cur = parent[cur];
                }
                return Some(path);
            }
            if !inputs.contains(w) && seen.insert(w) {
                parent.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    None
}
