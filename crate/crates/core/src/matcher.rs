//! Injective subgraph matching with simple negative application conditions.
//!
//! The search binds one variable at a time, starting from the most
//! restricted variable and growing along pattern edges in either direction.
//! Candidate nodes at each step are visited in ascending id order.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Graph, NodeId};
use crate::pattern::{Pattern, PatternError};

/// Candidate nodes per input connector name.
pub type Candidates = BTreeMap<String, BTreeSet<NodeId>>;

/// A binding of pattern variables to graph nodes. Negated variables are
/// always unbound.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Match {
    pub nodes: Vec<Option<NodeId>>,
}

impl Match {
    pub fn get(&self, var: usize) -> Option<NodeId> {
        self.nodes.get(var).copied().flatten()
    }

    /// Variable name to node.
    pub fn named(&self, pattern: &Pattern) -> BTreeMap<String, NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.map(|n| (pattern.nodes[i].var.clone(), n)))
            .collect()
    }
}

#[derive(Debug)]
struct Step {
    var: usize,
    // (edge index, true when `var` is the edge target)
    link: Option<(usize, bool)>,
    checks: Vec<usize>,
}

struct Search<'a> {
    graph: &'a Graph,
    pattern: &'a Pattern,
    allowed: Vec<Option<&'a BTreeSet<NodeId>>>,
    steps: Vec<Step>,
}

impl<'a> Search<'a> {
    /// Plans the binding order for `todo` given already bound variables,
    /// using only the listed pattern edges.
    fn new(
        graph: &'a Graph,
        pattern: &'a Pattern,
        allowed: Vec<Option<&'a BTreeSet<NodeId>>>,
        bound: &[usize],
        todo: &[usize],
        usable: &[usize],
    ) -> Search<'a> {
        let mut is_bound = vec![false; pattern.nodes.len()];
        for &b in bound {
            is_bound[b] = true;
        }
        let mut remaining: Vec<usize> = todo.iter().copied().filter(|&v| !is_bound[v]).collect();
        let restriction = |v: usize| allowed[v].map_or(usize::MAX, |s| s.len());
        let mut steps = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let attached = |v: usize| {
                usable.iter().find_map(|&ei| {
                    let e = &pattern.edges[ei];
                    if e.target == v && e.source != v && is_bound[e.source] {
                        Some((ei, true))
                    } else if e.source == v && e.target != v && is_bound[e.target] {
                        Some((ei, false))
                    } else {
                        None
                    }
                })
            };
            let pick = remaining
                .iter()
                .enumerate()
                .filter_map(|(pos, &v)| attached(v).map(|l| (pos, v, Some(l))))
                .min_by_key(|&(_, v, _)| (restriction(v), v))
                .or_else(|| {
                    remaining
                        .iter()
                        .enumerate()
                        .min_by_key(|&(_, &v)| {
                            (
                                restriction(v),
                                graph.nodes_conforming(pattern.nodes[v].ty).len(),
                                v,
                            )
                        })
                        .map(|(pos, &v)| (pos, v, None))
                });
            let (pos, var, link) = pick.expect("remaining is not empty");
            remaining.swap_remove(pos);
            is_bound[var] = true;
            let checks = usable
                .iter()
                .copied()
                .filter(|&ei| {
                    let e = &pattern.edges[ei];
                    (e.source == var || e.target == var)
                        && is_bound[e.source]
                        && is_bound[e.target]
                        && link.is_none_or(|(l, _)| l != ei)
                })
                .collect();
            steps.push(Step { var, link, checks });
        }
        Search {
            graph,
            pattern,
            allowed,
            steps,
        }
    }

    fn candidates(&self, step: &Step, assign: &[Option<NodeId>]) -> Vec<NodeId> {
        match step.link {
            Some((ei, var_is_target)) => {
                let e = &self.pattern.edges[ei];
                let mut out: Vec<NodeId> = if var_is_target {
                    let from = assign[e.source].expect("bound");
                    self.graph
                        .out_edges(from)
                        .filter(|x| x.ty == e.ty)
                        .map(|x| x.target)
                        .collect()
                } else {
                    let to = assign[e.target].expect("bound");
                    self.graph
                        .in_edges(to)
                        .filter(|x| x.ty == e.ty)
                        .map(|x| x.source)
                        .collect()
                };
                out.sort_unstable();
                out.dedup();
                out
            }
            None => match self.allowed[step.var] {
                Some(set) => set.iter().copied().collect(),
                None => self.graph.nodes_conforming(self.pattern.nodes[step.var].ty),
            },
        }
    }

    fn accepts(&self, step: &Step, node: NodeId, assign: &[Option<NodeId>]) -> bool {
        if assign.contains(&Some(node)) {
            return false;
        }
        if let Some(set) = self.allowed[step.var] {
            if !set.contains(&node) {
                return false;
            }
        }
        if !self.pattern.node_fits(self.graph, step.var, node) {
            return false;
        }
        step.checks.iter().all(|&ei| {
            let e = &self.pattern.edges[ei];
            let at = |v: usize| if v == step.var { node } else { assign[v].expect("bound") };
            self.graph.has_edge(at(e.source), e.ty, at(e.target))
        })
    }

    /// Calls `visit` for every complete binding; stops when it returns false.
    /// Returns false if stopped early.
    fn run(
        &self,
        depth: usize,
        assign: &mut Vec<Option<NodeId>>,
        visit: &mut dyn FnMut(&[Option<NodeId>]) -> bool,
    ) -> bool {
        let Some(step) = self.steps.get(depth) else {
            return visit(assign);
        };
        for node in self.candidates(step, assign) {
            if !self.accepts(step, node, assign) {
                continue;
            }
            assign[step.var] = Some(node);
            let go_on = self.run(depth + 1, assign, visit);
            assign[step.var] = None;
            if !go_on {
                return false;
            }
        }
        true
    }
}

fn positive_edges(pattern: &Pattern) -> Vec<usize> {
    (0..pattern.edges.len())
        .filter(|&i| !pattern.edges[i].negated)
        .collect()
}

/// True when some negated element embeds into the graph around `assign`.
pub fn nac_violated(graph: &Graph, pattern: &Pattern, assign: &[Option<NodeId>]) -> bool {
    let bound: Vec<usize> = pattern.positive_vars().collect();
    pattern.nacs.iter().any(|group| {
        if group.nodes.is_empty() {
            // a negated edge between two positive nodes
            return group.edges.iter().all(|&ei| {
                let e = &pattern.edges[ei];
                graph.has_edge(
                    assign[e.source].expect("bound"),
                    e.ty,
                    assign[e.target].expect("bound"),
                )
            });
        }
        let search = Search::new(
            graph,
            pattern,
            vec![None; pattern.nodes.len()],
            &bound,
            &group.nodes,
            &group.edges,
        );
        let mut scratch = assign.to_vec();
        !search.run(0, &mut scratch, &mut |_| false)
    })
}

fn search_positive<'a>(
    graph: &'a Graph,
    pattern: &'a Pattern,
    allowed: Vec<Option<&'a BTreeSet<NodeId>>>,
    bound: &[usize],
) -> Search<'a> {
    let todo: Vec<usize> = pattern.positive_vars().collect();
    Search::new(graph, pattern, allowed, bound, &todo, &positive_edges(pattern))
}

/// Every match whose input-bound variables are drawn from the candidate set
/// of their connector. A connector without an entry has no candidates.
pub fn find_matches(
    graph: &Graph,
    pattern: &Pattern,
    candidates: &Candidates,
) -> Result<Vec<Match>, PatternError> {
    pattern.check_types(graph.types())?;
    let empty = BTreeSet::new();
    let mut allowed: Vec<Option<&BTreeSet<NodeId>>> = vec![None; pattern.nodes.len()];
    for v in pattern.input_vars() {
        let name = pattern.nodes[v].input.as_deref().expect("input var");
        allowed[v] = Some(candidates.get(name).unwrap_or(&empty));
        if pattern.nodes[v].negated {
            allowed[v] = None;
        }
    }
    if allowed.iter().any(|a| a.is_some_and(|s| s.is_empty())) {
        return Ok(Vec::new());
    }
    let search = search_positive(graph, pattern, allowed, &[]);
    let mut out = Vec::new();
    let mut assign = vec![None; pattern.nodes.len()];
    search.run(0, &mut assign, &mut |a| {
        if !nac_violated(graph, pattern, a) {
            out.push(Match { nodes: a.to_vec() });
        }
        true
    });
    Ok(out)
}

/// Every match in the whole graph.
pub fn find_all(graph: &Graph, pattern: &Pattern) -> Result<Vec<Match>, PatternError> {
    pattern.check_types(graph.types())?;
    let search = search_positive(graph, pattern, vec![None; pattern.nodes.len()], &[]);
    let mut out = Vec::new();
    let mut assign = vec![None; pattern.nodes.len()];
    search.run(0, &mut assign, &mut |a| {
        if !nac_violated(graph, pattern, a) {
            out.push(Match { nodes: a.to_vec() });
        }
        true
    });
    Ok(out)
}

/// First match extending the fixed bindings, with optional per-variable
/// restrictions for the remaining variables.
pub fn extend_match(
    graph: &Graph,
    pattern: &Pattern,
    fixed: &[(usize, NodeId)],
    restrict: &[(usize, &BTreeSet<NodeId>)],
) -> Option<Match> {
    let mut assign = vec![None; pattern.nodes.len()];
    for &(v, n) in fixed {
        if !pattern.node_fits(graph, v, n) || assign.contains(&Some(n)) {
            return None;
        }
        assign[v] = Some(n);
    }
    let bound: Vec<usize> = fixed.iter().map(|f| f.0).collect();
    // edges among fixed variables are not covered by any step
    let fixed_ok = positive_edges(pattern).iter().all(|&ei| {
        let e = &pattern.edges[ei];
        match (assign[e.source], assign[e.target]) {
            (Some(s), Some(t)) => graph.has_edge(s, e.ty, t),
            _ => true,
        }
    });
    if !fixed_ok {
        return None;
    }
    let mut allowed = vec![None; pattern.nodes.len()];
    for &(v, s) in restrict {
        allowed[v] = Some(s);
    }
    let search = search_positive(graph, pattern, allowed, &bound);
    let mut found = None;
    search.run(0, &mut assign, &mut |a| {
        if nac_violated(graph, pattern, a) {
            true
        } else {
            found = Some(Match { nodes: a.to_vec() });
            false
        }
    });
    found
}
