//! Execution order of a network's modules.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use petgraph::algo::{is_cyclic_directed, tarjan_scc};
use petgraph::graph::DiGraph;

use crate::network::{Network, NetworkError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanStep {
    Module(String),
    /// Modules of a recursion cycle in execution order. The cycle is re-run
    /// until the fix-point module, which always runs last, creates nothing.
    Cycle {
        modules: Vec<String>,
        fixpoint: String,
    },
}

impl PlanStep {
    pub fn modules(&self) -> Vec<&str> {
        match self {
            PlanStep::Module(m) => vec![m.as_str()],
            PlanStep::Cycle { modules, .. } => modules.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub steps: Vec<PlanStep>,
    /// How many hops beyond a modified node suspicious-node detection must
    /// look, because a simple NAC can be violated by a change to an unmarked
    /// negated node.
    pub nac_halo: usize,
}

impl ExecutionPlan {
    /// Module names in schedule order.
    pub fn order(&self) -> Vec<&str> {
        self.steps.iter().flat_map(|s| s.modules()).collect()
    }

    pub fn position(&self, module: &str) -> Option<usize> {
        self.order().iter().position(|m| *m == module)
    }
}

impl fmt::Display for ExecutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                PlanStep::Module(m) => writeln!(f, "{:>3}. {m}", i + 1)?,
                PlanStep::Cycle { modules, fixpoint } => writeln!(
                    f,
                    "{:>3}. cycle [{}] fix-point {fixpoint}",
                    i + 1,
                    modules.join(" -> ")
                )?,
            }
        }
        Ok(())
    }
}

pub fn plan_execution(network: &Network) -> Result<ExecutionPlan, NetworkError> {
    let g = network.wire_graph();
    let names: Vec<&str> = network.modules().iter().map(|m| m.name.as_str()).collect();
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; names.len()];
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(sccs.len());
    for (ci, scc) in sccs.iter().enumerate() {
        let mut ms: Vec<usize> = scc.iter().map(|&n| g[n]).collect();
        ms.sort_by_key(|&m| names[m]);
        for &m in &ms {
            comp[m] = ci;
        }
        members.push(ms);
    }

    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); members.len()];
    let mut indeg = vec![0usize; members.len()];
    let mut self_loop = vec![false; members.len()];
    for e in g.edge_indices() {
        let (a, b) = g.edge_endpoints(e).unwrap();
        let (ca, cb) = (comp[g[a]], comp[g[b]]);
        if ca == cb {
            self_loop[ca] = true;
        } else if succ[ca].insert(cb) {
            indeg[cb] += 1;
        }
    }

    let key = |c: usize| names[members[c][0]];
    let mut ready: BinaryHeap<Reverse<(&str, usize)>> = (0..members.len())
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((key(c), c)))
        .collect();
    let mut steps = Vec::with_capacity(members.len());
    while let Some(Reverse((_, c))) = ready.pop() {
        if self_loop[c] {
            steps.push(cycle_step(network, &members[c], &names)?);
        } else {
            steps.push(PlanStep::Module(names[members[c][0]].to_owned()));
        }
        for &d in &succ[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.push(Reverse((key(d), d)));
            }
        }
    }

    // a change on a negated node only reaches a marker through the
    // negated nodes between it and the positive part
    let nac_halo = network
        .modules()
        .iter()
        .flat_map(|m| {
            let p = &m.pattern;
            p.nacs.iter().filter_map(move |g| {
                let sensitive = g.nodes.iter().any(|&n| !p.nodes[n].predicates.is_empty())
                    || g.edges.iter().any(|&e| {
                        p.nodes[p.edges[e].source].negated && p.nodes[p.edges[e].target].negated
                    });
                sensitive.then_some(g.nodes.len())
            })
        })
        .max()
        .unwrap_or(0);
    Ok(ExecutionPlan { steps, nac_halo })
}

fn cycle_step(network: &Network, members: &[usize], names: &[&str]) -> Result<PlanStep, NetworkError> {
    let inside: BTreeSet<&str> = members.iter().map(|&m| names[m]).collect();
    let external = |m: &str| network.dependents(m).iter().any(|d| !inside.contains(d));
    let any_external = inside.iter().any(|m| external(m));
    let in_cycle_edges: Vec<(&str, &str)> = network
        .wires()
        .iter()
        .filter(|w| inside.contains(w.from.as_str()) && inside.contains(w.to.as_str()))
        .map(|w| (w.from.as_str(), w.to.as_str()))
        .collect();

    let without = |fix: &str| {
        let mut g = DiGraph::<&str, ()>::new();
        let idx: BTreeMap<&str, _> = inside.iter().map(|&m| (m, g.add_node(m))).collect();
        let mut seen = BTreeSet::new();
        for &(a, b) in &in_cycle_edges {
            if a != fix && seen.insert((a, b)) {
                g.add_edge(idx[a], idx[b], ());
            }
        }
        g
    };

    let fixpoint = inside
        .iter()
        .copied()
        .filter(|m| !any_external || external(m))
        .find(|m| !is_cyclic_directed(&without(m)))
        .ok_or_else(|| NetworkError::NoFixpoint(inside.iter().map(|s| s.to_string()).collect()))?;

    let g = without(fixpoint);
    let mut indeg: BTreeMap<&str, usize> = inside.iter().map(|&m| (m, 0)).collect();
    for e in g.edge_indices() {
        let (_, b) = g.edge_endpoints(e).unwrap();
        *indeg.get_mut(g[b]).unwrap() += 1;
    }
    let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&m, _)| m).collect();
    let mut order = Vec::with_capacity(inside.len());
    while let Some(m) = ready.pop_first() {
        order.push(m.to_owned());
        let n = g.node_indices().find(|&n| g[n] == m).unwrap();
        for s in g.neighbors(n) {
            let d = indeg.get_mut(g[s]).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(g[s]);
            }
        }
    }
    debug_assert_eq!(order.last().map(String::as_str), Some(fixpoint));
    Ok(PlanStep::Cycle {
        modules: order,
        fixpoint: fixpoint.to_owned(),
    })
}
