//! Execution plans of random networks respect every wire.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use graphview::network::{build_network, ModuleDef, NetworkDef, Wire};
use graphview::pattern::{MarkingDef, PatternDef, PatternEdgeDef, PatternNodeDef, RoleDef};
use graphview::plan::{plan_execution, PlanStep};
use graphview::types::{EdgeTypeDef, NodeTypeDef, TypeGraph};
use proptest::prelude::*;

const MAX: usize = 9;

fn types() -> Arc<TypeGraph> {
    let mut nodes = vec![
        NodeTypeDef::base("X"),
        NodeTypeDef::view("V").abstract_(),
    ];
    for i in 0..MAX {
        nodes.push(NodeTypeDef::view(&format!("V{i}")).extends("V"));
    }
    Arc::new(TypeGraph::new(nodes, vec![EdgeTypeDef::role("of", "V", "X")]).unwrap())
}

/// Module `i` marks one base node and consumes `inputs` view nodes on it.
fn pattern(i: usize, inputs: usize) -> PatternDef {
    let mut nodes = vec![PatternNodeDef {
        var: "x".into(),
        ty: "X".into(),
        input: None,
        predicates: Vec::new(),
    }];
    let mut edges = Vec::new();
    for j in 0..inputs {
        nodes.push(PatternNodeDef {
            var: format!("v{j}"),
            ty: "V".into(),
            input: Some(format!("in{j}")),
            predicates: Vec::new(),
        });
        edges.push(PatternEdgeDef {
            src: format!("v{j}"),
            dst: "x".into(),
            ty: "of".into(),
        });
    }
    PatternDef {
        nodes,
        edges,
        negated: Default::default(),
        marking: MarkingDef {
            marker: format!("V{i}"),
            roles: vec![RoleDef {
                edge: "of".into(),
                var: "x".into(),
                key: true,
            }],
            scopes: (0..inputs).map(|j| format!("v{j}")).collect(),
        },
    }
}

#[derive(Clone, Debug)]
struct Shape {
    /// Topological rank to module name suffix; names do not follow ranks.
    names: Vec<String>,
    /// Per rank: producers (by rank) for each input.
    feeds: Vec<Vec<usize>>,
    self_loops: BTreeSet<usize>,
    /// Ranks (r, r + 1) forming a two-module cycle.
    pairs: BTreeSet<usize>,
}

fn shape() -> impl Strategy<Value = Shape> {
    (2usize..=MAX).prop_flat_map(|n| {
        let names = Just((0..n).map(|i| format!("m{i}")).collect::<Vec<_>>()).prop_shuffle();
        let feeds = (0..n)
            .map(|r| {
                if r == 0 {
                    Just(Vec::new()).boxed()
                } else {
                    prop::collection::vec(0..r, 0..=2).boxed()
                }
            })
            .collect::<Vec<_>>();
        let loops = prop::collection::btree_set(0..n, 0..=2);
        let pairs = prop::collection::btree_set(0..n - 1, 0..=2);
        (names, feeds, loops, pairs).prop_map(|(names, feeds, self_loops, pairs)| {
            // keep pairs disjoint from each other and from self loops
            let mut used = BTreeSet::new();
            let mut kept = BTreeSet::new();
            for p in pairs {
                if !used.contains(&p) && !used.contains(&(p + 1)) {
                    used.insert(p);
                    used.insert(p + 1);
                    kept.insert(p);
                }
            }
            let self_loops = self_loops.into_iter().filter(|r| !used.contains(r)).collect();
            Shape {
                names,
                feeds,
                self_loops,
                pairs: kept,
            }
        })
    })
}

fn network_def(s: &Shape, reverse_decl: bool) -> NetworkDef {
    let n = s.names.len();
    // extra inputs for cycle wires
    let mut feeds = s.feeds.clone();
    for &r in &s.self_loops {
        feeds[r].push(r);
    }
    for &r in &s.pairs {
        feeds[r].push(r + 1);
        feeds[r + 1].push(r);
    }
    let mut def = NetworkDef::default();
    let mut order: Vec<usize> = (0..n).collect();
    if reverse_decl {
        order.reverse();
    }
    for r in order {
        let name = &s.names[r];
        def.patterns.insert(name.clone(), pattern(r, feeds[r].len()));
        def.modules.push(ModuleDef {
            name: name.clone(),
            pattern: name.clone(),
            inputs: None,
            output: None,
        });
        for (j, &p) in feeds[r].iter().enumerate() {
            def.wires.push(Wire {
                from: s.names[p].clone(),
                to: name.clone(),
                input: format!("in{j}"),
            });
        }
    }
    for &r in &s.self_loops {
        def.cycles.push(vec![s.names[r].clone()]);
    }
    for &r in &s.pairs {
        def.cycles.push(vec![s.names[r].clone(), s.names[r + 1].clone()]);
    }
    def
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn plan_is_a_valid_schedule(s in shape()) {
        let types = types();
        let net = build_network(&network_def(&s, false), types.clone()).unwrap();
        let plan = plan_execution(&net).unwrap();

        let order = plan.order();
        let unique: BTreeSet<&str> = order.iter().copied().collect();
        prop_assert_eq!(order.len(), s.names.len());
        prop_assert_eq!(unique.len(), s.names.len());

        let mut step_of = BTreeMap::new();
        for (i, step) in plan.steps.iter().enumerate() {
            for m in step.modules() {
                step_of.insert(m.to_owned(), i);
            }
            if let PlanStep::Cycle { modules, fixpoint } = step {
                prop_assert_eq!(modules.last(), Some(fixpoint));
            }
        }
        for w in net.wires() {
            let (a, b) = (step_of[&w.from], step_of[&w.to]);
            if a == b {
                prop_assert!(matches!(plan.steps[a], PlanStep::Cycle { .. }), "wire {:?} inside a plain step", w);
            } else {
                prop_assert!(a < b, "wire {:?} runs backwards", w);
            }
        }
        // every declared cycle is exactly one cycle step
        let cycle_steps = plan.steps.iter().filter(|s| matches!(s, PlanStep::Cycle { .. })).count();
        prop_assert_eq!(cycle_steps, s.self_loops.len() + s.pairs.len());

        // declaration order does not matter
        let again = build_network(&network_def(&s, true), types).unwrap();
        prop_assert_eq!(plan_execution(&again).unwrap(), plan);
    }
}
