use std::collections::BTreeSet;
use std::sync::Arc;

use graphview::example::*;
use graphview::graph::{Graph, NodeId};
use graphview::maintenance::reach::all_candidates;
use graphview::modes::{execute_create, execute_delete, execute_update, recheck, ModeError, Recheck};
use graphview::network::{build_network, Network};
use graphview::types::EdgeTypeId;

fn network() -> Network {
    build_network(&composite_network(), Arc::new(type_graph())).unwrap()
}

fn create(module: &graphview::network::ViewModule, g: &mut Graph) -> Vec<NodeId> {
    let cands = all_candidates(g, module);
    execute_create(module, g, &cands).unwrap()
}

fn scopes(g: &Graph, marker: NodeId) -> BTreeSet<NodeId> {
    g.marking_edges(marker)
        .filter(|e| e.ty == EdgeTypeId::SCOPE)
        .map(|e| e.target)
        .collect()
}

#[test]
fn create_marks_each_match_once() {
    let net = network();
    let gen = net.module("Generalization").unwrap();
    let mut g = Graph::new(net.types().clone());
    let a = add_class(&mut g, "A").unwrap();
    let b = add_class(&mut g, "B").unwrap();
    let c = add_class(&mut g, "C").unwrap();
    add_extends(&mut g, b, a).unwrap();
    add_extends(&mut g, c, a).unwrap();
    // a second path for the same (sub, super) pair
    add_extends(&mut g, c, a).unwrap();

    let created = create(gen, &mut g);
    assert_eq!(created.len(), 2);
    let again = create(gen, &mut g);
    assert!(again.is_empty());
    for m in created {
        assert_eq!(g.node(m).unwrap().origin.as_deref(), Some("Generalization"));
        assert_eq!(g.marked_nodes(m).len(), 4);
    }
    g.check_consistency().unwrap();
}

#[test]
fn update_classifies_valid_repaired_and_obsolete() {
    let net = network();
    let gen = net.module("Generalization").unwrap();
    let mut g = Graph::new(net.types().clone());
    let a = add_class(&mut g, "A").unwrap();
    let b = add_class(&mut g, "B").unwrap();
    let c = add_class(&mut g, "C").unwrap();
    add_extends(&mut g, b, a).unwrap();
    let (ncr1, cr1) = add_extends(&mut g, c, a).unwrap();
    let created = create(gen, &mut g);
    let (m_b, m_c) = (created[0], created[1]);
    assert_eq!(scopes(&g, m_c), BTreeSet::from([ncr1, cr1]));

    // give C a second path, then break the first one
    let (ncr2, cr2) = add_extends(&mut g, c, a).unwrap();
    let e = g.find_edge(ncr1, "classifierReferences", cr1).unwrap();
    g.remove_edge(e).unwrap();
    // and detach B entirely
    let e = g.out_edges(b).find(|e| g.types().edge_name(e.ty) == "extends").unwrap().id;
    g.remove_edge(e).unwrap();

    let out = execute_update(gen, &mut g, &BTreeSet::from([m_b, m_c])).unwrap();
    assert_eq!(out.repaired, BTreeSet::from([m_c]));
    assert_eq!(out.obsolete, BTreeSet::from([m_b]));
    assert!(out.valid.is_empty());
    assert_eq!(scopes(&g, m_c), BTreeSet::from([ncr2, cr2]));

    let stale = g.node(m_b).unwrap();
    assert!(stale.obsolete);
    assert_eq!(g.marking_edges(m_b).count(), 0);
    assert_eq!(stale.former_marks.len(), 4);

    assert_eq!(recheck(gen, &mut g, m_c).unwrap(), Recheck::Valid);
}

#[test]
fn delete_returns_formerly_marked_nodes() {
    let net = network();
    let gen = net.module("Generalization").unwrap();
    let mut g = Graph::new(net.types().clone());
    let a = add_class(&mut g, "A").unwrap();
    let b = add_class(&mut g, "B").unwrap();
    let (ncr, cr) = add_extends(&mut g, b, a).unwrap();
    let m = create(gen, &mut g)[0];

    assert_eq!(
        execute_delete(gen, &mut g, &BTreeSet::from([m])),
        Err(ModeError::NotObsolete(m))
    );

    g.delete_node(cr).unwrap();
    let out = execute_update(gen, &mut g, &BTreeSet::from([m])).unwrap();
    assert_eq!(out.obsolete, BTreeSet::from([m]));
    let marked = execute_delete(gen, &mut g, &out.obsolete).unwrap();
    assert_eq!(marked, BTreeSet::from([a, b, ncr, cr]));
    assert!(!g.contains_node(m));
    g.check_consistency().unwrap();
}

#[test]
fn modes_reject_foreign_markers() {
    let net = network();
    let gen = net.module("Generalization").unwrap();
    let composite = net.module("Composite").unwrap();
    let mut g = Graph::new(net.types().clone());
    let a = add_class(&mut g, "A").unwrap();
    let b = add_class(&mut g, "B").unwrap();
    add_extends(&mut g, b, a).unwrap();
    let m = create(gen, &mut g)[0];

    assert!(matches!(
        recheck(composite, &mut g, m),
        Err(ModeError::NotOwned { .. })
    ));
    assert!(matches!(
        execute_update(composite, &mut g, &BTreeSet::from([a])),
        Err(ModeError::NotOwned { .. })
    ));
}
