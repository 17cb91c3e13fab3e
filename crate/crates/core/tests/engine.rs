use std::collections::BTreeSet;
use std::sync::Arc;

use graphview::example::*;
use graphview::graph::Graph;
use graphview::maintenance::Engine;
use graphview::network::{build_network, NetworkDef};
use graphview::view::{canonical_view, diff};

fn engine(def: NetworkDef) -> Engine {
    let net = build_network(&def, Arc::new(type_graph())).unwrap();
    Engine::new(net).unwrap().with_trace(true)
}

fn count(g: &Graph, ty: &str) -> usize {
    let t = g.types().node_type(ty).unwrap();
    g.nodes_conforming(t).len()
}

fn assert_matches_batch(e: &Engine, g: &Graph) {
    let mut fresh = g.base_layer();
    e.batch_maintain(&mut fresh).unwrap();
    let a = canonical_view(g, e.network());
    let b = canonical_view(&fresh, e.network());
    assert!(a == b, "incremental differs from batch: {:#?}", diff(&a, &b));
    g.check_consistency().unwrap();
}

#[test]
fn running_example_from_scratch() {
    let e = engine(composite_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    composite_fixture(&mut g).unwrap();
    let r = e.maintain(&mut g).unwrap();
    assert_eq!(count(&g, "Generalization"), 1);
    assert_eq!(count(&g, "BoundedAssociation"), 1);
    assert_eq!(count(&g, "Composite"), 1);
    assert_eq!(r.created, 3);
    assert_eq!(r.iterations, 1);
    assert_matches_batch(&e, &g);
}

#[test]
fn removing_an_edge_cascades_to_dependents() {
    let e = engine(composite_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    let f = composite_fixture(&mut g).unwrap();
    e.maintain(&mut g).unwrap();
    let ext = g
        .out_edges(f.composite)
        .find(|x| g.types().edge_name(x.ty) == "extends")
        .unwrap()
        .id;
    g.remove_edge(ext).unwrap();
    let r = e.maintain(&mut g).unwrap();
    assert_eq!(count(&g, "Generalization"), 0);
    assert_eq!(count(&g, "Composite"), 0);
    assert_eq!(count(&g, "BoundedAssociation"), 1);
    assert_eq!(r.deleted, 2);
    assert_matches_batch(&e, &g);
}

#[test]
fn deleting_a_scoped_node_removes_marker() {
    let e = engine(composite_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    let a = add_class(&mut g, "A").unwrap();
    let b = add_class(&mut g, "B").unwrap();
    let (ncr, _) = add_extends(&mut g, a, b).unwrap();
    e.maintain(&mut g).unwrap();
    assert_eq!(count(&g, "Generalization"), 1);
    g.delete_node(ncr).unwrap();
    e.maintain(&mut g).unwrap();
    assert_eq!(count(&g, "Generalization"), 0);
    assert_eq!(g.dangling_edge_count(), 0);
    assert_matches_batch(&e, &g);
}

#[test]
fn recursion_reaches_fix_point() {
    let e = engine(recursion_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    let chain = inheritance_chain(&mut g, 5).unwrap();
    let r = e.maintain(&mut g).unwrap();
    // all pairs at distance >= 2 in a chain of 5
    assert_eq!(count(&g, "MultiLevelGeneralization"), 6);
    assert!(r.cycle_passes <= 5, "{}", r.cycle_passes);
    assert_matches_batch(&e, &g);

    // cut the chain in the middle
    let (ncr, _) = (
        g.out_edges(chain[2])
            .find(|x| g.types().edge_name(x.ty) == "extends")
            .unwrap()
            .target,
        (),
    );
    g.delete_node(ncr).unwrap();
    e.maintain(&mut g).unwrap();
    // chains c0<-c1 and c2<-c3<-c4 remain
    assert_eq!(count(&g, "MultiLevelGeneralization"), 1);
    assert_matches_batch(&e, &g);
}

#[test]
fn complex_nac_needs_second_iteration() {
    let e = engine(interface_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    let a = add_class(&mut g, "A").unwrap();
    add_public_method(&mut g, a, "run").unwrap();
    add_public_method(&mut g, a, "stop").unwrap();
    e.maintain(&mut g).unwrap();
    assert_eq!(count(&g, "ExtractInterface"), 1);

    let i = add_interface(&mut g, "I").unwrap();
    add_implements(&mut g, a, i).unwrap();
    let r = e.maintain(&mut g).unwrap();
    assert_eq!(count(&g, "InterfaceImplementation"), 1);
    assert_eq!(count(&g, "ExtractInterface"), 0);
    assert!(r.iterations >= 2);
    assert_matches_batch(&e, &g);

    // dropping the interface brings the candidate back
    g.delete_node(i).unwrap();
    e.maintain(&mut g).unwrap();
    assert_eq!(count(&g, "ExtractInterface"), 1);
    assert_matches_batch(&e, &g);
}

#[test]
fn trace_follows_phase_order() {
    let e = engine(interface_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    let a = add_class(&mut g, "A").unwrap();
    add_public_method(&mut g, a, "run").unwrap();
    e.maintain(&mut g).unwrap();
    let i = add_interface(&mut g, "I").unwrap();
    add_implements(&mut g, a, i).unwrap();
    let r = e.maintain(&mut g).unwrap();
    let phases: Vec<&str> = r.trace.iter().map(|l| l.split(' ').next().unwrap()).collect();
    let rank = |p: &str| match p {
        "iteration" => 0,
        "events" => 1,
        "update" => 2,
        "delete" => 3,
        "create" | "cycle" => 4,
        _ => panic!("{p}"),
    };
    for w in phases.windows(2) {
        if w[1] != "iteration" {
            assert!(rank(w[0]) <= rank(w[1]), "{:?}", r.trace);
        }
    }
    let seen: BTreeSet<&str> = phases.iter().copied().collect();
    assert!(seen.contains("delete"));
}
