use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use graphview::event::{ChangeEvent, EventBatch};
use graphview::example::*;
use graphview::graph::{Graph, NodeId};
use graphview::io::*;
use graphview::maintenance::Engine;
use graphview::modes::execute_update;
use graphview::network::build_network;
use graphview::synthetic::{generate, SyntheticSpec};
use graphview::view::canonical_view;

fn running_example() -> (Engine, Graph) {
    let types = Arc::new(type_graph());
    let engine = Engine::new(build_network(&composite_network(), types.clone()).unwrap()).unwrap();
    let mut g = Graph::new(types);
    composite_fixture(&mut g).unwrap();
    engine.maintain(&mut g).unwrap();
    (engine, g)
}

#[test]
fn maintained_snapshot_round_trips() {
    let (engine, mut g) = running_example();
    // a unicode name and an obsolete marker left behind by Update
    let c = add_class(&mut g, "Größe_类").unwrap();
    let base = g.nodes().find(|n| g.types().node_name(n.ty) == "Class").unwrap().id;
    add_extends(&mut g, c, base).unwrap();
    engine.maintain(&mut g).unwrap();
    let gen = engine.network().module("Generalization").unwrap();
    let marker = g
        .nodes()
        .filter(|n| n.origin.as_deref() == Some("Generalization"))
        .map(|n| n.id)
        .max()
        .unwrap();
    let e = g.out_edges(c).find(|e| g.types().edge_name(e.ty) == "extends").unwrap().id;
    g.remove_edge(e).unwrap();
    execute_update(gen, &mut g, &BTreeSet::from([marker])).unwrap();
    assert!(g.node(marker).unwrap().obsolete);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.json");
    save_snapshot(&g, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("Größe_类"));
    let back = load_snapshot(&path, g.types().clone()).unwrap();
    assert_eq!(Snapshot::of(&back), Snapshot::of(&g));
    assert_eq!(back.next_id(), g.next_id());
    assert_eq!(back.next_view_id(), g.next_view_id());

    // both copies finish maintenance identically
    let mut a = g.clone();
    let mut b = back;
    a.take_events();
    b.take_events();
    engine.batch_maintain(&mut a).unwrap();
    engine.batch_maintain(&mut b).unwrap();
    assert_eq!(canonical_view(&a, engine.network()), canonical_view(&b, engine.network()));
    assert_eq!(Snapshot::of(&a), Snapshot::of(&b));
}

#[test]
fn empty_snapshot_file_is_an_empty_graph() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.json");
    std::fs::write(&path, "\n").unwrap();
    let g = load_snapshot(&path, Arc::new(type_graph())).unwrap();
    assert_eq!(g.node_count(), 0);
}

#[test]
fn scripts_round_trip() {
    let w = generate(&SyntheticSpec::scaled(120, 7));
    let text = script_to_string(&w.script);
    let back = parse_script(Path::new("script.jsonl"), &text).unwrap();
    assert_eq!(back, w.script);

    let single = vec![EventBatch::new(vec![ChangeEvent::set_attr(NodeId(3), "name", "ü\"x")])];
    let text = script_to_string(&single);
    assert_eq!(parse_script(Path::new("s"), &text).unwrap(), single);
}

#[test]
fn workspace_round_trips() {
    let w = generate(&SyntheticSpec::scaled(120, 3));
    let types = w.graph.types().clone();
    let ws = Workspace {
        types: types.clone(),
        graph: w.graph.clone(),
        network: build_network(&full_network(), types).unwrap(),
        script: w.script.clone(),
    };
    let dir = tempfile::tempdir().unwrap();
    save_workspace(&ws, dir.path()).unwrap();
    let back = load_workspace(dir.path()).unwrap();
    assert_eq!(
        serde_json::to_value(back.types.to_def()).unwrap(),
        serde_json::to_value(ws.types.to_def()).unwrap()
    );
    assert_eq!(back.network.to_def(), ws.network.to_def());
    assert_eq!(Snapshot::of(&back.graph), Snapshot::of(&ws.graph));
    assert_eq!(back.script, ws.script);

    // the manifest file itself is accepted too
    let again = load_workspace(&dir.path().join("workspace.json")).unwrap();
    assert_eq!(again.script.len(), ws.script.len());
}

#[test]
fn malformed_inputs_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.json");
    std::fs::write(&path, "{\"nodes\": [").unwrap();
    let err = load_snapshot(&path, Arc::new(type_graph())).unwrap_err();
    assert!(err.is_parse(), "{err}");

    std::fs::write(&path, "{\"nodes\": [{\"id\": 1, \"type\": \"Nope\"}]}").unwrap();
    let err = load_snapshot(&path, Arc::new(type_graph())).unwrap_err();
    assert!(!err.is_parse(), "{err}");
}

fn count(g: &Graph, ty: &str) -> usize {
    g.nodes().filter(|n| g.types().node_name(n.ty) == ty).count()
}

#[test]
fn shipped_running_example_loads() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../workspaces/running-example");
    let ws = load_workspace(&dir).unwrap();
    assert_eq!(ws.network.modules().len(), 4);
    let engine = Engine::new(ws.network.clone()).unwrap();
    let mut g = ws.graph.clone();
    engine.batch_maintain(&mut g).unwrap();
    assert_eq!(count(&g, "Generalization"), 1);
    assert_eq!(count(&g, "BoundedAssociation"), 1);
    assert_eq!(count(&g, "Composite"), 1);
    assert!(!ws.script.is_empty());
    for batch in &ws.script {
        for ev in &batch.events {
            g.apply_change(ev.clone()).unwrap();
        }
        engine.maintain(&mut g).unwrap();
    }
    assert_eq!(count(&g, "Composite"), 0);
    assert_eq!(count(&g, "Generalization"), 1);
}
