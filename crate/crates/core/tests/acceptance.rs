//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use graphview::bench::{self, Algorithm, BenchConfig, BenchRow, Topology, Workload};
use graphview::event::{ChangeEvent, EventBatch};
use graphview::example::*;
use graphview::graph::{Graph, NodeId};
use graphview::maintenance::{Engine, MaintenanceError, Report};
use graphview::network::{build_network, NetworkDef};
use graphview::synthetic::{generate, SyntheticSpec};
use graphview::view::{canonical_view, diff};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn engine(def: &NetworkDef) -> Engine {
    Engine::new(build_network(def, Arc::new(type_graph())).unwrap()).unwrap()
}

fn count(g: &Graph, ty: &str) -> usize {
    g.nodes().filter(|n| g.types().node_name(n.ty) == ty).count()
}

fn markers<'a>(g: &'a Graph, ty: &'a str) -> impl Iterator<Item = NodeId> + 'a {
    g.nodes().filter(move |n| g.types().node_name(n.ty) == ty).map(|n| n.id)
}

fn role(g: &Graph, marker: NodeId, name: &str) -> Option<NodeId> {
    g.marking_edges(marker)
        .find(|e| g.types().edge_name(e.ty) == name)
        .map(|e| e.target)
}

fn apply(g: &mut Graph, batch: &EventBatch) {
    for ev in &batch.events {
        g.apply_change(ev.clone()).unwrap();
    }
}

fn within(started: Instant, limit: Duration) -> Result<Duration, String> {
    let t = started.elapsed();
    if t < limit {
        Ok(t)
    } else {
        Err(format!("took {:.1} s, limit {} s", t.as_secs_f64(), limit.as_secs()))
    }
}

// ----------------------------------------------------------------------

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let e = engine(&composite_network());
    let (mut batches, mut events, mut markers_seen) = (0usize, 0usize, 0usize);
    for seed in 0..200u64 {
        let nodes = 100 + (seed as usize * 37) % 400;
        let mut spec = SyntheticSpec::scaled(nodes, seed);
        spec.script_length = 50 + (seed as usize % 30);
        spec.batch_edits = 1 + (seed as usize % 3);
        let w = generate(&spec);
        if w.graph.node_count() > 500 {
            return Err(format!("seed {seed}: {} base nodes", w.graph.node_count()));
        }
        let n_events: usize = w.script.iter().map(EventBatch::len).sum();
        if n_events < 50 {
            return Err(format!("seed {seed}: script has {n_events} events"));
        }
        events += n_events;
        let mut g = w.graph.clone();
        e.batch_maintain(&mut g).unwrap();
        for (i, batch) in w.script.iter().enumerate() {
            apply(&mut g, batch);
            e.maintain(&mut g).map_err(|err| format!("seed {seed} batch {i}: {err}"))?;
            let mut fresh = g.base_layer();
            e.batch_maintain(&mut fresh).unwrap();
            let a = canonical_view(&g, e.network());
            let b = canonical_view(&fresh, e.network());
            if a != b {
                return Err(format!("seed {seed} batch {i}: {:?}", diff(&a, &b)));
            }
            g.check_consistency().map_err(|m| format!("seed {seed} batch {i}: {m}"))?;
            batches += 1;
            markers_seen += a.values().sum::<usize>();
        }
    }
    let t = within(started, Duration::from_secs(300))?;
    Ok(format!(
        "200 scripts, {events} events in {batches} batches, {markers_seen} marker comparisons, 0 mismatches, {:.1} s",
        t.as_secs_f64()
    ))
}

fn running_example() -> Outcome {
    let started = Instant::now();
    let e = engine(&composite_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    let f = composite_fixture(&mut g).unwrap();
    e.maintain(&mut g).unwrap();
    let counts = (
        count(&g, "Generalization"),
        count(&g, "BoundedAssociation"),
        count(&g, "Composite"),
        count(&g, "UnboundedAssociation"),
    );
    if counts != (1, 1, 1, 0) {
        return Err(format!("marker counts (Gen, BA, Composite, UA) = {counts:?}"));
    }
    let gen = markers(&g, "Generalization").next().unwrap();
    let ba = markers(&g, "BoundedAssociation").next().unwrap();
    let comp = markers(&g, "Composite").next().unwrap();
    let expected = [
        (gen, "SubRole", f.composite),
        (gen, "SuperRole", f.component),
        (ba, "Reference", f.children),
        (ba, "Target", f.component),
        (comp, "CompositeRole", f.composite),
        (comp, "ComponentRole", f.component),
        (comp, "GeneralizationRole", gen),
        (comp, "AssociationRole", ba),
    ];
    for (m, r, want) in expected {
        if role(&g, m, r) != Some(want) {
            return Err(format!("{r} of marker {m} is {:?}, expected {want}", role(&g, m, r)));
        }
    }

    let dim = markers(&g, "ArrayDimension").next().unwrap();
    g.delete_node(dim).unwrap();
    e.maintain(&mut g).unwrap();
    let after = (
        count(&g, "Generalization"),
        count(&g, "BoundedAssociation"),
        count(&g, "Composite"),
    );
    if after != (1, 0, 0) {
        return Err(format!("after deleting the array dimension: {after:?}"));
    }
    if !g.contains_node(gen) {
        return Err("the Generalization marker was recreated instead of kept".into());
    }
    let t = within(started, Duration::from_secs(1))?;
    Ok(format!(
        "1 Gen, 1 BA, 1 Composite with expected roles; after deletion Gen kept, BA and Composite gone, {:.1} ms",
        t.as_secs_f64() * 1e3
    ))
}

fn recursion_fix_point() -> Outcome {
    let started = Instant::now();
    let e = engine(&recursion_network());
    let mut notes = Vec::new();
    for k in 2..=8usize {
        let mut g = Graph::new(Arc::new(type_graph()));
        let chain = inheritance_chain(&mut g, k).unwrap();
        let r = match e.maintain(&mut g) {
            Err(MaintenanceError::LoopLimit(l)) => return Err(format!("k={k}: loop limit {l} hit")),
            other => other.unwrap(),
        };
        // chain[j] extends chain[j - 1]; transitive pairs at distance >= 2
        let want: BTreeSet<(NodeId, NodeId)> = (0..k)
            .flat_map(|i| (i + 2..k).map(move |j| (i, j)))
            .map(|(i, j)| (chain[j], chain[i]))
            .collect();
        let got: BTreeSet<(NodeId, NodeId)> = markers(&g, "MultiLevelGeneralization")
            .map(|m| (role(&g, m, "SubRole").unwrap(), role(&g, m, "SuperRole").unwrap()))
            .collect();
        let n = count(&g, "MultiLevelGeneralization");
        if got != want || n != want.len() {
            return Err(format!("k={k}: {n} markers, pairs {got:?}, expected {want:?}"));
        }
        if r.cycle_passes > k {
            return Err(format!("k={k}: {} cycle passes", r.cycle_passes));
        }
        notes.push(format!("k={k}:{}/{}", want.len(), r.cycle_passes));
    }
    let t = within(started, Duration::from_secs(10))?;
    Ok(format!(
        "closure matched (k:markers/passes) {}, {:.1} ms",
        notes.join(" "),
        t.as_secs_f64() * 1e3
    ))
}

fn complex_nac() -> Outcome {
    let started = Instant::now();
    let e = engine(&interface_network());
    let mut g = Graph::new(Arc::new(type_graph()));
    let a = add_class(&mut g, "Service").unwrap();
    add_public_method(&mut g, a, "start").unwrap();
    e.maintain(&mut g).unwrap();
    if count(&g, "ExtractInterface") != 1 {
        return Err(format!("{} ExtractInterface markers initially", count(&g, "ExtractInterface")));
    }
    let i = add_interface(&mut g, "Startable").unwrap();
    add_implements(&mut g, a, i).unwrap();
    let r = e.maintain(&mut g).unwrap();
    if count(&g, "ExtractInterface") != 0 || count(&g, "InterfaceImplementation") != 1 {
        return Err("adding the implementation did not remove the marker".into());
    }
    if r.iterations < 2 {
        return Err(format!("removed in {} iteration(s)", r.iterations));
    }
    let iterations = r.iterations;
    g.delete_node(i).unwrap();
    e.maintain(&mut g).unwrap();
    if count(&g, "ExtractInterface") != 1 {
        return Err("removing the implementation did not restore the marker".into());
    }
    let t = within(started, Duration::from_secs(1))?;
    Ok(format!(
        "marker removed within one call ({iterations} iterations) and restored, {:.1} ms",
        t.as_secs_f64() * 1e3
    ))
}

fn gator_vs_rete() -> Outcome {
    let started = Instant::now();
    let types = Arc::new(type_graph());
    let mut workloads = Vec::new();
    {
        let mut g = Graph::new(types.clone());
        composite_fixture(&mut g).unwrap();
        g.take_events();
        let dim = markers(&g, "ArrayDimension").next().unwrap();
        workloads.push(Workload {
            id: "running-example".into(),
            graph: g,
            network: build_network(&composite_network(), types.clone()).unwrap(),
            script: vec![EventBatch::new(vec![ChangeEvent::delete_node(dim)])],
        });
    }
    for (id, seed, def) in [
        ("synthetic-composite", 11, composite_network()),
        ("synthetic-acyclic", 12, acyclic_network()),
    ] {
        let mut spec = SyntheticSpec::scaled(300, seed);
        spec.script_length = 80;
        let w = generate(&spec);
        workloads.push(Workload {
            id: id.into(),
            network: build_network(&def, w.graph.types().clone()).unwrap(),
            graph: w.graph,
            script: w.script,
        });
    }
    let config = BenchConfig {
        warmup: 1,
        reps: 5,
        ..BenchConfig::default()
    };
    let rows = bench::run_suite(&workloads, &config).map_err(|e| e.to_string())?;
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("gator_vs_rete.csv");
    bench::write_csv(&rows, std::fs::File::create(&path).unwrap()).map_err(|e| e.to_string())?;

    let find = |w: &str, a: Algorithm, t: Topology| -> &BenchRow {
        rows.iter()
            .find(|r| r.workload == w && r.algorithm == a && r.topology == t)
            .unwrap()
    };
    let mut summary = String::new();
    for w in &workloads {
        for a in [Algorithm::Incremental, Algorithm::Batch] {
            let (g, r) = (find(&w.id, a, Topology::Gator), find(&w.id, a, Topology::Rete));
            if r.markers_top != g.markers_top {
                return Err(format!("{}: top-level counts differ", w.id));
            }
            if r.markers_total < g.markers_total || r.markers_intermediate < g.markers_intermediate {
                return Err(format!(
                    "{} {a}: Rete view nodes {}/{} below Gator {}/{}",
                    w.id, r.markers_total, r.markers_intermediate, g.markers_total, g.markers_intermediate
                ));
            }
            for row in [g, r] {
                let ordered = row.min_ms <= row.median_ms && row.median_ms <= row.max_ms;
                if row.reps < 5 || row.median_ms <= 0.0 || !ordered || row.markers_total == 0 {
                    return Err(format!("{} {a} {}: incomplete row {row:?}", w.id, row.topology));
                }
            }
            if a == Algorithm::Incremental {
                let _ = write!(
                    summary,
                    " {}: view nodes {} vs {}, median {:.2} vs {:.2} ms;",
                    w.id, g.markers_total, r.markers_total, g.median_ms, r.median_ms
                );
            }
        }
    }
    let t = started.elapsed();
    Ok(format!(
        "{} rows, identical top-level markers, 5 reps each (gator vs rete){summary} csv {} ({:.1} s)",
        rows.len(),
        path.display(),
        t.as_secs_f64()
    ))
}

fn candidate_reduction() -> Outcome {
    let started = Instant::now();
    let mut spec = SyntheticSpec::scaled(10_000, 42);
    spec.batch_edits = 1;
    spec.script_length = 400;
    let w = generate(&spec);
    if w.graph.node_count() < 10_000 {
        return Err(format!("graph has {} base nodes", w.graph.node_count()));
    }
    if w.script.len() < 100 {
        return Err(format!("only {} single-edit batches", w.script.len()));
    }
    let script = &w.script[..100];
    let e = engine(&composite_network());
    let mut start = w.graph.clone();
    e.batch_maintain(&mut start).unwrap();

    let mut g = start.clone();
    let mut inc_time = Duration::ZERO;
    let mut total = Report::default();
    let mut worst: f64 = 0.0;
    for batch in script {
        apply(&mut g, batch);
        let t = Instant::now();
        let r = e.maintain(&mut g).unwrap();
        inc_time += t.elapsed();
        worst = worst.max(r.candidate_ratio());
        total.candidates += r.candidates;
        total.candidate_universe += r.candidate_universe;
    }
    let inc_view = canonical_view(&g, e.network());

    let mut g = start;
    let mut batch_time = Duration::ZERO;
    for batch in script {
        apply(&mut g, batch);
        let t = Instant::now();
        e.batch_maintain(&mut g).unwrap();
        batch_time += t.elapsed();
    }
    if canonical_view(&g, e.network()) != inc_view {
        return Err("incremental and batch replays ended in different views".into());
    }
    let ratio = total.candidate_ratio();
    let msg = format!(
        "10k nodes, 100 single-edit batches: worst batch candidates {:.3}% of universe (mean {:.3}%), \
         incremental {:.1} ms vs batch {:.1} ms",
        worst * 100.0,
        ratio * 100.0,
        inc_time.as_secs_f64() * 1e3,
        batch_time.as_secs_f64() * 1e3
    );
    if worst >= 0.15 {
        return Err(format!("candidate ratio too high; {msg}"));
    }
    if inc_time >= batch_time {
        return Err(format!("incremental not faster; {msg}"));
    }
    let t = within(started, Duration::from_secs(120))?;
    Ok(format!("{msg}, {:.1} s", t.as_secs_f64()))
}

/// Checks one maintain call's trace: iterations numbered from 1, events
/// consumed once in the first iteration, then Update, Delete and Create
/// lines in that order within each iteration.
fn check_trace(r: &Report, events: Option<usize>) -> Result<(), String> {
    let rank = |phase: &str| match phase {
        "update" => Some(1),
        "delete" => Some(2),
        "create" | "cycle" => Some(3),
        _ => None,
    };
    let mut iteration = 0usize;
    let mut last = 0;
    let mut consumed = 0;
    for (i, line) in r.trace.iter().enumerate() {
        let parts: Vec<&str> = line.split(' ').collect();
        match parts[0] {
            "iteration" => {
                iteration += 1;
                if parts[2] != iteration.to_string() {
                    return Err(format!("line {i}: `{line}` out of sequence"));
                }
                last = 0;
            }
            "events" => {
                consumed += 1;
                let first = iteration == 1 && last == 0 && r.trace[i - 1].starts_with("iteration");
                if !first || Some(parts[2].parse::<usize>().unwrap()) != events {
                    return Err(format!("line {i}: `{line}` misplaced"));
                }
            }
            p => {
                let k = rank(p).ok_or_else(|| format!("line {i}: unknown phase `{p}`"))?;
                if iteration == 0 || k < last {
                    return Err(format!("line {i}: `{line}` after a later phase"));
                }
                last = k;
            }
        }
    }
    if iteration != r.iterations {
        return Err(format!("{iteration} iterations traced, {} reported", r.iterations));
    }
    if consumed != usize::from(events.is_some()) {
        return Err(format!("events consumed {consumed} times"));
    }
    Ok(())
}

fn trace_conformance() -> Outcome {
    let e = engine(&full_network()).with_trace(true);
    let (mut calls, mut lines, mut multi) = (0usize, 0usize, 0usize);
    let mut check = |r: &Report, events: Option<usize>, what: &str| -> Result<(), String> {
        check_trace(r, events).map_err(|m| format!("{what}: {m}\n{}", r.trace.join("\n")))?;
        calls += 1;
        lines += r.trace.len();
        multi += usize::from(r.iterations > 1);
        Ok(())
    };
    for seed in 0..20u64 {
        let mut spec = SyntheticSpec::scaled(240, 100 + seed);
        spec.script_length = 60;
        spec.batch_edits = 1 + seed as usize % 3;
        let w = generate(&spec);
        let mut g = w.graph.clone();
        let r = e.batch_maintain(&mut g).unwrap();
        check(&r, None, &format!("seed {seed} initial"))?;
        for (i, batch) in w.script.iter().enumerate() {
            apply(&mut g, batch);
            let n = g.pending_events().len();
            let r = e.maintain(&mut g).unwrap();
            check(&r, Some(n), &format!("seed {seed} batch {i}"))?;
        }
    }
    // scenarios that need several iterations or cycle passes
    let mut g = Graph::new(Arc::new(type_graph()));
    inheritance_chain(&mut g, 6).unwrap();
    let a = add_class(&mut g, "A").unwrap();
    add_public_method(&mut g, a, "m").unwrap();
    let n = g.pending_events().len();
    let r = e.maintain(&mut g).unwrap();
    check(&r, Some(n), "chain")?;
    let i = add_interface(&mut g, "I").unwrap();
    add_implements(&mut g, a, i).unwrap();
    let n = g.pending_events().len();
    let r = e.maintain(&mut g).unwrap();
    check(&r, Some(n), "complex negation")?;
    if multi == 0 {
        return Err("no call needed more than one iteration".into());
    }
    Ok(format!(
        "{calls} maintain calls, {lines} trace lines, {multi} multi-iteration calls in phase order"
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 running example", running_example),
        ("3 recursion fix point", recursion_fix_point),
        ("4 complex negation", complex_nac),
        ("5 gator vs rete", gator_vs_rete),
        ("6 candidate-set reduction", candidate_reduction),
        ("7 trace conformance", trace_conformance),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
