//! Benchmark harness comparing maintenance algorithms and network
//! topologies on the same workloads.
//!
//! Each cell replays the whole change script from the same initial state,
//! maintaining after every batch. Only the maintenance calls are timed. One
//! warm-up run precedes the timed repetitions.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::EventBatch;
use crate::graph::{Graph, GraphError};
use crate::maintenance::{Engine, MaintenanceError};
use crate::network::{Network, NetworkError};
use crate::rete::emulate_rete;
use crate::types::NodeLayer;
use crate::view::{canonical_view, diff, restrict, CanonicalView};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Incremental,
    Batch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Gator,
    Rete,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Incremental => "incremental",
            Algorithm::Batch => "batch",
        })
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Gator => "gator",
            Topology::Rete => "rete",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "incremental" => Ok(Algorithm::Incremental),
            "batch" => Ok(Algorithm::Batch),
            _ => Err(format!("unknown algorithm `{s}`")),
        }
    }
}

impl FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gator" => Ok(Topology::Gator),
            "rete" => Ok(Topology::Rete),
            _ => Err(format!("unknown topology `{s}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Maintenance(#[from] MaintenanceError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("workload `{workload}`: top-level markers differ between cells:\n{}", details.join("\n"))]
    Mismatch { workload: String, details: Vec<String> },
    #[error("workload `{workload}`, {cell}: repetitions ended in different view layers")]
    Unstable { workload: String, cell: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug)]
pub struct Workload {
    pub id: String,
    /// Initial graph; its view layer is recomputed before replay.
    pub graph: Graph,
    pub network: Network,
    pub script: Vec<EventBatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub warmup: usize,
    pub reps: usize,
    pub algorithms: Vec<Algorithm>,
    pub topologies: Vec<Topology>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            warmup: 1,
            reps: 5,
            algorithms: vec![Algorithm::Incremental, Algorithm::Batch],
            topologies: vec![Topology::Gator, Topology::Rete],
        }
    }
}

/// One CSV row per (workload, algorithm, topology).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub workload: String,
    pub algorithm: Algorithm,
    pub topology: Topology,
    pub reps: usize,
    pub batches: usize,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub per_batch_ms: f64,
    pub markers_total: usize,
    /// Markers of the types produced by the workload's own network.
    pub markers_top: usize,
    /// Markers consumed by another module of the executed network.
    pub markers_intermediate: usize,
    pub candidates: usize,
    pub candidate_universe: usize,
    pub iterations: usize,
}

struct RepOutcome {
    ms: f64,
    view: CanonicalView,
    graph: Graph,
    candidates: usize,
    universe: usize,
    iterations: usize,
}

fn replay(engine: &Engine, start: &Graph, script: &[EventBatch], algorithm: Algorithm) -> Result<RepOutcome, BenchError> {
    let mut g = start.clone();
    let (mut ms, mut candidates, mut universe, mut iterations) = (0.0, 0, 0, 0);
    for batch in script {
        for ev in &batch.events {
            g.apply_change(ev.clone())?;
        }
        let t = Instant::now();
        let r = match algorithm {
            Algorithm::Incremental => engine.maintain(&mut g)?,
            Algorithm::Batch => engine.batch_maintain(&mut g)?,
        };
        ms += t.elapsed().as_secs_f64() * 1e3;
        candidates += r.candidates;
        universe += r.candidate_universe;
        iterations += r.iterations;
    }
    Ok(RepOutcome {
        ms,
        view: canonical_view(&g, engine.network()),
        graph: g,
        candidates,
        universe,
        iterations,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Runs one cell. Returns its row and the final top-level view.
pub fn run_cell(
    w: &Workload,
    algorithm: Algorithm,
    topology: Topology,
    config: &BenchConfig,
) -> Result<(BenchRow, CanonicalView), BenchError> {
    let network = match topology {
        Topology::Gator => w.network.clone(),
        Topology::Rete => emulate_rete(&w.network)?,
    };
    let engine = Engine::new(network)?;
    let mut start = w.graph.base_layer();
    engine.batch_maintain(&mut start)?;

    for _ in 0..config.warmup {
        replay(&engine, &start, &w.script, algorithm)?;
    }
    let reps = config.reps.max(1);
    let mut runs = Vec::with_capacity(reps);
    for _ in 0..reps {
        runs.push(replay(&engine, &start, &w.script, algorithm)?);
    }
    if runs.iter().any(|r| r.view != runs[0].view) {
        return Err(BenchError::Unstable {
            workload: w.id.clone(),
            cell: format!("{algorithm}/{topology}"),
        });
    }
    let mut times: Vec<f64> = runs.iter().map(|r| r.ms).collect();
    times.sort_by(f64::total_cmp);
    let last = runs.pop().expect("at least one run");
    let g = &last.graph;

    let top_types: BTreeSet<String> = w
        .network
        .modules()
        .iter()
        .map(|m| w.network.types().node_name(m.marker_type()).to_owned())
        .collect();
    let net = engine.network();
    let feeding: BTreeSet<String> = net
        .modules()
        .iter()
        .filter(|m| !net.is_terminal(&m.name))
        .map(|m| net.types().node_name(m.marker_type()).to_owned())
        .collect();
    let count = |names: &BTreeSet<String>| {
        g.nodes()
            .filter(|n| names.contains(g.types().node_name(n.ty)))
            .count()
    };
    let med = median(&times);
    let row = BenchRow {
        workload: w.id.clone(),
        algorithm,
        topology,
        reps,
        batches: w.script.len(),
        median_ms: med,
        min_ms: times[0],
        max_ms: times[times.len() - 1],
        per_batch_ms: if w.script.is_empty() { 0.0 } else { med / w.script.len() as f64 },
        markers_total: g.count_layer(NodeLayer::View),
        markers_top: count(&top_types),
        markers_intermediate: count(&feeding),
        candidates: last.candidates,
        candidate_universe: last.universe,
        iterations: last.iterations,
    };
    Ok((row, restrict(&last.view, &top_types)))
}

/// Runs every configured cell of every workload. Fails with a diff when
/// two cells of a workload disagree on top-level markers.
pub fn run_suite(workloads: &[Workload], config: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    for w in workloads {
        let mut reference: Option<CanonicalView> = None;
        for &algorithm in &config.algorithms {
            for &topology in &config.topologies {
                let (row, top) = run_cell(w, algorithm, topology, config)?;
                match &reference {
                    None => reference = Some(top),
                    Some(r) if *r != top => {
                        return Err(BenchError::Mismatch {
                            workload: w.id.clone(),
                            details: diff(r, &top),
                        })
                    }
                    Some(_) => {}
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 16] = [
    "workload",
    "algorithm",
    "topology",
    "reps",
    "batches",
    "median_ms",
    "min_ms",
    "max_ms",
    "per_batch_ms",
    "markers_total",
    "markers_top",
    "markers_intermediate",
    "candidates",
    "candidate_universe",
    "iterations",
    "candidate_ratio",
];

/// Writes the rows as CSV. The header is written even without rows.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let ratio = if r.candidate_universe == 0 {
            0.0
        } else {
            r.candidates as f64 / r.candidate_universe as f64
        };
        w.write_record([
            r.workload.clone(),
            r.algorithm.to_string(),
            r.topology.to_string(),
            r.reps.to_string(),
            r.batches.to_string(),
            format!("{:.3}", r.median_ms),
            format!("{:.3}", r.min_ms),
            format!("{:.3}", r.max_ms),
            format!("{:.4}", r.per_batch_ms),
            r.markers_total.to_string(),
            r.markers_top.to_string(),
            r.markers_intermediate.to_string(),
            r.candidates.to_string(),
            r.candidate_universe.to_string(),
            r.iterations.to_string(),
            format!("{ratio:.4}"),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{composite_fixture, composite_network, type_graph};
    use crate::network::build_network;
    use std::sync::Arc;

    #[test]
    fn empty_suite_gives_header_only() {
        let rows = run_suite(&[], &BenchConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn running_example_suite_has_four_agreeing_rows() {
        let types = Arc::new(type_graph());
        let mut g = Graph::new(types.clone());
        composite_fixture(&mut g).unwrap();
        g.take_events();
        let dim = g
            .nodes()
            .find(|n| g.types().node_name(n.ty) == "ArrayDimension")
            .map(|n| n.id)
            .unwrap();
        let w = Workload {
            id: "running-example".into(),
            graph: g,
            network: build_network(&composite_network(), types).unwrap(),
            script: vec![EventBatch::new(vec![crate::event::ChangeEvent::delete_node(dim)])],
        };
        let config = BenchConfig {
            warmup: 0,
            reps: 2,
            ..BenchConfig::default()
        };
        let rows = run_suite(&[w], &config).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.markers_top == rows[0].markers_top));
        let gator = rows.iter().find(|r| r.topology == Topology::Gator).unwrap();
        let rete = rows.iter().find(|r| r.topology == Topology::Rete).unwrap();
        assert!(rete.markers_intermediate >= gator.markers_intermediate);
    }
}
