//! Benchmark suite files.
//!
//! ```json
//! {
//!   "reps": 5,
//!   "workloads": [
//!     {"id": "running-example", "workspace": "workspaces/running-example"},
//!     {"id": "syn-400", "synthetic": {"seed": 3, "base_nodes": 400}, "network": "composite"}
//!   ]
//! }
//! ```
//!
//! Workspace paths are relative to the suite file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use graphview::bench::{Algorithm, BenchConfig, Topology, Workload};
use graphview::io::load_workspace;
use graphview::network::build_network;
use graphview::synthetic::{generate, SyntheticSpec};
use serde::Deserialize;

use crate::exit::{parse_error, Invalid};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    #[serde(default)]
    warmup: Option<usize>,
    #[serde(default)]
    reps: Option<usize>,
    #[serde(default)]
    algorithms: Option<Vec<Algorithm>>,
    #[serde(default)]
    topologies: Option<Vec<Topology>>,
    #[serde(default)]
    workloads: Vec<WorkloadEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadEntry {
    id: String,
    #[serde(default)]
    workspace: Option<PathBuf>,
    #[serde(default)]
    synthetic: Option<SyntheticSpec>,
    /// Built-in network for synthetic workloads.
    #[serde(default)]
    network: Option<String>,
}

pub fn load(path: &Path) -> Result<(Vec<Workload>, BenchConfig)> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: SuiteFile = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));

    let defaults = BenchConfig::default();
    let config = BenchConfig {
        warmup: file.warmup.unwrap_or(defaults.warmup),
        reps: file.reps.unwrap_or(defaults.reps),
        algorithms: file.algorithms.unwrap_or(defaults.algorithms),
        topologies: file.topologies.unwrap_or(defaults.topologies),
    };
    if config.reps == 0 {
        return Err(Invalid("reps must be at least 1".into()).into());
    }

    let mut workloads = Vec::with_capacity(file.workloads.len());
    for w in file.workloads {
        let workload = match (w.workspace, w.synthetic) {
            (Some(p), None) => {
                if w.network.is_some() {
                    return Err(Invalid(format!("workload `{}`: a workspace brings its own network", w.id)).into());
                }
                let ws = load_workspace(&base.join(p))?;
                Workload {
                    id: w.id,
                    graph: ws.graph,
                    network: ws.network,
                    script: ws.script,
                }
            }
            (None, Some(spec)) => {
                let s = generate(&spec);
                let def = crate::builtin_network(w.network.as_deref().unwrap_or("composite"))?;
                Workload {
                    id: w.id,
                    network: build_network(&def, s.graph.types().clone())?,
                    graph: s.graph,
                    script: s.script,
                }
            }
            _ => {
                return Err(Invalid(format!(
                    "workload `{}` needs exactly one of `workspace` and `synthetic`",
                    w.id
                ))
                .into())
            }
        };
        workloads.push(workload);
    }
    Ok((workloads, config))
}
