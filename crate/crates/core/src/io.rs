//! Workspace files: type graphs, graph snapshots, network definitions and
//! JSON-lines change scripts.
//!
//! A workspace manifest names the other files by paths relative to itself:
//!
//! ```json
//! { "types": "types.json", "graph": "graph.json",
//!   "network": "network.json", "script": "script.jsonl" }
//! ```
//!
//! `patterns` may map extra pattern names to files, merged into the network
//! definition. `script` is optional.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{ChangeEvent, EventBatch};
use crate::graph::{Edge, EdgeId, Graph, GraphError, Node, NodeId};
use crate::network::{build_network, Network, NetworkDef, NetworkError};
use crate::pattern::PatternDef;
use crate::types::{EdgeLayer, NodeLayer, TypeGraph, TypeGraphDef, TypeGraphError, Value};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error(transparent)]
    Type(#[from] TypeGraphError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

impl IoError {
    fn invalid(path: &Path, message: impl ToString) -> IoError {
        IoError::Invalid {
            path: path.to_owned(),
            message: message.to_string(),
        }
    }

    pub fn is_parse(&self) -> bool {
        matches!(self, IoError::Parse { .. })
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str, line_offset: usize) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: path.to_owned(),
        line: e.line() + line_offset,
        column: e.column(),
        message: e.to_string(),
    })
}

fn parse_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    parse(path, &read(path)?, 0)
}

/// Pretty JSON with a trailing newline. Maps serialize in key order, so
/// equal values give identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

// ----------------------------------------------------------------------
// Type graphs and networks
// ----------------------------------------------------------------------

pub fn load_types(path: &Path) -> Result<TypeGraph, IoError> {
    let def: TypeGraphDef = parse_file(path)?;
    TypeGraph::from_def(def).map_err(|e| IoError::invalid(path, e))
}

pub fn save_types(types: &TypeGraph, path: &Path) -> Result<(), IoError> {
    write(path, &to_json(&types.to_def()))
}

pub fn load_network_def(path: &Path) -> Result<NetworkDef, IoError> {
    parse_file(path)
}

pub fn save_network(network: &Network, path: &Path) -> Result<(), IoError> {
    write(path, &to_json(&network.to_def()))
}

pub fn load_pattern(path: &Path) -> Result<PatternDef, IoError> {
    parse_file(path)
}

// ----------------------------------------------------------------------
// Graph snapshots
// ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub obsolete: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub former_marks: Vec<NodeId>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(n: &u64) -> bool {
    *n == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: EdgeId,
    #[serde(rename = "type")]
    pub ty: String,
    pub src: NodeId,
    pub dst: NodeId,
}

/// Serialized graph. View-layer records are optional, so a snapshot can
/// hold a state before or after maintenance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Smallest id never used by a base element.
    #[serde(default)]
    pub next_id: u64,
    /// Next id for view elements; zero means "after the largest one".
    #[serde(default, skip_serializing_if = "is_zero")]
    pub next_view_id: u64,
    #[serde(default)]
    pub nodes: Vec<NodeRecord>,
    #[serde(default)]
    pub edges: Vec<EdgeRecord>,
}

impl Snapshot {
    pub fn of(graph: &Graph) -> Snapshot {
        let t = graph.types();
        Snapshot {
            next_id: graph.next_id(),
            next_view_id: if graph.count_layer(NodeLayer::View) > 0 {
                graph.next_view_id()
            } else {
                0
            },
            nodes: graph
                .nodes()
                .map(|n| NodeRecord {
                    id: n.id,
                    ty: t.node_name(n.ty).to_owned(),
                    attrs: n.attrs.clone(),
                    origin: n.origin.clone(),
                    obsolete: n.obsolete,
                    former_marks: n.former_marks.clone(),
                })
                .collect(),
            edges: graph
                .edges()
                .map(|e| EdgeRecord {
                    id: e.id,
                    ty: t.edge_name(e.ty).to_owned(),
                    src: e.source,
                    dst: e.target,
                })
                .collect(),
        }
    }

    /// Rebuilds the graph, checking types, attributes and structure.
    pub fn restore(&self, types: Arc<TypeGraph>) -> Result<Graph, String> {
        let mut g = Graph::new(types.clone());
        let mut nodes: Vec<&NodeRecord> = self.nodes.iter().collect();
        nodes.sort_by_key(|n| n.id);
        for r in nodes {
            let ty = types.node_type(&r.ty).ok_or_else(|| format!("node {}: unknown type `{}`", r.id, r.ty))?;
            let def = types.node_def(ty);
            if def.is_abstract {
                return Err(format!("node {}: type `{}` is abstract", r.id, r.ty));
            }
            let view = def.layer == NodeLayer::View;
            if view != r.origin.is_some() {
                return Err(format!("node {}: only view nodes carry an origin", r.id));
            }
            if !view && (r.obsolete || !r.former_marks.is_empty()) {
                return Err(format!("node {}: base nodes cannot be obsolete", r.id));
            }
            for (name, value) in &r.attrs {
                if types.attribute_kind(ty, name) != Some(value.kind()) {
                    return Err(format!("node {}: attribute `{name}` does not fit `{}`", r.id, r.ty));
                }
            }
            g.restore_node(Node {
                id: r.id,
                ty,
                attrs: r.attrs.clone(),
                origin: r.origin.clone(),
                obsolete: r.obsolete,
                former_marks: r.former_marks.clone(),
            })
            .map_err(|e| e.to_string())?;
        }
        let mut edges: Vec<&EdgeRecord> = self.edges.iter().collect();
        edges.sort_by_key(|e| e.id);
        for r in edges {
            let ty = types.edge_type(&r.ty).ok_or_else(|| format!("edge {}: unknown type `{}`", r.id, r.ty))?;
            if types.edge_layer(ty) == EdgeLayer::Base && g.is_view_node(r.src) {
                return Err(format!("edge {}: base edge leaves a view node", r.id));
            }
            g.restore_edge(Edge {
                id: r.id,
                ty,
                source: r.src,
                target: r.dst,
            })
            .map_err(|e: GraphError| format!("edge {}: {e}", r.id))?;
        }
        g.set_next_id(self.next_id);
        g.set_next_view_id(self.next_view_id);
        g.check_consistency()?;
        Ok(g)
    }
}

pub fn save_snapshot(graph: &Graph, path: &Path) -> Result<(), IoError> {
    write(path, &to_json(&Snapshot::of(graph)))
}

/// An empty file is an empty graph.
pub fn load_snapshot(path: &Path, types: Arc<TypeGraph>) -> Result<Graph, IoError> {
    let text = read(path)?;
    if text.trim().is_empty() {
        return Ok(Graph::new(types));
    }
    let snap: Snapshot = parse(path, &text, 0)?;
    snap.restore(types).map_err(|m| IoError::invalid(path, m))
}

// ----------------------------------------------------------------------
// Change scripts
// ----------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ScriptLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    batch: Option<u64>,
    #[serde(flatten)]
    event: ChangeEvent,
}

/// One event per line. Consecutive lines with the same `batch` value form
/// one batch; a line without `batch` is a batch of its own. Blank lines
/// and lines starting with `//` are skipped.
pub fn parse_script(path: &Path, text: &str) -> Result<Vec<EventBatch>, IoError> {
    let mut out: Vec<EventBatch> = Vec::new();
    let mut current: Option<u64> = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        let l: ScriptLine = parse(path, line, i)?;
        match (l.batch, current, out.last_mut()) {
            (Some(b), Some(c), Some(last)) if b == c => last.events.push(l.event),
            _ => out.push(EventBatch::new(vec![l.event])),
        }
        current = l.batch;
    }
    Ok(out)
}

pub fn load_script(path: &Path) -> Result<Vec<EventBatch>, IoError> {
    parse_script(path, &read(path)?)
}

/// Writes batches with consecutive `batch` numbers starting at 0.
pub fn script_to_string(script: &[EventBatch]) -> String {
    let mut s = String::new();
    for (b, batch) in script.iter().enumerate() {
        for ev in &batch.events {
            let line = ScriptLine {
                batch: Some(b as u64),
                event: ev.clone(),
            };
            writeln!(s, "{}", serde_json::to_string(&line).expect("serializable")).unwrap();
        }
    }
    s
}

pub fn save_script(script: &[EventBatch], path: &Path) -> Result<(), IoError> {
    write(path, &script_to_string(script))
}

// ----------------------------------------------------------------------
// Workspaces
// ----------------------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub types: PathBuf,
    pub graph: PathBuf,
    pub network: PathBuf,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub patterns: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
}

impl Manifest {
    pub fn standard(with_script: bool) -> Manifest {
        Manifest {
            types: "types.json".into(),
            graph: "graph.json".into(),
            network: "network.json".into(),
            patterns: BTreeMap::new(),
            script: with_script.then(|| "script.jsonl".into()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Workspace {
    pub types: Arc<TypeGraph>,
    pub graph: Graph,
    pub network: Network,
    pub script: Vec<EventBatch>,
}

/// Loads a workspace from its manifest file, or from `workspace.json` when
/// given a directory.
pub fn load_workspace(path: &Path) -> Result<Workspace, IoError> {
    let manifest_path = if path.is_dir() {
        path.join("workspace.json")
    } else {
        path.to_owned()
    };
    let base = manifest_path.parent().unwrap_or(Path::new("")).to_owned();
    let m: Manifest = parse_file(&manifest_path)?;
    let types = Arc::new(load_types(&base.join(&m.types))?);
    let mut def = load_network_def(&base.join(&m.network))?;
    for (name, p) in &m.patterns {
        def.patterns.insert(name.clone(), load_pattern(&base.join(p))?);
    }
    let network = build_network(&def, types.clone())?;
    let mut graph = load_snapshot(&base.join(&m.graph), network.types().clone())?;
    graph.take_events();
    let script = match &m.script {
        Some(s) => load_script(&base.join(s))?,
        None => Vec::new(),
    };
    Ok(Workspace {
        types,
        graph,
        network,
        script,
    })
}

/// Writes a workspace with the standard file names into `dir`.
pub fn save_workspace(ws: &Workspace, dir: &Path) -> Result<(), IoError> {
    let m = Manifest::standard(!ws.script.is_empty());
    write(&dir.join("workspace.json"), &to_json(&m))?;
    save_types(&ws.types, &dir.join(&m.types))?;
    save_snapshot(&ws.graph, &dir.join(&m.graph))?;
    save_network(&ws.network, &dir.join(&m.network))?;
    if let Some(s) = &m.script {
        save_script(&ws.script, &dir.join(s))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{composite_fixture, type_graph};

    #[test]
    fn script_lines_group_by_batch() {
        let text = r#"{"batch":0,"kind":"node-created","id":1,"type":"Class"}
{"batch":0,"kind":"node-created","id":2,"type":"Class"}

// comment
{"kind":"node-deleted","id":2}
{"batch":3,"kind":"node-deleted","id":1}
"#;
        let s = parse_script(Path::new("s.jsonl"), text).unwrap();
        assert_eq!(s.iter().map(|b| b.len()).collect::<Vec<_>>(), [2, 1, 1]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "{\"kind\":\"node-deleted\",\"id\":2}\n{\"kind\":\"nope\"}\n";
        match parse_script(Path::new("s.jsonl"), text) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn snapshot_rejects_bad_records() {
        let types = Arc::new(type_graph());
        let mut g = Graph::new(types.clone());
        composite_fixture(&mut g).unwrap();
        let mut s = Snapshot::of(&g);
        s.nodes[0].ty = "Nope".into();
        assert!(s.restore(types.clone()).is_err());
        let mut s = Snapshot::of(&g);
        s.nodes[0].origin = Some("Generalization".into());
        assert!(s.restore(types.clone()).is_err());
        let mut s = Snapshot::of(&g);
        s.edges.push(EdgeRecord {
            id: EdgeId(9999),
            ty: "fields".into(),
            src: NodeId(1),
            dst: NodeId(424242),
        });
        assert!(s.restore(types).is_err());
    }
}
