use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use graphview::graph::{Graph, NodeId};
use graphview::io::{load_snapshot, load_workspace};
use graphview::types::{EdgeLayer, EdgeTypeId};
use serde::Serialize;

use crate::exit::Invalid;
use crate::{topology_network, TopologyArg};

#[derive(Args)]
pub struct QueryArgs {
    /// Workspace directory or manifest file.
    workspace: PathBuf,
    /// Marker type; markers of its subtypes are listed too.
    #[arg(value_name = "TYPE")]
    marker_type: String,
    /// Snapshot to query instead of the workspace graph.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Keep markers whose role targets the node, as ROLE=ID. Repeatable.
    #[arg(long = "role", value_name = "ROLE=ID")]
    roles: Vec<String>,
    /// Network the snapshot was maintained with.
    #[arg(long, value_enum, default_value = "gator")]
    topology: TopologyArg,
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct Row {
    id: NodeId,
    #[serde(rename = "type")]
    ty: String,
    module: Option<String>,
    obsolete: bool,
    roles: BTreeMap<String, Vec<NodeId>>,
    scope: Vec<NodeId>,
}

fn parse_filter(graph: &Graph, raw: &str) -> Result<(EdgeTypeId, NodeId)> {
    let (role, id) = raw
        .split_once('=')
        .ok_or_else(|| Invalid(format!("role filter `{raw}` is not ROLE=ID")))?;
    let ty = graph
        .types()
        .edge_type(role)
        .filter(|&t| graph.types().edge_layer(t) == EdgeLayer::ViewRole)
        .ok_or_else(|| Invalid(format!("unknown role `{role}`")))?;
    let id = id
        .trim_start_matches('#')
        .parse::<u64>()
        .map_err(|_| Invalid(format!("role filter `{raw}`: `{id}` is not a node id")))?;
    Ok((ty, NodeId(id)))
}

pub fn run(args: QueryArgs) -> Result<()> {
    let ws = load_workspace(&args.workspace)?;
    let network = topology_network(&ws.network, args.topology.into())?;
    let graph = match &args.snapshot {
        Some(p) => load_snapshot(p, network.types().clone())?,
        None => ws.graph,
    };
    let types = graph.types();
    let want = types
        .node_type(&args.marker_type)
        .ok_or_else(|| Invalid(format!("unknown type `{}`", args.marker_type)))?;
    let filters = args
        .roles
        .iter()
        .map(|r| parse_filter(&graph, r))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for n in graph.nodes().filter(|n| types.conforms(n.ty, want)) {
        if !filters.iter().all(|&(ty, t)| graph.has_edge(n.id, ty, t)) {
            continue;
        }
        let mut roles: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
        let mut scope = Vec::new();
        for e in graph.marking_edges(n.id) {
            if e.ty == EdgeTypeId::SCOPE {
                scope.push(e.target);
            } else {
                roles.entry(types.edge_name(e.ty).to_owned()).or_default().push(e.target);
            }
        }
        scope.sort();
        roles.values_mut().for_each(|v| v.sort());
        rows.push(Row {
            id: n.id,
            ty: types.node_name(n.ty).to_owned(),
            module: n.origin.clone(),
            obsolete: n.obsolete,
            roles,
            scope,
        });
    }

    if args.json {
        print!("{}", graphview::io::to_json(&rows));
        return Ok(());
    }
    for r in rows {
        let roles: Vec<String> = r
            .roles
            .iter()
            .map(|(k, v)| {
                let ids: Vec<String> = v.iter().map(|id| format!("#{id}")).collect();
                format!("{k}={}", ids.join("|"))
            })
            .collect();
        let scope: Vec<String> = r.scope.iter().map(|id| format!("#{id}")).collect();
        println!(
            "#{} {}{} {} scope=[{}]",
            r.id,
            r.ty,
            if r.obsolete { " (obsolete)" } else { "" },
            roles.join(" "),
            scope.join(",")
        );
    }
    Ok(())
}
