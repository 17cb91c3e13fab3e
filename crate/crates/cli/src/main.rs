use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphview::bench::{self, Topology};
use graphview::event::{ChangeEvent, EventBatch};
use graphview::example;
use graphview::graph::Graph;
use graphview::io::{self, load_workspace, save_snapshot, save_workspace, Workspace};
use graphview::maintenance::{Engine, Report};
use graphview::network::{build_network, Network, NetworkDef};
use graphview::rete::emulate_rete;
use graphview::synthetic::{generate, SyntheticSpec};
use graphview::view::{canonical_view, diff};

mod exit;
mod query;
mod suite;

use exit::Mismatch;

#[derive(Parser)]
#[command(name = "graphview", version, about = "Incremental maintenance of graph views")]
struct Cli {
    /// Maximum loop iterations per maintenance call (defaults to ten per module).
    #[arg(long, global = true, env = "GRAPHVIEW_LOOP_LIMIT")]
    loop_limit: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a workspace's change script, maintaining after every batch.
    Maintain(MaintainArgs),
    /// List the markers of a view type.
    Query(query::QueryArgs),
    /// Run a benchmark suite and write CSV.
    Bench(BenchArgs),
    /// Write a generated workspace.
    Gen(GenArgs),
    /// Print the execution plan of a workspace's network.
    Plan(PlanArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Incremental,
    Batch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Gator,
    Rete,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Topology {
        match t {
            TopologyArg::Gator => Topology::Gator,
            TopologyArg::Rete => Topology::Rete,
        }
    }
}

#[derive(Args)]
struct MaintainArgs {
    /// Workspace directory or manifest file.
    workspace: PathBuf,
    #[arg(long, value_enum, default_value = "incremental")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "gator")]
    topology: TopologyArg,
    /// Print the phase trace to stderr.
    #[arg(long)]
    trace: bool,
    /// Write the maintenance report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Final snapshot path [default: final.json next to the manifest].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare with a from-scratch recomputation after every batch.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite file (JSON).
    suite: PathBuf,
    /// CSV output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenWhat,
}

#[derive(Subcommand)]
enum GenWhat {
    /// Seeded synthetic graph and change script.
    Synthetic {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Target number of base nodes.
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        /// Number of change events.
        #[arg(long)]
        events: Option<usize>,
        /// Events per batch.
        #[arg(long)]
        batch: Option<usize>,
        /// Full generator settings (JSON); overrides the other flags.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Built-in network: composite, acyclic, interface, recursion or full.
        #[arg(long, default_value = "composite")]
        network: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// The composite fixture with a script deleting its array dimension.
    RunningExample {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PlanArgs {
    workspace: PathBuf,
    #[arg(long, value_enum, default_value = "gator")]
    topology: TopologyArg,
}

pub(crate) fn builtin_network(name: &str) -> Result<NetworkDef> {
    Ok(match name {
        "composite" => example::composite_network(),
        "acyclic" => example::acyclic_network(),
        "interface" => example::interface_network(),
        "recursion" => example::recursion_network(),
        "full" => example::full_network(),
        _ => bail!("unknown built-in network `{name}`"),
    })
}

pub(crate) fn topology_network(network: &Network, topology: Topology) -> Result<Network> {
    Ok(match topology {
        Topology::Gator => network.clone(),
        Topology::Rete => emulate_rete(network)?,
    })
}

fn engine(network: Network, loop_limit: Option<usize>, trace: bool) -> Result<Engine> {
    let mut e = Engine::new(network)?.with_trace(trace);
    if let Some(l) = loop_limit {
        e = e.with_loop_limit(l);
    }
    Ok(e)
}

fn manifest_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_owned()
    } else {
        path.parent().map(Path::to_owned).unwrap_or_default()
    }
}

fn maintain(args: MaintainArgs, loop_limit: Option<usize>) -> Result<()> {
    let ws = load_workspace(&args.workspace)?;
    let network = topology_network(&ws.network, args.topology.into())?;
    let engine = engine(network, loop_limit, args.trace)?;
    let mut g = match args.topology {
        TopologyArg::Gator => ws.graph.clone(),
        // markers of another network cannot be carried over
        TopologyArg::Rete => ws.graph.base_layer(),
    };
    let initial = engine.batch_maintain(&mut g)?;

    let mut total = Report::default();
    let mut per_batch = Vec::with_capacity(ws.script.len());
    for (i, batch) in ws.script.iter().enumerate() {
        for ev in &batch.events {
            g.apply_change(ev.clone())
                .with_context(|| format!("batch {}: cannot apply {}", i + 1, ev.kind()))?;
        }
        let r = match args.mode {
            Mode::Incremental => engine.maintain(&mut g)?,
            Mode::Batch => engine.batch_maintain(&mut g)?,
        };
        if args.trace {
            for line in &r.trace {
                eprintln!("[batch {}] {line}", i + 1);
            }
        }
        if args.check {
            let mut fresh = g.base_layer();
            engine.batch_maintain(&mut fresh)?;
            let a = canonical_view(&g, engine.network());
            let b = canonical_view(&fresh, engine.network());
            if a != b {
                return Err(Mismatch {
                    context: format!("after batch {}", i + 1),
                    details: diff(&a, &b),
                }
                .into());
            }
        }
        total.absorb(r.clone());
        per_batch.push(r);
    }

    let out = args
        .out
        .unwrap_or_else(|| manifest_dir(&args.workspace).join("final.json"));
    save_snapshot(&g, &out)?;

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for n in g.nodes().filter(|n| n.origin.is_some()) {
        *counts.entry(g.types().node_name(n.ty)).or_default() += 1;
    }
    println!(
        "{} batches, {} events, {} iterations, {:.3} ms",
        ws.script.len(),
        total.events,
        total.iterations,
        total.time.total_ms
    );
    for (ty, c) in &counts {
        println!("{ty}\t{c}");
    }

    if let Some(path) = args.report {
        let doc = serde_json::json!({
            "mode": format!("{:?}", args.mode).to_lowercase(),
            "topology": Topology::from(args.topology).to_string(),
            "batches": ws.script.len(),
            "initial": initial,
            "total": total,
            "per_batch": per_batch,
            "markers": counts,
        });
        fs::write(&path, io::to_json(&doc)).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let (workloads, config) = suite::load(&args.suite)?;
    let rows = bench::run_suite(&workloads, &config)?;
    for w in &workloads {
        let cells = rows.iter().filter(|r| r.workload == w.id).count();
        eprintln!("{}: top-level markers agree across {cells} cells", w.id);
    }
    match args.out {
        Some(p) => {
            let f = fs::File::create(&p).with_context(|| format!("cannot create {}", p.display()))?;
            bench::write_csv(&rows, f)?;
        }
        None => bench::write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn running_example() -> Result<Workspace> {
    let types = Arc::new(example::type_graph());
    let network = build_network(&example::composite_network(), types.clone())?;
    let mut g = Graph::new(types.clone());
    example::composite_fixture(&mut g)?;
    g.take_events();
    let dim = g
        .nodes()
        .find(|n| g.types().node_name(n.ty) == "ArrayDimension")
        .map(|n| n.id)
        .expect("fixture has an array dimension");
    Ok(Workspace {
        types,
        graph: g,
        network,
        script: vec![EventBatch::new(vec![ChangeEvent::delete_node(dim)])],
    })
}

fn gen(args: GenArgs) -> Result<()> {
    let (ws, out) = match args.what {
        GenWhat::Synthetic {
            seed,
            nodes,
            events,
            batch,
            spec,
            network,
            out,
        } => {
            let spec = match spec {
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
                    serde_json::from_str(&text).map_err(|e| exit::parse_error(&p, e))?
                }
                None => {
                    let mut s = SyntheticSpec::scaled(nodes, seed);
                    if let Some(n) = events {
                        s.script_length = n;
                    }
                    if let Some(b) = batch {
                        s.batch_edits = b;
                    }
                    s
                }
            };
            let w = generate(&spec);
            let types = w.graph.types().clone();
            let network = build_network(&builtin_network(&network)?, types.clone())?;
            (
                Workspace {
                    types,
                    graph: w.graph,
                    network,
                    script: w.script,
                },
                out,
            )
        }
        GenWhat::RunningExample { out } => (running_example()?, out),
    };
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    save_workspace(&ws, &out)?;
    println!(
        "{}: {} base nodes, {} batches",
        out.display(),
        ws.graph.node_count(),
        ws.script.len()
    );
    Ok(())
}

fn plan(args: PlanArgs) -> Result<()> {
    let ws = load_workspace(&args.workspace)?;
    let network = topology_network(&ws.network, args.topology.into())?;
    let e = Engine::new(network)?;
    print!("{}", e.plan());
    println!("nac halo: {}", e.plan().nac_halo);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Maintain(a) => maintain(a, cli.loop_limit),
        Command::Query(a) => query::run(a),
        Command::Bench(a) => run_bench(a),
        Command::Gen(a) => gen(a),
        Command::Plan(a) => plan(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
