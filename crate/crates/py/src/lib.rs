//! Python bindings: a `Session` holds a graph, its maintenance engine and
//! the rest of a change script.

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;
use std::sync::Arc;

use graphview::event::{ChangeEvent, EventBatch};
use graphview::example;
use graphview::graph::{Graph, NodeId};
use graphview::io::{self, load_workspace, Snapshot};
use graphview::maintenance::{Engine, MaintenanceError, Report};
use graphview::network::{build_network, Network, NetworkDef};
use graphview::rete::emulate_rete;
use graphview::synthetic::{generate, SyntheticSpec};
use graphview::types::EdgeTypeId;
use graphview::view::canonical_view;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

create_exception!(graphview, GraphviewError, PyException);
create_exception!(graphview, LoopLimitError, GraphviewError);

fn maintenance_err(e: MaintenanceError) -> PyErr {
    match e {
        MaintenanceError::LoopLimit(_) => LoopLimitError::new_err(e.to_string()),
        other => GraphviewError::new_err(other.to_string()),
    }
}

fn io_err(e: io::IoError) -> PyErr {
    match e {
        io::IoError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    match v {
        Value::Null => Ok(py.None().into_bound(py)),
        Value::Bool(b) => b.into_bound_py_any(py),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_bound_py_any(py),
            (None, Some(u)) => u.into_bound_py_any(py),
            _ => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py),
        },
        Value::String(s) => s.into_bound_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            Ok(list.into_any())
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            Ok(dict.into_any())
        }
    }
}

fn report_to_py<'py>(py: Python<'py>, r: &Report) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(r).map_err(value_err)?)
}

fn builtin(name: &str) -> PyResult<NetworkDef> {
    Ok(match name {
        "composite" => example::composite_network(),
        "acyclic" => example::acyclic_network(),
        "interface" => example::interface_network(),
        "recursion" => example::recursion_network(),
        "full" => example::full_network(),
        _ => return Err(value_err(format!("unknown built-in network `{name}`"))),
    })
}

#[pyclass(module = "graphview")]
struct Session {
    engine: Engine,
    graph: Graph,
    script: VecDeque<EventBatch>,
}

impl Session {
    fn start(
        network: Network,
        graph: Graph,
        script: Vec<EventBatch>,
        topology: &str,
        loop_limit: Option<usize>,
        trace: bool,
    ) -> PyResult<Session> {
        let (network, mut graph) = match topology {
            "gator" => (network, graph),
            "rete" => (emulate_rete(&network).map_err(value_err)?, graph.base_layer()),
            _ => return Err(value_err(format!("unknown topology `{topology}`"))),
        };
        let mut engine = Engine::new(network).map_err(maintenance_err)?.with_trace(trace);
        if let Some(l) = loop_limit {
            engine = engine.with_loop_limit(l);
        }
        engine.batch_maintain(&mut graph).map_err(maintenance_err)?;
        Ok(Session {
            engine,
            graph,
            script: script.into(),
        })
    }

    fn run_maintenance(&mut self, mode: &str) -> PyResult<Report> {
        match mode {
            "incremental" => self.engine.maintain(&mut self.graph),
            "batch" => self.engine.batch_maintain(&mut self.graph),
            _ => return Err(value_err(format!("unknown mode `{mode}`"))),
        }
        .map_err(maintenance_err)
    }
}

#[pymethods]
impl Session {
    /// Loads a workspace directory or manifest and computes its view layer.
    #[new]
    #[pyo3(signature = (workspace, topology = "gator", loop_limit = None, trace = false))]
    fn new(workspace: PathBuf, topology: &str, loop_limit: Option<usize>, trace: bool) -> PyResult<Session> {
        let ws = load_workspace(&workspace).map_err(io_err)?;
        Session::start(ws.network, ws.graph, ws.script, topology, loop_limit, trace)
    }

    /// The composite fixture with a script that deletes its array dimension.
    #[staticmethod]
    #[pyo3(signature = (topology = "gator", trace = false))]
    fn running_example(topology: &str, trace: bool) -> PyResult<Session> {
        let types = Arc::new(example::type_graph());
        let network = build_network(&example::composite_network(), types.clone()).map_err(value_err)?;
        let mut g = Graph::new(types);
        example::composite_fixture(&mut g).map_err(value_err)?;
        g.take_events();
        let dim = g
            .nodes()
            .find(|n| g.types().node_name(n.ty) == "ArrayDimension")
            .map(|n| n.id)
            .expect("fixture has an array dimension");
        let script = vec![EventBatch::new(vec![ChangeEvent::delete_node(dim)])];
        Session::start(network, g, script, topology, None, trace)
    }

    /// Seeded synthetic graph and change script.
    #[staticmethod]
    #[pyo3(signature = (seed = 1, nodes = 200, events = 50, network = "composite", topology = "gator"))]
    fn synthetic(seed: u64, nodes: usize, events: usize, network: &str, topology: &str) -> PyResult<Session> {
        let mut spec = SyntheticSpec::scaled(nodes, seed);
        spec.script_length = events;
        let w = generate(&spec);
        let net = build_network(&builtin(network)?, w.graph.types().clone()).map_err(value_err)?;
        Session::start(net, w.graph, w.script, topology, None, false)
    }

    /// Batches left in the change script.
    #[getter]
    fn pending_batches(&self) -> usize {
        self.script.len()
    }

    /// Applies the next script batch and maintains. Returns the report, or
    /// None when the script is exhausted.
    #[pyo3(signature = (mode = "incremental"))]
    fn step<'py>(&mut self, py: Python<'py>, mode: &str) -> PyResult<Option<Bound<'py, PyAny>>> {
        let Some(batch) = self.script.pop_front() else {
            return Ok(None);
        };
        for ev in batch.events {
            self.graph.apply_change(ev).map_err(value_err)?;
        }
        let r = self.run_maintenance(mode)?;
        Ok(Some(report_to_py(py, &r)?))
    }

    /// Replays the rest of the script. Returns the summed report.
    #[pyo3(signature = (mode = "incremental"))]
    fn run<'py>(&mut self, py: Python<'py>, mode: &str) -> PyResult<Bound<'py, PyAny>> {
        let mut total = Report::default();
        while let Some(batch) = self.script.pop_front() {
            for ev in batch.events {
                self.graph.apply_change(ev).map_err(value_err)?;
            }
            total.absorb(self.run_maintenance(mode)?);
        }
        report_to_py(py, &total)
    }

    /// Applies one change event given as a JSON object in script syntax.
    /// The change is maintained on the next `maintain` call.
    fn apply(&mut self, event: &str) -> PyResult<()> {
        let ev: ChangeEvent = serde_json::from_str(event).map_err(value_err)?;
        self.graph.apply_change(ev).map_err(value_err)?;
        Ok(())
    }

    #[pyo3(signature = (mode = "incremental"))]
    fn maintain<'py>(&mut self, py: Python<'py>, mode: &str) -> PyResult<Bound<'py, PyAny>> {
        let r = self.run_maintenance(mode)?;
        report_to_py(py, &r)
    }

    /// True when the view layer equals a from-scratch recomputation.
    fn check(&self) -> PyResult<bool> {
        let mut fresh = self.graph.base_layer();
        self.engine.batch_maintain(&mut fresh).map_err(maintenance_err)?;
        Ok(canonical_view(&self.graph, self.engine.network()) == canonical_view(&fresh, self.engine.network()))
    }

    /// Marker count per view type.
    fn counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for n in self.graph.nodes().filter(|n| n.origin.is_some()) {
            *out.entry(self.graph.types().node_name(n.ty).to_owned()).or_default() += 1;
        }
        out
    }

    /// Markers of a view type and its subtypes. `roles` maps a role name to
    /// the node id it must target.
    #[pyo3(signature = (marker_type, roles = None))]
    fn markers<'py>(
        &self,
        py: Python<'py>,
        marker_type: &str,
        roles: Option<BTreeMap<String, u64>>,
    ) -> PyResult<Bound<'py, PyList>> {
        let g = &self.graph;
        let types = g.types();
        let want = types
            .node_type(marker_type)
            .ok_or_else(|| value_err(format!("unknown type `{marker_type}`")))?;
        let mut filters = Vec::new();
        for (name, id) in roles.unwrap_or_default() {
            let ty = types
                .edge_type(&name)
                .ok_or_else(|| value_err(format!("unknown role `{name}`")))?;
            filters.push((ty, NodeId(id)));
        }
        let out = PyList::empty(py);
        for n in g.nodes().filter(|n| types.conforms(n.ty, want)) {
            if !filters.iter().all(|&(ty, t)| g.has_edge(n.id, ty, t)) {
                continue;
            }
            let role_map = PyDict::new(py);
            let mut scope = Vec::new();
            for e in g.marking_edges(n.id) {
                if e.ty == EdgeTypeId::SCOPE {
                    scope.push(e.target.0);
                } else {
                    role_map.set_item(types.edge_name(e.ty), e.target.0)?;
                }
            }
            scope.sort_unstable();
            let d = PyDict::new(py);
            d.set_item("id", n.id.0)?;
            d.set_item("type", types.node_name(n.ty))?;
            d.set_item("roles", role_map)?;
            d.set_item("scope", scope)?;
            out.append(d)?;
        }
        Ok(out)
    }

    /// Node id of the first base node with the given `name` attribute.
    fn find(&self, name: &str) -> Option<u64> {
        self.graph
            .nodes()
            .find(|n| n.attrs.get("name").is_some_and(|v| *v == name.into()))
            .map(|n| n.id.0)
    }

    /// The graph as snapshot JSON.
    fn snapshot(&self) -> String {
        io::to_json(&Snapshot::of(&self.graph))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_snapshot(&self.graph, &path).map_err(io_err)
    }

    /// Human-readable execution plan.
    fn plan(&self) -> String {
        self.engine.plan().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Session({} nodes, {} modules, {} batches pending)",
            self.graph.node_count(),
            self.engine.network().modules().len(),
            self.script.len()
        )
    }
}

#[pymodule]
#[pyo3(name = "graphview")]
fn graphview_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Session>()?;
    m.add("GraphviewError", m.py().get_type::<GraphviewError>())?;
    m.add("LoopLimitError", m.py().get_type::<LoopLimitError>())?;
    Ok(())
}
