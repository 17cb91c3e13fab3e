//! The maintenance loop: Update, Delete and Create phases repeated until no
//! marker is suspicious.
//!
//! Each iteration re-checks suspicious markers, deletes obsolete ones
//! together with markers depending on them, and runs every module in Create
//! mode over the nodes reachable from what changed. Markers created for a
//! module whose output feeds a negated view node can invalidate existing
//! markers of the consumer; those become suspicious for the next iteration.

pub mod classify;
pub mod reach;
mod report;

use std::collections::BTreeSet;
use std::time::Instant;

use thiserror::Error;

use crate::event::EventBatch;
use crate::graph::{Graph, GraphError, NodeId};
use crate::matcher::Candidates;
use crate::modes::{self, ModeError, Recheck};
use crate::network::{Network, NetworkError, ViewModule};
use crate::plan::{plan_execution, ExecutionPlan, PlanStep};

pub use report::{ModuleCounts, Report, Timings};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaintenanceError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("marker {node} was created by unknown module `{module}`")]
    UnknownModule { node: NodeId, module: String },
    #[error("loop limit of {0} exceeded")]
    LoopLimit(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scope {
    Incremental,
    Batch,
}

#[derive(Clone, Debug)]
pub struct Engine {
    network: Network,
    plan: ExecutionPlan,
    loop_limit: usize,
    trace: bool,
}

impl Engine {
    pub fn new(network: Network) -> Result<Engine, MaintenanceError> {
        let plan = plan_execution(&network)?;
        let loop_limit = 10 * network.modules().len().max(1);
        Ok(Engine {
            network,
            plan,
            loop_limit,
            trace: false,
        })
    }

    /// Maximum number of loop iterations, and of passes per recursion cycle.
    pub fn with_loop_limit(mut self, limit: usize) -> Engine {
        self.loop_limit = limit;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Engine {
        self.trace = on;
        self
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn plan(&self) -> &ExecutionPlan {
        &self.plan
    }

    pub fn loop_limit(&self) -> usize {
        self.loop_limit
    }

    /// Moves the graph onto the network's type graph when the latter
    /// extends it.
    pub fn prepare(&self, graph: &mut Graph) -> Result<(), MaintenanceError> {
        if **graph.types() != **self.network.types() {
            graph.rebind_types(self.network.types().clone())?;
        }
        Ok(())
    }

    /// Consumes the graph's pending events and brings the view layer up to
    /// date.
    pub fn maintain(&self, graph: &mut Graph) -> Result<Report, MaintenanceError> {
        let batch = graph.take_events();
        self.maintain_batch(graph, batch)
    }

    /// Brings the view layer up to date with events already applied to the
    /// graph.
    pub fn maintain_batch(&self, graph: &mut Graph, batch: EventBatch) -> Result<Report, MaintenanceError> {
        self.prepare(graph)?;
        let started = Instant::now();
        let mut run = Run::new(self, graph, Scope::Incremental);
        run.report.events = batch.len();
        let halo = self.plan.nac_halo;
        let mut events = Some(batch);
        let mut suspicious = BTreeSet::new();
        loop {
            run.begin_iteration()?;
            let (ev_suspicious, ev_obsolete, ev_changed) = match events.take() {
                Some(b) => {
                    run.trace("events", "-", b.len(), "consumed");
                    (
                        classify::suspicious_nodes(run.graph, &b, halo),
                        classify::obsolete_nodes(run.graph, &b),
                        classify::changed_nodes(run.graph, &b),
                    )
                }
                None => Default::default(),
            };
            suspicious.extend(ev_suspicious);
            let mut obsoletes = run.update_phase(&suspicious)?;
            obsoletes.extend(ev_obsolete);
            let mut changed = run.delete_phase(&obsoletes)?;
            changed.extend(ev_changed);
            suspicious = run.create_phase(changed)?;
            if suspicious.is_empty() {
                break;
            }
        }
        Ok(run.finish(started))
    }

    /// Recomputes the view layer from scratch: every marker is re-checked
    /// and every module runs over all type-conforming nodes.
    pub fn batch_maintain(&self, graph: &mut Graph) -> Result<Report, MaintenanceError> {
        self.prepare(graph)?;
        graph.take_events();
        let started = Instant::now();
        let mut run = Run::new(self, graph, Scope::Batch);
        loop {
            run.begin_iteration()?;
            let markers: BTreeSet<NodeId> = run
                .graph
                .nodes()
                .filter(|n| n.origin.is_some())
                .map(|n| n.id)
                .collect();
            let mut obsoletes = run.update_phase(&markers)?;
            obsoletes.extend(
                markers
                    .iter()
                    .copied()
                    .filter(|&m| run.graph.node(m).is_some_and(|n| n.obsolete) || run.graph.has_dangling_marks(m)),
            );
            run.delete_phase(&obsoletes)?;
            let suspicious = run.create_phase(BTreeSet::new())?;
            if suspicious.is_empty() {
                break;
            }
        }
        Ok(run.finish(started))
    }
}

struct Run<'a> {
    engine: &'a Engine,
    graph: &'a mut Graph,
    scope: Scope,
    report: Report,
}

impl<'a> Run<'a> {
    fn new(engine: &'a Engine, graph: &'a mut Graph, scope: Scope) -> Run<'a> {
        let report = Report {
            mode: match scope {
                Scope::Incremental => "incremental",
                Scope::Batch => "batch",
            }
            .to_owned(),
            ..Report::default()
        };
        Run {
            engine,
            graph,
            scope,
            report,
        }
    }

    fn trace(&mut self, phase: &str, module: &str, node: impl std::fmt::Display, verb: &str) {
        if self.engine.trace {
            self.report.trace.push(format!("{phase} {module} {node} {verb}"));
        }
    }

    fn begin_iteration(&mut self) -> Result<(), MaintenanceError> {
        self.report.iterations += 1;
        if self.report.iterations > self.engine.loop_limit {
            return Err(MaintenanceError::LoopLimit(self.engine.loop_limit));
        }
        let n = self.report.iterations;
        self.trace("iteration", "-", n, "begin");
        Ok(())
    }

    fn module_of(&self, node: NodeId) -> Result<&'a ViewModule, MaintenanceError> {
        let origin = self
            .graph
            .node(node)
            .and_then(|n| n.origin.clone())
            .unwrap_or_default();
        self.engine
            .network
            .module(&origin)
            .ok_or(MaintenanceError::UnknownModule {
                node,
                module: origin,
            })
    }

    fn update_phase(&mut self, suspicious: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>, MaintenanceError> {
        let t = Instant::now();
        let mut obsoletes = BTreeSet::new();
        let mut visited = BTreeSet::new();
        let mut stack: Vec<NodeId> = suspicious.iter().rev().copied().collect();
        while let Some(node) = stack.pop() {
            if !visited.insert(node) {
                continue;
            }
            if !self.graph.contains_node(node) {
                self.trace("update", "-", node, "skipped");
                continue;
            }
            if !self.graph.is_view_node(node) {
                continue;
            }
            let module = self.module_of(node)?;
            let outcome = modes::recheck(module, self.graph, node)?;
            self.report.checked += 1;
            let counts = self.report.modules.entry(module.name.clone()).or_default();
            counts.checked += 1;
            match outcome {
                Recheck::Obsolete => {
                    counts.obsolete += 1;
                    if !self.graph.node(node).unwrap().obsolete {
                        self.graph.mark_obsolete(node);
                    }
                    self.report.obsolete += 1;
                    obsoletes.insert(node);
                    self.trace("update", &module.name, node, "obsolete");
                }
                Recheck::Valid | Recheck::Repaired => {
                    let verb = if outcome == Recheck::Valid {
                        self.report.valid += 1;
                        "valid"
                    } else {
                        counts.repaired += 1;
                        self.report.repaired += 1;
                        "repaired"
                    };
                    self.trace("update", &module.name, node, verb);
                    let dependents = self.graph.backward_marks(node);
                    stack.extend(dependents.into_iter().rev());
                }
            }
        }
        self.report.time.update_ms += ms(t);
        Ok(obsoletes)
    }

    fn delete_phase(&mut self, obsoletes: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>, MaintenanceError> {
        let t = Instant::now();
        let mut changed = BTreeSet::new();
        let mut stack: Vec<NodeId> = obsoletes.iter().rev().copied().collect();
        while let Some(node) = stack.pop() {
            if !self.graph.contains_node(node) || !self.graph.is_view_node(node) {
                continue;
            }
            let module = self.module_of(node)?;
            let dependents = self.graph.backward_marks(node);
            let marked = modes::execute_delete(module, self.graph, &BTreeSet::from([node]))?;
            self.report.deleted += 1;
            self.report.modules.entry(module.name.clone()).or_default().deleted += 1;
            self.trace("delete", &module.name, node, "deleted");
            changed.extend(marked);
            stack.extend(dependents.into_iter().rev());
        }
        self.report.time.delete_ms += ms(t);
        Ok(changed)
    }

    fn create_phase(&mut self, mut changed: BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>, MaintenanceError> {
        let t = Instant::now();
        let mut suspicious = BTreeSet::new();
        let engine = self.engine;
        for step in &engine.plan.steps {
            match step {
                PlanStep::Module(m) => {
                    self.run_create(m, &mut changed, &mut suspicious)?;
                }
                PlanStep::Cycle { modules, fixpoint } => {
                    let mut pass = 0;
                    loop {
                        pass += 1;
                        if pass > engine.loop_limit {
                            return Err(MaintenanceError::LoopLimit(engine.loop_limit));
                        }
                        self.report.cycle_passes += 1;
                        self.trace("cycle", fixpoint, pass, "pass");
                        let mut fix_created = 0;
                        for m in modules {
                            let n = self.run_create(m, &mut changed, &mut suspicious)?;
                            if m == fixpoint {
                                fix_created = n;
                            }
                        }
                        if fix_created == 0 {
                            break;
                        }
                    }
                }
            }
        }
        self.report.time.create_ms += ms(t);
        Ok(suspicious)
    }

    fn run_create(
        &mut self,
        name: &str,
        changed: &mut BTreeSet<NodeId>,
        suspicious: &mut BTreeSet<NodeId>,
    ) -> Result<usize, MaintenanceError> {
        let network = &self.engine.network;
        let module = network.module(name).expect("planned module exists");
        let candidates: Candidates = match self.scope {
            Scope::Incremental => reach::reachability_missing(self.graph, changed, module),
            Scope::Batch => reach::all_candidates(self.graph, module),
        };
        let size: usize = candidates.values().map(|s| s.len()).sum();
        let created = modes::execute_create(module, self.graph, &candidates)?;
        self.report.candidates += size;
        self.report.created += created.len();
        let counts = self.report.modules.entry(name.to_owned()).or_default();
        counts.runs += 1;
        counts.candidates += size;
        counts.created += created.len();
        for &c in &created {
            self.trace("create", name, c, "created");
        }
        if !created.is_empty() {
            for dep in network.dependents(name) {
                let dep = network.module(dep).expect("wired module exists");
                suspicious.extend(reach::reachability_suspicious(self.graph, &created, dep));
            }
        }
        changed.extend(created.iter().copied());
        Ok(created.len())
    }

    fn finish(mut self, started: Instant) -> Report {
        let types = self.graph.types().clone();
        self.report.candidate_universe = self
            .engine
            .network
            .modules()
            .iter()
            .flat_map(|m| m.inputs.iter().filter(|c| !c.negative))
            .map(|c| {
                types
                    .subtypes(c.required_type)
                    .map(|t| self.graph.nodes_of_exact_type(t).count())
                    .sum::<usize>()
            })
            .sum();
        self.report.time.total_ms = ms(started);
        self.report
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
