//! Incremental maintenance of view graphs over a typed base graph.
//!
//! A [`network::Network`] of view modules describes how marker nodes are
//! derived from a base graph. The [`maintenance::Engine`] keeps those
//! markers consistent with a stream of base-graph changes.

pub mod bench;
pub mod event;
pub mod example;
pub mod graph;
pub mod io;
pub mod lowering;
pub mod maintenance;
pub mod matcher;
pub mod modes;
pub mod network;
pub mod pattern;
pub mod plan;
pub mod rete;
pub mod synthetic;
pub mod types;
pub mod view;

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Types(#[from] types::TypeGraphError),
    #[error(transparent)]
    Pattern(#[from] pattern::PatternError),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Network(#[from] network::NetworkError),
    #[error(transparent)]
    Mode(#[from] modes::ModeError),
    #[error(transparent)]
    Maintenance(#[from] maintenance::MaintenanceError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
