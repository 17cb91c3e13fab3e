//! Exit codes. Usage errors exit with 2 (clap's default).

use std::fmt;
use std::path::Path;

use graphview::bench::BenchError;
use graphview::io::IoError;
use graphview::maintenance::MaintenanceError;
use graphview::network::NetworkError;
use graphview::{graph::GraphError, modes::ModeError};

pub const IO: u8 = 1;
pub const PARSE: u8 = 3;
pub const VALIDATION: u8 = 4;
pub const LOOP_LIMIT: u8 = 5;
pub const MISMATCH: u8 = 6;

/// Incremental and from-scratch results differ.
#[derive(Debug)]
pub struct Mismatch {
    pub context: String,
    pub details: Vec<String>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "view layer differs from recomputation {}:", self.context)?;
        for d in &self.details {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Mismatch {}

/// Input rejected by a command's own checks.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn parse_error(path: &Path, e: serde_json::Error) -> IoError {
    IoError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn maintenance(e: &MaintenanceError) -> u8 {
    match e {
        MaintenanceError::LoopLimit(_) => LOOP_LIMIT,
        _ => VALIDATION,
    }
}

fn bench(e: &BenchError) -> u8 {
    match e {
        BenchError::Maintenance(m) => maintenance(m),
        BenchError::Mismatch { .. } | BenchError::Unstable { .. } => MISMATCH,
        BenchError::Csv(_) => IO,
        _ => VALIDATION,
    }
}

fn io(e: &IoError) -> u8 {
    match e {
        IoError::Io { .. } => IO,
        IoError::Parse { .. } => PARSE,
        _ => VALIDATION,
    }
}

pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<IoError>() {
            return io(e);
        }
        if let Some(e) = cause.downcast_ref::<MaintenanceError>() {
            return maintenance(e);
        }
        if let Some(e) = cause.downcast_ref::<BenchError>() {
            return bench(e);
        }
        if cause.is::<Mismatch>() {
            return MISMATCH;
        }
        if cause.is::<serde_json::Error>() {
            return PARSE;
        }
        if cause.is::<Invalid>()
            || cause.is::<NetworkError>()
            || cause.is::<GraphError>()
            || cause.is::<ModeError>()
        {
            return VALIDATION;
        }
        if cause.is::<std::io::Error>() {
            return IO;
        }
    }
    IO
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_errors_map_to_their_codes() {
        let e = anyhow::Error::from(BenchError::Maintenance(MaintenanceError::LoopLimit(3)));
        assert_eq!(code(&e), LOOP_LIMIT);
        let e = anyhow::Error::from(BenchError::Mismatch {
            workload: "w".into(),
            details: vec!["- X".into()],
        });
        assert_eq!(code(&e), MISMATCH);
        let e = anyhow::Error::from(Mismatch {
            context: "after batch 1".into(),
            details: Vec::new(),
        })
        .context("maintain");
        assert_eq!(code(&e), MISMATCH);
        let e = anyhow::Error::from(MaintenanceError::Network(NetworkError::Recursive));
        assert_eq!(code(&e), VALIDATION);
    }
}
