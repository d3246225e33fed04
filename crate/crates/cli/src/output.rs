use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use topoforge::error::Error;

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INTERNAL: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            error: error.into(),
        }
    }

    /// A bundled example no longer reproduces its expected numbers.
    pub fn regression(msg: impl std::fmt::Display) -> Self {
        Failure::internal(anyhow!("regression: {msg}"))
    }

    /// Bad input, bad arguments and I/O map to 1; numerical trouble to 2.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::NanValue(_)
            | Error::Coincident(_)
            | Error::FibonacciOverflow(_)
            | Error::OracleLimit(_) => Failure::internal(e),
            _ => Failure::input(e),
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))
        .map_err(Failure::input)?;
    tmp.write_all(contents)
        .and_then(|_| tmp.as_file().sync_all())
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::input)?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))
        .map_err(Failure::input)?;
    Ok(())
}
