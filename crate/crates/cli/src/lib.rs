//! Batch front end for factorial moment expansion experiments: series,
//! simulation, comparison sweeps and the Nakagami term tables, written as
//! plot-ready CSV.

pub mod args;
pub mod error;
pub mod output;
pub mod run;
pub mod spec;

use std::fs::File;
use std::io::{self, BufWriter};

pub use error::{CliError, Result};
pub use output::ResultRow;
pub use spec::ExperimentSpec;

/// Runs the experiment and writes its CSV to `spec.out` or stdout. Returns
/// the number of rows that failed.
pub fn execute(spec: &ExperimentSpec) -> Result<usize> {
    let rows = run::run(spec)?;
    match &spec.out {
        Some(path) => output::write_csv(BufWriter::new(File::create(path)?), spec.seed, &rows)?,
        None => output::write_csv(io::stdout().lock(), spec.seed, &rows)?,
    }
    let failed = rows.iter().filter(|r| r.status.starts_with("error")).count();
    if !rows.is_empty() && failed == rows.len() {
        return Err(CliError::Numeric(format!("all {failed} rows failed")));
    }
    Ok(failed)
}
