use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use crate::runner::RunRecord;

pub const CSV_HEADER: [&str; 14] = [
    "problem",
    "param",
    "n",
    "integrator",
    "scheme",
    "tol",
    "steps_accepted",
    "steps_rejected",
    "rhs_evals",
    "leja_iters",
    "krylov_matvecs",
    "substeps",
    "wall_time_s",
    "l2_error",
];

/// Trailing column with the failure message; empty on success.
pub const ERROR_COLUMN: &str = "error";

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn record_fields(r: &RunRecord) -> Vec<String> {
    let c = &r.config;
    vec![
        c.problem.to_string(),
        fmt_float(c.param),
        c.n.to_string(),
        c.integrator.to_string(),
        c.scheme.to_string(),
        fmt_float(c.tol),
        r.steps_accepted.to_string(),
        r.steps_rejected.to_string(),
        r.rhs_evals.to_string(),
        r.leja_iters.to_string(),
        r.krylov_matvecs.to_string(),
        r.substeps.to_string(),
        fmt_float(r.wall_time_s),
        fmt_float(r.l2_error),
        r.error.clone().unwrap_or_default(),
    ]
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    header.push(ERROR_COLUMN);
    w.write_record(&header)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_records(std::io::BufWriter::new(f), records)
}
