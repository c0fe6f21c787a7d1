use std::process::ExitCode;

use clap::Parser;
use lekry_cli::{run_sweep, write_csv, Cli, SweepConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = SweepConfig::from_cli(cli)?;
    for (i, s) in cfg.skipped_pairs() {
        eprintln!("note: {i} has no {s} scheme, skipping");
    }
    let runs = cfg.runs().len();
    eprintln!("running {runs} configurations, references in {}", cfg.ref_cache_dir.display());
    let outcome = run_sweep(&cfg)?;
    for r in outcome.records.iter().filter(|r| !r.succeeded()) {
        let c = &r.config;
        eprintln!(
            "failed: {} param {} n {} {}/{} tol {:e}: {}",
            c.problem,
            c.param,
            c.n,
            c.integrator,
            c.scheme,
            c.tol,
            r.error.as_deref().unwrap_or("")
        );
    }
    write_csv(&cfg.out, &outcome.records)?;
    let failures = outcome.failures();
    eprintln!("wrote {} rows to {} ({failures} failed)", outcome.records.len(), cfg.out.display());
    Ok(failures == 0)
}
