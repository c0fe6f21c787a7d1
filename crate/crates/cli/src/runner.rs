use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::Result;
use lekry_core::linalg::{dist_l2, norm_l2};
use lekry_core::timestep::{adaptive_loop, LoopOptions};
use rayon::prelude::*;

use crate::config::{ErrorNorm, RunConfig, SweepConfig};
use crate::reference::ReferenceCache;

/// Outcome of one run; counters are zero and `l2_error` is NaN when it
/// failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: u64,
    pub leja_iters: usize,
    pub krylov_matvecs: usize,
    pub substeps: usize,
    pub wall_time_s: f64,
    pub l2_error: f64,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn failed(config: RunConfig, error: String) -> Self {
        Self {
            config,
            steps_accepted: 0,
            steps_rejected: 0,
            rhs_evals: 0,
            leja_iters: 0,
            krylov_matvecs: 0,
            substeps: 0,
            wall_time_s: 0.0,
            l2_error: f64::NAN,
            error: Some(error),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

pub fn run_one(config: &RunConfig, reference: &[f64], norm: ErrorNorm) -> RunRecord {
    let start = Instant::now();
    let attempt = || -> Result<RunRecord> {
        config.validate()?;
        let problem = config.problem.build(config.param, config.n)?;
        let mut opts = LoopOptions::new(config.tol);
        opts.t_final = config.t_final;
        opts.spectrum.seed = config.seed;
        opts.use_cost_controller = config.cost_controller;
        let out = adaptive_loop(problem.as_ref(), config.integrator, config.scheme, &opts)?;
        let diff = dist_l2(&out.u, reference)?;
        let l2_error = match norm {
            ErrorNorm::Relative => diff / norm_l2(reference),
            ErrorNorm::Absolute => diff,
        };
        Ok(RunRecord {
            config: config.clone(),
            steps_accepted: out.stats.steps_accepted,
            steps_rejected: out.stats.steps_rejected,
            rhs_evals: out.stats.rhs_evals,
            leja_iters: out.stats.leja_iters,
            krylov_matvecs: out.stats.krylov_matvecs,
            substeps: out.stats.substeps,
            wall_time_s: 0.0,
            l2_error,
            error: None,
        })
    };
    let mut record = attempt().unwrap_or_else(|e| RunRecord::failed(config.clone(), format!("{e:#}")));
    record.wall_time_s = start.elapsed().as_secs_f64();
    record
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// In product order, independent of scheduling.
    pub records: Vec<RunRecord>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.succeeded()).count()
    }
}

type RefKey = (usize, u64, usize, u64);

fn ref_key(r: &RunConfig) -> RefKey {
    let kind = lekry_core::ProblemKind::ALL.iter().position(|k| *k == r.problem).unwrap_or(usize::MAX);
    (kind, r.param.to_bits(), r.n, r.t_final().to_bits())
}

/// Builds missing references, then runs every configuration.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    let runs = cfg.runs();
    let cache = ReferenceCache::new(&cfg.ref_cache_dir);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs.unwrap_or(0)).build()?;

    let mut wanted: BTreeMap<RefKey, &RunConfig> = BTreeMap::new();
    for r in &runs {
        wanted.entry(ref_key(r)).or_insert(r);
    }
    let wanted: Vec<(RefKey, &RunConfig)> = wanted.into_iter().collect();
    let references: BTreeMap<RefKey, Result<Vec<f64>, String>> = pool.install(|| {
        wanted
            .par_iter()
            .map(|(key, r)| {
                let built = cache
                    .get(r.problem, r.param, r.n, r.t_final())
                    .map(|(u, _)| u)
                    .map_err(|e| format!("reference: {e:#}"));
                (*key, built)
            })
            .collect()
    });

    let records = pool.install(|| {
        runs.par_iter()
            .map(|r| match &references[&ref_key(r)] {
                Ok(u) => run_one(r, u, cfg.error_norm),
                Err(e) => RunRecord::failed(r.clone(), e.clone()),
            })
            .collect()
    });
    Ok(SweepOutcome { records })
}
