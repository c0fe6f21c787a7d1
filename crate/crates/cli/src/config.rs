use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;
use lekry_core::{Integrator, ProblemKind, Scheme};
use serde::Deserialize;

pub const DEFAULT_TOLS: [f64; 7] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9];
pub const DEFAULT_GRID: usize = 64;

/// One adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub param: f64,
    pub n: usize,
    pub integrator: Integrator,
    pub scheme: Scheme,
    pub tol: f64,
    pub t_final: Option<f64>,
    pub seed: u64,
    /// Combine the cost controller with the accuracy controller.
    pub cost_controller: bool,
}

impl RunConfig {
    pub fn t_final(&self) -> f64 {
        self.t_final.unwrap_or_else(|| self.problem.t_final())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.integrator.supports(self.scheme) {
            bail!("{} has no {} scheme", self.integrator, self.scheme);
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            bail!("tolerance must be positive, got {}", self.tol);
        }
        if self.n < 2 {
            bail!("grid needs at least 2 points per dimension, got {}", self.n);
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0 && t.is_finite()) {
                bail!("final time must be positive, got {t}");
            }
        }
        if !self.problem.parameter_menu().iter().any(|p| (p - self.param).abs() <= 1e-12 * p.abs()) {
            bail!(
                "parameter {} not offered for {}; choose one of {:?}",
                self.param,
                self.problem,
                self.problem.parameter_menu()
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    #[default]
    Relative,
    Absolute,
}

/// The JSON document accepted by `--config`. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepFile {
    pub problems: Option<Vec<String>>,
    pub params: Option<Vec<f64>>,
    pub grids: Option<Vec<usize>>,
    pub integrators: Option<Vec<String>>,
    pub schemes: Option<Vec<String>>,
    pub tols: Option<Vec<f64>>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub ref_cache_dir: Option<PathBuf>,
    pub absolute_error: Option<bool>,
    pub cost_controller: Option<bool>,
    pub jobs: Option<usize>,
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "lekry", version, about = "Work-precision sweeps for Leja, KIOPS and LeKry exponential integrators")]
pub struct Cli {
    /// JSON sweep description; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub problem: Option<Vec<String>>,
    /// Problem parameter (diffusion coefficient); defaults to every value the problem offers.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Points per dimension.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub integrator: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub scheme: Option<Vec<String>>,
    #[arg(long, conflicts_with = "tols")]
    pub tol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub tols: Option<Vec<f64>>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub ref_cache_dir: Option<PathBuf>,
    /// Report the absolute instead of the relative l2 error.
    #[arg(long)]
    pub absolute_error: bool,
    /// Step with the accuracy controller alone.
    #[arg(long)]
    pub no_cost_controller: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Axes of a sweep after merging file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub problems: Vec<ProblemKind>,
    /// `None` runs every parameter each problem offers.
    pub params: Option<Vec<f64>>,
    pub grids: Vec<usize>,
    pub integrators: Vec<Integrator>,
    pub schemes: Vec<Scheme>,
    pub tols: Vec<f64>,
    pub t_final: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub ref_cache_dir: PathBuf,
    pub error_norm: ErrorNorm,
    pub cost_controller: bool,
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            problems: ProblemKind::ALL.to_vec(),
            params: None,
            grids: vec![DEFAULT_GRID],
            integrators: Integrator::ALL.to_vec(),
            schemes: Scheme::ALL.to_vec(),
            tols: DEFAULT_TOLS.to_vec(),
            t_final: None,
            seed: 0,
            out: PathBuf::from("results.csv"),
            ref_cache_dir: PathBuf::from(".lekry-ref"),
            error_norm: ErrorNorm::Relative,
            cost_controller: true,
            jobs: None,
        }
    }
}

fn parse_all<T: std::str::FromStr>(names: &[String], what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    names
        .iter()
        .map(|s| s.trim().parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} {s:?}: {e}")))
        .collect()
}

impl SweepConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => SweepFile::load(path)?,
            None => SweepFile::default(),
        };
        let mut cfg = Self::default().merge(file)?;
        let flags = SweepFile {
            problems: cli.problem.clone(),
            params: cli.alpha.clone(),
            grids: cli.grid.clone(),
            integrators: cli.integrator.clone(),
            schemes: cli.scheme.clone(),
            tols: cli.tols.clone().or(cli.tol.map(|t| vec![t])),
            t_final: cli.t_final,
            seed: cli.seed,
            out: cli.out.clone(),
            ref_cache_dir: cli.ref_cache_dir.clone(),
            absolute_error: cli.absolute_error.then_some(true),
            cost_controller: cli.no_cost_controller.then_some(false),
            jobs: cli.jobs,
        };
        cfg = cfg.merge(flags)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Overrides fields that `file` sets.
    pub fn merge(mut self, file: SweepFile) -> Result<Self> {
        if let Some(p) = file.problems {
            self.problems = parse_all(&p, "problem")?;
        }
        if let Some(p) = file.params {
            self.params = Some(p);
        }
        if let Some(g) = file.grids {
            self.grids = g;
        }
        if let Some(i) = file.integrators {
            self.integrators = parse_all(&i, "integrator")?;
        }
        if let Some(s) = file.schemes {
            self.schemes = parse_all(&s, "scheme")?;
        }
        if let Some(t) = file.tols {
            self.tols = t;
        }
        if file.t_final.is_some() {
            self.t_final = file.t_final;
        }
        if let Some(s) = file.seed {
            self.seed = s;
        }
        if let Some(o) = file.out {
            self.out = o;
        }
        if let Some(d) = file.ref_cache_dir {
            self.ref_cache_dir = d;
        }
        if let Some(a) = file.absolute_error {
            self.error_norm = if a { ErrorNorm::Absolute } else { ErrorNorm::Relative };
        }
        if let Some(c) = file.cost_controller {
            self.cost_controller = c;
        }
        if file.jobs.is_some() {
            self.jobs = file.jobs;
        }
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        if self.problems.is_empty() || self.grids.is_empty() || self.integrators.is_empty() || self.schemes.is_empty() || self.tols.is_empty() {
            bail!("every sweep axis needs at least one value");
        }
        for run in self.runs() {
            run.validate()?;
        }
        Ok(())
    }

    /// Cartesian product in the order problem, param, n, integrator,
    /// scheme, tol. Undefined integrator/scheme pairs are left out.
    pub fn runs(&self) -> Vec<RunConfig> {
        let mut runs = Vec::new();
        for &problem in &self.problems {
            let params = self.params.clone().unwrap_or_else(|| problem.parameter_menu().to_vec());
            for &param in &params {
                for &n in &self.grids {
                    for &integrator in &self.integrators {
                        for &scheme in &self.schemes {
                            if !integrator.supports(scheme) {
                                continue;
                            }
                            for &tol in &self.tols {
                                runs.push(RunConfig {
                                    problem,
                                    param,
                                    n,
                                    integrator,
                                    scheme,
                                    tol,
                                    t_final: self.t_final,
                                    seed: self.seed,
                                    cost_controller: self.cost_controller,
                                });
                            }
                        }
                    }
                }
            }
        }
        runs
    }

    /// Integrator/scheme pairs that the product skips.
    pub fn skipped_pairs(&self) -> Vec<(Integrator, Scheme)> {
        let mut out = Vec::new();
        for &i in &self.integrators {
            for &s in &self.schemes {
                if !i.supports(s) {
                    out.push((i, s));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::parse_from(std::iter::once("lekry").chain(args.iter().copied()))
    }

    #[test]
    fn counting_product() {
        let c = SweepConfig::from_cli(&cli(&["--problem", "adr", "--alpha", "0.01", "--integrator", "epirk4s3", "--scheme", "leja,kiops"])).unwrap();
        assert_eq!(c.runs().len(), 14);
    }

    #[test]
    fn lekry_pairs_are_skipped() {
        let c = SweepConfig::from_cli(&cli(&["--problem", "semilinear", "--scheme", "lekry", "--tol", "1e-6"])).unwrap();
        let runs = c.runs();
        assert_eq!(runs.len(), 3);
        assert!(runs.iter().all(|r| r.integrator.supports(Scheme::LeKry)));
        assert_eq!(c.skipped_pairs().len(), 2);
    }

    #[test]
    fn default_params_follow_menu() {
        let c = SweepConfig::from_cli(&cli(&["--problem", "brusselator", "--integrator", "exprb43", "--scheme", "kiops", "--tol", "1e-5"])).unwrap();
        let params: Vec<f64> = c.runs().iter().map(|r| r.param).collect();
        assert_eq!(params, vec![1e-1, 1e-2, 1e-3]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SweepConfig::from_cli(&cli(&["--problem", "heat"])).is_err());
        assert!(SweepConfig::from_cli(&cli(&["--problem", "adr", "--alpha", "0.5"])).is_err());
        assert!(SweepConfig::from_cli(&cli(&["--problem", "adr", "--tol=-1"])).is_err());
        assert!(Cli::try_parse_from(["lekry", "--tol", "1e-3", "--tols", "1e-4"]).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.json");
        fs::write(&path, r#"{"problems": ["adr"], "params": [0.1], "grids": [32], "tols": [1e-4, 1e-5], "seed": 7}"#).unwrap();
        let c = SweepConfig::from_cli(&cli(&["--config", path.to_str().unwrap(), "--grid", "16"])).unwrap();
        assert_eq!(c.grids, vec![16]);
        assert_eq!(c.tols, vec![1e-4, 1e-5]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.params, Some(vec![0.1]));
    }

    #[test]
    fn unknown_json_fields_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.json");
        fs::write(&path, r#"{"problem": "adr"}"#).unwrap();
        assert!(SweepFile::load(&path).is_err());
    }
}
