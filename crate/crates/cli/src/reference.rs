//! Reference solutions for the global error, cached on disk.
//!
//! A cache file `<hash>.ref` holds the length as a little-endian `u64`
//! followed by the values as little-endian `f64`. The hash covers the
//! problem, its parameter, the grid size, the final time and the reference
//! method.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lekry_core::timestep::{adaptive_loop, LoopOptions};
use lekry_core::{Integrator, ProblemKind, Scheme};
use sha2::{Digest, Sha256};

pub const REFERENCE_TOL: f64 = 1e-12;
pub const REFERENCE_INTEGRATOR: Integrator = Integrator::Epirk5p1;
pub const REFERENCE_SCHEME: Scheme = Scheme::Kiops;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    Exact,
    Cache,
    /// Integrated now, with this many RHS evaluations.
    Computed(u64),
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
    tol: f64,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            tol: REFERENCE_TOL,
        }
    }

    /// Uses a different reference tolerance; it becomes part of the key.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(&self, problem: ProblemKind, param: f64, n: usize, t_final: f64) -> String {
        let text = format!(
            "lekry-reference-v1|{problem}|{param:.17e}|{n}|{t_final:.17e}|{REFERENCE_INTEGRATOR}|{REFERENCE_SCHEME}|{:.17e}",
            self.tol
        );
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.ref"))
    }

    /// Exact solution when the problem has one, else a cached or freshly
    /// computed high-accuracy run.
    pub fn get(&self, problem: ProblemKind, param: f64, n: usize, t_final: f64) -> Result<(Vec<f64>, ReferenceSource)> {
        let built = problem.build(param, n)?;
        if let Some(exact) = built.exact_solution(t_final) {
            return Ok((exact, ReferenceSource::Exact));
        }
        let path = self.path_for(&self.key(problem, param, n, t_final));
        if path.exists() {
            let u = read_ref(&path)?;
            if u.len() == built.dim() {
                return Ok((u, ReferenceSource::Cache));
            }
        }
        let mut opts = LoopOptions::new(self.tol);
        opts.t_final = Some(t_final);
        let out = adaptive_loop(built.as_ref(), REFERENCE_INTEGRATOR, REFERENCE_SCHEME, &opts).with_context(|| {
            format!(
                "reference run for {problem} (param {param}, n {n}) failed at tol {:e}; try a looser reference tolerance",
                self.tol
            )
        })?;
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        write_ref(&path, &out.u)?;
        Ok((out.u, ReferenceSource::Computed(out.stats.rhs_evals)))
    }
}

pub fn write_ref(path: &Path, u: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * (u.len() + 1));
    bytes.extend_from_slice(&(u.len() as u64).to_le_bytes());
    for x in u {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    // write beside the target and rename so readers never see a partial file
    let tmp = path.with_extension(format!("ref.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub fn read_ref(path: &Path) -> Result<Vec<f64>> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut head = [0u8; 8];
    f.read_exact(&mut head)?;
    let len = u64::from_le_bytes(head) as usize;
    let mut body = Vec::new();
    f.read_to_end(&mut body)?;
    if body.len() != 8 * len {
        bail!("{}: expected {len} values, found {} bytes", path.display(), body.len());
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

impl From<ReferenceSource> for &'static str {
    fn from(s: ReferenceSource) -> Self {
        match s {
            ReferenceSource::Exact => "exact",
            ReferenceSource::Cache => "cache",
            ReferenceSource::Computed(_) => "computed",
        }
    }
}

