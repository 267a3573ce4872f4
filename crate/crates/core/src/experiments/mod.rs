//! Named experiments E1 to E8 with config echo, CSV outputs and a JSON
//! report per run.
//!
//! Every tolerance is a config key with a default; the report echoes the
//! resolved value of every key that was read, so a report can be replayed.
//! Data CSVs depend only on the config (seed included), never on the worker
//! count or the clock.

mod config;
mod counting;
mod diophantine_suite;
mod identities;
mod moments;

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

pub use config::Config;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
}

impl ExperimentId {
    pub const ALL: [Self; 8] = [Self::E1, Self::E2, Self::E3, Self::E4, Self::E5, Self::E6, Self::E7, Self::E8];

    pub fn title(self) -> &'static str {
        match self {
            Self::E1 => "rational shift counting",
            Self::E2 => "congruence equidistribution",
            Self::E3 => "moment suite (n = 2)",
            Self::E4 => "index and orbit identities",
            Self::E5 => "Siegel transform as a sum of incomplete Eisenstein series",
            Self::E6 => "discrepancy statistics (n = 2)",
            Self::E7 => "irrational shift",
            Self::E8 => "Diophantine approximation suite",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// One verdict line of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    /// `abs` (|value - target| ≤ tolerance), `min` (value ≥ target) or
    /// `max` (value ≤ target).
    pub kind: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let pass = (value - target).abs() <= tolerance;
        Self { name: name.into(), value, target, tolerance, kind: "abs", pass }
    }

    pub fn at_least(name: impl Into<String>, value: f64, target: f64) -> Self {
        Self { name: name.into(), value, target, tolerance: 0.0, kind: "min", pass: value >= target }
    }

    pub fn at_most(name: impl Into<String>, value: f64, target: f64) -> Self {
        Self { name: name.into(), value, target, tolerance: 0.0, kind: "max", pass: value <= target }
    }

    /// Exact check: `failures` must be zero.
    pub fn exact(name: impl Into<String>, failures: usize) -> Self {
        Self::at_most(name, failures as f64, 0.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    pub title: &'static str,
    pub version: &'static str,
    pub config: std::collections::BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub pass: bool,
}

/// Output directory plus the list of files written into it.
pub(crate) struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub(crate) fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    /// Writes serialisable rows with a header from the field names.
    pub(crate) fn rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(name)?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What an experiment hands back before timing and config echo are added.
#[derive(Default)]
pub(crate) struct Findings {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

/// Runs one experiment on the current rayon pool and writes
/// `<id>_report.json` next to its CSVs.
pub fn run(id: ExperimentId, cfg: &Config, out_dir: &Path) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut out = Outputs::new(out_dir)?;
    let seed = cfg.seed()?;
    let findings = match id {
        ExperimentId::E1 => counting::e1(cfg, seed, &mut out)?,
        ExperimentId::E2 => counting::e2(cfg, seed, &mut out)?,
        ExperimentId::E3 => moments::e3(cfg, seed, &mut out)?,
        ExperimentId::E4 => identities::e4(cfg, seed, &mut out)?,
        ExperimentId::E5 => identities::e5(cfg, seed, &mut out)?,
        ExperimentId::E6 => moments::e6(cfg, seed, &mut out)?,
        ExperimentId::E7 => diophantine_suite::e7(cfg, seed, &mut out)?,
        ExperimentId::E8 => diophantine_suite::e8(cfg, seed, &mut out)?,
    };
    let mut notes = findings.notes;
    notes.push("empirical tolerances are finite-scale acceptance contracts, not statements about limits".into());
    let unused = cfg.unused();
    if !unused.is_empty() {
        notes.push(format!("config keys not read by {id}: {}", unused.join(", ")));
    }
    let report_name = format!("{}_report.json", id.to_string().to_lowercase());
    let mut outputs = out.files;
    outputs.push(report_name.clone());
    let report = ExperimentReport {
        experiment: id,
        title: id.title(),
        version: VERSION,
        config: cfg.resolved(),
        pass: findings.checks.iter().all(|c| c.pass),
        checks: findings.checks,
        notes,
        outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let f = BufWriter::new(File::create(out_dir.join(report_name))?);
    serde_json::to_writer_pretty(f, &report)?;
    Ok(report)
}

/// [`run`] on a dedicated pool of `workers` threads.
pub fn run_with_workers(id: ExperimentId, cfg: &Config, out_dir: &Path, workers: usize) -> Result<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run(id, cfg, out_dir))
}

/// Fraction of `true` in a slice (0 for an empty slice).
pub(crate) fn fraction(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64
}

pub(crate) fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// `count` seeded random forms; form `j` depends only on `(seed, j)`.
pub(crate) fn sample_forms(seed: u64, count: usize, n: usize, p1: usize, p2: usize) -> Result<Vec<crate::qforms::QuadraticForm>> {
    (0..count)
        .map(|j| crate::qforms::random_form(n, p1, p2, crate::rng::derive_seed(seed, j as u64 + 1)))
        .collect()
}

/// Signature keys `p1`, `p2` checked against `n`.
pub(crate) fn signature(cfg: &Config, n: usize, p1: usize, p2: usize) -> Result<(usize, usize, usize)> {
    let n = cfg.get("n", n)?;
    let p1 = cfg.get("p1", p1)?;
    let p2 = cfg.get("p2", p2)?;
    if p1 + p2 != n || p1 == 0 || p2 == 0 {
        return Err(Error::Config(format!("signature ({p1}, {p2}) must be indefinite with p1 + p2 = n = {n}")));
    }
    Ok((n, p1, p2))
}
