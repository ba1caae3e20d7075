//! Per-partition results and the run report.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::NeuronBounds;
use crate::domain::InputBox;
use crate::error::{Error, Result};
use crate::partition::{accumulate_over, AttributeChunks, HasStatus, Status, Verdict};
use crate::prune::{NeuronId, Provenance};
use crate::query::QueryFile;

/// A pair of inputs the network treats differently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub xp: Vec<f64>,
    /// Exact solver values as `p/q` strings.
    pub x_exact: Vec<String>,
    pub xp_exact: Vec<String>,
    /// Logits of the original network.
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    /// Violation confirmed on the original network in exact arithmetic.
    pub valid_exact: bool,
    /// Violation confirmed by the floating-point `classify` check.
    pub valid_float: bool,
    /// Found on a heuristically pruned network.
    pub from_heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedNeuron {
    pub layer: usize,
    pub index: usize,
    pub provenance: Provenance,
}

impl RemovedNeuron {
    pub fn id(&self) -> NeuronId {
        NeuronId::new(self.layer, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub id: u64,
    /// Position in the shuffled visiting order.
    pub order: u64,
    pub region: InputBox,
    pub status: Status,
    pub counterexample: Option<Counterexample>,
    pub compression_sound: f64,
    pub compression_heuristic: Option<f64>,
    pub t_sound: f64,
    pub t_heuristic: Option<f64>,
    pub heuristic_attempted: bool,
    pub heuristic_succeeded: bool,
    /// Status of the sound stage alone.
    pub sound_status: Status,
    pub removed: Vec<RemovedNeuron>,
    pub linearized: usize,
    pub iv_queries: u64,
    /// The solver was killed at the external deadline in some query.
    pub killed: bool,
    /// Longest single split query, seconds.
    pub max_query_s: f64,
    pub notes: Vec<String>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<NeuronBounds>,
}

impl HasStatus for PartitionResult {
    fn status(&self) -> Status {
        self.status
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tool: String,
    pub tool_version: String,
    pub solver: PathBuf,
    pub solver_args: Vec<String>,
    pub solver_version: Option<String>,
    pub seed: u64,
    pub jobs: usize,
}

/// Settings a run was made with, enough to replay any partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub soft_timeout_s: f64,
    pub hard_timeout_s: f64,
    pub max_attribute_size: u64,
    pub seed: u64,
    pub heuristic: bool,
    pub tolerance_pct: f64,
    pub profile_size: usize,
    pub individual_verification: bool,
    pub iv_timeout_s: f64,
    pub grace_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub partitions: u64,
    pub attempted: u64,
    pub sat: u64,
    pub unsat: u64,
    pub unknown: u64,
    pub heuristic_attempted: u64,
    pub heuristic_succeeded: u64,
    pub avg_compression_sound: f64,
    pub avg_compression_heuristic: f64,
    pub avg_t_sound: f64,
    pub avg_t_heuristic: f64,
    pub errors: u64,
    pub total_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model_path: Option<PathBuf>,
    pub query: QueryFile,
    pub settings: RunSettings,
    pub environment: Environment,
    pub partitioning: Vec<AttributeChunks>,
    pub verdict: Status,
    /// Partition id of the first counterexample in visiting order.
    pub first_sat: Option<u64>,
    /// Decided partitions over attempted partitions, percent.
    pub coverage_pct: f64,
    /// Decided partitions over all partitions, percent.
    pub domain_coverage_pct: f64,
    pub hard_timeout_hit: bool,
    pub stopped_on_sat: bool,
    pub totals: Totals,
    pub results: Vec<PartitionResult>,
    pub notes: Vec<String>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Sums the per-partition fields. Averages include partitions that timed out.
pub fn totals(results: &[PartitionResult], partitions: u64, total_time_s: f64) -> Totals {
    let count = |s: Status| results.iter().filter(|r| r.status == s).count() as u64;
    Totals {
        partitions,
        attempted: results.len() as u64,
        sat: count(Status::Sat),
        unsat: count(Status::Unsat),
        unknown: count(Status::Unknown),
        heuristic_attempted: results.iter().filter(|r| r.heuristic_attempted).count() as u64,
        heuristic_succeeded: results.iter().filter(|r| r.heuristic_succeeded).count() as u64,
        avg_compression_sound: mean(results.iter().map(|r| r.compression_sound)),
        avg_compression_heuristic: mean(results.iter().filter_map(|r| r.compression_heuristic)),
        avg_t_sound: mean(results.iter().map(|r| r.t_sound)),
        avg_t_heuristic: mean(results.iter().filter_map(|r| r.t_heuristic)),
        errors: results.iter().filter(|r| r.error.is_some()).count() as u64,
        total_time_s,
    }
}

impl RunReport {
    /// Verdict recomputed from the results.
    pub fn accumulated(&self) -> Verdict {
        accumulate_over(&self.results, self.totals.partitions)
    }

    pub fn result(&self, id: u64) -> Option<&PartitionResult> {
        self.results.iter().find(|r| r.id == id)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Replay(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Process exit code: 0 unsat, 1 sat, 2 unknown, 3 unknown with errors.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Status::Unsat => 0,
            Status::Sat => 1,
            Status::Unknown if self.totals.errors > 0 => 3,
            Status::Unknown => 2,
        }
    }

    /// One-row summary table.
    pub fn summary_table(&self) -> String {
        let t = &self.totals;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>7} {:>5} {:>6} {:>5} {:>5} {:>5} {:>5} {:>5} {:>8} {:>8} {:>9} {:>7} {:>8}",
            "#P", "sat", "us", "un", "H", "HS", "C(S)", "C(H)", "SV", "HV", "Tot", "Cov", "Result"
        );
        let _ = writeln!(
            s,
            "{:>7} {:>5} {:>6} {:>5} {:>5} {:>5} {:>5.2} {:>5.2} {:>8.2} {:>8.2} {:>9.1} {:>6.1}% {:>8}",
            t.partitions,
            t.sat,
            t.unsat,
            t.unknown,
            t.heuristic_attempted,
            t.heuristic_succeeded,
            t.avg_compression_sound,
            t.avg_compression_heuristic,
            t.avg_t_sound,
            t.avg_t_heuristic,
            t.total_time_s,
            self.domain_coverage_pct,
            self.verdict.to_string()
        );
        if t.attempted < t.partitions {
            let _ = writeln!(
                s,
                "attempted {} of {} partitions ({:.1}% of attempted decided)",
                t.attempted, t.partitions, self.coverage_pct
            );
        }
        if let Some(id) = self.first_sat {
            if let Some(c) = self.result(id).and_then(|r| r.counterexample.as_ref()) {
                let _ = writeln!(s, "counterexample in partition {id}:");
                let _ = writeln!(s, "  x  = {:?}", c.x);
                let _ = writeln!(s, "  x' = {:?}", c.xp);
            }
        }
        if t.errors > 0 {
            let _ = writeln!(s, "{} partition(s) hit solver errors", t.errors);
        }
        s
    }
}
