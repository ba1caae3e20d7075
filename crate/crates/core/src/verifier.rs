//! Run orchestration: partition, prune, solve, escalate to heuristic
//! pruning on timeout, and aggregate.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::bounds::neuron_bounds;
use crate::domain::InputBox;
use crate::error::{Error, Result};
use crate::model::{self, load_network, save_network, Network};
use crate::partition::{accumulate_over, partition, Partition, PartitionSet, Status};
use crate::prune::{
    compression_ratio, heuristic_prune, profile, sound_prune, NeuronId, Provenance, PrunedNetwork,
};
use crate::query::{
    build_predicate, check_counterexample, check_counterexample_exact, FairnessPredicate,
    FairnessQuery, QueryFile,
};
use crate::report::{
    totals, Counterexample, Environment, PartitionResult, RemovedNeuron, RunReport, RunSettings,
};
use crate::smt::rational::to_f64;
use crate::smt::solver::{solver_version, SolverConfig};
use crate::smt::{encode, extract_pair, solve, EncodeOptions, IndividualVerifier, SolverOutcome};

pub const DEFAULT_TOLERANCE_PCT: f64 = 5.0;
pub const DEFAULT_PROFILE_SIZE: usize = 1000;
pub const DEFAULT_IV_TIMEOUT_S: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub solver: SolverConfig,
    pub jobs: usize,
    /// Overrides the query's soft timeout.
    pub soft_timeout_s: Option<f64>,
    /// Overrides the query's hard timeout.
    pub hard_timeout_s: Option<f64>,
    /// Overrides the query's maximum attribute size.
    pub ms: Option<u64>,
    pub seed: u64,
    pub stop_on_sat: bool,
    pub heuristic: bool,
    pub tolerance_pct: f64,
    pub profile_size: usize,
    pub individual_verification: bool,
    pub iv_timeout_s: f64,
    pub bound_hints: bool,
    pub dump_smt: Option<PathBuf>,
    pub dump_bounds: bool,
    /// Progress lines on stderr.
    pub progress: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            solver: SolverConfig::from_env(),
            jobs: 1,
            soft_timeout_s: None,
            hard_timeout_s: None,
            ms: None,
            seed: 0,
            stop_on_sat: false,
            heuristic: true,
            tolerance_pct: DEFAULT_TOLERANCE_PCT,
            profile_size: DEFAULT_PROFILE_SIZE,
            individual_verification: true,
            iv_timeout_s: DEFAULT_IV_TIMEOUT_S,
            bound_hints: true,
            dump_smt: None,
            dump_bounds: false,
            progress: false,
        }
    }
}

/// A prepared verification problem.
pub struct Verifier {
    net: Arc<Network>,
    query: FairnessQuery,
    pred: FairnessPredicate,
    partitions: PartitionSet,
    opts: VerifyOptions,
    settings: RunSettings,
    model_path: Option<PathBuf>,
}

/// Seed for everything random in one partition.
pub fn partition_seed(seed: u64, id: u64) -> u64 {
    let mut z = seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Verifier {
    pub fn new(net: Network, query: FairnessQuery, opts: VerifyOptions) -> Result<Self> {
        Self::with_shared(Arc::new(net), query, opts)
    }

    pub fn with_shared(net: Arc<Network>, mut query: FairnessQuery, opts: VerifyOptions) -> Result<Self> {
        if let Some(s) = opts.soft_timeout_s {
            query.soft_timeout_s = s;
        }
        if let Some(h) = opts.hard_timeout_s {
            query.hard_timeout_s = h;
        }
        if let Some(ms) = opts.ms {
            query.max_attribute_size = ms;
        }
        let schema = net.schema()?.clone();
        let pred = build_predicate(&query, &schema, &net)?;
        let partitions = partition(&pred.domain_box, &query, opts.seed);
        let settings = RunSettings {
            soft_timeout_s: query.soft_timeout_s,
            hard_timeout_s: query.hard_timeout_s,
            max_attribute_size: query.max_attribute_size,
            seed: opts.seed,
            heuristic: opts.heuristic,
            tolerance_pct: opts.tolerance_pct,
            profile_size: opts.profile_size,
            individual_verification: opts.individual_verification,
            iv_timeout_s: opts.iv_timeout_s,
            grace_s: opts.solver.grace_s,
        };
        Ok(Verifier {
            net,
            query,
            pred,
            partitions,
            opts,
            settings,
            model_path: None,
        })
    }

    /// Loads the model and query files.
    pub fn from_files(model_path: &Path, query_path: &Path, opts: VerifyOptions) -> Result<Self> {
        let net = load_network(model_path)?;
        let qf = QueryFile::load(query_path)?;
        let query = qf.resolve(net.schema()?)?;
        let mut v = Self::new(net, query, opts)?;
        v.model_path = Some(std::fs::canonicalize(model_path).unwrap_or_else(|_| model_path.to_path_buf()));
        Ok(v)
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.net
    }

    pub fn query(&self) -> &FairnessQuery {
        &self.query
    }

    pub fn predicate(&self) -> &FairnessPredicate {
        &self.pred
    }

    pub fn partitions(&self) -> &PartitionSet {
        &self.partitions
    }

    pub fn options(&self) -> &VerifyOptions {
        &self.opts
    }

    fn encode_opts(&self, seed: u64, timeout_s: f64) -> EncodeOptions {
        EncodeOptions {
            seed,
            timeout_s: Some(timeout_s),
            bound_hints: self.opts.bound_hints,
        }
    }

    fn dump(&self, id: u64, stage: &str, text: &str, notes: &mut Vec<String>) {
        if let Some(dir) = &self.opts.dump_smt {
            let path = dir.join(format!("p{id}_{stage}.smt2"));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, text)) {
                notes.push(format!("could not write {}: {e}", path.display()));
            }
        }
    }

    /// Encodes and solves `p`, returning the outcome or an error message.
    fn solve_pruned(
        &self,
        p: &PrunedNetwork,
        id: u64,
        stage: &str,
        timeout_s: f64,
        notes: &mut Vec<String>,
    ) -> Result<SolverOutcome> {
        let seed = partition_seed(self.opts.seed, id);
        let script = encode(p, &self.pred, &p.region, &self.encode_opts(seed, timeout_s))?;
        self.dump(id, stage, &script.text(), notes);
        solve(&script, &self.opts.solver, timeout_s)
    }

    fn counterexample(&self, outcome: &SolverOutcome, region: &InputBox, from_heuristic: bool) -> Result<Counterexample> {
        let model = outcome
            .model
            .as_ref()
            .ok_or_else(|| Error::Protocol("sat without a model".into()))?;
        let (x, xp) = extract_pair(model, region)?;
        Ok(self.make_counterexample(&x, &xp, from_heuristic))
    }

    fn make_counterexample(&self, x: &[BigRational], xp: &[BigRational], from_heuristic: bool) -> Counterexample {
        let xf: Vec<f64> = x.iter().map(to_f64).collect();
        let xpf: Vec<f64> = xp.iter().map(to_f64).collect();
        let y = model::forward(&self.net, &xf).unwrap_or_default();
        let yp = model::forward(&self.net, &xpf).unwrap_or_default();
        Counterexample {
            valid_exact: check_counterexample_exact(&self.pred, &self.net, x, xp),
            valid_float: check_counterexample(&self.pred, &self.net, &xf, &xpf),
            x: xf,
            xp: xpf,
            x_exact: x.iter().map(ToString::to_string).collect(),
            xp_exact: xp.iter().map(ToString::to_string).collect(),
            y,
            yp,
            from_heuristic,
        }
    }

    /// Sound pruning of one region, with per-neuron queries when enabled.
    pub fn sound_pruning(&self, region: &InputBox, iv: Option<&mut IndividualVerifier>) -> PrunedNetwork {
        let bounds = neuron_bounds(&self.net, region);
        sound_prune(&self.net, region, &bounds, iv)
    }

    /// Heuristic pruning on top of `sound`, seeded per partition.
    pub fn heuristic_pruning(&self, sound: &PrunedNetwork, id: u64) -> PrunedNetwork {
        let prof = profile(
            &self.net,
            &sound.region,
            self.opts.profile_size.max(1),
            partition_seed(self.opts.seed, id),
        );
        heuristic_prune(sound, &prof, self.opts.tolerance_pct)
    }

    fn new_iv(&self) -> Option<IndividualVerifier> {
        if !self.opts.individual_verification {
            return None;
        }
        let timeout = self.opts.iv_timeout_s.min(self.query.soft_timeout_s);
        IndividualVerifier::new(&self.opts.solver, timeout).ok()
    }

    /// Runs the whole pipeline on one partition. `deadline` bounds the solver
    /// time; nothing is started past it.
    pub fn verify_partition(
        &self,
        part: &Partition,
        order: u64,
        mut iv: Option<&mut IndividualVerifier>,
        deadline: Option<Instant>,
    ) -> PartitionResult {
        let start = Instant::now();
        let soft = self.query.soft_timeout_s;
        let budget = |now: Instant| -> f64 {
            match deadline {
                Some(d) => d.saturating_duration_since(now).as_secs_f64().min(soft),
                None => soft,
            }
        };
        let mut notes = Vec::new();
        let iv_before = iv.as_ref().map(|v| v.stats.queries).unwrap_or(0);
        let sound = self.sound_pruning(&part.region, iv.as_deref_mut());
        let iv_queries = iv.as_ref().map(|v| v.stats.queries).unwrap_or(0) - iv_before;
        let mut result = PartitionResult {
            id: part.id,
            order,
            region: part.region.clone(),
            status: Status::Unknown,
            counterexample: None,
            compression_sound: compression_ratio(&sound),
            compression_heuristic: None,
            t_sound: 0.0,
            t_heuristic: None,
            heuristic_attempted: false,
            heuristic_succeeded: false,
            sound_status: Status::Unknown,
            removed: removed_list(&sound),
            linearized: sound.linearized.len(),
            iv_queries,
            killed: false,
            max_query_s: 0.0,
            notes: Vec::new(),
            error: None,
            bounds: self.opts.dump_bounds.then(|| sound.bounds.clone()),
        };

        let t = budget(Instant::now());
        if t <= 0.0 {
            notes.push("hard deadline reached before solving".into());
        } else {
            match self.solve_pruned(&sound, part.id, "sound", t, &mut notes) {
                Ok(o) => {
                    result.killed |= o.killed;
                    result.max_query_s = result.max_query_s.max(o.wall_time_s);
                    result.sound_status = o.status;
                    match o.status {
                        Status::Unsat => result.status = Status::Unsat,
                        Status::Sat => match self.counterexample(&o, &part.region, false) {
                            Ok(c) if c.valid_exact => {
                                result.status = Status::Sat;
                                result.counterexample = Some(c);
                            }
                            Ok(c) => {
                                result.error = Some("counterexample failed exact replay".into());
                                result.counterexample = Some(c);
                            }
                            Err(e) => result.error = Some(e.to_string()),
                        },
                        Status::Unknown => {}
                    }
                }
                Err(e) => result.error = Some(e.to_string()),
            }
        }
        result.t_sound = start.elapsed().as_secs_f64();

        if result.status == Status::Unknown && result.error.is_none() && self.opts.heuristic {
            let now = Instant::now();
            let t = budget(now);
            if t > 0.0 {
                result.heuristic_attempted = true;
                let heur = self.heuristic_pruning(&sound, part.id);
                result.compression_heuristic = Some(compression_ratio(&heur));
                result.removed = removed_list(&heur);
                if heur.removed_count() == sound.removed_count() {
                    notes.push("heuristic pruning found no further neurons".into());
                } else {
                    match self.solve_pruned(&heur, part.id, "heuristic", t, &mut notes) {
                        Ok(o) => {
                            result.killed |= o.killed;
                            result.max_query_s = result.max_query_s.max(o.wall_time_s);
                            match o.status {
                                Status::Unsat => {
                                    result.status = Status::Unsat;
                                    result.heuristic_succeeded = true;
                                }
                                Status::Sat => match self.counterexample(&o, &part.region, true) {
                                    Ok(c) if c.valid_exact => {
                                        result.status = Status::Sat;
                                        result.heuristic_succeeded = true;
                                        result.counterexample = Some(c);
                                    }
                                    Ok(c) => {
                                        notes.push(
                                            "heuristic counterexample does not violate the original network".into(),
                                        );
                                        result.counterexample = Some(c);
                                    }
                                    Err(e) => result.error = Some(e.to_string()),
                                },
                                Status::Unknown => {}
                            }
                        }
                        Err(e) => result.error = Some(e.to_string()),
                    }
                }
                result.t_heuristic = Some(now.elapsed().as_secs_f64());
            }
        }
        result.notes = notes;
        result
    }

    /// Verifies every partition (or until the hard timeout / first SAT).
    pub fn run(&self) -> RunReport {
        let start = Instant::now();
        let deadline = start + Duration::from_secs_f64(self.query.hard_timeout_s.max(0.0));
        let total = self.partitions.len();
        let next = AtomicU64::new(0);
        let stop = AtomicBool::new(false);
        let timed_out = AtomicBool::new(false);
        let results: Mutex<Vec<PartitionResult>> = Mutex::new(Vec::new());
        let jobs = self.opts.jobs.max(1);
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(|| {
                    let mut iv = self.new_iv();
                    loop {
                        if stop.load(Ordering::SeqCst) {
                            break;
                        }
                        if Instant::now() >= deadline {
                            timed_out.store(true, Ordering::SeqCst);
                            break;
                        }
                        let k = next.fetch_add(1, Ordering::SeqCst);
                        if k >= total {
                            break;
                        }
                        let id = self.partitions.shuffled_id(k);
                        let part = self.partitions.get(id).expect("id in range");
                        let r = self.verify_partition(&part, k, iv.as_mut(), Some(deadline));
                        if self.opts.progress {
                            eprintln!(
                                "[{:>8.1}s] partition {id} ({}/{total}): {}",
                                start.elapsed().as_secs_f64(),
                                k + 1,
                                r.status
                            );
                        }
                        if r.status == Status::Sat && self.opts.stop_on_sat {
                            stop.store(true, Ordering::SeqCst);
                        }
                        results.lock().expect("result sink").push(r);
                    }
                });
            }
        });
        let mut results = results.into_inner().expect("result sink");
        results.sort_by_key(|r| r.order);
        let elapsed = start.elapsed().as_secs_f64();
        self.build_report(results, elapsed, timed_out.load(Ordering::SeqCst), stop.load(Ordering::SeqCst))
    }

    fn build_report(&self, results: Vec<PartitionResult>, elapsed: f64, timed_out: bool, stopped: bool) -> RunReport {
        let total = self.partitions.len();
        let verdict = accumulate_over(&results, total);
        let attempted = results.len() as u64;
        let coverage_pct = if attempted == 0 {
            0.0
        } else {
            100.0 * verdict.decided as f64 / attempted as f64
        };
        let schema = self.net.schema().expect("checked in new");
        let mut notes = vec![
            "per-neuron inactivity: a neuron is removed when `ws > 0` is unsatisfiable".to_string(),
        ];
        if results.iter().any(|r| r.heuristic_succeeded) {
            notes.push(
                "some partitions were decided on heuristically pruned networks; their UNSAT is not a proof"
                    .to_string(),
            );
        }
        if let Some(d) = &self.partitions.diagnostic {
            notes.push(d.clone());
        }
        RunReport {
            model_path: self.model_path.clone(),
            query: QueryFile::from_query(&self.query, schema),
            settings: self.settings.clone(),
            environment: Environment {
                tool: env!("CARGO_PKG_NAME").to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                solver: self.opts.solver.program.clone(),
                solver_args: self.opts.solver.args.clone(),
                solver_version: solver_version(&self.opts.solver),
                seed: self.opts.seed,
                jobs: self.opts.jobs.max(1),
            },
            partitioning: self.partitions.attributes.clone(),
            verdict: verdict.status,
            first_sat: verdict.first_sat.map(|i| results[i].id),
            coverage_pct,
            domain_coverage_pct: verdict.coverage_pct,
            hard_timeout_hit: timed_out,
            stopped_on_sat: stopped,
            totals: totals(&results, total, elapsed),
            results,
            notes,
        }
    }
}

fn removed_list(p: &PrunedNetwork) -> Vec<RemovedNeuron> {
    p.removed
        .iter()
        .map(|(id, prov)| RemovedNeuron {
            layer: id.layer,
            index: id.index,
            provenance: *prov,
        })
        .collect()
}

/// Loads both files and runs the verifier.
pub fn run(model_path: &Path, query_path: &Path, opts: VerifyOptions) -> Result<RunReport> {
    Ok(Verifier::from_files(model_path, query_path, opts)?.run())
}

/// Outcome of re-running one partition of a stored report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub original: PartitionResult,
    pub replayed: PartitionResult,
    /// False only for a SAT/UNSAT contradiction.
    pub consistent: bool,
    pub discrepancy: Option<String>,
    /// The stored counterexample still violates fairness (exact check).
    pub stored_counterexample_valid: Option<bool>,
}

/// Rebuilds the verifier a report was produced with.
pub fn verifier_for_report(report: &RunReport, model_override: Option<&Path>, solver: Option<SolverConfig>) -> Result<Verifier> {
    let model_path = model_override
        .map(Path::to_path_buf)
        .or_else(|| report.model_path.clone())
        .ok_or_else(|| Error::Replay("report does not record a model path".into()))?;
    if !model_path.exists() {
        return Err(Error::Replay(format!("model file {} is missing", model_path.display())));
    }
    let net = load_network(&model_path)?;
    let query = report.query.resolve(net.schema()?)?;
    let s = &report.settings;
    let solver = solver.unwrap_or_else(|| {
        let mut c = SolverConfig::new(&report.environment.solver);
        c.args = report.environment.solver_args.clone();
        c
    });
    let opts = VerifyOptions {
        solver: solver.with_grace(s.grace_s),
        jobs: 1,
        soft_timeout_s: Some(s.soft_timeout_s),
        hard_timeout_s: Some(s.hard_timeout_s),
        ms: Some(s.max_attribute_size),
        seed: s.seed,
        heuristic: s.heuristic,
        tolerance_pct: s.tolerance_pct,
        profile_size: s.profile_size,
        individual_verification: s.individual_verification,
        iv_timeout_s: s.iv_timeout_s,
        ..VerifyOptions::default()
    };
    let mut v = Verifier::new(net, query, opts)?;
    v.model_path = Some(model_path);
    if v.partitions.attributes != report.partitioning {
        return Err(Error::Replay("partitioning differs from the report".into()));
    }
    Ok(v)
}

/// Re-verifies partition `id` of a stored report with the same seeds.
pub fn replay(report: &RunReport, id: u64, model_override: Option<&Path>, solver: Option<SolverConfig>) -> Result<ReplayOutcome> {
    let original = report
        .result(id)
        .cloned()
        .ok_or_else(|| Error::Replay(format!("partition {id} is not in the report")))?;
    let v = verifier_for_report(report, model_override, solver)?;
    let part = v
        .partitions
        .get(id)
        .ok_or_else(|| Error::Replay(format!("partition {id} out of range")))?;
    if part.region != original.region {
        return Err(Error::Replay(format!("partition {id} box differs from the report")));
    }
    let mut iv = v.new_iv();
    let replayed = v.verify_partition(&part, original.order, iv.as_mut(), None);
    let stored_counterexample_valid = original.counterexample.as_ref().map(|c| {
        let parse = |v: &[String]| -> Option<Vec<BigRational>> { v.iter().map(|s| s.parse().ok()).collect() };
        match (parse(&c.x_exact), parse(&c.xp_exact)) {
            (Some(x), Some(xp)) => check_counterexample_exact(&v.pred, &v.net, &x, &xp),
            _ => false,
        }
    });
    let contradiction = matches!(
        (original.status, replayed.status),
        (Status::Sat, Status::Unsat) | (Status::Unsat, Status::Sat)
    );
    let discrepancy = if original.status != replayed.status {
        Some(format!("stored {} but replay gave {}", original.status, replayed.status))
    } else {
        None
    };
    Ok(ReplayOutcome {
        original,
        replayed,
        consistent: !contradiction,
        discrepancy,
        stored_counterexample_valid,
    })
}

/// Provenance sidecar written next to an exported pruned network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneSidecar {
    pub partition_id: u64,
    pub region: InputBox,
    pub removed: Vec<RemovedNeuron>,
    pub linearized: Vec<NeuronId>,
    pub compression: f64,
    pub heuristic: bool,
}

/// Rebuilds the pruned network of partition `id` (sound pruning, plus the
/// heuristic removals if the stored result used them) and writes it with a
/// provenance sidecar at `<out>.provenance.json`.
pub fn export_pruned(report: &RunReport, id: u64, out: &Path, model_override: Option<&Path>) -> Result<PruneSidecar> {
    let original = report
        .result(id)
        .ok_or_else(|| Error::Replay(format!("partition {id} is not in the report")))?;
    let v = verifier_for_report(report, model_override, None)?;
    let part = v
        .partitions
        .get(id)
        .ok_or_else(|| Error::Replay(format!("partition {id} out of range")))?;
    let mut iv = v.new_iv();
    let mut pruned = v.sound_pruning(&part.region, iv.as_mut());
    let heuristic = original.heuristic_attempted
        && original
            .removed
            .iter()
            .any(|r| r.provenance == Provenance::Heuristic);
    if heuristic {
        pruned = v.heuristic_pruning(&pruned, id);
    }
    save_network(&pruned.export_network(), out)?;
    let sidecar = PruneSidecar {
        partition_id: id,
        region: part.region.clone(),
        removed: removed_list(&pruned),
        linearized: pruned.linearized.iter().copied().collect(),
        compression: compression_ratio(&pruned),
        heuristic,
    };
    let side_path = sidecar_path(out);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    std::fs::write(&side_path, text).map_err(|e| Error::io(&side_path, e))?;
    Ok(sidecar)
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}
