use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use faircheck::oracle::{brute_force_with_cap, OracleVerdict, DEFAULT_PAIR_CAP};
use faircheck::query::{build_predicate, QueryFile};
use faircheck::report::RunReport;
use faircheck::smt::SolverConfig;
use faircheck::verifier::{self, VerifyOptions};
use faircheck::{load_network, partition};

#[derive(Parser)]
#[command(name = "faircheck", version, about = "Individual-fairness verification of ReLU classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a model against a fairness query.
    Verify(VerifyArgs),
    /// Re-run one partition of a stored report.
    Replay {
        #[arg(long)]
        report: PathBuf,
        #[arg(long = "partition-id")]
        partition_id: u64,
        /// Use this model instead of the path recorded in the report.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        solver: Option<PathBuf>,
    },
    /// Write the pruned network of one partition with a provenance sidecar.
    ExportPruned {
        #[arg(long)]
        report: PathBuf,
        #[arg(long = "partition-id")]
        partition_id: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Exhaustively check partitions on their integer grid.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        ms: Option<u64>,
        /// Only this partition; all partitions otherwise.
        #[arg(long = "partition-id")]
        partition_id: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_PAIR_CAP)]
        cap: u128,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// SMT-LIB 2 solver executable (default: $FAIRCHECK_SOLVER or z3).
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Extra solver arguments, replacing the defaults.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long = "soft-timeout")]
    soft_timeout: Option<f64>,
    #[arg(long = "hard-timeout")]
    hard_timeout: Option<f64>,
    #[arg(long)]
    ms: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "stop-on-sat")]
    stop_on_sat: bool,
    #[arg(long = "no-heuristic")]
    no_heuristic: bool,
    #[arg(long, default_value_t = verifier::DEFAULT_TOLERANCE_PCT)]
    tolerance: f64,
    #[arg(long = "profile-size", default_value_t = verifier::DEFAULT_PROFILE_SIZE)]
    profile_size: usize,
    /// Skip the per-neuron solver queries during sound pruning.
    #[arg(long = "no-individual")]
    no_individual: bool,
    #[arg(long = "dump-smt")]
    dump_smt: Option<PathBuf>,
    #[arg(long = "dump-bounds")]
    dump_bounds: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn solver_config(path: Option<PathBuf>, args: Vec<String>) -> SolverConfig {
    let mut c = match path {
        Some(p) => SolverConfig::new(p),
        None => SolverConfig::from_env(),
    };
    if !args.is_empty() {
        c.args = args;
    }
    c
}

fn run(cli: Cli) -> faircheck::Result<u8> {
    match cli.command {
        Command::Verify(a) => {
            let opts = VerifyOptions {
                solver: solver_config(a.solver, a.solver_args),
                jobs: a.jobs,
                soft_timeout_s: a.soft_timeout,
                hard_timeout_s: a.hard_timeout,
                ms: a.ms,
                seed: a.seed,
                stop_on_sat: a.stop_on_sat,
                heuristic: !a.no_heuristic,
                tolerance_pct: a.tolerance,
                profile_size: a.profile_size,
                individual_verification: !a.no_individual,
                dump_smt: a.dump_smt,
                dump_bounds: a.dump_bounds,
                progress: !a.quiet,
                ..VerifyOptions::default()
            };
            let report = verifier::run(&a.model, &a.query, opts)?;
            if let Some(out) = &a.out {
                report.save(out)?;
            }
            if a.dump_bounds {
                for r in &report.results {
                    if let Some(b) = &r.bounds {
                        println!("partition {}", r.id);
                        print!("{}", b.table());
                    }
                }
            }
            print!("{}", report.summary_table());
            Ok(report.exit_code() as u8)
        }
        Command::Replay {
            report,
            partition_id,
            model,
            solver,
        } => {
            let rep = RunReport::load(&report)?;
            let solver = solver.map(SolverConfig::new);
            let out = verifier::replay(&rep, partition_id, model.as_deref(), solver)?;
            println!(
                "partition {partition_id}: stored {} replayed {}",
                out.original.status, out.replayed.status
            );
            if let Some(v) = out.stored_counterexample_valid {
                println!("stored counterexample valid: {v}");
            }
            if let Some(d) = &out.discrepancy {
                println!("discrepancy: {d}");
            }
            Ok(if out.consistent { 0 } else { 4 })
        }
        Command::ExportPruned {
            report,
            partition_id,
            out,
            model,
        } => {
            let rep = RunReport::load(&report)?;
            let side = verifier::export_pruned(&rep, partition_id, &out, model.as_deref())?;
            println!(
                "wrote {} ({} neurons removed, compression {:.3}) and {}",
                out.display(),
                side.removed.len(),
                side.compression,
                verifier::sidecar_path(&out).display()
            );
            Ok(0)
        }
        Command::Oracle {
            model,
            query,
            ms,
            partition_id,
            cap,
        } => {
            let net = load_network(&model)?;
            let schema = net.schema()?.clone();
            let mut q = QueryFile::load(&query)?.resolve(&schema)?;
            if let Some(ms) = ms {
                q.max_attribute_size = ms;
            }
            let pred = build_predicate(&q, &schema, &net)?;
            let parts = partition(&pred.domain_box, &q, 0);
            let ids: Vec<u64> = match partition_id {
                Some(id) => vec![id],
                None => (0..parts.len()).collect(),
            };
            let mut any_sat = false;
            for id in ids {
                let p = parts
                    .get(id)
                    .ok_or_else(|| faircheck::Error::Input(format!("partition {id} out of range")))?;
                match brute_force_with_cap(&net, &pred, &p.region, cap)? {
                    OracleVerdict::Sat { x, xp } => {
                        any_sat = true;
                        println!("partition {id}: SAT x={x:?} x'={xp:?}");
                    }
                    OracleVerdict::Unsat => println!("partition {id}: UNSAT"),
                }
            }
            Ok(u8::from(any_sat))
        }
    }
}

fn main() -> ExitCode {
    // exit code 2 means UNKNOWN, so usage errors use the general error code
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(5);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(5)
        }
    }
}
