//! Exhaustive grid search as an independent check of the verifier.
//!
//! `cargo run --example oracle`

use faircheck::oracle::{brute_force, GridSpec, OracleVerdict, DEFAULT_PAIR_CAP};
use faircheck::verifier::{Verifier, VerifyOptions};
use faircheck::{build_predicate, load_network, FairnessQuery, Status};

fn main() -> faircheck::Result<()> {
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/credit_model.json"))?;
    let query = FairnessQuery::individual(1, 25);
    let pred = build_predicate(&query, net.schema()?, &net)?;
    let grid = GridSpec::from_box(&pred.domain_box, DEFAULT_PAIR_CAP)?;
    println!("{} grid points, at most {} pairs", grid.points(), grid.pair_count(&pred));

    let opts = VerifyOptions {
        heuristic: false,
        ..VerifyOptions::default()
    };
    let report = Verifier::new(net.clone(), query, opts)?.run();
    let mut agree = 0;
    for r in &report.results {
        let truth = brute_force(&net, &pred, &r.region)?;
        let expected = if truth.is_sat() { Status::Sat } else { Status::Unsat };
        let mark = if r.status == expected { "ok" } else { "MISMATCH" };
        agree += usize::from(r.status == expected);
        let detail = match truth {
            OracleVerdict::Sat { x, xp } => format!("e.g. {x:?} vs {xp:?}"),
            OracleVerdict::Unsat => String::new(),
        };
        println!("partition {}: solver {:<7} grid {:<7} {mark} {detail}", r.id, r.status, expected);
    }
    println!("{agree} of {} partitions agree", report.results.len());
    Ok(())
}
