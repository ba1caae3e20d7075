//! The SMT-LIB 2 problem for one region, solved by an external solver.
//!
//! `cargo run --example smt_encoding` prints the script, the solver answer
//! and the decoded pair of inputs.

use std::sync::Arc;

use faircheck::bounds::neuron_bounds;
use faircheck::smt::script::{encode, EncodeOptions};
use faircheck::smt::{extract_pair, solve, solver_available, solver_version, SolverConfig};
use faircheck::{build_predicate, load_network, sound_prune, FairnessQuery, Status};

fn main() -> faircheck::Result<()> {
    let net = Arc::new(load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/credit_model.json"))?);
    let schema = net.schema()?;
    let pred = build_predicate(&FairnessQuery::individual(1, 10), schema, &net)?;
    let mut region = pred.domain_box.clone();
    region.ranges[0].lo = 0.0;
    region.ranges[0].hi = 9.0;

    let pruned = sound_prune(&net, &region, &neuron_bounds(&net, &region), None);
    let opts = EncodeOptions {
        seed: 1,
        timeout_s: Some(10.0),
        bound_hints: true,
    };
    let script = encode(&pruned, &pred, &region, &opts)?;
    print!("{}", script.text());

    let config = SolverConfig::from_env();
    if !solver_available(&config) {
        eprintln!("solver `{}` not found; set FAIRCHECK_SOLVER", config.program.display());
        return Ok(());
    }
    println!("; solver: {}", solver_version(&config).unwrap_or_default());
    let out = solve(&script, &config, 10.0)?;
    println!("; {} in {:.3} s", out.status, out.wall_time_s);
    if out.status == Status::Sat {
        let (x, xp) = extract_pair(out.model.as_ref().unwrap(), &region)?;
        let show = |v: &[num_rational::BigRational]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        println!("; x = ({}), x' = ({})", show(&x), show(&xp));
    }
    Ok(())
}
