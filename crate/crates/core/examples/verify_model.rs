//! End-to-end verification of two small credit-scoring networks.
//!
//! The first network leans on the protected `sex` input and is refuted with a
//! concrete pair of applicants; the second ignores it and is certified fair
//! on every partition.
//!
//! Run with `cargo run --example verify_model` (needs `z3` on the PATH or
//! `FAIRCHECK_SOLVER` pointing at an SMT-LIB 2 solver).

use faircheck::verifier::{Verifier, VerifyOptions};
use faircheck::{
    Activation, Attribute, AttributeSchema, FairnessQuery, Layer, Network, OutputActivation,
};

fn schema() -> AttributeSchema {
    AttributeSchema::new(vec![
        Attribute::new("income", 0.0, 99.0, true),
        Attribute::new("sex", 0.0, 1.0, true),
    ])
    .expect("valid schema")
}

fn network(sex_weight: f64) -> Network {
    Network::new(
        vec![
            Layer::new(
                Activation::Relu,
                vec![vec![0.05, sex_weight], vec![-0.04, 0.0], vec![0.02, sex_weight]],
                vec![-1.0, 1.0, 0.0],
            ),
            Layer::new(Activation::Linear, vec![vec![1.0, -1.5, 0.5]], vec![0.2]),
        ],
        OutputActivation::Sigmoid,
        Some(schema()),
    )
    .expect("valid network")
}

fn main() -> faircheck::Result<()> {
    let query = FairnessQuery::individual(1, 10);
    for (name, w) in [("biased", 3.0), ("blind", 0.0)] {
        let opts = VerifyOptions {
            soft_timeout_s: Some(10.0),
            hard_timeout_s: Some(60.0),
            jobs: 2,
            ..VerifyOptions::default()
        };
        let report = Verifier::new(network(w), query.clone(), opts)?.run();
        println!("== {name} network");
        print!("{}", report.summary_table());
        println!();
    }
    Ok(())
}
