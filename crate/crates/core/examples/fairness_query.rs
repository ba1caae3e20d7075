//! Building fairness predicates from query files: individual, epsilon and
//! targeted variants.
//!
//! `cargo run --example fairness_query`

use faircheck::query::PairConstraint;
use faircheck::{
    build_predicate, check_counterexample, Activation, Attribute, AttributeSchema, Layer, Network,
    OutputActivation, QueryFile,
};

fn network() -> Network {
    let schema = AttributeSchema::new(vec![
        Attribute::new("age", 18.0, 90.0, true),
        Attribute::new("race", 0.0, 4.0, true),
        Attribute::new("hours", 1.0, 99.0, true),
    ])
    .unwrap();
    Network::new(
        vec![
            Layer::new(
                Activation::Relu,
                vec![vec![0.02, 0.3, 0.01], vec![-0.01, 0.0, 0.03]],
                vec![-1.0, -0.5],
            ),
            Layer::new(Activation::Linear, vec![vec![1.0, 1.0], vec![-1.0, 0.5]], vec![0.0, 0.1]),
        ],
        OutputActivation::Softmax,
        Some(schema),
    )
    .unwrap()
}

fn main() -> faircheck::Result<()> {
    let net = network();
    let schema = net.schema()?;
    let docs = [
        ("individual", r#"{"protected": "race", "max_attribute_size": 10}"#),
        ("epsilon", r#"{"protected": "race", "epsilon": {"hours": 2}, "max_attribute_size": 10}"#),
        ("targeted", r#"{"protected": "race", "target": {"age": [30, 40]}, "max_attribute_size": 10}"#),
    ];
    for (name, text) in docs {
        let q = QueryFile::from_json_str(text)?.resolve(schema)?;
        let pred = build_predicate(&q, schema, &net)?;
        println!("== {name}");
        for (a, c) in schema.attributes.iter().zip(&pred.pair_constraints) {
            let rel = match c {
                PairConstraint::Equal => "x = x'".to_string(),
                PairConstraint::AbsDiffAtMost(e) => format!("|x - x'| <= {e}"),
                PairConstraint::Differ => "protected".to_string(),
            };
            println!("  {:<6} {rel}", a.name);
        }
        let r = &pred.domain_box.ranges[0];
        println!("  age range [{}, {}], output condition {:?}", r.lo, r.hi, pred.post_wp);
        for (x, xp) in [([30.0, 0.0, 20.0], [30.0, 4.0, 20.0]), ([30.0, 0.0, 20.0], [30.0, 4.0, 22.0])] {
            println!(
                "  pair {x:?} / {xp:?}: admissible {}, violation {}",
                pred.pair_holds(&x, &xp),
                check_counterexample(&pred, &net, &x, &xp)
            );
        }
    }
    Ok(())
}
