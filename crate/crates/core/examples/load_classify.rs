//! Loading a network from the portable weights format and evaluating it.
//!
//! `cargo run --example load_classify [model.json]`

use std::path::PathBuf;

use faircheck::model::{forward_exact, forward_trace};
use faircheck::{classify, forward, load_network, save_network};
use num_rational::BigRational;

fn main() -> faircheck::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/credit_model.json")));
    let net = load_network(&path)?;
    let schema = net.schema()?;
    println!(
        "{}: {} inputs, {} hidden neurons, {} output",
        path.display(),
        net.input_arity,
        net.hidden_neuron_count(),
        net.output_activation
    );
    for a in &schema.attributes {
        println!("  {:<10} [{}, {}]{}", a.name, a.lb, a.ub, if a.integer { " int" } else { "" });
    }

    for x in [[20.0, 0.0], [20.0, 1.0], [80.0, 0.0]] {
        let logits = forward(&net, &x)?;
        println!("x = {x:?}: logits {logits:?}, class {}", classify(&net, &x)?);
    }

    // per-layer weighted sums, and the same pass in exact arithmetic
    let x = [20.0, 1.0];
    for (l, ws) in forward_trace(&net, &x)?.iter().enumerate() {
        println!("layer {} ws = {ws:?}", l + 1);
    }
    let exact: Vec<BigRational> = x.iter().map(|v| BigRational::from_float(*v).unwrap()).collect();
    let y = forward_exact(&net, &exact)?;
    println!("exact logit = {}", y[0]);

    let out = std::env::temp_dir().join("faircheck_roundtrip.json");
    save_network(&net, &out)?;
    assert_eq!(load_network(&out)?, net);
    println!("round trip through {} is lossless", out.display());
    Ok(())
}
