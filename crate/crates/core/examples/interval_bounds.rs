//! Interval bounds of every neuron, and how they tighten on smaller regions.
//!
//! `cargo run --example interval_bounds`

use faircheck::bounds::neuron_bounds;
use faircheck::oracle::brute_force_bounds;
use faircheck::{load_network, InputBox};

fn main() -> faircheck::Result<()> {
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/credit_model.json"))?;
    let whole = InputBox::from_schema(net.schema()?);
    let mut low_income = whole.clone();
    low_income.ranges[0].hi = 9.0;

    for (name, b) in [("whole domain", &whole), ("income 0..9", &low_income)] {
        let bounds = neuron_bounds(&net, b);
        let grid = brute_force_bounds(&net, b)?.to_f64();
        println!("== {name}");
        for (l, layer) in bounds.layers.iter().enumerate() {
            for (j, iv) in layer.iter().enumerate() {
                let (lo, hi) = grid[l][j];
                let note = if iv.hi < 0.0 {
                    "  never active"
                } else if iv.lo > 0.0 {
                    "  always active"
                } else {
                    ""
                };
                println!(
                    "  L{}N{j}: [{:>8.3}, {:>8.3}]  attained [{lo:>8.3}, {hi:>8.3}]{note}",
                    l + 1,
                    iv.lo,
                    iv.hi
                );
            }
        }
    }
    Ok(())
}
