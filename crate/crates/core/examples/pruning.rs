//! Sound and heuristic pruning of a network over one region, with the reason
//! recorded for every removed neuron.
//!
//! `cargo run --example pruning` (the per-neuron queries need a solver)

use std::sync::Arc;

use faircheck::bounds::neuron_bounds;
use faircheck::prune::{compression_ratio, heuristic_prune, profile, NeuronId, NeuronState};
use faircheck::smt::{IndividualVerifier, SolverConfig};
use faircheck::{
    forward, sound_prune, Activation, Attribute, AttributeSchema, InputBox, Layer, Network,
    OutputActivation,
};

fn network() -> Network {
    let schema = AttributeSchema::new(vec![
        Attribute::new("a", 1.0, 3.0, true),
        Attribute::new("b", 0.0, 20.0, true),
    ])
    .unwrap();
    Network::new(
        vec![
            Layer::new(
                Activation::Relu,
                vec![
                    vec![1.0, 0.0],
                    vec![1.0, 0.0],
                    vec![-1.0, -0.5],
                    vec![0.0, 0.1],
                    vec![0.0005, 0.00005],
                ],
                vec![0.0, 0.0, 0.5, -0.5, -0.0025],
            ),
            Layer::new(
                Activation::Relu,
                vec![vec![1.0, -1.0, 0.0, 0.0, 0.0], vec![0.5, 0.0, 1.0, 2.0, 1.0]],
                vec![-0.5, -1.0],
            ),
            Layer::new(Activation::Linear, vec![vec![1.0, 1.0]], vec![-0.75]),
        ],
        OutputActivation::Sigmoid,
        Some(schema),
    )
    .unwrap()
}

fn main() -> faircheck::Result<()> {
    let net = Arc::new(network());
    let region = InputBox::from_schema(net.schema()?);
    let bounds = neuron_bounds(&net, &region);

    let by_bounds = sound_prune(&net, &region, &bounds, None);
    let mut iv = IndividualVerifier::new(&SolverConfig::from_env(), 10.0)?;
    let sound = sound_prune(&net, &region, &bounds, Some(&mut iv));
    let prof = profile(&net, &region, 1000, 1);
    let heur = heuristic_prune(&sound, &prof, 5.0);

    println!("{:<6} {:>20}  {:<24} {}", "neuron", "interval", "sound", "heuristic");
    for (l, layer) in net.hidden_layers().iter().enumerate() {
        for j in 0..layer.width() {
            let id = NeuronId::new(l, j);
            let iv = bounds.pre(l, j);
            let show = |p: &faircheck::PrunedNetwork| match p.state(id) {
                NeuronState::Removed => format!("{:?}", p.provenance(id).unwrap()),
                NeuronState::Linear => "linear".into(),
                NeuronState::Relu => "-".into(),
            };
            println!("{:<6} [{:>8.3}, {:>8.3}]  {:<24} {}", id.to_string(), iv.lo, iv.hi, show(&sound), show(&heur));
        }
    }
    println!(
        "compression: bounds only {:.2}, with solver {:.2}, heuristic {:.2} ({} solver queries)",
        compression_ratio(&by_bounds),
        compression_ratio(&sound),
        compression_ratio(&heur),
        iv.stats.queries
    );

    let mut differ = 0;
    for a in 1..=3 {
        for b in 0..=20 {
            let x = [a as f64, b as f64];
            if forward(&net, &x)? != sound.forward(&x)? {
                differ += 1;
            }
        }
    }
    println!("sound pruning changes the output on {differ} of 63 grid points");
    let small = heur.export_network();
    println!("exported network: {} hidden neurons (was {})", small.hidden_neuron_count(), net.hidden_neuron_count());
    Ok(())
}
