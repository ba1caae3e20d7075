//! Generators and helpers shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use faircheck::smt::SolverConfig;
use faircheck::verifier::VerifyOptions;
use faircheck::{
    Activation, AttrRange, Attribute, AttributeSchema, InputBox, Layer, Network, OutputActivation,
};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn solver() -> SolverConfig {
    SolverConfig::from_env()
}

/// Options for fast, deterministic test runs.
pub fn quick_options() -> VerifyOptions {
    VerifyOptions {
        solver: solver(),
        jobs: 1,
        soft_timeout_s: Some(20.0),
        hard_timeout_s: Some(600.0),
        ..VerifyOptions::default()
    }
}

pub fn random_layer(rng: &mut impl Rng, fan_in: usize, width: usize, act: Activation, scale: f64) -> Layer {
    let weights = (0..width)
        .map(|_| (0..fan_in).map(|_| rng.gen_range(-scale..=scale)).collect())
        .collect();
    let biases = (0..width).map(|_| rng.gen_range(-scale..=scale)).collect();
    Layer::new(act, weights, biases)
}

/// Fully connected ReLU network with the given hidden widths.
pub fn random_network(
    rng: &mut impl Rng,
    inputs: usize,
    hidden: &[usize],
    out: OutputActivation,
    schema: Option<AttributeSchema>,
) -> Network {
    let mut layers = Vec::new();
    let mut fan_in = inputs;
    for &w in hidden {
        layers.push(random_layer(rng, fan_in, w, Activation::Relu, 1.0));
        fan_in = w;
    }
    let m = if out == OutputActivation::Softmax { 2 } else { 1 };
    layers.push(random_layer(rng, fan_in, m, Activation::Linear, 1.0));
    Network::new(layers, out, schema).expect("generated network is valid")
}

/// Integer schema whose grid has at most `max_points` points. Attribute
/// values are offset so that boxes do not all start at 0.
pub fn random_int_schema(rng: &mut impl Rng, n: usize, max_points: u64) -> AttributeSchema {
    loop {
        let attrs: Vec<Attribute> = (0..n)
            .map(|i| {
                let lo = rng.gen_range(-3i64..=3) as f64;
                let width = rng.gen_range(1i64..=9) as f64;
                Attribute::new(format!("a{i}"), lo, lo + width, true)
            })
            .collect();
        let points: f64 = attrs.iter().map(|a| a.ub - a.lb + 1.0).product();
        if points <= max_points as f64 {
            return AttributeSchema::new(attrs).expect("valid schema");
        }
    }
}

pub fn random_hidden(rng: &mut impl Rng, max_layers: usize, max_width: usize) -> Vec<usize> {
    let k = rng.gen_range(1..=max_layers);
    (0..k).map(|_| rng.gen_range(1..=max_width)).collect()
}

pub fn real_box(ranges: &[(f64, f64)]) -> InputBox {
    InputBox::new(ranges.iter().map(|(a, b)| AttrRange::new(*a, *b, false)).collect())
}

pub fn int_box(ranges: &[(f64, f64)]) -> InputBox {
    InputBox::new(ranges.iter().map(|(a, b)| AttrRange::new(*a, *b, true)).collect())
}

/// Random sub-box of `outer` (integer endpoints for integer attributes).
pub fn random_sub_box(rng: &mut impl Rng, outer: &InputBox) -> InputBox {
    InputBox::new(
        outer
            .ranges
            .iter()
            .map(|r| {
                let (mut a, mut b) = if r.integer {
                    (
                        rng.gen_range(r.lo as i64..=r.hi as i64) as f64,
                        rng.gen_range(r.lo as i64..=r.hi as i64) as f64,
                    )
                } else {
                    (rng.gen_range(r.lo..=r.hi), rng.gen_range(r.lo..=r.hi))
                };
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                AttrRange::new(a, b, r.integer)
            })
            .collect(),
    )
}

/// Naive matrix-vector forward pass written independently of the library.
pub fn naive_forward(net: &Network, x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    for layer in &net.layers {
        let mut out = vec![0.0; layer.biases.len()];
        for i in 0..out.len() {
            let mut s = 0.0;
            for j in 0..v.len() {
                s += layer.weights[i][j] * v[j];
            }
            s += layer.biases[i];
            out[i] = match layer.activation {
                Activation::Relu => {
                    if s > 0.0 {
                        s
                    } else {
                        0.0
                    }
                }
                Activation::Linear => s,
            };
        }
        v = out;
    }
    v
}

/// Pre-activation values of every layer in exact rational arithmetic.
pub fn exact_trace(net: &Network, x: &[f64]) -> Vec<Vec<num_rational::BigRational>> {
    use num_rational::BigRational;
    use num_traits::{Signed, Zero};
    let q = |v: f64| BigRational::from_float(v).expect("finite");
    let mut v: Vec<BigRational> = x.iter().map(|a| q(*a)).collect();
    let mut trace = Vec::new();
    for layer in &net.layers {
        let pre: Vec<BigRational> = layer
            .weights
            .iter()
            .zip(&layer.biases)
            .map(|(row, b)| row.iter().zip(&v).fold(q(*b), |acc, (w, a)| acc + q(*w) * a))
            .collect();
        v = match layer.activation {
            Activation::Relu => pre
                .iter()
                .map(|a| if a.is_positive() { a.clone() } else { BigRational::zero() })
                .collect(),
            Activation::Linear => pre.clone(),
        };
        trace.push(pre);
    }
    trace
}

/// Uniform point of `b`, integral on integer attributes.
pub fn sample_point(rng: &mut impl Rng, b: &InputBox) -> Vec<f64> {
    b.ranges
        .iter()
        .map(|r| {
            if r.integer {
                rng.gen_range(r.lo as i64..=r.hi as i64) as f64
            } else {
                rng.gen_range(r.lo..=r.hi)
            }
        })
        .collect()
}

/// Every point of an integer box, lexicographically.
pub fn grid_points(b: &InputBox) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for r in &b.ranges {
        let mut next = Vec::new();
        for p in &out {
            let mut v = r.lo;
            while v <= r.hi {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
                v += 1.0;
            }
        }
        out = next;
    }
    out
}

/// Class from logits through the actual output function; `None` on a tie.
pub fn decisive_label(out: OutputActivation, y: &[f64]) -> Option<usize> {
    match out {
        OutputActivation::Sigmoid => {
            let p = 1.0 / (1.0 + (-y[0]).exp());
            if y[0] == 0.0 {
                None
            } else {
                Some(usize::from(p > 0.5 || (p == 0.5 && y[0] > 0.0)))
            }
        }
        OutputActivation::Softmax => {
            let m = y[0].max(y[1]);
            let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
            let p0 = e[0] / (e[0] + e[1]);
            if y[0] == y[1] {
                None
            } else if p0 != 0.5 {
                Some(usize::from(p0 < 0.5))
            } else {
                Some(usize::from(y[1] > y[0]))
            }
        }
        OutputActivation::None => None,
    }
}

/// Brute-force search written against the definition: scans every pair of
/// grid points, keeps the admissible ones and compares decisive labels.
/// `eps[i]` is `None` for attributes that must be equal.
pub fn naive_violation(
    net: &Network,
    region: &InputBox,
    protected: &[usize],
    eps: &[Option<f64>],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let points = grid_points(region);
    let labels: Vec<Option<usize>> = points
        .iter()
        .map(|x| decisive_label(net.output_activation, &naive_forward(net, x)))
        .collect();
    for (a, x) in points.iter().enumerate() {
        let Some(la) = labels[a] else { continue };
        for (b, xp) in points.iter().enumerate() {
            let Some(lb) = labels[b] else { continue };
            if la == lb {
                continue;
            }
            let admissible = (0..x.len()).all(|i| {
                protected.contains(&i)
                    || match eps[i] {
                        None => x[i] == xp[i],
                        Some(e) => (x[i] - xp[i]).abs() <= e,
                    }
            }) && protected.iter().any(|&i| x[i] != xp[i]);
            if admissible {
                return Some((x.clone(), xp.clone()));
            }
        }
    }
    None
}

pub fn credit_schema() -> AttributeSchema {
    AttributeSchema::new(vec![
        Attribute::new("income", 0.0, 99.0, true),
        Attribute::new("sex", 0.0, 1.0, true),
    ])
    .expect("valid schema")
}

/// 2-3-1 network; a non-zero `sex_weight` makes it depend on the protected input.
pub fn credit_network(sex_weight: f64) -> Network {
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
        Some(credit_schema()),
    )
    .expect("valid network")
}

/// Executable shell script in `dir` standing in for a solver.
pub fn fake_solver(dir: &std::path::Path, name: &str, body: &str) -> SolverConfig {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).expect("write script");
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).expect("chmod");
    let mut c = SolverConfig::new(&path);
    c.args.clear();
    c.grace_s = 0.5;
    c
}
