//! Interval bounds on neuron pre-activations over an input box.
//!
//! Each neuron's weighted sum is bounded by splitting its incoming weights by
//! sign: positive weights pull the upper bound from the predecessor's upper
//! bound and negative weights from its lower bound, and vice versa for the
//! lower bound. Predecessor bounds are taken after ReLU clipping.
//!
//! All arithmetic rounds outward: an inexact product or partial sum is moved
//! one ULP away from the true value, so the computed interval contains the
//! exact real-arithmetic interval.

use serde::{Deserialize, Serialize};

use crate::domain::InputBox;
use crate::model::{Activation, Layer, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Image under ReLU.
    pub fn relu(&self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }
}

/// How floating-point error is kept on the safe side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingPolicy {
    /// Round-to-nearest followed by a one-ULP outward step whenever the
    /// operation was inexact in the required direction. Inexactness is
    /// detected with error-free transforms (TwoSum, FMA), so exact operations
    /// stay exact and inexact ones end up rounded toward the safe infinity.
    OutwardUlp,
}

// Below this magnitude the FMA residual may itself underflow.
const TINY: f64 = 1e-280;

impl RoundingPolicy {
    /// Upper bound on `a * b`.
    pub fn mul_up(self, a: f64, b: f64) -> f64 {
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        let p = a * b;
        if p.abs() < TINY {
            return p.next_up();
        }
        let err = a.mul_add(b, -p);
        if err > 0.0 {
            p.next_up()
        } else {
            p
        }
    }

    /// Lower bound on `a * b`.
    pub fn mul_down(self, a: f64, b: f64) -> f64 {
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        let p = a * b;
        if p.abs() < TINY {
            return p.next_down();
        }
        let err = a.mul_add(b, -p);
        if err < 0.0 {
            p.next_down()
        } else {
            p
        }
    }

    /// Upper bound on `a + b`.
    pub fn add_up(self, a: f64, b: f64) -> f64 {
        let (s, err) = two_sum(a, b);
        if err > 0.0 {
            s.next_up()
        } else {
            s
        }
    }

    /// Lower bound on `a + b`.
    pub fn add_down(self, a: f64, b: f64) -> f64 {
        let (s, err) = two_sum(a, b);
        if err < 0.0 {
            s.next_down()
        } else {
            s
        }
    }
}

/// Knuth's TwoSum: `s + err == a + b` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// The rounding contract used by every bound computation in this crate.
pub fn directed_rounding_policy() -> RoundingPolicy {
    RoundingPolicy::OutwardUlp
}

/// Bounds on `row . v + bias` for `v` ranging over `prev`.
pub fn weighted_sum_bounds(row: &[f64], bias: f64, prev: &[Interval]) -> Interval {
    let r = directed_rounding_policy();
    let mut lo = bias;
    let mut hi = bias;
    for (w, iv) in row.iter().zip(prev) {
        // zero weights sit with the positive group; they contribute nothing
        if *w >= 0.0 {
            hi = r.add_up(hi, r.mul_up(*w, iv.hi));
            lo = r.add_down(lo, r.mul_down(*w, iv.lo));
        } else {
            hi = r.add_up(hi, r.mul_up(*w, iv.lo));
            lo = r.add_down(lo, r.mul_down(*w, iv.hi));
        }
    }
    Interval { lo, hi }
}

/// Pre-activation bounds of every neuron of `layer`.
pub fn layer_pre_bounds(layer: &Layer, prev_post: &[Interval]) -> Vec<Interval> {
    layer
        .weights
        .iter()
        .zip(&layer.biases)
        .map(|(row, b)| weighted_sum_bounds(row, *b, prev_post))
        .collect()
}

/// Per-layer pre-activation bounds, output layer included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronBounds {
    pub input: Vec<Interval>,
    pub layers: Vec<Vec<Interval>>,
}

impl NeuronBounds {
    /// Pre-activation bounds of neuron `j` in layer `layer` (0-based over
    /// non-input layers).
    pub fn pre(&self, layer: usize, j: usize) -> Interval {
        self.layers[layer][j]
    }

    /// Post-activation bounds, given the layer's activation.
    pub fn post(&self, layer: usize, j: usize, activation: Activation) -> Interval {
        match activation {
            Activation::Relu => self.layers[layer][j].relu(),
            Activation::Linear => self.layers[layer][j],
        }
    }

    /// Bounds feeding into layer `layer`: the input box for layer 0, otherwise
    /// the post-activation bounds of the preceding layer.
    pub fn predecessor_post(&self, net: &Network, layer: usize) -> Vec<Interval> {
        if layer == 0 {
            self.input.clone()
        } else {
            let act = net.layers[layer - 1].activation;
            (0..self.layers[layer - 1].len())
                .map(|j| self.post(layer - 1, j, act))
                .collect()
        }
    }

    /// Human-readable per-layer table.
    pub fn table(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(s, "layer {}", i + 1);
            for (j, iv) in layer.iter().enumerate() {
                let _ = writeln!(s, "  n{j:<4} [{:>14.6e}, {:>14.6e}]", iv.lo, iv.hi);
            }
        }
        s
    }
}

pub fn input_intervals(region: &InputBox) -> Vec<Interval> {
    region
        .ranges
        .iter()
        .map(|r| Interval::new(r.lo, r.hi))
        .collect()
}

/// Interval bounds for every neuron of `net` over `region`.
pub fn neuron_bounds(net: &Network, region: &InputBox) -> NeuronBounds {
    assert_eq!(region.len(), net.input_arity, "box dimension must match input arity");
    let input = input_intervals(region);
    let mut layers: Vec<Vec<Interval>> = Vec::with_capacity(net.layers.len());
    let mut prev = input.clone();
    for layer in &net.layers {
        let pre = layer_pre_bounds(layer, &prev);
        prev = match layer.activation {
            Activation::Relu => pre.iter().map(Interval::relu).collect(),
            Activation::Linear => pre.clone(),
        };
        layers.push(pre);
    }
    NeuronBounds { input, layers }
}
