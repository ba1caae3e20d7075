//! Neuron pruning for one input region.
//!
//! Sound pruning never changes the network's function on the region:
//! a neuron whose pre-activation upper bound is negative is removed (its
//! output is constantly 0), one whose lower bound is positive has its ReLU
//! dropped, and a neuron that an SMT query proves can never be positive is
//! also removed. Bounds are recomputed layer by layer so that removals
//! tighten the bounds of later layers.
//!
//! Heuristic pruning is unsound: it removes neurons that were never seen
//! active while sampling the region and whose negative excursions are small
//! next to the positive activity of their layer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{input_intervals, layer_pre_bounds, Interval, NeuronBounds};
use crate::domain::InputBox;
use crate::error::Result;
use crate::model::{self, Layer, Network};
use crate::smt::individual::IndividualVerifier;

/// A hidden neuron: `layer` counts hidden layers from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId {
    pub layer: usize,
    pub index: usize,
}

impl NeuronId {
    pub fn new(layer: usize, index: usize) -> Self {
        NeuronId { layer, index }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}N{}", self.layer + 1, self.index)
    }
}

/// Why a neuron was removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Pre-activation upper bound below zero.
    IntervalUb,
    /// Solver proved the pre-activation is never positive.
    IndividualVerification,
    /// Sampling-based removal; not sound.
    Heuristic,
}

impl Provenance {
    pub fn is_sound(self) -> bool {
        !matches!(self, Provenance::Heuristic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuronState {
    /// Kept with its ReLU.
    Relu,
    /// Output fixed to 0.
    Removed,
    /// Pre-activation always positive; ReLU replaced by identity.
    Linear,
}

/// A network together with the pruning decisions made for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedNetwork {
    pub base: Arc<Network>,
    pub region: InputBox,
    pub removed: BTreeMap<NeuronId, Provenance>,
    pub linearized: BTreeSet<NeuronId>,
    /// Pre-activation bounds of the pruned network over `region`.
    pub bounds: NeuronBounds,
}

impl PrunedNetwork {
    /// No pruning at all.
    pub fn unpruned(base: Arc<Network>, region: &InputBox) -> Self {
        let bounds = pruned_bounds(&base, region, &BTreeMap::new());
        PrunedNetwork {
            base,
            region: region.clone(),
            removed: BTreeMap::new(),
            linearized: BTreeSet::new(),
            bounds,
        }
    }

    pub fn state(&self, id: NeuronId) -> NeuronState {
        if self.removed.contains_key(&id) {
            NeuronState::Removed
        } else if self.linearized.contains(&id) {
            NeuronState::Linear
        } else {
            NeuronState::Relu
        }
    }

    pub fn provenance(&self, id: NeuronId) -> Option<Provenance> {
        self.removed.get(&id).copied()
    }

    pub fn removed_count(&self) -> usize {
        self.removed.len()
    }

    pub fn count_by(&self, prov: Provenance) -> usize {
        self.removed.values().filter(|p| **p == prov).count()
    }

    /// Whether any removal is heuristic.
    pub fn is_heuristic(&self) -> bool {
        self.removed.values().any(|p| !p.is_sound())
    }

    /// Output logits with the pruning applied.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        apply_pruning(self, x)
    }

    /// Copy of the network with removed neurons physically deleted. A layer
    /// whose neurons are all removed keeps a single dead unit so that the
    /// layer structure is preserved.
    pub fn export_network(&self) -> Network {
        let base = &self.base;
        let hidden = base.layers.len() - 1;
        let mut layers = Vec::with_capacity(base.layers.len());
        let mut kept_prev: Option<Vec<usize>> = None;
        for (l, layer) in base.layers.iter().enumerate() {
            let cols = |row: &Vec<f64>| -> Vec<f64> {
                match &kept_prev {
                    None => row.clone(),
                    Some(k) if k.is_empty() => vec![0.0],
                    Some(k) => k.iter().map(|&c| row[c]).collect(),
                }
            };
            if l == hidden {
                let weights = layer.weights.iter().map(cols).collect();
                layers.push(Layer::new(layer.activation, weights, layer.biases.clone()));
                break;
            }
            let kept: Vec<usize> = (0..layer.width())
                .filter(|&j| !self.removed.contains_key(&NeuronId::new(l, j)))
                .collect();
            let (weights, biases) = if kept.is_empty() {
                let fan_in = cols(&layer.weights[0]).len();
                (vec![vec![0.0; fan_in]], vec![0.0])
            } else {
                (
                    kept.iter().map(|&j| cols(&layer.weights[j])).collect(),
                    kept.iter().map(|&j| layer.biases[j]).collect(),
                )
            };
            layers.push(Layer::new(layer.activation, weights, biases));
            kept_prev = Some(kept);
        }
        Network {
            input_arity: base.input_arity,
            output_activation: base.output_activation,
            attributes: base.attributes.clone(),
            layers,
        }
    }
}

/// Logits of `p` at `x`: removed neurons output 0, linearized neurons pass
/// their weighted sum through unchanged.
pub fn apply_pruning(p: &PrunedNetwork, x: &[f64]) -> Result<Vec<f64>> {
    let net = &p.base;
    if x.len() != net.input_arity {
        return Err(crate::error::Error::Input(format!(
            "expected {} inputs, got {}",
            net.input_arity,
            x.len()
        )));
    }
    let hidden = net.layers.len() - 1;
    let mut values = x.to_vec();
    for (l, layer) in net.layers.iter().enumerate() {
        let mut ws = layer.weighted_sums(&values);
        if l < hidden {
            for (j, v) in ws.iter_mut().enumerate() {
                *v = match p.state(NeuronId::new(l, j)) {
                    NeuronState::Removed => 0.0,
                    NeuronState::Linear => *v,
                    NeuronState::Relu => model::relu(*v),
                };
            }
        }
        values = ws;
    }
    Ok(values)
}

/// Fraction of hidden neurons removed.
pub fn compression_ratio(p: &PrunedNetwork) -> f64 {
    let total = p.base.hidden_neuron_count();
    if total == 0 {
        0.0
    } else {
        p.removed.len() as f64 / total as f64
    }
}

fn post_interval(pre: Interval, state: NeuronState) -> Interval {
    match state {
        NeuronState::Removed => Interval::point(0.0),
        NeuronState::Linear => pre,
        NeuronState::Relu => pre.relu(),
    }
}

/// Interval bounds of a network with the given removals over `region`.
pub fn pruned_bounds(net: &Network, region: &InputBox, removed: &BTreeMap<NeuronId, Provenance>) -> NeuronBounds {
    let input = input_intervals(region);
    let mut prev = input.clone();
    let hidden = net.layers.len() - 1;
    let mut layers = Vec::with_capacity(net.layers.len());
    for (l, layer) in net.layers.iter().enumerate() {
        let pre = layer_pre_bounds(layer, &prev);
        if l < hidden {
            prev = pre
                .iter()
                .enumerate()
                .map(|(j, iv)| {
                    if removed.contains_key(&NeuronId::new(l, j)) {
                        Interval::point(0.0)
                    } else {
                        iv.relu()
                    }
                })
                .collect();
        }
        layers.push(pre);
    }
    NeuronBounds { input, layers }
}

fn intersect(a: Interval, b: Interval) -> Interval {
    let lo = a.lo.max(b.lo);
    let hi = a.hi.min(b.hi);
    if lo <= hi {
        Interval { lo, hi }
    } else {
        // both are sound, so an empty meet means the neuron is unreachable;
        // keep the tighter of the two rather than inventing an empty set
        if a.width() <= b.width() {
            a
        } else {
            b
        }
    }
}

/// Sound pruning of `net` over `region`.
///
/// `bounds` must be sound bounds of the unpruned network over `region`; they
/// are intersected with the bounds recomputed after each layer's removals.
/// With a verifier, neurons left undecided by the bounds are checked one by
/// one; a solver failure keeps the neuron.
pub fn sound_prune(
    net: &Arc<Network>,
    region: &InputBox,
    bounds: &NeuronBounds,
    mut verifier: Option<&mut IndividualVerifier>,
) -> PrunedNetwork {
    assert_eq!(region.len(), net.input_arity, "box dimension must match input arity");
    let hidden = net.layers.len() - 1;
    let mut removed = BTreeMap::new();
    let mut linearized = BTreeSet::new();
    let mut states: Vec<Vec<NeuronState>> = Vec::with_capacity(hidden);
    let mut pre_all: Vec<Vec<Interval>> = Vec::with_capacity(net.layers.len());
    let input = input_intervals(region);
    let mut prev = input.clone();
    for (l, layer) in net.layers.iter().enumerate() {
        let pre: Vec<Interval> = layer_pre_bounds(layer, &prev)
            .into_iter()
            .zip(&bounds.layers[l])
            .map(|(a, b)| intersect(a, *b))
            .collect();
        if l == hidden {
            pre_all.push(pre);
            break;
        }
        let mut st = vec![NeuronState::Relu; layer.width()];
        for (j, iv) in pre.iter().enumerate() {
            if iv.hi < 0.0 {
                st[j] = NeuronState::Removed;
                removed.insert(NeuronId::new(l, j), Provenance::IntervalUb);
            } else if iv.lo > 0.0 {
                st[j] = NeuronState::Linear;
                linearized.insert(NeuronId::new(l, j));
            }
        }
        pre_all.push(pre);
        if let Some(v) = verifier.as_deref_mut() {
            for j in 0..layer.width() {
                if st[j] != NeuronState::Relu {
                    continue;
                }
                if v.prove_inactive(net, region, &pre_all, &states, l, j) {
                    st[j] = NeuronState::Removed;
                    removed.insert(NeuronId::new(l, j), Provenance::IndividualVerification);
                }
            }
        }
        prev = pre_all[l]
            .iter()
            .zip(&st)
            .map(|(iv, s)| post_interval(*iv, *s))
            .collect();
        states.push(st);
    }
    PrunedNetwork {
        base: Arc::clone(net),
        region: region.clone(),
        removed,
        linearized,
        bounds: NeuronBounds { input, layers: pre_all },
    }
}

/// Sampled activity of every hidden neuron over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronProfile {
    pub samples: usize,
    /// Per hidden layer, per neuron: weighted-sum values `>= 0`.
    pub mag_pos: Vec<Vec<Vec<f64>>>,
    /// Per hidden layer, per neuron: weighted-sum values `< 0`.
    pub mag_neg: Vec<Vec<Vec<f64>>>,
}

impl NeuronProfile {
    /// Never strictly positive on any sample.
    pub fn is_candidate(&self, id: NeuronId) -> bool {
        self.mag_pos[id.layer][id.index].iter().all(|v| *v <= 0.0)
    }

    pub fn candidates(&self) -> Vec<NeuronId> {
        let mut out = Vec::new();
        for (l, layer) in self.mag_pos.iter().enumerate() {
            for j in 0..layer.len() {
                let id = NeuronId::new(l, j);
                if self.is_candidate(id) {
                    out.push(id);
                }
            }
        }
        out
    }

    /// Sorted pooled non-negative magnitudes of the non-candidates of `layer`.
    pub fn layer_active_magnitudes(&self, layer: usize) -> Vec<f64> {
        let mut pooled: Vec<f64> = (0..self.mag_pos[layer].len())
            .filter(|&j| !self.is_candidate(NeuronId::new(layer, j)))
            .flat_map(|j| self.mag_pos[layer][j].iter().copied())
            .collect();
        pooled.sort_by(f64::total_cmp);
        pooled
    }

    /// Largest `|ws|` among the negative samples of `id`.
    pub fn max_negative(&self, id: NeuronId) -> f64 {
        self.mag_neg[id.layer][id.index]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Uniform sample of `region`: integers on the grid, reals on the interval.
pub fn sample_box(region: &InputBox, rng: &mut impl Rng) -> Vec<f64> {
    region
        .ranges
        .iter()
        .map(|r| {
            if r.integer {
                let lo = r.lo.ceil() as i64;
                let hi = r.hi.floor() as i64;
                rng.gen_range(lo..=hi) as f64
            } else if r.lo == r.hi {
                r.lo
            } else {
                rng.gen_range(r.lo..=r.hi)
            }
        })
        .collect()
}

/// Records the weighted sums of every hidden neuron on `samples` random points.
pub fn profile(net: &Network, region: &InputBox, samples: usize, seed: u64) -> NeuronProfile {
    let hidden = net.hidden_layers();
    let mut mag_pos: Vec<Vec<Vec<f64>>> = hidden.iter().map(|l| vec![Vec::new(); l.width()]).collect();
    let mut mag_neg = mag_pos.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = sample_box(region, &mut rng);
        let trace = model::forward_trace(net, &x).expect("sample matches input arity");
        for (l, ws) in trace.iter().take(hidden.len()).enumerate() {
            for (j, v) in ws.iter().enumerate() {
                if *v >= 0.0 {
                    mag_pos[l][j].push(*v);
                } else {
                    mag_neg[l][j].push(*v);
                }
            }
        }
    }
    NeuronProfile {
        samples,
        mag_pos,
        mag_neg,
    }
}

/// Linear-interpolation percentile of sorted data, `pct` in `[0, 100]`.
pub fn percentile(sorted: &[f64], pct: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = pct.clamp(0.0, 100.0) / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Removes candidates whose largest negative excursion lies below the
/// `tolerance_pct` percentile of their layer's positive activity. A tolerance
/// of 0 removes nothing; 100 removes every candidate of a layer that has at
/// least one non-candidate.
pub fn heuristic_prune(p: &PrunedNetwork, prof: &NeuronProfile, tolerance_pct: f64) -> PrunedNetwork {
    let mut out = p.clone();
    if tolerance_pct <= 0.0 {
        return out;
    }
    for layer in 0..prof.mag_pos.len() {
        let pooled = prof.layer_active_magnitudes(layer);
        if pooled.is_empty() {
            continue;
        }
        let all = tolerance_pct >= 100.0;
        let threshold = percentile(&pooled, tolerance_pct).expect("non-empty");
        for j in 0..prof.mag_pos[layer].len() {
            let id = NeuronId::new(layer, j);
            if out.removed.contains_key(&id) || !prof.is_candidate(id) {
                continue;
            }
            if all || prof.max_negative(id) < threshold {
                out.removed.insert(id, Provenance::Heuristic);
                out.linearized.remove(&id);
            }
        }
    }
    out.bounds = pruned_bounds(&out.base, &out.region, &out.removed);
    out
}

/// Keeps only removals with the given provenances.
pub fn restrict(p: &PrunedNetwork, keep: &[Provenance]) -> PrunedNetwork {
    let mut out = p.clone();
    out.removed.retain(|_, prov| keep.contains(prov));
    out.bounds = pruned_bounds(&out.base, &out.region, &out.removed);
    out
}
