//! Input-domain partitioning and accumulation of per-partition verdicts.
//!
//! Every attribute whose range `ub - lb` exceeds the maximum attribute size
//! `MS` is cut into `ceil((ub - lb) / MS)` consecutive chunks; the regions are
//! the cross product of the chunks. Relaxed (epsilon) attributes and
//! protected attributes are never cut, since an admissible pair may take
//! different values on them.
//!
//! Integer chunks are disjoint: all but the last hold exactly `MS` values
//! (`[lo, lo + MS - 1]`) and the last runs to `ub`. Real chunks are closed
//! intervals that share endpoints; a shared endpoint is attributed to the lower
//! chunk by [`PartitionSet::locate`].
//!
//! Regions are generated lazily by id (mixed-radix decoding) and visited in a
//! seeded pseudo-random order given by a Feistel permutation, so neither the
//! regions nor the order are ever materialized.

use serde::{Deserialize, Serialize};

use crate::domain::{AttrRange, InputBox};
use crate::query::{FairnessPredicate, FairnessQuery, PairConstraint};

/// One region of the input domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub id: u64,
    pub region: InputBox,
}

/// How one attribute is cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeChunks {
    pub range: AttrRange,
    pub count: u64,
    pub step: f64,
}

impl AttributeChunks {
    fn whole(range: AttrRange) -> Self {
        AttributeChunks {
            range,
            count: 1,
            step: range.width(),
        }
    }

    fn split(range: AttrRange, ms: u64) -> Self {
        let width = range.width();
        let step = ms as f64;
        if width <= step {
            return Self::whole(range);
        }
        let count = (width / step).ceil() as u64;
        AttributeChunks { range, count, step }
    }

    pub fn chunk(&self, k: u64) -> AttrRange {
        debug_assert!(k < self.count);
        if self.count == 1 {
            return self.range;
        }
        let lo = self.range.lo + k as f64 * self.step;
        let hi = if k + 1 == self.count {
            self.range.hi
        } else if self.range.integer {
            lo + self.step - 1.0
        } else {
            lo + self.step
        };
        AttrRange::new(lo, hi, self.range.integer)
    }

    /// Chunk holding `v`; shared real endpoints go to the lower chunk.
    pub fn locate(&self, v: f64) -> Option<u64> {
        if !self.range.contains(v) {
            return None;
        }
        if self.count == 1 {
            return Some(0);
        }
        let off = v - self.range.lo;
        let k = if self.range.integer {
            (off / self.step).floor() as u64
        } else {
            ((off / self.step).ceil() as u64).saturating_sub(1)
        };
        Some(k.min(self.count - 1))
    }
}

/// Lazily enumerated set of regions covering the domain box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSet {
    pub attributes: Vec<AttributeChunks>,
    pub shuffle_seed: u64,
    /// Set when the domain was empty and no region exists.
    pub diagnostic: Option<String>,
}

impl PartitionSet {
    pub fn len(&self) -> u64 {
        if self.diagnostic.is_some() {
            return 0;
        }
        self.attributes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Region `id` in unshuffled (mixed-radix, last attribute fastest) order.
    pub fn get(&self, id: u64) -> Option<Partition> {
        if id >= self.len() {
            return None;
        }
        let mut rest = id;
        let mut ranges = vec![AttrRange::new(0.0, 0.0, false); self.attributes.len()];
        for (i, a) in self.attributes.iter().enumerate().rev() {
            ranges[i] = a.chunk(rest % a.count);
            rest /= a.count;
        }
        Some(Partition {
            id,
            region: InputBox::new(ranges),
        })
    }

    /// Id of the region containing `x`.
    pub fn locate(&self, x: &[f64]) -> Option<u64> {
        if x.len() != self.attributes.len() || self.is_empty() {
            return None;
        }
        let mut id = 0u64;
        for (a, v) in self.attributes.iter().zip(x) {
            id = id * a.count + a.locate(*v)?;
        }
        Some(id)
    }

    /// Id visited at position `k` of the shuffled order.
    pub fn shuffled_id(&self, k: u64) -> u64 {
        FeistelPermutation::new(self.len(), self.shuffle_seed).apply(k)
    }

    /// Regions in shuffled order.
    pub fn iter_shuffled(&self) -> impl Iterator<Item = Partition> + '_ {
        let perm = FeistelPermutation::new(self.len(), self.shuffle_seed);
        (0..self.len()).map(move |k| self.get(perm.apply(k)).expect("id in range"))
    }

    /// Regions in id order.
    pub fn iter(&self) -> impl Iterator<Item = Partition> + '_ {
        (0..self.len()).map(move |id| self.get(id).expect("id in range"))
    }
}

/// Partitions `domain_box` for `query`.
///
/// Protected attributes are kept whole together with the relaxed ones.
pub fn partition(domain_box: &InputBox, query: &FairnessQuery, shuffle_seed: u64) -> PartitionSet {
    let keep_whole = |i: usize| query.is_relaxed(i) || query.protected.contains(&i);
    partition_with(domain_box, query.max_attribute_size, shuffle_seed, keep_whole)
}

/// Partitions the box of `pred`, keeping every attribute that is not
/// constrained to equality whole.
pub fn partition_predicate(pred: &FairnessPredicate, ms: u64, shuffle_seed: u64) -> PartitionSet {
    partition_with(&pred.domain_box, ms, shuffle_seed, |i| {
        !matches!(pred.pair_constraints[i], PairConstraint::Equal)
    })
}

fn partition_with(
    domain_box: &InputBox,
    ms: u64,
    shuffle_seed: u64,
    keep_whole: impl Fn(usize) -> bool,
) -> PartitionSet {
    assert!(ms >= 1, "maximum attribute size must be at least 1");
    let diagnostic = domain_box
        .ranges
        .iter()
        .position(AttrRange::is_empty)
        .map(|i| format!("attribute {i} has an empty range; nothing to partition"));
    let attributes = domain_box
        .ranges
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if keep_whole(i) {
                AttributeChunks::whole(*r)
            } else {
                AttributeChunks::split(*r, ms)
            }
        })
        .collect();
    PartitionSet {
        attributes,
        shuffle_seed,
        diagnostic,
    }
}

/// Seeded bijection on `0..n` built from a balanced Feistel network over the
/// next even power of two, restricted to `0..n` by cycle walking.
#[derive(Debug, Clone, Copy)]
pub struct FeistelPermutation {
    n: u64,
    half_bits: u32,
    keys: [u64; 4],
}

impl FeistelPermutation {
    pub fn new(n: u64, seed: u64) -> Self {
        let bits = if n <= 1 { 2 } else { 64 - (n - 1).leading_zeros() };
        let half_bits = bits.div_ceil(2).max(1);
        let mut state = seed;
        let keys = std::array::from_fn(|_| splitmix64(&mut state));
        FeistelPermutation { n, half_bits, keys }
    }

    fn round(&self, x: u64) -> u64 {
        let mask = (1u64 << self.half_bits) - 1;
        let mut l = x >> self.half_bits;
        let mut r = x & mask;
        for k in self.keys {
            let mut s = r ^ k;
            let f = splitmix64(&mut s) & mask;
            let nl = r;
            r = l ^ f;
            l = nl;
        }
        (l << self.half_bits) | r
    }

    pub fn apply(&self, k: u64) -> u64 {
        assert!(k < self.n.max(1), "index out of range");
        if self.n <= 1 {
            return k;
        }
        let mut x = self.round(k);
        while x >= self.n {
            x = self.round(x);
        }
        x
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result status of one partition (or of a whole run).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Sat => "SAT",
            Status::Unsat => "UNSAT",
            Status::Unknown => "UNKNOWN",
        })
    }
}

/// Anything carrying a per-partition status.
pub trait HasStatus {
    fn status(&self) -> Status;
}

impl HasStatus for Status {
    fn status(&self) -> Status {
        *self
    }
}

/// Overall verdict over a collection of partitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Index (in the input order) of the first SAT result.
    pub first_sat: Option<usize>,
    pub decided: u64,
    pub total: u64,
    /// Decided partitions as a percentage of `total`.
    pub coverage_pct: f64,
}

/// Accumulates results: any SAT makes the whole problem SAT, all UNSAT makes it
/// UNSAT, anything else is UNKNOWN.
pub fn accumulate<R: HasStatus>(results: &[R]) -> Verdict {
    accumulate_over(results, results.len() as u64)
}

/// Like [`accumulate`], where `total` counts partitions including those never
/// attempted; unattempted partitions count as undecided.
pub fn accumulate_over<R: HasStatus>(results: &[R], total: u64) -> Verdict {
    let first_sat = results.iter().position(|r| r.status() == Status::Sat);
    let decided = results.iter().filter(|r| r.status() != Status::Unknown).count() as u64;
    let total = total.max(results.len() as u64);
    let status = if first_sat.is_some() {
        Status::Sat
    } else if decided == total && total > 0 {
        Status::Unsat
    } else {
        Status::Unknown
    };
    let coverage_pct = if total == 0 {
        0.0
    } else {
        100.0 * decided as f64 / total as f64
    };
    Verdict {
        status,
        first_sat,
        decided,
        total,
        coverage_pct,
    }
}
