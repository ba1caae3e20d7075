//! Exhaustive ground truth on integer grids.
//!
//! Every input `x` of the box is visited in lexicographic order, and for each
//! one only the admissible partners `x'` are scanned: equal attributes are
//! copied, relaxed ones range over their epsilon-ball, and protected ones
//! over the values of the box. Logits are cached per grid point.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::bounds::Interval;
use crate::domain::InputBox;
use crate::error::{Error, Result};
use crate::model::{self, Activation, Network};
use crate::query::{FairnessPredicate, PairConstraint};

pub const DEFAULT_PAIR_CAP: u128 = 10_000_000;

// Logits closer to a decision boundary than this are recomputed exactly.
const MARGIN: f64 = 1e-9;

/// Integer ranges of an all-integer box plus the enumeration cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ranges: Vec<(i64, i64)>,
    pub cap: u128,
}

impl GridSpec {
    pub fn from_box(region: &InputBox, cap: u128) -> Result<Self> {
        let mut ranges = Vec::with_capacity(region.len());
        for (i, r) in region.ranges.iter().enumerate() {
            if !r.integer {
                return Err(Error::Input(format!("attribute {i} is not integer-valued")));
            }
            ranges.push((r.lo.ceil() as i64, r.hi.floor() as i64));
        }
        Ok(GridSpec { ranges, cap })
    }

    pub fn points(&self) -> u128 {
        self.ranges
            .iter()
            .map(|(lo, hi)| if hi < lo { 0 } else { (hi - lo + 1) as u128 })
            .product()
    }

    /// Upper bound on the number of `(x, x')` pairs scanned for `pred`.
    pub fn pair_count(&self, pred: &FairnessPredicate) -> u128 {
        let mut per_x: u128 = 1;
        let mut protected: u128 = 1;
        for ((lo, hi), c) in self.ranges.iter().zip(&pred.pair_constraints) {
            let size = (hi - lo + 1).max(0) as u128;
            match c {
                PairConstraint::Equal => {}
                PairConstraint::AbsDiffAtMost(eps) => {
                    let ball = 2 * eps.floor().max(0.0).min(1e18) as u128 + 1;
                    per_x = per_x.saturating_mul(ball.min(size));
                }
                PairConstraint::Differ => protected = protected.saturating_mul(size),
            }
        }
        self.points()
            .saturating_mul(per_x)
            .saturating_mul(protected.saturating_sub(1))
    }

    fn check_cap(&self, pairs: u128) -> Result<()> {
        if pairs > self.cap {
            return Err(Error::OracleTooBig { pairs, cap: self.cap });
        }
        Ok(())
    }

    fn decode(&self, mut k: u128) -> Vec<i64> {
        let mut v = vec![0; self.ranges.len()];
        for (i, (lo, hi)) in self.ranges.iter().enumerate().rev() {
            let size = (hi - lo + 1) as u128;
            v[i] = lo + (k % size) as i64;
            k /= size;
        }
        v
    }

    fn encode(&self, v: &[i64]) -> u128 {
        let mut k = 0u128;
        for ((lo, hi), x) in self.ranges.iter().zip(v) {
            k = k * (hi - lo + 1) as u128 + (x - lo) as u128;
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OracleVerdict {
    Sat { x: Vec<f64>, xp: Vec<f64> },
    Unsat,
}

impl OracleVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleVerdict::Sat { .. })
    }
}

struct LogitCache<'a> {
    net: &'a Network,
    grid: &'a GridSpec,
    cache: HashMap<u128, Vec<f64>>,
}

impl LogitCache<'_> {
    fn logits(&mut self, x: &[i64]) -> Result<Vec<f64>> {
        let k = self.grid.encode(x);
        if let Some(y) = self.cache.get(&k) {
            return Ok(y.clone());
        }
        let xf: Vec<f64> = x.iter().map(|v| *v as f64).collect();
        let y = model::forward(self.net, &xf)?;
        self.cache.insert(k, y.clone());
        Ok(y)
    }
}

fn near_boundary(y: &[f64]) -> bool {
    match y {
        [a] => a.abs() < MARGIN,
        [a, b] => (a - b).abs() < MARGIN * (1.0 + a.abs().max(b.abs())),
        _ => false,
    }
}

fn exact_logits(net: &Network, x: &[i64]) -> Result<Vec<BigRational>> {
    let xr: Vec<BigRational> = x.iter().map(|v| BigRational::from_integer((*v).into())).collect();
    model::forward_exact(net, &xr)
}

/// Searches the integer grid of `region` for an admissible pair whose
/// outputs satisfy the predicate's output condition.
pub fn brute_force(net: &Network, pred: &FairnessPredicate, region: &InputBox) -> Result<OracleVerdict> {
    brute_force_with_cap(net, pred, region, DEFAULT_PAIR_CAP)
}

pub fn brute_force_with_cap(
    net: &Network,
    pred: &FairnessPredicate,
    region: &InputBox,
    cap: u128,
) -> Result<OracleVerdict> {
    if region.len() != net.input_arity || pred.pair_constraints.len() != net.input_arity {
        return Err(Error::Input("box, predicate and network disagree on arity".into()));
    }
    let grid = GridSpec::from_box(region, cap)?;
    grid.check_cap(grid.pair_count(pred))?;
    let mut cache = LogitCache {
        net,
        grid: &grid,
        cache: HashMap::new(),
    };
    let n = grid.ranges.len();
    for k in 0..grid.points() {
        let x = grid.decode(k);
        // candidate values of x' per attribute
        let cands: Vec<Vec<i64>> = (0..n)
            .map(|i| {
                let (lo, hi) = grid.ranges[i];
                match pred.pair_constraints[i] {
                    PairConstraint::Equal => vec![x[i]],
                    PairConstraint::AbsDiffAtMost(eps) => {
                        let a = ((x[i] as f64 - eps).ceil() as i64).max(lo);
                        let b = ((x[i] as f64 + eps).floor() as i64).min(hi);
                        (a..=b).collect()
                    }
                    PairConstraint::Differ => (lo..=hi).collect(),
                }
            })
            .collect();
        if cands.iter().any(Vec::is_empty) {
            continue;
        }
        let y = cache.logits(&x)?;
        let mut idx = vec![0usize; n];
        let mut done = false;
        while !done {
            let xp: Vec<i64> = (0..n).map(|i| cands[i][idx[i]]).collect();
            if pred.protected().any(|i| xp[i] != x[i]) {
                let yp = cache.logits(&xp)?;
                let hit = if near_boundary(&y) || near_boundary(&yp) {
                    pred.post_wp
                        .eval_exact(&exact_logits(net, &x)?, &exact_logits(net, &xp)?)
                } else {
                    pred.post_wp.eval(&y, &yp)
                };
                if hit {
                    return Ok(OracleVerdict::Sat {
                        x: x.iter().map(|v| *v as f64).collect(),
                        xp: xp.iter().map(|v| *v as f64).collect(),
                    });
                }
            }
            // odometer over the candidate lists
            let mut i = n;
            loop {
                if i == 0 {
                    done = true;
                    break;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < cands[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
    }
    Ok(OracleVerdict::Unsat)
}

/// Exact extrema of every neuron's pre-activation over the integer grid,
/// per layer (output layer included).
#[derive(Debug, Clone, PartialEq)]
pub struct GridExtrema {
    pub layers: Vec<Vec<(BigRational, BigRational)>>,
}

impl GridExtrema {
    /// True if every grid extremum lies inside the matching interval.
    pub fn within(&self, bounds: &[Vec<Interval>]) -> bool {
        self.layers.iter().zip(bounds).all(|(ext, ivs)| {
            ext.iter().zip(ivs).all(|((lo, hi), iv)| {
                *lo >= model::exact(iv.lo) && *hi <= model::exact(iv.hi)
            })
        })
    }

    /// Extrema rounded to the nearest `f64`.
    pub fn to_f64(&self) -> Vec<Vec<(f64, f64)>> {
        use num_traits::ToPrimitive;
        self.layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|(a, b)| (a.to_f64().unwrap_or(f64::NAN), b.to_f64().unwrap_or(f64::NAN)))
                    .collect()
            })
            .collect()
    }
}

pub fn brute_force_bounds(net: &Network, region: &InputBox) -> Result<GridExtrema> {
    brute_force_bounds_with_cap(net, region, DEFAULT_PAIR_CAP)
}

pub fn brute_force_bounds_with_cap(net: &Network, region: &InputBox, cap: u128) -> Result<GridExtrema> {
    if region.len() != net.input_arity {
        return Err(Error::Input("box and network disagree on arity".into()));
    }
    let grid = GridSpec::from_box(region, cap)?;
    grid.check_cap(grid.points())?;
    let mut layers: Vec<Vec<(BigRational, BigRational)>> = Vec::new();
    for k in 0..grid.points() {
        let x = grid.decode(k);
        let mut values: Vec<BigRational> = x.iter().map(|v| BigRational::from_integer((*v).into())).collect();
        for (l, layer) in net.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.width());
            for (j, (row, b)) in layer.weights.iter().zip(&layer.biases).enumerate() {
                let mut ws = model::exact(*b);
                for (w, v) in row.iter().zip(&values) {
                    if *w != 0.0 {
                        ws += model::exact(*w) * v;
                    }
                }
                if k == 0 {
                    if j == 0 {
                        layers.push(Vec::with_capacity(layer.width()));
                    }
                    layers[l].push((ws.clone(), ws.clone()));
                } else {
                    let e = &mut layers[l][j];
                    if ws < e.0 {
                        e.0 = ws.clone();
                    }
                    if ws > e.1 {
                        e.1 = ws.clone();
                    }
                }
                next.push(if layer.activation == Activation::Relu && !ws.is_positive() {
                    BigRational::from_integer(0.into())
                } else {
                    ws
                });
            }
            values = next;
        }
    }
    Ok(GridExtrema { layers })
}
