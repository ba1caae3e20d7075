//! Axis-aligned input regions.

use serde::{Deserialize, Serialize};

use crate::model::AttributeSchema;

/// Closed range `[lo, hi]` of one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttrRange {
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
}

impl AttrRange {
    pub fn new(lo: f64, hi: f64, integer: bool) -> Self {
        AttrRange { lo, hi, integer }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi && (!self.integer || v.fract() == 0.0)
    }

    pub fn is_empty(&self) -> bool {
        if self.integer {
            self.lo.ceil() > self.hi.floor()
        } else {
            self.lo > self.hi
        }
    }

    /// Number of integer points, for integer ranges.
    pub fn point_count(&self) -> u128 {
        if self.is_empty() {
            0
        } else {
            (self.hi.floor() - self.lo.ceil()) as u128 + 1
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A box over all attributes, one range per network input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputBox {
    pub ranges: Vec<AttrRange>,
}

impl InputBox {
    pub fn new(ranges: Vec<AttrRange>) -> Self {
        InputBox { ranges }
    }

    pub fn from_schema(schema: &AttributeSchema) -> Self {
        InputBox {
            ranges: schema
                .attributes
                .iter()
                .map(|a| AttrRange::new(a.lb, a.ub, a.integer))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.iter().any(AttrRange::is_empty)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.ranges.len() && self.ranges.iter().zip(x).all(|(r, v)| r.contains(*v))
    }

    /// True when `self` lies inside `outer` on every attribute.
    pub fn is_subset_of(&self, outer: &InputBox) -> bool {
        self.ranges.len() == outer.ranges.len()
            && self
                .ranges
                .iter()
                .zip(&outer.ranges)
                .all(|(a, b)| a.lo >= b.lo && a.hi <= b.hi)
    }

    pub fn all_integer(&self) -> bool {
        self.ranges.iter().all(|r| r.integer)
    }

    /// Number of integer grid points; `None` if any attribute is real-valued.
    pub fn grid_size(&self) -> Option<u128> {
        if !self.all_integer() {
            return None;
        }
        Some(self.ranges.iter().map(AttrRange::point_count).product())
    }
}
