//! Fairness queries and their reduction to a predicate over two network copies.
//!
//! Three flavours are supported and can be combined:
//!
//! * individual fairness: non-protected attributes equal, protected differ;
//! * epsilon fairness: selected non-protected attributes may differ by at most
//!   `epsilon[i]` attribute units;
//! * targeted fairness: the domain is narrowed to a target box.
//!
//! The output activation is eliminated by its weakest precondition on the raw
//! logits, see [`OutputWp`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::domain::{AttrRange, InputBox};
use crate::error::{Error, Result};
use crate::model::{self, AttributeSchema, Network, OutputActivation};

/// Default per-call solver budget in seconds.
pub const DEFAULT_SOFT_TIMEOUT_S: f64 = 100.0;
/// Default whole-run budget in seconds.
pub const DEFAULT_HARD_TIMEOUT_S: f64 = 1800.0;

/// A fairness query over attribute indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessQuery {
    pub protected: BTreeSet<usize>,
    pub epsilon: BTreeMap<usize, f64>,
    pub target: BTreeMap<usize, (f64, f64)>,
    pub soft_timeout_s: f64,
    pub hard_timeout_s: f64,
    pub max_attribute_size: u64,
}

impl FairnessQuery {
    /// Individual fairness for one protected attribute with default budgets.
    pub fn individual(protected: usize, max_attribute_size: u64) -> Self {
        FairnessQuery {
            protected: BTreeSet::from([protected]),
            epsilon: BTreeMap::new(),
            target: BTreeMap::new(),
            soft_timeout_s: DEFAULT_SOFT_TIMEOUT_S,
            hard_timeout_s: DEFAULT_HARD_TIMEOUT_S,
            max_attribute_size,
        }
    }

    pub fn with_epsilon(mut self, attr: usize, eps: f64) -> Self {
        self.epsilon.insert(attr, eps);
        self
    }

    pub fn with_target(mut self, attr: usize, lo: f64, hi: f64) -> Self {
        self.target.insert(attr, (lo, hi));
        self
    }

    pub fn is_relaxed(&self, attr: usize) -> bool {
        self.epsilon.contains_key(&attr)
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        let n = schema.len();
        if self.protected.is_empty() {
            return Err(Error::Query("no protected attribute given".into()));
        }
        if let Some(p) = self.protected.iter().find(|p| **p >= n) {
            return Err(Error::Query(format!("protected index {p} out of range")));
        }
        for (i, eps) in &self.epsilon {
            if *i >= n {
                return Err(Error::Query(format!("epsilon index {i} out of range")));
            }
            if self.protected.contains(i) {
                return Err(Error::Query(format!(
                    "attribute `{}` is both protected and relaxed",
                    schema.attributes[*i].name
                )));
            }
            if !(eps.is_finite() && *eps >= 0.0) {
                return Err(Error::Query(format!("epsilon for index {i} must be >= 0")));
            }
        }
        for (i, (lo, hi)) in &self.target {
            let a = schema
                .attributes
                .get(*i)
                .ok_or_else(|| Error::Query(format!("target index {i} out of range")))?;
            if lo < &a.lb || hi > &a.ub {
                return Err(Error::Query(format!(
                    "target [{lo}, {hi}] for `{}` leaves its domain [{}, {}]",
                    a.name, a.lb, a.ub
                )));
            }
        }
        if !(self.soft_timeout_s > 0.0 && self.soft_timeout_s <= self.hard_timeout_s) {
            return Err(Error::Query(
                "need 0 < soft_timeout_s <= hard_timeout_s".into(),
            ));
        }
        if self.max_attribute_size < 1 {
            return Err(Error::Query("max_attribute_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Attribute reference in a query file: a name or a zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrRef {
    Index(usize),
    Name(String),
}

impl AttrRef {
    fn resolve(&self, schema: &AttributeSchema) -> Result<usize> {
        match self {
            AttrRef::Index(i) if *i < schema.len() => Ok(*i),
            AttrRef::Index(i) => Err(Error::Query(format!("attribute index {i} out of range"))),
            AttrRef::Name(n) => schema
                .index_of(n)
                .ok_or_else(|| Error::Query(format!("unknown attribute `{n}`"))),
        }
    }
}

fn one_or_many<'de, D>(d: D) -> std::result::Result<Vec<AttrRef>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(AttrRef),
        Many(Vec<AttrRef>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(a) => vec![a],
        OneOrMany::Many(v) => v,
    })
}

/// On-disk query document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryFile {
    #[serde(deserialize_with = "one_or_many")]
    pub protected: Vec<AttrRef>,
    #[serde(default)]
    pub epsilon: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BTreeMap<String, [f64; 2]>>,
    #[serde(default = "default_soft")]
    pub soft_timeout_s: f64,
    #[serde(default = "default_hard")]
    pub hard_timeout_s: f64,
    pub max_attribute_size: u64,
}

fn default_soft() -> f64 {
    DEFAULT_SOFT_TIMEOUT_S
}

fn default_hard() -> f64 {
    DEFAULT_HARD_TIMEOUT_S
}

fn key_ref(key: &str) -> AttrRef {
    match key.parse::<usize>() {
        Ok(i) => AttrRef::Index(i),
        Err(_) => AttrRef::Name(key.to_string()),
    }
}

impl QueryFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("query", e.to_string()))
    }

    /// Resolves attribute names against `schema` and validates the result.
    pub fn resolve(&self, schema: &AttributeSchema) -> Result<FairnessQuery> {
        let protected = self
            .protected
            .iter()
            .map(|a| a.resolve(schema))
            .collect::<Result<BTreeSet<_>>>()?;
        let epsilon = self
            .epsilon
            .iter()
            .map(|(k, v)| Ok((key_ref(k).resolve(schema)?, *v)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let target = self
            .target
            .iter()
            .flatten()
            .map(|(k, [lo, hi])| Ok((key_ref(k).resolve(schema)?, (*lo, *hi))))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let q = FairnessQuery {
            protected,
            epsilon,
            target,
            soft_timeout_s: self.soft_timeout_s,
            hard_timeout_s: self.hard_timeout_s,
            max_attribute_size: self.max_attribute_size,
        };
        q.validate(schema)?;
        Ok(q)
    }

    /// Inverse of [`QueryFile::resolve`], naming attributes.
    pub fn from_query(q: &FairnessQuery, schema: &AttributeSchema) -> Self {
        let name = |i: &usize| schema.attributes[*i].name.clone();
        QueryFile {
            protected: q.protected.iter().map(|i| AttrRef::Name(name(i))).collect(),
            epsilon: q.epsilon.iter().map(|(i, e)| (name(i), *e)).collect(),
            target: if q.target.is_empty() {
                None
            } else {
                Some(q.target.iter().map(|(i, (lo, hi))| (name(i), [*lo, *hi])).collect())
            },
            soft_timeout_s: q.soft_timeout_s,
            hard_timeout_s: q.hard_timeout_s,
            max_attribute_size: q.max_attribute_size,
        }
    }
}

/// Relation imposed between `x[i]` and `x'[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairConstraint {
    Equal,
    AbsDiffAtMost(f64),
    /// Protected attribute. With several protected attributes the pair must
    /// differ on at least one of them.
    Differ,
}

/// Weakest precondition of "the two classifications differ", stated on logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputWp {
    /// `(y < 0 and y' > 0) or (y > 0 and y' < 0)`.
    SigmoidFlip,
    /// `(y0 > y1 and y0' < y1') or (y0 < y1 and y0' > y1')`.
    BinarySoftmaxFlip,
}

impl OutputWp {
    pub fn eval(&self, y: &[f64], yp: &[f64]) -> bool {
        match self {
            OutputWp::SigmoidFlip => (y[0] < 0.0 && yp[0] > 0.0) || (y[0] > 0.0 && yp[0] < 0.0),
            OutputWp::BinarySoftmaxFlip => {
                (y[0] > y[1] && yp[0] < yp[1]) || (y[0] < y[1] && yp[0] > yp[1])
            }
        }
    }

    pub fn eval_exact(&self, y: &[BigRational], yp: &[BigRational]) -> bool {
        use num_traits::Signed;
        match self {
            OutputWp::SigmoidFlip => {
                (y[0].is_negative() && yp[0].is_positive())
                    || (y[0].is_positive() && yp[0].is_negative())
            }
            OutputWp::BinarySoftmaxFlip => {
                (y[0] > y[1] && yp[0] < yp[1]) || (y[0] < y[1] && yp[0] > yp[1])
            }
        }
    }

    pub fn output_arity(&self) -> usize {
        match self {
            OutputWp::SigmoidFlip => 1,
            OutputWp::BinarySoftmaxFlip => 2,
        }
    }
}

/// Weakest precondition for an output activation with `output_arity` logits.
pub fn wp_of_output(kind: OutputActivation, output_arity: usize) -> Result<OutputWp> {
    match (kind, output_arity) {
        (OutputActivation::Sigmoid, 1) => Ok(OutputWp::SigmoidFlip),
        (OutputActivation::Sigmoid, m) => Err(Error::Unsupported(format!(
            "sigmoid output with {m} logits"
        ))),
        (OutputActivation::Softmax, 2) => Ok(OutputWp::BinarySoftmaxFlip),
        (OutputActivation::Softmax, m) => Err(Error::Unsupported(format!(
            "softmax weakest precondition is only defined for 2 classes, got {m}"
        ))),
        (OutputActivation::None, _) => Err(Error::Unsupported(
            "network has no classification output".into(),
        )),
    }
}

/// Input and output constraints of one fairness check over two network copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessPredicate {
    pub domain_box: InputBox,
    pub pair_constraints: Vec<PairConstraint>,
    pub post_wp: OutputWp,
}

impl FairnessPredicate {
    pub fn protected(&self) -> impl Iterator<Item = usize> + '_ {
        self.pair_constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, PairConstraint::Differ))
            .map(|(i, _)| i)
    }

    /// The pair constraints, with at least one protected attribute differing.
    pub fn pair_holds(&self, x: &[f64], xp: &[f64]) -> bool {
        let mut any_differ = false;
        for (i, c) in self.pair_constraints.iter().enumerate() {
            match c {
                PairConstraint::Equal => {
                    if x[i] != xp[i] {
                        return false;
                    }
                }
                PairConstraint::AbsDiffAtMost(eps) => {
                    if (x[i] - xp[i]).abs() > *eps {
                        return false;
                    }
                }
                PairConstraint::Differ => any_differ |= x[i] != xp[i],
            }
        }
        any_differ
    }

    /// Same predicate restricted to another box.
    pub fn with_box(&self, domain_box: InputBox) -> Self {
        FairnessPredicate {
            domain_box,
            ..self.clone()
        }
    }
}

pub fn build_predicate(
    query: &FairnessQuery,
    schema: &AttributeSchema,
    net: &Network,
) -> Result<FairnessPredicate> {
    query.validate(schema)?;
    if schema.len() != net.input_arity {
        return Err(Error::Query(format!(
            "schema has {} attributes, network takes {} inputs",
            schema.len(),
            net.input_arity
        )));
    }
    let post_wp = wp_of_output(net.output_activation, net.output_arity())?;
    let mut domain_box = InputBox::from_schema(schema);
    for (i, (lo, hi)) in &query.target {
        let r = &mut domain_box.ranges[*i];
        *r = AttrRange::new(*lo, *hi, r.integer);
    }
    let pair_constraints = (0..schema.len())
        .map(|i| {
            if query.protected.contains(&i) {
                PairConstraint::Differ
            } else if let Some(eps) = query.epsilon.get(&i) {
                PairConstraint::AbsDiffAtMost(*eps)
            } else {
                PairConstraint::Equal
            }
        })
        .collect();
    Ok(FairnessPredicate {
        domain_box,
        pair_constraints,
        post_wp,
    })
}

/// True iff `(x, x')` is an admissible pair inside the predicate's box that the
/// network classifies differently.
pub fn check_counterexample(pred: &FairnessPredicate, net: &Network, x: &[f64], xp: &[f64]) -> bool {
    if x.len() != net.input_arity || xp.len() != net.input_arity {
        return false;
    }
    if !pred.domain_box.contains(x) || !pred.domain_box.contains(xp) || !pred.pair_holds(x, xp) {
        return false;
    }
    match (model::classify(net, x), model::classify(net, xp)) {
        (Ok(a), Ok(b)) => a != b,
        _ => false,
    }
}

/// Exact-arithmetic replay: admissible pair whose exact logits satisfy the
/// weakest precondition.
pub fn check_counterexample_exact(
    pred: &FairnessPredicate,
    net: &Network,
    x: &[BigRational],
    xp: &[BigRational],
) -> bool {
    // Box membership and pair relations are checked on the exact values.
    let in_box = |v: &[BigRational]| {
        v.len() == pred.domain_box.len()
            && pred.domain_box.ranges.iter().zip(v).all(|(r, v)| {
                *v >= model::exact(r.lo)
                    && *v <= model::exact(r.hi)
                    && (!r.integer || v.is_integer())
            })
    };
    if x.len() != net.input_arity || xp.len() != net.input_arity || !in_box(x) || !in_box(xp) {
        return false;
    }
    let mut any_differ = false;
    for (i, c) in pred.pair_constraints.iter().enumerate() {
        match c {
            PairConstraint::Equal => {
                if x[i] != xp[i] {
                    return false;
                }
            }
            PairConstraint::AbsDiffAtMost(eps) => {
                let d = &x[i] - &xp[i];
                let d = if d < BigRational::from_integer(0.into()) { -d } else { d };
                if d > model::exact(*eps) {
                    return false;
                }
            }
            PairConstraint::Differ => any_differ |= x[i] != xp[i],
        }
    }
    if !any_differ {
        return false;
    }
    match (model::forward_exact(net, x), model::forward_exact(net, xp)) {
        (Ok(y), Ok(yp)) => pred.post_wp.eval_exact(&y, &yp),
        _ => false,
    }
}
