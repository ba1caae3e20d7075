//! Portable network representation, file I/O and concrete evaluation.
//!
//! A network is a stack of dense layers. Hidden layers apply ReLU, the last
//! layer is linear and produces raw logits. The output activation (Sigmoid or
//! Softmax) is kept as metadata only: classification thresholds logits
//! directly, and the verifier reasons about logits through a weakest
//! precondition instead of the activation itself.
//!
//! The on-disk format is a JSON document:
//!
//! ```json
//! {
//!   "input_arity": 2,
//!   "output_activation": "sigmoid",
//!   "attributes": [{ "name": "age", "lb": 18.0, "ub": 90.0, "integer": true }],
//!   "layers": [{ "activation": "relu", "weights": [[1.0, -1.0]], "biases": [0.0] }]
//! }
//! ```
//!
//! Reals are written with the shortest representation that round-trips the
//! 64-bit value, so `save(load(f))` is byte-identical for files produced by
//! [`save_network`].

use std::fmt;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Sigmoid,
    Softmax,
    None,
}

impl OutputActivation {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(OutputActivation::Sigmoid),
            "softmax" => Some(OutputActivation::Softmax),
            "none" => Some(OutputActivation::None),
            _ => None,
        }
    }
}

impl fmt::Display for OutputActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OutputActivation::Sigmoid => "sigmoid",
            OutputActivation::Softmax => "softmax",
            OutputActivation::None => "none",
        };
        f.write_str(s)
    }
}

/// One dense layer. `weights[j][t]` connects predecessor `t` to neuron `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layer {
    pub activation: Activation,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn new(activation: Activation, weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Self {
        Layer {
            activation,
            weights,
            biases,
        }
    }

    /// Number of neurons.
    pub fn width(&self) -> usize {
        self.biases.len()
    }

    /// Number of predecessor values consumed.
    pub fn fan_in(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Weighted sums for a concrete predecessor vector.
    pub fn weighted_sums(&self, prev: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(prev).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// A named input attribute with its domain `[lb, ub]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attribute {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub integer: bool,
}

impl Attribute {
    pub fn new(name: impl Into<String>, lb: f64, ub: f64, integer: bool) -> Self {
        Attribute {
            name: name.into(),
            lb,
            ub,
            integer,
        }
    }
}

/// Input domain description; attribute order is the network input order.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let schema = AttributeSchema { attributes };
        schema.validate()?;
        Ok(schema)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.attributes.iter().enumerate() {
            let field = format!("attributes[{i}]");
            if !a.lb.is_finite() || !a.ub.is_finite() {
                return Err(Error::format(field, "bounds must be finite"));
            }
            if a.lb > a.ub {
                return Err(Error::format(
                    field,
                    format!("lb {} exceeds ub {} for `{}`", a.lb, a.ub, a.name),
                ));
            }
            if a.integer && (a.lb.fract() != 0.0 || a.ub.fract() != 0.0) {
                return Err(Error::format(
                    field,
                    format!("integer attribute `{}` has non-integer bounds", a.name),
                ));
            }
            if self.attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::format(field, format!("duplicate name `{}`", a.name)));
            }
        }
        Ok(())
    }
}

/// A trained fully-connected ReLU classifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    pub input_arity: usize,
    pub output_activation: OutputActivation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributeSchema>,
    pub layers: Vec<Layer>,
}

/// Class index returned by [`classify`].
pub type ClassLabel = usize;

impl Network {
    /// Builds and validates a network.
    pub fn new(
        layers: Vec<Layer>,
        output_activation: OutputActivation,
        attributes: Option<AttributeSchema>,
    ) -> Result<Self> {
        let input_arity = layers.first().map_or(0, Layer::fan_in);
        let net = Network {
            input_arity,
            output_activation,
            attributes,
            layers,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn output_arity(&self) -> usize {
        self.layers.last().map_or(0, Layer::width)
    }

    /// Hidden layers: every layer but the last.
    pub fn hidden_layers(&self) -> &[Layer] {
        &self.layers[..self.layers.len().saturating_sub(1)]
    }

    pub fn hidden_neuron_count(&self) -> usize {
        self.hidden_layers().iter().map(Layer::width).sum()
    }

    /// The attribute schema, or an error if the file carried none.
    pub fn schema(&self) -> Result<&AttributeSchema> {
        self.attributes
            .as_ref()
            .ok_or_else(|| Error::format("attributes", "network has no attribute schema"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::format("layers", "at least one layer is required"));
        }
        let mut prev = self.input_arity;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let idx = i + 1;
            if layer.weights.len() != layer.biases.len() {
                return Err(Error::Dimension {
                    layer: idx,
                    message: format!(
                        "{} weight rows but {} biases",
                        layer.weights.len(),
                        layer.biases.len()
                    ),
                });
            }
            if layer.biases.is_empty() {
                return Err(Error::Dimension {
                    layer: idx,
                    message: "layer has no neurons".into(),
                });
            }
            for (j, row) in layer.weights.iter().enumerate() {
                if row.len() != prev {
                    return Err(Error::Dimension {
                        layer: idx,
                        message: format!(
                            "row {j} has {} columns, expected {prev} (previous layer width)",
                            row.len()
                        ),
                    });
                }
            }
            let finite = layer.weights.iter().flatten().chain(&layer.biases).all(|v| v.is_finite());
            if !finite {
                return Err(Error::format(
                    format!("layers[{i}]"),
                    "weights and biases must be finite",
                ));
            }
            let expected = if i == last { Activation::Linear } else { Activation::Relu };
            if layer.activation != expected {
                return Err(Error::format(
                    format!("layers[{i}].activation"),
                    format!("expected {expected:?} for this position, found {:?}", layer.activation),
                ));
            }
            prev = layer.width();
        }
        if let Some(schema) = &self.attributes {
            schema.validate()?;
            if schema.len() != self.input_arity {
                return Err(Error::format(
                    "attributes",
                    format!(
                        "{} attributes for input arity {}",
                        schema.len(),
                        self.input_arity
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Parses a portable document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::format("<document>", e.to_string()))?;
        parse_network(&value)
    }

    /// Canonical portable serialization.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network serializes");
        s.push('\n');
        s
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Network::from_json_str(&text)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, net.to_json_string()).map_err(|e| Error::io(path, e))
}

fn parse_network(v: &Value) -> Result<Network> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::format("<document>", "expected an object"))?;
    let input_arity = obj
        .get("input_arity")
        .ok_or_else(|| Error::format("input_arity", "missing"))?
        .as_u64()
        .ok_or_else(|| Error::format("input_arity", "expected a non-negative integer"))?
        as usize;
    let output_activation = match obj.get("output_activation") {
        None => OutputActivation::None,
        Some(Value::String(s)) => OutputActivation::parse(s).ok_or_else(|| {
            Error::format("output_activation", format!("unknown activation `{s}`"))
        })?,
        Some(_) => return Err(Error::format("output_activation", "expected a string")),
    };
    let attributes = match obj.get("attributes") {
        None | Some(Value::Null) => None,
        Some(a) => Some(parse_attributes(a)?),
    };
    let layers_v = obj
        .get("layers")
        .ok_or_else(|| Error::format("layers", "missing"))?
        .as_array()
        .ok_or_else(|| Error::format("layers", "expected an array"))?;
    let mut layers = Vec::with_capacity(layers_v.len());
    for (i, lv) in layers_v.iter().enumerate() {
        layers.push(parse_layer(lv, i)?);
    }
    let net = Network {
        input_arity,
        output_activation,
        attributes,
        layers,
    };
    net.validate()?;
    Ok(net)
}

fn parse_attributes(v: &Value) -> Result<AttributeSchema> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::format("attributes", "expected an array"))?;
    let mut attributes = Vec::with_capacity(arr.len());
    for (i, a) in arr.iter().enumerate() {
        let field = |name: &str| format!("attributes[{i}].{name}");
        let name = a
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::format(field("name"), "expected a string"))?;
        let lb = a
            .get("lb")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::format(field("lb"), "expected a number"))?;
        let ub = a
            .get("ub")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::format(field("ub"), "expected a number"))?;
        let integer = match a.get("integer") {
            None => false,
            Some(b) => b
                .as_bool()
                .ok_or_else(|| Error::format(field("integer"), "expected a boolean"))?,
        };
        attributes.push(Attribute::new(name, lb, ub, integer));
    }
    AttributeSchema::new(attributes)
}

fn parse_layer(v: &Value, i: usize) -> Result<Layer> {
    let field = |name: &str| format!("layers[{i}].{name}");
    let activation = match v.get("activation").and_then(Value::as_str) {
        Some(s) => Activation::parse(s)
            .ok_or_else(|| Error::format(field("activation"), format!("unknown `{s}`")))?,
        None => return Err(Error::format(field("activation"), "expected a string")),
    };
    let rows = v
        .get("weights")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format(field("weights"), "expected an array of rows"))?;
    let mut weights = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::format(format!("layers[{i}].weights[{r}]"), "expected an array"))?;
        let mut out = Vec::with_capacity(row.len());
        for (c, w) in row.iter().enumerate() {
            out.push(w.as_f64().ok_or_else(|| {
                Error::format(format!("layers[{i}].weights[{r}][{c}]"), "expected a number")
            })?);
        }
        weights.push(out);
    }
    let biases = v
        .get("biases")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format(field("biases"), "expected an array"))?
        .iter()
        .enumerate()
        .map(|(j, b)| {
            b.as_f64()
                .ok_or_else(|| Error::format(format!("layers[{i}].biases[{j}]"), "expected a number"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Layer::new(activation, weights, biases))
}

fn check_arity(net: &Network, len: usize) -> Result<()> {
    if len != net.input_arity {
        return Err(Error::Input(format!(
            "expected {} inputs, got {len}",
            net.input_arity
        )));
    }
    Ok(())
}

/// Raw output logits. No output activation is applied.
pub fn forward(net: &Network, x: &[f64]) -> Result<Vec<f64>> {
    check_arity(net, x.len())?;
    let mut values = x.to_vec();
    for layer in &net.layers {
        let mut ws = layer.weighted_sums(&values);
        if layer.activation == Activation::Relu {
            for v in &mut ws {
                *v = relu(*v);
            }
        }
        values = ws;
    }
    Ok(values)
}

/// Pre-activation values of every layer, including the output layer.
pub fn forward_trace(net: &Network, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_arity(net, x.len())?;
    let mut trace = Vec::with_capacity(net.layers.len());
    let mut values = x.to_vec();
    for layer in &net.layers {
        let ws = layer.weighted_sums(&values);
        values = match layer.activation {
            Activation::Relu => ws.iter().map(|v| relu(*v)).collect(),
            Activation::Linear => ws.clone(),
        };
        trace.push(ws);
    }
    Ok(trace)
}

/// Forward pass in exact rational arithmetic on the dyadic values of the weights.
pub fn forward_exact(net: &Network, x: &[BigRational]) -> Result<Vec<BigRational>> {
    check_arity(net, x.len())?;
    let zero = BigRational::zero();
    let mut values = x.to_vec();
    for layer in &net.layers {
        let mut next = Vec::with_capacity(layer.width());
        for (row, b) in layer.weights.iter().zip(&layer.biases) {
            let mut acc = exact(*b);
            for (w, v) in row.iter().zip(&values) {
                if *w != 0.0 {
                    acc += exact(*w) * v;
                }
            }
            if layer.activation == Activation::Relu && !acc.is_positive() {
                acc = zero.clone();
            }
            next.push(acc);
        }
        values = next;
    }
    Ok(values)
}

pub(crate) fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite weight")
}

/// ReLU: `x` when `x > 0`, else 0.
#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Predicted class from raw logits. Ties (including a Sigmoid logit of exactly
/// zero) resolve to the lower class index.
pub fn label_from_logits(kind: OutputActivation, logits: &[f64]) -> Result<ClassLabel> {
    match kind {
        OutputActivation::Sigmoid => Ok(usize::from(logits[0] > 0.0)),
        OutputActivation::Softmax => Ok(argmax(logits)),
        OutputActivation::None => Err(Error::Unsupported(
            "classification needs a sigmoid or softmax output".into(),
        )),
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn classify(net: &Network, x: &[f64]) -> Result<ClassLabel> {
    if net.output_activation == OutputActivation::None {
        return label_from_logits(OutputActivation::None, &[]);
    }
    let logits = forward(net, x)?;
    label_from_logits(net.output_activation, &logits)
}

/// Exact-arithmetic counterpart of [`label_from_logits`].
pub fn label_from_exact_logits(kind: OutputActivation, logits: &[BigRational]) -> Result<ClassLabel> {
    match kind {
        OutputActivation::Sigmoid => Ok(usize::from(logits[0].is_positive())),
        OutputActivation::Softmax => {
            let mut best = 0;
            for i in 1..logits.len() {
                if logits[i] > logits[best] {
                    best = i;
                }
            }
            Ok(best)
        }
        OutputActivation::None => Err(Error::Unsupported(
            "classification needs a sigmoid or softmax output".into(),
        )),
    }
}
