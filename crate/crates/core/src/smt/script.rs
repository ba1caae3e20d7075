//! SMT-LIB encoding of a fairness check over two copies of a (pruned) network.
//!
//! Copy 0 reads `x_i`, copy 1 reads `xp_i`. Pre-activations are `a_c_l_j`,
//! post-activations `h_c_l_j` and logits `y_c_k`. Weights and biases are
//! written as exact rationals, so the formula describes the deployed `f64`
//! network evaluated in real arithmetic.

use std::fmt::Write;

use crate::domain::InputBox;
use crate::error::{Error, Result};
use crate::prune::{NeuronId, NeuronState, PrunedNetwork};
use crate::query::{FairnessPredicate, OutputWp, PairConstraint};

use super::rational::{int_literal, real_literal_f64};

pub const LOGIC: &str = "QF_LIRA";

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeOptions {
    pub seed: u64,
    /// Solver-side timeout written into the standalone script.
    pub timeout_s: Option<f64>,
    /// Assert the interval bounds of every pre-activation. They are implied by
    /// the rest of the formula and only help the solver.
    pub bound_hints: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            seed: 0,
            timeout_s: None,
            bound_hints: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmtScript {
    pub logic: String,
    pub seed: u64,
    pub timeout_ms: Option<u64>,
    /// Declarations and assertions, without `check-sat`.
    pub body: String,
    /// Input variables of both copies: `x_0.. x_{n-1}` then `xp_0..`.
    pub model_vars: Vec<String>,
}

impl SmtScript {
    /// Standalone script, suitable for `z3 file.smt2`.
    pub fn text(&self) -> String {
        let mut s = String::new();
        s.push_str("(set-option :produce-models true)\n");
        let _ = writeln!(s, "(set-option :random-seed {})", self.seed % (1 << 31));
        if let Some(ms) = self.timeout_ms {
            let _ = writeln!(s, "(set-option :timeout {ms})");
        }
        let _ = writeln!(s, "(set-logic {})", self.logic);
        s.push_str(&self.body);
        s.push_str("(check-sat)\n");
        if !self.model_vars.is_empty() {
            let _ = writeln!(s, "(get-value ({}))", self.model_vars.join(" "));
        }
        s.push_str("(exit)\n");
        s
    }

    /// Text sent to a fresh session: logic plus body.
    pub fn session_text(&self) -> String {
        format!("(set-logic {})\n{}", self.logic, self.body)
    }
}

pub(crate) fn input_name(copy: usize, i: usize) -> String {
    if copy == 0 {
        format!("x_{i}")
    } else {
        format!("xp_{i}")
    }
}

/// Real-sorted term for a variable, coercing Int variables.
pub(crate) fn real_term(name: &str, integer: bool) -> String {
    if integer {
        format!("(to_real {name})")
    } else {
        name.to_string()
    }
}

/// `row . vars + bias`; `None` entries stand for a constant zero.
pub(crate) fn linear_expr(row: &[f64], bias: f64, vars: &[Option<String>]) -> String {
    let mut terms = Vec::new();
    for (w, v) in row.iter().zip(vars) {
        let Some(v) = v else { continue };
        if *w == 0.0 {
            continue;
        }
        terms.push(if *w == 1.0 {
            v.clone()
        } else if *w == -1.0 {
            format!("(- {v})")
        } else {
            format!("(* {} {v})", real_literal_f64(*w))
        });
    }
    if bias != 0.0 || terms.is_empty() {
        terms.push(real_literal_f64(bias));
    }
    if terms.len() == 1 {
        terms.pop().expect("one term")
    } else {
        format!("(+ {})", terms.join(" "))
    }
}

/// Declares the input variables of one copy and bounds them to `region`.
pub(crate) fn declare_inputs(s: &mut String, region: &InputBox, names: &[String]) -> Result<()> {
    for (i, r) in region.ranges.iter().enumerate() {
        let name = &names[i];
        if r.integer {
            let lo = int_literal(r.lo).map_err(|_| {
                Error::Encoding(format!("integer attribute {i} has non-integer bound {}", r.lo))
            })?;
            let hi = int_literal(r.hi).map_err(|_| {
                Error::Encoding(format!("integer attribute {i} has non-integer bound {}", r.hi))
            })?;
            let _ = writeln!(s, "(declare-const {name} Int)");
            let _ = writeln!(s, "(assert (and (<= {lo} {name}) (<= {name} {hi})))");
        } else {
            let _ = writeln!(s, "(declare-const {name} Real)");
            let _ = writeln!(
                s,
                "(assert (and (<= {} {name}) (<= {name} {})))",
                real_literal_f64(r.lo),
                real_literal_f64(r.hi)
            );
        }
    }
    Ok(())
}

fn encode_copy(s: &mut String, p: &PrunedNetwork, region: &InputBox, copy: usize, hints: bool) -> Vec<String> {
    let net = &p.base;
    let mut vals: Vec<Option<String>> = region
        .ranges
        .iter()
        .enumerate()
        .map(|(i, r)| Some(real_term(&input_name(copy, i), r.integer)))
        .collect();
    let hidden = net.layers.len() - 1;
    for (l, layer) in net.layers[..hidden].iter().enumerate() {
        let mut next = Vec::with_capacity(layer.width());
        for j in 0..layer.width() {
            let id = NeuronId::new(l, j);
            let h = format!("h_{copy}_{l}_{j}");
            match p.state(id) {
                NeuronState::Removed => {
                    let _ = writeln!(s, "(define-fun {h} () Real 0.0)");
                    next.push(None);
                    continue;
                }
                state => {
                    let a = format!("a_{copy}_{l}_{j}");
                    let ws = linear_expr(&layer.weights[j], layer.biases[j], &vals);
                    let _ = writeln!(s, "(declare-const {a} Real)");
                    let _ = writeln!(s, "(assert (= {a} {ws}))");
                    if hints {
                        let iv = p.bounds.pre(l, j);
                        let _ = writeln!(
                            s,
                            "(assert (and (<= {} {a}) (<= {a} {})))",
                            real_literal_f64(iv.lo),
                            real_literal_f64(iv.hi)
                        );
                    }
                    let _ = writeln!(s, "(declare-const {h} Real)");
                    if state == NeuronState::Linear {
                        let _ = writeln!(s, "(assert (= {h} {a}))");
                    } else {
                        let _ = writeln!(s, "(assert (= {h} (ite (> {a} 0.0) {a} 0.0)))");
                    }
                    next.push(Some(h));
                }
            }
        }
        vals = next;
    }
    let out = &net.layers[hidden];
    let mut ys = Vec::with_capacity(out.width());
    for k in 0..out.width() {
        let y = format!("y_{copy}_{k}");
        let _ = writeln!(s, "(declare-const {y} Real)");
        let _ = writeln!(s, "(assert (= {y} {}))", linear_expr(&out.weights[k], out.biases[k], &vals));
        ys.push(y);
    }
    ys
}

fn pair_constraints(pred: &FairnessPredicate, region: &InputBox) -> String {
    let mut s = String::new();
    let mut differ = Vec::new();
    for (i, c) in pred.pair_constraints.iter().enumerate() {
        let (x, xp) = (input_name(0, i), input_name(1, i));
        let integer = region.ranges[i].integer;
        match c {
            PairConstraint::Equal => {
                let _ = writeln!(s, "(assert (= {x} {xp}))");
            }
            PairConstraint::AbsDiffAtMost(eps) => {
                let d = format!("(- {} {})", real_term(&x, integer), real_term(&xp, integer));
                let e = real_literal_f64(*eps);
                let _ = writeln!(s, "(assert (and (<= {d} {e}) (<= (- {e}) {d})))");
            }
            PairConstraint::Differ => differ.push(format!("(not (= {x} {xp}))")),
        }
    }
    match differ.len() {
        0 => s.push_str("(assert false)\n"),
        1 => {
            let _ = writeln!(s, "(assert {})", differ[0]);
        }
        _ => {
            let _ = writeln!(s, "(assert (or {}))", differ.join(" "));
        }
    }
    s
}

fn output_condition(wp: OutputWp, y: &[String], yp: &[String]) -> String {
    match wp {
        OutputWp::SigmoidFlip => format!(
            "(or (and (< {a} 0.0) (> {b} 0.0)) (and (> {a} 0.0) (< {b} 0.0)))",
            a = y[0],
            b = yp[0]
        ),
        OutputWp::BinarySoftmaxFlip => format!(
            "(or (and (> {a0} {a1}) (< {b0} {b1})) (and (< {a0} {a1}) (> {b0} {b1})))",
            a0 = y[0],
            a1 = y[1],
            b0 = yp[0],
            b1 = yp[1]
        ),
    }
}

/// Encodes "some admissible pair in `region` is classified differently".
/// SAT yields a counterexample; UNSAT proves the region fair.
pub fn encode(p: &PrunedNetwork, pred: &FairnessPredicate, region: &InputBox, opts: &EncodeOptions) -> Result<SmtScript> {
    let net = &p.base;
    if region.len() != net.input_arity || pred.pair_constraints.len() != net.input_arity {
        return Err(Error::Encoding(format!(
            "network takes {} inputs, region has {} and predicate {}",
            net.input_arity,
            region.len(),
            pred.pair_constraints.len()
        )));
    }
    if pred.post_wp.output_arity() != net.output_arity() {
        return Err(Error::Encoding(format!(
            "output condition expects {} logits, network has {}",
            pred.post_wp.output_arity(),
            net.output_arity()
        )));
    }
    let n = net.input_arity;
    let x: Vec<String> = (0..n).map(|i| input_name(0, i)).collect();
    let xp: Vec<String> = (0..n).map(|i| input_name(1, i)).collect();
    let mut body = String::new();
    declare_inputs(&mut body, region, &x)?;
    declare_inputs(&mut body, region, &xp)?;
    body.push_str(&pair_constraints(pred, region));
    let y = encode_copy(&mut body, p, region, 0, opts.bound_hints);
    let yp = encode_copy(&mut body, p, region, 1, opts.bound_hints);
    let _ = writeln!(body, "(assert {})", output_condition(pred.post_wp, &y, &yp));
    Ok(SmtScript {
        logic: LOGIC.to_string(),
        seed: opts.seed,
        timeout_ms: opts.timeout_s.map(|t| (t * 1000.0).ceil() as u64),
        body,
        model_vars: x.into_iter().chain(xp).collect(),
    })
}
