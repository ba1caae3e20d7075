//! Per-neuron inactivity queries.
//!
//! To decide whether hidden neuron `j` of layer `l` can ever be positive on a
//! region, the query looks two layers back. The outputs of layer `l - 2` (or
//! the inputs, typed Int where the attribute is integer) range over their
//! interval bounds; each neuron of layer `l - 1` is encoded by its pruning
//! state, with undecided ReLUs replaced by the triangle relaxation
//! `v >= 0, v >= ws, (U - L) v <= U (ws - L)`. The formula over-approximates
//! the reachable values of layer `l - 1`, so UNSAT of `ws_j > 0` proves the
//! neuron inactive. For the first hidden layer the query is exact.

use std::fmt::Write;
use std::sync::Arc;

use crate::bounds::Interval;
use crate::domain::InputBox;
use crate::error::Result;
use crate::model::Network;
use crate::partition::Status;
use crate::prune::NeuronState;

use super::rational::real_literal_f64;
use super::script::{declare_inputs, input_name, linear_expr, real_term};
use super::solver::{SolverConfig, SolverSession};

/// Body of the query "neuron `j` of hidden layer `layer` can be positive".
///
/// `pre` holds the pre-activation bounds of layers `0..=layer` and `states`
/// the pruning states of layers `0..layer`.
pub fn individual_script(
    net: &Network,
    region: &InputBox,
    pre: &[Vec<Interval>],
    states: &[Vec<NeuronState>],
    layer: usize,
    j: usize,
) -> Result<String> {
    let mut s = String::new();
    // integer attributes whose box endpoints are not integral fall back to Real
    let relaxed = InputBox::new(
        region
            .ranges
            .iter()
            .map(|r| {
                let mut r = *r;
                r.integer = r.integer && r.lo.fract() == 0.0 && r.hi.fract() == 0.0;
                r
            })
            .collect(),
    );
    let input_terms = |s: &mut String| -> Result<Vec<Option<String>>> {
        let names: Vec<String> = (0..relaxed.len()).map(|i| input_name(0, i)).collect();
        declare_inputs(s, &relaxed, &names)?;
        Ok(names
            .iter()
            .zip(&relaxed.ranges)
            .map(|(n, r)| Some(real_term(n, r.integer)))
            .collect())
    };
    let target = &net.layers[layer];
    let vals = if layer == 0 {
        input_terms(&mut s)?
    } else {
        let p = layer - 1;
        let src = if p == 0 {
            input_terms(&mut s)?
        } else {
            let mut src = Vec::with_capacity(pre[p - 1].len());
            for (t, iv) in pre[p - 1].iter().enumerate() {
                match states[p - 1][t] {
                    NeuronState::Removed => src.push(None),
                    st => {
                        let post = if st == NeuronState::Linear { *iv } else { iv.relu() };
                        let u = format!("u_{t}");
                        let _ = writeln!(s, "(declare-const {u} Real)");
                        let _ = writeln!(
                            s,
                            "(assert (and (<= {} {u}) (<= {u} {})))",
                            real_literal_f64(post.lo),
                            real_literal_f64(post.hi)
                        );
                        src.push(Some(u));
                    }
                }
            }
            src
        };
        let prev = &net.layers[p];
        let mut vals = Vec::with_capacity(prev.width());
        for k in 0..prev.width() {
            let iv = pre[p][k];
            let state = states[p][k];
            if state == NeuronState::Removed || (state == NeuronState::Relu && iv.hi <= 0.0) {
                vals.push(None);
                continue;
            }
            let ws = linear_expr(&prev.weights[k], prev.biases[k], &src);
            let v = format!("v_{k}");
            let (lo, hi) = (real_literal_f64(iv.lo), real_literal_f64(iv.hi));
            let _ = writeln!(s, "(declare-const {v} Real)");
            let _ = writeln!(s, "(assert (and (<= {lo} {ws}) (<= {ws} {hi})))");
            if state == NeuronState::Linear || iv.lo >= 0.0 {
                let _ = writeln!(s, "(assert (= {v} {ws}))");
            } else {
                let _ = writeln!(s, "(assert (<= 0.0 {v}))");
                let _ = writeln!(s, "(assert (<= {ws} {v}))");
                let _ = writeln!(s, "(assert (<= (* (- {hi} {lo}) {v}) (* {hi} (- {ws} {lo}))))");
            }
            vals.push(Some(v));
        }
        vals
    };
    let ws = linear_expr(&target.weights[j], target.biases[j], &vals);
    let _ = writeln!(s, "(assert (> {ws} 0.0))");
    Ok(s)
}

/// Runs one inactivity query in `session`.
pub fn individual_query(session: &mut SolverSession, body: &str, timeout_s: f64) -> Result<Status> {
    Ok(session.check_scoped(body, &[], timeout_s)?.status)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IvStats {
    pub queries: u64,
    pub proved: u64,
    pub unknown: u64,
    pub errors: u64,
    pub time_s: f64,
}

/// A solver session dedicated to inactivity queries.
pub struct IndividualVerifier {
    session: SolverSession,
    pub timeout_s: f64,
    pub stats: IvStats,
    pub last_error: Option<String>,
}

impl IndividualVerifier {
    pub fn new(config: &SolverConfig, timeout_s: f64) -> Result<Self> {
        Ok(IndividualVerifier {
            session: SolverSession::start(config)?,
            timeout_s,
            stats: IvStats::default(),
            last_error: None,
        })
    }

    /// True only when the solver answered UNSAT. Unknown answers and solver
    /// failures keep the neuron.
    pub fn prove_inactive(
        &mut self,
        net: &Arc<Network>,
        region: &InputBox,
        pre: &[Vec<Interval>],
        states: &[Vec<NeuronState>],
        layer: usize,
        j: usize,
    ) -> bool {
        let start = std::time::Instant::now();
        self.stats.queries += 1;
        let res = individual_script(net, region, pre, states, layer, j)
            .and_then(|body| individual_query(&mut self.session, &body, self.timeout_s));
        self.stats.time_s += start.elapsed().as_secs_f64();
        match res {
            Ok(Status::Unsat) => {
                self.stats.proved += 1;
                true
            }
            Ok(Status::Sat) => false,
            Ok(Status::Unknown) => {
                self.stats.unknown += 1;
                false
            }
            Err(e) => {
                self.stats.errors += 1;
                self.last_error = Some(e.to_string());
                false
            }
        }
    }
}
