//! SMT backend: encoding, solver process management and model extraction.

pub mod individual;
pub mod rational;
pub mod script;
pub mod sexpr;
pub mod solver;

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::domain::InputBox;
use crate::error::{Error, Result};

pub use individual::{individual_query, individual_script, IndividualVerifier, IvStats};
pub use script::{encode, EncodeOptions, SmtScript};
pub use solver::{solver_available, solver_version, SolverConfig, SolverOutcome, SolverSession};

/// Solves a standalone script in a fresh solver process.
pub fn solve(script: &SmtScript, config: &SolverConfig, timeout_s: f64) -> Result<SolverOutcome> {
    let mut session = SolverSession::start(&config.clone().with_seed(script.seed))?;
    session.check_scoped(&script.session_text(), &script.model_vars, timeout_s)
}

/// Splits a model over `x_i` / `xp_i` into the two inputs, checking that
/// integer attributes received integer values.
pub fn extract_pair(
    model: &BTreeMap<String, BigRational>,
    region: &InputBox,
) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    let get = |copy: usize, i: usize| -> Result<BigRational> {
        let name = script::input_name(copy, i);
        let v = model
            .get(&name)
            .cloned()
            .ok_or_else(|| Error::Protocol(format!("model lacks `{name}`")))?;
        if region.ranges[i].integer && !v.is_integer() {
            return Err(Error::Protocol(format!(
                "integer attribute `{name}` received non-integer value {v}"
            )));
        }
        Ok(v)
    };
    let n = region.len();
    let x = (0..n).map(|i| get(0, i)).collect::<Result<Vec<_>>>()?;
    let xp = (0..n).map(|i| get(1, i)).collect::<Result<Vec<_>>>()?;
    Ok((x, xp))
}
