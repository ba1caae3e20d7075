//! Exact conversion between `f64` values and SMT-LIB rational literals.
//!
//! Every finite `f64` is a dyadic rational `m / 2^k`; it is written as a
//! `(/ m.0 d.0)` term so the solver sees exactly the deployed value.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::sexpr::SExpr;
use crate::error::{Error, Result};

pub fn to_rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

/// Nearest `f64` (exact when `r` is dyadic and in range).
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Real-sorted literal for `r`.
pub fn real_literal(r: &BigRational) -> String {
    let neg = r.is_negative();
    let abs = r.abs();
    let body = if abs.denom().is_one() {
        format!("{}.0", abs.numer())
    } else {
        format!("(/ {}.0 {}.0)", abs.numer(), abs.denom())
    };
    if neg {
        format!("(- {body})")
    } else {
        body
    }
}

pub fn real_literal_f64(v: f64) -> String {
    real_literal(&to_rational(v))
}

/// Int-sorted literal; `v` must be integral.
pub fn int_literal(v: f64) -> Result<String> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::Encoding(format!("{v} is not an integer")));
    }
    let i = to_rational(v).to_integer();
    Ok(if i.is_negative() {
        format!("(- {})", -i)
    } else {
        i.to_string()
    })
}

fn parse_numeral(s: &str) -> Option<BigRational> {
    if let Some((int, frac)) = s.split_once('.') {
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        Some(BigRational::new(digits, denom))
    } else {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        Some(BigRational::from_integer(s.parse().ok()?))
    }
}

/// Value of a solver-printed numeric term: numerals, decimals, `(- t)`,
/// `(/ t t)` and their nestings.
pub fn parse_value(e: &SExpr) -> Result<BigRational> {
    let bad = || Error::Protocol(format!("unsupported value term `{e}`"));
    match e {
        SExpr::Atom(a) => parse_numeral(a).ok_or_else(bad),
        SExpr::List(items) => match items.as_slice() {
            [SExpr::Atom(op), t] if op == "-" => Ok(-parse_value(t)?),
            [SExpr::Atom(op), a, b] if op == "/" => {
                let d = parse_value(b)?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(parse_value(a)? / d)
            }
            [SExpr::Atom(op), t] if op == "to_real" => parse_value(t),
            _ => Err(bad()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::sexpr::parse;
    use proptest::prelude::*;

    #[test]
    fn literals() {
        assert_eq!(real_literal_f64(3.0), "3.0");
        assert_eq!(real_literal_f64(-0.5), "(- (/ 1.0 2.0))");
        assert_eq!(real_literal_f64(0.0), "0.0");
        assert_eq!(int_literal(-4.0).unwrap(), "(- 4)");
        assert!(int_literal(1.5).is_err());
    }

    #[test]
    fn parses_solver_forms() {
        let v = |s: &str| parse_value(&parse(s).unwrap()).unwrap();
        assert_eq!(v("3"), BigRational::from_integer(3.into()));
        assert_eq!(v("(- 3)"), BigRational::from_integer((-3).into()));
        assert_eq!(v("1.25"), to_rational(1.25));
        assert_eq!(v("(/ 1 4)"), to_rational(0.25));
        assert_eq!(v("(- (/ 1.0 4.0))"), to_rational(-0.25));
        assert_eq!(v("(/ (- 1) 4)"), to_rational(-0.25));
        assert!(parse_value(&parse("(root-obj (+ x 1) 1)").unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn literal_round_trip_is_bit_exact(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let text = real_literal_f64(v);
            let back = to_f64(&parse_value(&parse(&text).unwrap()).unwrap());
            // -0.0 and 0.0 are the same rational
            prop_assert_eq!(back.to_bits(), if v == 0.0 { 0.0f64.to_bits() } else { v.to_bits() });
        }
    }
}
