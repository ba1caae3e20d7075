//! Minimal s-expression reader for solver responses.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(l) => Some(l),
            SExpr::Atom(_) => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => f.write_str(a),
            SExpr::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Net parenthesis depth of `text`, ignoring string literals, quoted symbols
/// and comments. Zero means every opened list was closed.
pub fn paren_balance(text: &str) -> i64 {
    let mut depth = 0i64;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '"' => {
                while let Some(d) = chars.next() {
                    if d == '"' {
                        // "" is an escaped quote inside a string
                        if chars.peek() == Some(&'"') {
                            chars.next();
                        } else {
                            break;
                        }
                    }
                }
            }
            '|' => {
                for d in chars.by_ref() {
                    if d == '|' {
                        break;
                    }
                }
            }
            ';' => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        break;
                    }
                }
            }
            _ => {}
        }
    }
    depth
}

/// Parses every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

pub fn parse(text: &str) -> Result<SExpr> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().expect("one element")),
        n => Err(Error::Backend(format!("expected one s-expression, found {n}"))),
    }
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() {
        let c = chars[*pos];
        if c.is_whitespace() {
            *pos += 1;
        } else if c == ';' {
            while *pos < chars.len() && chars[*pos] != '\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn parse_one(chars: &[char], pos: &mut usize) -> Result<SExpr> {
    skip_ws(chars, pos);
    let Some(&c) = chars.get(*pos) else {
        return Err(Error::Backend("unexpected end of solver output".into()));
    };
    match c {
        '(' => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    None => return Err(Error::Backend("unbalanced parentheses in solver output".into())),
                    Some(')') => {
                        *pos += 1;
                        return Ok(SExpr::List(items));
                    }
                    Some(_) => items.push(parse_one(chars, pos)?),
                }
            }
        }
        ')' => Err(Error::Backend("unexpected `)` in solver output".into())),
        '"' => {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() {
                if chars[*pos] == '"' {
                    if chars.get(*pos + 1) == Some(&'"') {
                        *pos += 2;
                        continue;
                    }
                    *pos += 1;
                    return Ok(SExpr::Atom(chars[start..*pos].iter().collect()));
                }
                *pos += 1;
            }
            Err(Error::Backend("unterminated string in solver output".into()))
        }
        '|' => {
            *pos += 1;
            let start = *pos;
            while *pos < chars.len() && chars[*pos] != '|' {
                *pos += 1;
            }
            if *pos >= chars.len() {
                return Err(Error::Backend("unterminated quoted symbol".into()));
            }
            let sym: String = chars[start..*pos].iter().collect();
            *pos += 1;
            Ok(SExpr::Atom(sym))
        }
        _ => {
            let start = *pos;
            while *pos < chars.len() {
                let d = chars[*pos];
                if d.is_whitespace() || d == '(' || d == ')' || d == ';' {
                    break;
                }
                *pos += 1;
            }
            Ok(SExpr::Atom(chars[start..*pos].iter().collect()))
        }
    }
}
