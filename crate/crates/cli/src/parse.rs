//! Function-spec grammar: `name:key=value,key=value`.
//!
//! Vector values join their components with `;` (e.g. `diag=2;1`). Parse
//! failures carry the byte position of the offending token.
//!
//! Known names and keys:
//!
//! | name      | keys                                   |
//! |-----------|----------------------------------------|
//! | quadratic | `d`, `a` (scalar), `diag` (vector), `b` (vector) |
//! | l1        | `d`                                    |
//! | huber     | `delta`, `d`                           |
//! | zero      | `d`                                    |
//! | negid     | `d` (estimate-only diagnostic target)  |

use std::collections::BTreeMap;
use std::fmt;

use proxverify_core::vecspace::SymOperator;
use proxverify_core::{make_abs_l1, make_huber, make_quadratic, make_zero, CatalogFunction, Vector};

#[derive(Debug)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        position,
        message: message.into(),
    })
}

/// A parsed spec: the function name plus key/value pairs with positions.
struct RawSpec<'a> {
    name: &'a str,
    pairs: BTreeMap<&'a str, (usize, &'a str)>,
}

fn split_spec(input: &str) -> Result<RawSpec<'_>, ParseError> {
    if input.is_empty() {
        return err(0, "empty function spec");
    }
    let (name, rest, offset) = match input.find(':') {
        None => (input, "", input.len()),
        Some(i) => (&input[..i], &input[i + 1..], i + 1),
    };
    if name.is_empty() {
        return err(0, "missing function name before ':'");
    }
    let mut pairs = BTreeMap::new();
    if rest.is_empty() && input.contains(':') {
        return err(offset, "expected key=value after ':'");
    }
    let mut pos = offset;
    for field in rest.split(',') {
        if field.is_empty() {
            if !rest.is_empty() {
                return err(pos, "empty key=value field");
            }
            break;
        }
        match field.find('=') {
            None => return err(pos, format!("expected '=' in '{field}'")),
            Some(eq) => {
                let key = &field[..eq];
                let value = &field[eq + 1..];
                if key.is_empty() {
                    return err(pos, "empty key");
                }
                if value.is_empty() {
                    return err(pos + eq + 1, format!("empty value for '{key}'"));
                }
                if pairs.insert(key, (pos + eq + 1, value)).is_some() {
                    return err(pos, format!("duplicate key '{key}'"));
                }
            }
        }
        pos += field.len() + 1;
    }
    Ok(RawSpec { name, pairs })
}

fn parse_scalar(position: usize, value: &str) -> Result<f64, ParseError> {
    value
        .parse::<f64>()
        .map_err(|_| ParseError {
            position,
            message: format!("'{value}' is not a number"),
        })
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                err(position, "value must be finite")
            }
        })
}

fn parse_vector(position: usize, value: &str) -> Result<Vec<f64>, ParseError> {
    let mut out = Vec::new();
    let mut pos = position;
    for part in value.split(';') {
        out.push(parse_scalar(pos, part)?);
        pos += part.len() + 1;
    }
    Ok(out)
}

fn parse_dim(position: usize, value: &str) -> Result<usize, ParseError> {
    let d: usize = value.parse().map_err(|_| ParseError {
        position,
        message: format!("'{value}' is not a positive integer"),
    })?;
    if d == 0 || d > 16 {
        return err(position, format!("dimension {d} outside 1..=16"));
    }
    Ok(d)
}

/// What a spec can denote: a catalog member, or the negated-identity
/// diagnostic map (estimate only).
pub enum ParsedTarget {
    Catalog(CatalogFunction),
    NegatedIdentity { dim: usize },
}

pub fn parse_function_spec(input: &str) -> Result<ParsedTarget, ParseError> {
    let raw = split_spec(input)?;
    let known = |raw: &RawSpec<'_>, allowed: &[&str]| -> Result<(), ParseError> {
        for (key, (pos, _)) in &raw.pairs {
            if !allowed.contains(key) {
                return err(*pos, format!("unknown key '{key}' for '{}'", raw.name));
            }
        }
        Ok(())
    };
    let get_dim = |raw: &RawSpec<'_>| -> Result<Option<usize>, ParseError> {
        raw.pairs
            .get("d")
            .map(|(pos, v)| parse_dim(*pos, v))
            .transpose()
    };
    match raw.name {
        "quadratic" => {
            known(&raw, &["d", "a", "diag", "b"])?;
            let diag = raw
                .pairs
                .get("diag")
                .map(|(pos, v)| parse_vector(*pos, v))
                .transpose()?;
            let a_scalar = raw
                .pairs
                .get("a")
                .map(|(pos, v)| parse_scalar(*pos, v))
                .transpose()?;
            if diag.is_some() && a_scalar.is_some() {
                return err(0, "'a' and 'diag' are mutually exclusive");
            }
            let b_entries = raw
                .pairs
                .get("b")
                .map(|(pos, v)| parse_vector(*pos, v))
                .transpose()?;
            let dim = match (get_dim(&raw)?, &diag, &b_entries) {
                (Some(d), _, _) => d,
                (None, Some(diag), _) => diag.len(),
                (None, None, Some(b)) => b.len(),
                (None, None, None) => return err(input.len(), "quadratic needs 'd', 'diag' or 'b'"),
            };
            let a = match (diag, a_scalar) {
                (Some(entries), None) => {
                    if entries.len() != dim {
                        return err(0, format!("diag has {} entries, d={dim}", entries.len()));
                    }
                    SymOperator::diagonal(&entries)
                        .map_err(|e| ParseError { position: 0, message: e.to_string() })?
                }
                (None, Some(s)) => SymOperator::identity(dim).scale(s),
                (None, None) => SymOperator::identity(dim),
                (Some(_), Some(_)) => unreachable!("rejected above"),
            };
            let b = match b_entries {
                Some(entries) => {
                    if entries.len() != dim {
                        return err(0, format!("b has {} entries, d={dim}", entries.len()));
                    }
                    Vector::new(entries)
                        .map_err(|e| ParseError { position: 0, message: e.to_string() })?
                }
                None => Vector::zeros(dim),
            };
            make_quadratic(a, b)
                .map(ParsedTarget::Catalog)
                .map_err(|e| ParseError { position: 0, message: e.to_string() })
        }
        "l1" => {
            known(&raw, &["d"])?;
            let dim = get_dim(&raw)?.unwrap_or(1);
            make_abs_l1(dim)
                .map(ParsedTarget::Catalog)
                .map_err(|e| ParseError { position: 0, message: e.to_string() })
        }
        "huber" => {
            known(&raw, &["delta", "d"])?;
            let delta = match raw.pairs.get("delta") {
                Some((pos, v)) => parse_scalar(*pos, v)?,
                None => return err(input.len(), "huber needs 'delta'"),
            };
            let dim = get_dim(&raw)?.unwrap_or(1);
            make_huber(delta, dim)
                .map(ParsedTarget::Catalog)
                .map_err(|e| ParseError { position: 0, message: e.to_string() })
        }
        "zero" => {
            known(&raw, &["d"])?;
            let dim = get_dim(&raw)?.unwrap_or(1);
            make_zero(dim)
                .map(ParsedTarget::Catalog)
                .map_err(|e| ParseError { position: 0, message: e.to_string() })
        }
        "negid" => {
            known(&raw, &["d"])?;
            let dim = get_dim(&raw)?.unwrap_or(1);
            Ok(ParsedTarget::NegatedIdentity { dim })
        }
        other => err(0, format!("unknown function name '{other}'")),
    }
}

/// Parses a comma-separated step schedule.
pub fn parse_schedule(input: &str) -> Result<proxverify_core::solvers::StepSchedule, ParseError> {
    let values = parse_list(input)?;
    Ok(if values.len() == 1 {
        proxverify_core::solvers::StepSchedule::Constant(values[0])
    } else {
        proxverify_core::solvers::StepSchedule::List(values)
    })
}

/// Parses a semicolon-separated coordinate vector.
pub fn parse_point(input: &str) -> Result<Vector, ParseError> {
    let coords = parse_vector(0, input)?;
    Vector::new(coords).map_err(|e| ParseError {
        position: 0,
        message: e.to_string(),
    })
}

fn parse_list(input: &str) -> Result<Vec<f64>, ParseError> {
    let mut out = Vec::new();
    let mut pos = 0;
    for part in input.split(',') {
        out.push(parse_scalar(pos, part)?);
        pos += part.len() + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_diag_roundtrip() {
        let parsed = parse_function_spec("quadratic:d=2,diag=2;1").unwrap();
        match parsed {
            ParsedTarget::Catalog(f) => {
                assert_eq!(f.dim(), 2);
                assert!((f.lipschitz_beta().unwrap() - 2.0).abs() < 1e-9);
            }
            _ => panic!("expected catalog member"),
        }
    }

    #[test]
    fn quadratic_scalar_with_shift() {
        match parse_function_spec("quadratic:d=1,a=1,b=-2").unwrap() {
            ParsedTarget::Catalog(f) => {
                let x = Vector::new(vec![1.0]).unwrap();
                assert_eq!(f.value(&x), 0.5 - 2.0);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_name_rejected() {
        let e = parse_function_spec("nosuchfn").unwrap_err();
        assert!(e.message.contains("unknown function name"));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_function_spec("huber:delta=abc,d=1").unwrap_err();
        assert_eq!(e.position, 12);
        let e = parse_function_spec("quadratic:d=2,diag").unwrap_err();
        assert_eq!(e.position, 14);
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(parse_function_spec("l1:d=1,d=2").is_err());
    }

    #[test]
    fn negid_is_diagnostic() {
        assert!(matches!(
            parse_function_spec("negid:d=3").unwrap(),
            ParsedTarget::NegatedIdentity { dim: 3 }
        ));
    }

    #[test]
    fn schedule_forms() {
        assert!(matches!(
            parse_schedule("1.0").unwrap(),
            proxverify_core::solvers::StepSchedule::Constant(_)
        ));
        assert!(matches!(
            parse_schedule("0.5,1.0,1.5").unwrap(),
            proxverify_core::solvers::StepSchedule::List(_)
        ));
        assert!(parse_schedule("0.5,oops").is_err());
    }
}
