//! Shared JSON conventions: atom indices are 1-based in every document and
//! rationals travel as `"numerator/denominator"` strings.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::logic::{Atom, AtomSet, Formula, PropSet};

pub type Rational = BigRational;

pub fn atom_to_json(atom: Atom) -> Value {
    json!(atom.0 + 1)
}

pub fn atom_from_json(v: &Value, props: &PropSet) -> Result<Atom> {
    let i = v
        .as_u64()
        .ok_or_else(|| Error::Json(format!("expected an atom index, found {v}")))? as usize;
    atom_from_index(i, props)
}

pub fn atom_from_index(i: usize, props: &PropSet) -> Result<Atom> {
    if i == 0 || i > props.atom_count() {
        return Err(Error::Json(format!(
            "atom index {i} out of range 1..={}",
            props.atom_count()
        )));
    }
    Ok(Atom(i - 1))
}

pub fn atom_set_to_json(set: &AtomSet) -> Value {
    Value::Array(set.iter().map(atom_to_json).collect())
}

pub fn atom_set_from_json(v: &Value, props: &PropSet) -> Result<AtomSet> {
    let items = v
        .as_array()
        .ok_or_else(|| Error::Json(format!("expected a list of atom indices, found {v}")))?;
    let atoms = items
        .iter()
        .map(|x| atom_from_json(x, props).map(Atom::index))
        .collect::<Result<Vec<_>>>()?;
    Ok(AtomSet::from_indices(atoms))
}

/// Always `n/d` with `d >= 1`, in lowest terms.
pub fn rational_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_json(r: &Rational) -> Value {
    Value::String(rational_to_string(r))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Json(format!("`{s}` is not a rational"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d == BigInt::from(0) {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub fn rational_from_json(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().unwrap().into())),
        other => Err(Error::Json(format!("expected a rational string, found {other}"))),
    }
}

pub fn formula_to_json(f: &Formula, props: &PropSet) -> Value {
    let op = |name: &str, args: Vec<&Formula>| json!({"op": name, "args": args.into_iter().map(|a| formula_to_json(a, props)).collect::<Vec<_>>()});
    match f {
        Formula::Top => json!({"const": true}),
        Formula::Bottom => json!({"const": false}),
        Formula::Prop(p) => json!({"prop": props.name(*p)}),
        Formula::Not(a) => op("not", vec![a]),
        Formula::And(a, b) => op("and", vec![a, b]),
        Formula::Or(a, b) => op("or", vec![a, b]),
        Formula::Implies(a, b) => op("implies", vec![a, b]),
        Formula::Iff(a, b) => op("iff", vec![a, b]),
    }
}

pub fn formula_from_json(v: &Value, props: &PropSet) -> Result<Formula> {
    if let Some(name) = v.get("prop").and_then(Value::as_str) {
        return props
            .lookup(name)
            .map(Formula::prop)
            .ok_or_else(|| Error::UnknownProposition(name.to_string()));
    }
    if let Some(c) = v.get("const").and_then(Value::as_bool) {
        return Ok(if c { Formula::Top } else { Formula::Bottom });
    }
    let op = v
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Json(format!("not a formula: {v}")))?;
    let args = v
        .get("args")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Json(format!("formula `{op}` needs args")))?
        .iter()
        .map(|a| formula_from_json(a, props))
        .collect::<Result<Vec<_>>>()?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Json(format!("`{op}` takes {n} arguments")))
        }
    };
    let mut it = args.clone().into_iter();
    let mut next = || it.next().unwrap();
    Ok(match op {
        "not" => {
            arity(1)?;
            Formula::not(next())
        }
        "and" | "or" | "implies" | "iff" => {
            arity(2)?;
            let (a, b) = (next(), next());
            match op {
                "and" => Formula::and(a, b),
                "or" => Formula::or(a, b),
                "implies" => Formula::implies(a, b),
                _ => Formula::iff(a, b),
            }
        }
        other => return Err(Error::Json(format!("unknown formula operator `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_canonical() {
        let r = parse_rational("6/-4").unwrap();
        assert_eq!(rational_to_string(&r), "-3/2");
        assert_eq!(rational_to_string(&parse_rational("5").unwrap()), "5/1");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn formula_json_shape() {
        let props = PropSet::new(["p", "q"]).unwrap();
        let f = Formula::and(Formula::prop(0), Formula::not(Formula::prop(1)));
        let v = formula_to_json(&f, &props);
        assert_eq!(
            v,
            json!({"op":"and","args":[{"prop":"p"},{"op":"not","args":[{"prop":"q"}]}]})
        );
        assert_eq!(formula_from_json(&v, &props).unwrap(), f);
        assert!(formula_from_json(&json!({"op":"not","args":[]}), &props).is_err());
    }

    #[test]
    fn atom_indices_are_one_based() {
        let props = PropSet::new(["p"]).unwrap();
        assert_eq!(atom_to_json(Atom(0)), json!(1));
        assert_eq!(atom_from_json(&json!(2), &props).unwrap(), Atom(1));
        assert!(atom_from_json(&json!(0), &props).is_err());
        assert!(atom_from_json(&json!(3), &props).is_err());
    }
}
