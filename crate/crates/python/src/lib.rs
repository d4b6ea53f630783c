//! Python bindings: action libraries, canonical forms, cancellation checks
//! and representation synthesis. Structured values cross the boundary as
//! plain dicts and lists with the same layout as the command-line JSON.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::{json, Value};

use seqsavage_core::canonical::canonical_action;
use seqsavage_core::json::rational_to_string;
use seqsavage_core::logic::atom_formula;
use seqsavage_core::olt::{apply_f, path_string, Olt, OltState};
use seqsavage_core::preferences::{
    certify_cancellation, check_cancellation, pool_from_json, Feasibility, PreferenceOrder,
};
use seqsavage_core::representation::{assemble, verify_representation, Representation as CoreRepresentation};
use seqsavage_core::syntax::{parse_action, parse_action_lax, parse_formula};
use seqsavage_core::{Action, ActionLibrary, Budget, Error, PropSet};

create_exception!(seqsavage, SeqsavageError, PyValueError);
create_exception!(seqsavage, BudgetExceeded, SeqsavageError);
create_exception!(seqsavage, NotRepresentable, SeqsavageError);

fn err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(e.to_string()),
        e => SeqsavageError::new_err(e.to_string()),
    }
}

fn budget(limit: Option<u64>) -> Budget {
    limit.map_or(Budget::DEFAULT, Budget)
}

fn to_python<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn from_python(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| SeqsavageError::new_err(e.to_string()))
}

/// Strict parsing against the declared effects; with no declared effects,
/// every effect formula met in the text is added to a copy of the library.
fn parse(lib: &ActionLibrary, text: &str) -> Result<(ActionLibrary, Action), Error> {
    let mut lib = lib.clone();
    let a = if lib.effects().is_empty() {
        parse_action_lax(text, &mut lib)?
    } else {
        parse_action(text, &lib)?
    };
    Ok((lib, a))
}

fn library_from(props: &[String], effects: &[String]) -> Result<ActionLibrary, Error> {
    let props = PropSet::new(props.iter().map(String::as_str))?;
    let effects = effects
        .iter()
        .map(|f| parse_formula(f, &props))
        .collect::<Result<Vec<_>, _>>()?;
    ActionLibrary::new(props, effects)
}

/// Library and order from a preferences dict with `props`, `F`, `pool` and
/// `tiers` or `pairs`.
fn preferences(doc: &Value) -> Result<(ActionLibrary, PreferenceOrder), Error> {
    let strings = |key: &str| -> Vec<String> {
        doc.get(key)
            .and_then(Value::as_array)
            .map(|xs| xs.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default()
    };
    let props = strings("props");
    if props.is_empty() {
        return Err(Error::InvalidPropSet("preferences need a `props` list".into()));
    }
    let mut lib = library_from(&props, &strings("F"))?;
    let lax = lib.effects().is_empty();
    let pool = pool_from_json(doc)?
        .iter()
        .map(|t| {
            if lax {
                parse_action_lax(t, &mut lib)
            } else {
                parse_action(t, &lib)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((lib, PreferenceOrder::from_json_with_pool(doc, pool)?))
}

fn fraction<'py>(py: Python<'py>, r: &seqsavage_core::json::Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((rational_to_string(r),))
}

/// Propositions plus a finite list of effect formulas.
#[pyclass(frozen, module = "seqsavage")]
struct Library {
    inner: ActionLibrary,
}

#[pymethods]
impl Library {
    #[new]
    #[pyo3(signature = (props, effects = Vec::new()))]
    fn new(props: Vec<String>, effects: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: library_from(&props, &effects).map_err(err)?,
        })
    }

    #[getter]
    fn props(&self) -> Vec<String> {
        self.inner.props().names().to_vec()
    }

    #[getter]
    fn atom_count(&self) -> usize {
        self.inner.atom_count()
    }

    fn depth(&self, action: &str) -> PyResult<usize> {
        Ok(parse(&self.inner, action).map_err(err)?.1.depth())
    }

    /// Canonical map (1-based atom keys) and canonical action text.
    fn canonical<'py>(&self, py: Python<'py>, action: &str) -> PyResult<Bound<'py, PyAny>> {
        let (lib, a) = parse(&self.inner, action).map_err(err)?;
        let ca = canonical_action(&a, &lib).map_err(err)?;
        let props = lib.props();
        to_python(
            py,
            &json!({
                "depth": a.depth(),
                "canonical_map": ca.map.to_json(),
                "canonical_action": ca.action.display(props).to_string(),
            }),
        )
    }

    /// Runs `action` from the root of an ordered labeled tree of depth `k`
    /// and returns the node it stops at.
    fn eval_olt<'py>(
        &self,
        py: Python<'py>,
        action: &str,
        olt: &Bound<'py, PyAny>,
        k: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let (lib, a) = parse(&self.inner, action).map_err(err)?;
        let mut doc = from_python(olt)?;
        doc.as_object_mut()
            .ok_or_else(|| SeqsavageError::new_err("olt must be a dict"))?
            .insert("k".into(), json!(k));
        let s = Olt::from_json(&doc, lib.props()).map_err(err)?;
        let end = apply_f(&a, &OltState::initial(Arc::new(s)), &lib).map_err(err)?;
        let node = end.current_node();
        let atom = end.olt().label(node);
        to_python(
            py,
            &json!({
                "path": path_string(node, lib.atom_count()),
                "atom": atom.0 + 1,
                "label": atom_formula(atom, lib.props()).display(lib.props()).to_string(),
            }),
        )
    }

    fn __repr__(&self) -> String {
        let props = self.inner.props();
        let effects: Vec<String> = self
            .inner
            .effects()
            .iter()
            .map(|f| format!("{:?}", f.display(props).to_string()))
            .collect();
        format!("Library({:?}, [{}])", props.names(), effects.join(", "))
    }
}

/// A probability over state-tree pairs with a utility on them.
#[pyclass(frozen, module = "seqsavage")]
struct Representation {
    inner: CoreRepresentation,
}

#[pymethods]
impl Representation {
    #[staticmethod]
    #[pyo3(signature = (doc, budget = None))]
    fn from_dict(doc: &Bound<'_, PyAny>, budget: Option<u64>) -> PyResult<Self> {
        let inner = CoreRepresentation::from_json(&from_python(doc)?, self::budget(budget)).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.inner.to_json())
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn expected_utility<'py>(&self, py: Python<'py>, action: &str) -> PyResult<Bound<'py, PyAny>> {
        let (_, a) = parse(self.inner.library(), action).map_err(err)?;
        fraction(py, &self.inner.expected_utility(&a).map_err(err)?)
    }

    /// Whether expected utility orders the pool of `prefs` as given.
    fn represents(&self, prefs: &Bound<'_, PyAny>) -> PyResult<bool> {
        let (_, po) = preferences(&from_python(prefs)?).map_err(err)?;
        Ok(verify_representation(&self.inner, &po).map_err(err)?.is_none())
    }
}

/// Exhaustive cancellation search up to `max_n` plus an exact certificate.
#[pyfunction]
#[pyo3(signature = (prefs, max_n = 4, budget = None))]
fn check<'py>(
    py: Python<'py>,
    prefs: &Bound<'py, PyAny>,
    max_n: usize,
    budget: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let (lib, po) = preferences(&from_python(prefs)?).map_err(err)?;
    let k = po.max_depth().max(1);
    let exhaustive = check_cancellation(&po, &lib, max_n, self::budget(budget)).map_err(err)?;
    let certified = certify_cancellation(&po, &lib, k).map_err(err)?;
    let exhaustive = match exhaustive {
        Some(w) => w.to_json(&po, &lib).map_err(err)?,
        None => Value::Null,
    };
    let (status, certificate) = match certified {
        Feasibility::Representable(_) if exhaustive.is_null() => ("ok", Value::Null),
        Feasibility::Representable(_) => ("violation", Value::Null),
        Feasibility::Violation(w) => ("violation", w.to_json(&po, &lib).map_err(err)?),
    };
    to_python(
        py,
        &json!({ "status": status, "depth": k, "exhaustive": exhaustive, "certificate": certificate }),
    )
}

/// Builds a representation of `prefs` or raises `NotRepresentable` with the
/// violation witness as JSON text.
#[pyfunction]
#[pyo3(signature = (prefs, budget = None))]
fn synthesize(prefs: &Bound<'_, PyAny>, budget: Option<u64>) -> PyResult<Representation> {
    let (lib, po) = preferences(&from_python(prefs)?).map_err(err)?;
    let k = po.max_depth().max(1);
    match certify_cancellation(&po, &lib, k).map_err(err)? {
        Feasibility::Violation(w) => Err(NotRepresentable::new_err(
            w.to_json(&po, &lib).map_err(err)?.to_string(),
        )),
        Feasibility::Representable(v) => {
            let inner = assemble(&v, &lib, self::budget(budget)).map_err(err)?;
            Ok(Representation { inner })
        }
    }
}

#[pymodule]
pub fn seqsavage(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Library>()?;
    m.add_class::<Representation>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add("SeqsavageError", m.py().get_type::<SeqsavageError>())?;
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add("NotRepresentable", m.py().get_type::<NotRepresentable>())?;
    Ok(())
}
