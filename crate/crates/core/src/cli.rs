//! The `seqsavage` command line. Every command prints one JSON document;
//! errors go to stderr as JSON. Exit codes: 0 success, 1 user error,
//! 2 a check failed, 3 budget exceeded.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::actions::{Action, ActionLibrary};
use crate::budget::Budget;
use crate::canonical::canonical_action;
use crate::error::{Error, Result};
use crate::json::{atom_to_json, rational_to_json};
use crate::logic::{atom_formula, Formula, PropSet};
use crate::olt::{apply_f, olt_count, path_string, Olt, OltState};
use crate::oracle;
use crate::preferences::{
    certify_cancellation, check_cancellation, induced_order_welldefined, pool_from_json, Feasibility, PreferenceOrder,
};
use crate::random;
use crate::representation::{
    assemble, check_pr_compatibility, uniform_pr, verify_representation, verify_utility_equations, Representation,
};
use crate::semantics::{interpret, SelectionModel};
use crate::syntax::{parse_action, parse_action_lax, parse_formula};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "seqsavage",
    version,
    about = "Canonical forms, cancellation checks and expected-utility synthesis for sequential actions"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Config {
    /// Primitive propositions, comma separated.
    #[arg(long, global = true)]
    pub props: Option<String>,
    /// An effect formula allowed inside do(..); repeatable.
    #[arg(long = "F", global = true)]
    pub effects: Vec<String>,
    /// Enumeration budget.
    #[arg(long, global = true, env = "SEQSAVAGE_BUDGET")]
    pub budget: Option<u64>,
    /// Accept effects outside F and add them to the library.
    #[arg(long, global = true)]
    pub lax: bool,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical map and canonical action of an action.
    Canon {
        #[arg(long)]
        action: String,
    },
    /// Runs an action in a selection model, or in an olt with --olt.
    Eval {
        #[arg(long)]
        action: String,
        /// Selection model JSON, or an olt JSON with --olt.
        #[arg(long)]
        model: PathBuf,
        /// Start state name (selection models only).
        #[arg(long)]
        state: Option<String>,
        /// Evaluate in the olt model of this depth.
        #[arg(long)]
        olt: Option<usize>,
    },
    /// Checks cancellation for a preference file.
    Check {
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        /// Depth for the exact certificate; defaults to the deepest pool action.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Builds an expected-utility representation for a preference file.
    Synthesize {
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Verifies a representation against a preference file.
    Verify {
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long)]
        rep: PathBuf,
    },
    /// Brute-force reference computations.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Truth table of a formula, one row per atom.
    TruthTable {
        #[arg(long)]
        formula: String,
    },
    /// Small-step interpretation in a selection model.
    Interpret {
        #[arg(long)]
        action: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        state: String,
    },
    /// Progress function rebuilt from action derivatives.
    Progress {
        #[arg(long)]
        action: String,
        /// Olt JSON.
        #[arg(long)]
        model: PathBuf,
    },
    /// Exhaustive search for a cancellation violation.
    Cancel {
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
    },
    /// A random preference file induced by a random utility table.
    RandomPrefs {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
}

/// A failed check: the value is printed and the exit code is 2.
struct Outcome {
    value: Value,
    code: i32,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Self { value, code: EXIT_OK }
    }

    fn failed(value: Value) -> Self {
        Self {
            value,
            code: EXIT_CHECK_FAILED,
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Json(format!("{}: {e}", path.display())))
}

impl Config {
    fn budget(&self) -> Budget {
        self.budget.map_or(Budget::DEFAULT, Budget)
    }

    /// Props and effects from the flags, falling back to `props`/`F` keys
    /// of a document.
    fn library(&self, doc: Option<&Value>) -> Result<ActionLibrary> {
        let props = match (&self.props, doc.and_then(|d| d.get("props"))) {
            (Some(list), _) => PropSet::parse_list(list)?,
            (None, Some(Value::String(list))) => PropSet::parse_list(list)?,
            (None, Some(Value::Array(names))) => PropSet::new(names.iter().filter_map(Value::as_str))?,
            _ => return Err(Error::InvalidPropSet("no propositions given (use --props)".into())),
        };
        let mut texts = self.effects.clone();
        if texts.is_empty() {
            if let Some(Value::Array(fs)) = doc.and_then(|d| d.get("F")) {
                texts = fs.iter().filter_map(Value::as_str).map(str::to_string).collect();
            }
        }
        let effects = texts
            .iter()
            .map(|t| parse_formula(t, &props))
            .collect::<Result<Vec<Formula>>>()?;
        ActionLibrary::new(props, effects)
    }

    /// Lax parsing is used with `--lax` or when no effects were given.
    fn parse_actions<'a>(
        &self,
        texts: impl IntoIterator<Item = &'a str>,
        lib: &mut ActionLibrary,
    ) -> Result<Vec<Action>> {
        let lax = self.lax || lib.effects().is_empty();
        texts
            .into_iter()
            .map(|t| {
                if lax {
                    parse_action_lax(t, lib)
                } else {
                    parse_action(t, lib)
                }
            })
            .collect()
    }

    fn parse_action(&self, text: &str, lib: &mut ActionLibrary) -> Result<Action> {
        Ok(self.parse_actions([text], lib)?.remove(0))
    }

    fn preferences(&self, path: &Path) -> Result<(ActionLibrary, PreferenceOrder)> {
        let doc = read_json(path)?;
        let mut lib = self.library(Some(&doc))?;
        let texts = pool_from_json(&doc)?;
        let pool = self.parse_actions(texts.iter().map(String::as_str), &mut lib)?;
        Ok((lib, PreferenceOrder::from_json_with_pool(&doc, pool)?))
    }
}

fn depth_for(po: &PreferenceOrder, flag: Option<usize>) -> Result<usize> {
    let needed = po.max_depth().max(1);
    match flag {
        Some(k) if k < needed => Err(Error::DepthExceeded {
            action: needed,
            available: k,
        }),
        Some(k) => Ok(k),
        None => Ok(needed),
    }
}

fn node_json(olt: &Olt, node: usize, props: &PropSet) -> Value {
    let atom = olt.label(node);
    json!({
        "path": path_string(node, olt.atom_count()),
        "atom": atom_to_json(atom),
        "label": atom_formula(atom, props).display(props).to_string(),
    })
}

fn run_command(cli: &Cli) -> Result<Outcome> {
    let cfg = &cli.config;
    let budget = cfg.budget();
    match &cli.command {
        Command::Canon { action } => {
            let mut lib = cfg.library(None)?;
            let a = cfg.parse_action(action, &mut lib)?;
            let ca = canonical_action(&a, &lib)?;
            let props = lib.props();
            Ok(Outcome::ok(json!({
                "action": a.display(props).to_string(),
                "depth": a.depth(),
                "canonical_map": ca.map.to_json(),
                "canonical_action": ca.action.display(props).to_string(),
            })))
        }
        Command::Eval {
            action,
            model,
            state,
            olt,
        } => {
            let doc = read_json(model)?;
            let mut lib = cfg.library(Some(&doc))?;
            let a = cfg.parse_action(action, &mut lib)?;
            let props = lib.props().clone();
            match olt {
                Some(k) => {
                    let mut tree = doc.clone();
                    tree.as_object_mut()
                        .ok_or_else(|| Error::Json("olt must be an object".into()))?
                        .insert("k".into(), json!(k));
                    let s = Olt::from_json(&tree, &props)?;
                    let start = OltState::initial(Arc::new(s));
                    let end = apply_f(&a, &start, &lib)?;
                    Ok(Outcome::ok(json!({
                        "node": node_json(end.olt(), end.current_node(), &props),
                        "state": end.to_json(),
                    })))
                }
                None => {
                    let sm = SelectionModel::from_json(&doc, &props)?;
                    let name = state
                        .as_deref()
                        .ok_or_else(|| Error::UnknownState("no --state given".into()))?;
                    let from = sm.model().state(name)?;
                    let to = interpret(&a, &sm, &lib, from)?;
                    Ok(Outcome::ok(json!({ "state": sm.model().state_name(to) })))
                }
            }
        }
        Command::Check { prefs, max_n, depth } => {
            let (lib, po) = cfg.preferences(prefs)?;
            let k = depth_for(&po, *depth)?;
            let welldefined = induced_order_welldefined(&po, &lib)?;
            let exhaustive = check_cancellation(&po, &lib, *max_n, budget)?;
            let certified = certify_cancellation(&po, &lib, k)?;
            let exhaustive_json = match &exhaustive {
                Some(w) => w.to_json(&po, &lib)?,
                None => Value::Null,
            };
            let (certificate_json, representable) = match &certified {
                Feasibility::Representable(_) => (json!("representable"), true),
                Feasibility::Violation(w) => (w.to_json(&po, &lib)?, false),
            };
            let body = json!({
                "status": if representable { "ok" } else { "violation" },
                "depth": k,
                "max_n": max_n,
                "welldefined": welldefined.map(|(i, j)| json!([i, j])).unwrap_or(Value::Null),
                "exhaustive": exhaustive_json,
                "certificate": certificate_json,
            });
            Ok(if representable && exhaustive.is_none() {
                Outcome::ok(body)
            } else {
                Outcome::failed(body)
            })
        }
        Command::Synthesize { prefs, depth } => {
            let (lib, po) = cfg.preferences(prefs)?;
            let k = depth_for(&po, *depth)?;
            match certify_cancellation(&po, &lib, k)? {
                Feasibility::Violation(w) => Ok(Outcome::failed(json!({
                    "status": "violation",
                    "witness": w.to_json(&po, &lib)?,
                }))),
                Feasibility::Representable(v) => {
                    let rep = assemble(&v, &lib, budget)?;
                    if let Some((i, j)) = verify_representation(&rep, &po)? {
                        return Err(Error::Inconsistent(format!(
                            "assembled representation fails on pair ({i}, {j})"
                        )));
                    }
                    Ok(Outcome::ok(rep.to_json()))
                }
            }
        }
        Command::Verify { prefs, rep } => {
            let rep = Representation::from_json(&read_json(rep)?, budget)?;
            let doc = read_json(prefs)?;
            let mut lib = rep.library().clone();
            let texts = pool_from_json(&doc)?;
            let pool = cfg.parse_actions(texts.iter().map(String::as_str), &mut lib)?;
            let po = PreferenceOrder::from_json_with_pool(&doc, pool)?;
            let n = lib.atom_count();
            let eu = po
                .pool()
                .iter()
                .map(|a| rep.expected_utility(a).map(|x| rational_to_json(&x)))
                .collect::<Result<Vec<_>>>()?;
            let pair = verify_representation(&rep, &po)?;
            let equations = verify_utility_equations(rep.u(), rep.v(), &lib, budget)?;
            let pr = check_pr_compatibility(rep.depth(), n, &uniform_pr, budget)?;
            let ok = pair.is_none() && equations.is_none() && pr.is_none();
            let body = json!({
                "status": if ok { "ok" } else { "violation" },
                "expected_utility": eu,
                "pair": pair.map(|(i, j)| json!([i, j])).unwrap_or(Value::Null),
                "utility_equation": equations
                    .map(|(a, e)| json!({ "atom": atom_to_json(a), "entry": e.to_json() }))
                    .unwrap_or(Value::Null),
                "pr_compatible": pr.is_none(),
                "t_count": olt_count(rep.depth(), n).to_string(),
            });
            Ok(if ok { Outcome::ok(body) } else { Outcome::failed(body) })
        }
        Command::Oracle { which } => run_oracle(cfg, which, budget),
    }
}

fn run_oracle(cfg: &Config, which: &OracleCommand, budget: Budget) -> Result<Outcome> {
    match which {
        OracleCommand::TruthTable { formula } => {
            let lib = cfg.library(None)?;
            let props = lib.props();
            let f = parse_formula(formula, props)?;
            let rows: Vec<Value> = oracle::truth_table(&f, props.len())
                .into_iter()
                .enumerate()
                .map(|(a, t)| {
                    let val = oracle::assignment(a, props.len());
                    let assignment: serde_json::Map<String, Value> = props
                        .names()
                        .iter()
                        .cloned()
                        .zip(val.into_iter().map(Value::Bool))
                        .collect();
                    json!({ "atom": a + 1, "assignment": assignment, "value": t })
                })
                .collect();
            Ok(Outcome::ok(
                json!({ "formula": f.display(props).to_string(), "rows": rows }),
            ))
        }
        OracleCommand::Interpret { action, model, state } => {
            let doc = read_json(model)?;
            let mut lib = cfg.library(Some(&doc))?;
            let a = cfg.parse_action(action, &mut lib)?;
            let sm = SelectionModel::from_json(&doc, lib.props())?;
            let from = sm.model().state(state)?;
            let to = oracle::small_step(&a, &sm, from)?;
            Ok(Outcome::ok(json!({ "state": sm.model().state_name(to) })))
        }
        OracleCommand::Progress { action, model } => {
            let doc = read_json(model)?;
            let mut lib = cfg.library(Some(&doc))?;
            let a = cfg.parse_action(action, &mut lib)?;
            let props = lib.props().clone();
            let s = Olt::from_json(&doc, &props)?;
            let g = oracle::progress(&a, &s, &props)?;
            let end = oracle::endpoint(&a, &s, &props)?;
            Ok(Outcome::ok(json!({
                "progress": g.to_json(s.atom_count()),
                "node": node_json(&s, end, &props),
            })))
        }
        OracleCommand::Cancel { prefs, max_n } => {
            let (lib, po) = cfg.preferences(prefs)?;
            match oracle::exhaustive_cancellation(&po, &lib, *max_n)? {
                None => Ok(Outcome::ok(json!({ "status": "ok", "max_n": max_n }))),
                Some((alphas, betas)) => Ok(Outcome::failed(json!({
                    "status": "violation",
                    "alphas": alphas,
                    "betas": betas,
                }))),
            }
        }
        OracleCommand::RandomPrefs { seed, size, depth } => {
            let lib = cfg.library(None)?;
            if lib.effects().is_empty() {
                return Err(Error::InvalidPropSet("random pools need at least one --F".into()));
            }
            let mut rng = random::rng(*seed);
            let v = random::utility(&mut rng, *depth, &lib, 9, budget)?;
            let pool = random::pool(&mut rng, &lib, *size, *depth);
            let po = random::induced_order(pool, &v, &lib)?;
            let mut doc = po.to_json(&lib);
            doc["props"] = json!(lib.props().names());
            doc["F"] = json!(lib
                .effects()
                .iter()
                .map(|f| f.display(lib.props()).to_string())
                .collect::<Vec<_>>());
            Ok(Outcome::ok(doc))
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Syntax { .. } => "syntax",
        Error::UnknownProposition(_) => "unknown_proposition",
        Error::InvalidPropSet(_) => "invalid_prop_set",
        Error::UnsatisfiableEffect(_) => "unsatisfiable_effect",
        Error::EffectNotInLibrary(_) => "effect_not_in_library",
        Error::IllFormed(_) => "ill_formed",
        Error::BudgetExceeded { .. } => "budget_exceeded",
        Error::DepthExceeded { .. } => "depth_exceeded",
        Error::UnknownState(_) => "unknown_state",
        Error::MissingSelection { .. } => "missing_selection",
        Error::InvalidModel(_) => "invalid_model",
        Error::UnknownProvenance => "unknown_provenance",
        Error::NotInPool(_) => "not_in_pool",
        Error::InvalidPreferences(_) => "invalid_preferences",
        Error::Inconsistent(_) => "inconsistent",
        Error::StitchInfeasible { .. } => "stitch_infeasible",
        Error::Json(_) => "json",
        Error::Io(_) => "io",
    }
}

/// The result of one invocation: exit code and the text for each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn invoke<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Invocation {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match run_command(&cli) {
        Ok(Outcome { value, code }) => {
            let text = serde_json::to_string_pretty(&value).expect("serializable") + "\n";
            if let Some(path) = &cli.config.out {
                if let Err(e) = std::fs::write(path, &text) {
                    return failure(&Error::Io(format!("{}: {e}", path.display())));
                }
                return Invocation {
                    code,
                    stdout: String::new(),
                    stderr: String::new(),
                };
            }
            Invocation {
                code,
                stdout: text,
                stderr: String::new(),
            }
        }
        Err(e) => failure(&e),
    }
}

fn failure(e: &Error) -> Invocation {
    let code = if matches!(e, Error::BudgetExceeded { .. }) {
        EXIT_BUDGET
    } else {
        EXIT_USER
    };
    let mut body = json!({ "error": error_kind(e), "message": e.to_string() });
    if let Error::MissingSelection { state, effect } = e {
        body["state"] = json!(state);
        body["effect_atoms"] = json!(effect);
    }
    Invocation {
        code,
        stdout: String::new(),
        stderr: serde_json::to_string(&body).expect("serializable") + "\n",
    }
}
