//! Sequential language-based decision theory.
//!
//! Actions are programs over a propositional language: `do(φ)`, `noop`,
//! `if ψ then α else β` and `α; β`. This crate parses and evaluates them,
//! reduces them to canonical maps, checks the cancellation axiom on
//! preference data, and synthesizes subjective-expected-utility
//! representations over ordered labeled trees at a fixed depth.

pub mod actions;
pub mod budget;
pub mod canonical;
pub mod cli;
pub mod error;
pub mod json;
pub mod linalg;
pub mod logic;
pub mod lp;
pub mod olt;
pub mod oracle;
pub mod preferences;
pub mod random;
pub mod representation;
pub mod semantics;
pub mod syntax;

pub use actions::{Action, ActionLibrary};
pub use budget::Budget;
pub use canonical::{CanonicalAction, CanonicalEntry, CanonicalMap};
pub use error::{Error, Result};
pub use logic::{Atom, AtomSet, Formula, PropSet};
