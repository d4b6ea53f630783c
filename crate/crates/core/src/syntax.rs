//! Concrete syntax for formulas and actions.
//!
//! Formula operators, tightest first: `~`, `&`, `|`, `->` (right
//! associative), `<->`. Actions: `noop`, `do(φ)`, `if ψ then α [else β]`,
//! `α; β` (loosest, left associative) and parentheses. A missing `else`
//! means `else noop`.

use crate::actions::{Action, ActionLibrary};
use crate::error::{Error, Result};
use crate::logic::{atoms_of, Formula, PropSet};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Noop,
    Do,
    If,
    Then,
    Else,
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
    Semi,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Ident(_) => "identifier",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Noop => "noop",
            Tok::Do => "do",
            Tok::If => "if",
            Tok::Then => "then",
            Tok::Else => "else",
            Tok::Not => "~",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Implies => "->",
            Tok::Iff => "<->",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Semi => ";",
            Tok::End => "",
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'~' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b';' => Tok::Semi,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Implies
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 2;
                Tok::Iff
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                match &text[start..=i] {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "noop" => Tok::Noop,
                    "do" => Tok::Do,
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    word => Tok::Ident(word.to_string()),
                }
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// How `do(..)` effects are checked against the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectMode {
    /// Effects must be (equivalent to) members of `F`.
    #[default]
    Strict,
    /// Any satisfiable effect is accepted.
    Lax,
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    props: &'a PropSet,
    lib: Option<&'a ActionLibrary>,
    mode: EffectMode,
}

impl<'a> Parser<'a> {
    fn new(text: &str, props: &'a PropSet) -> Result<Self> {
        Ok(Self {
            toks: lex(text)?,
            at: 0,
            props,
            lib: None,
            mode: EffectMode::Strict,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{}`, found {}", tok.text(), self.peek().describe()))
        }
    }

    fn finish(&mut self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.error(format!("unexpected {}", self.peek().describe()))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.negation()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.negation()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.negation()?))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::Bottom)
            }
            Tok::Ident(name) => match self.props.lookup(&name) {
                Some(p) => {
                    self.bump();
                    Ok(Formula::prop(p))
                }
                None => Err(Error::UnknownProposition(name)),
            },
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            other => self.error(format!("expected a formula, found {}", other.describe())),
        }
    }

    fn sequence(&mut self) -> Result<Action> {
        let mut lhs = self.unit()?;
        while *self.peek() == Tok::Semi {
            let pos = self.pos();
            self.bump();
            let rhs = self.unit()?;
            if lhs.is_noop() && rhs.is_noop() {
                return Err(Error::Syntax {
                    pos,
                    msg: "both sides of `;` are noop".into(),
                });
            }
            lhs = Action::seq(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unit(&mut self) -> Result<Action> {
        let pos = self.pos();
        match self.peek() {
            Tok::Noop => {
                self.bump();
                Ok(Action::Noop)
            }
            Tok::Do => {
                self.bump();
                self.expect(Tok::LParen)?;
                let effect_pos = self.pos();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                self.check_effect(&f, effect_pos)?;
                Ok(Action::Do(f))
            }
            Tok::If => {
                self.bump();
                let test = self.formula()?;
                self.expect(Tok::Then)?;
                let then = self.unit()?;
                let otherwise = if *self.peek() == Tok::Else {
                    self.bump();
                    self.unit()?
                } else {
                    Action::Noop
                };
                if then.is_noop() && otherwise.is_noop() {
                    return Err(Error::Syntax {
                        pos,
                        msg: "both branches of `if` are noop".into(),
                    });
                }
                Ok(Action::ite(test, then, otherwise))
            }
            Tok::LParen => {
                self.bump();
                let a = self.sequence()?;
                self.expect(Tok::RParen)?;
                Ok(a)
            }
            other => self.error(format!("expected an action, found {}", other.describe())),
        }
    }

    fn check_effect(&self, f: &Formula, pos: usize) -> Result<()> {
        if atoms_of(f, self.props).is_empty() {
            return Err(Error::Syntax {
                pos,
                msg: format!("effect `{}` is unsatisfiable", f.display(self.props)),
            });
        }
        if let (EffectMode::Strict, Some(lib)) = (self.mode, self.lib) {
            if !lib.contains_effect(f) {
                return Err(Error::EffectNotInLibrary(f.display(self.props).to_string()));
            }
        }
        Ok(())
    }
}

pub fn parse_formula(text: &str, props: &PropSet) -> Result<Formula> {
    let mut p = Parser::new(text, props)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses an action whose effects must belong to `lib`.
pub fn parse_action(text: &str, lib: &ActionLibrary) -> Result<Action> {
    parse_action_with(text, lib, EffectMode::Strict)
}

pub fn parse_action_with(text: &str, lib: &ActionLibrary, mode: EffectMode) -> Result<Action> {
    let mut p = Parser::new(text, lib.props())?;
    p.lib = Some(lib);
    p.mode = mode;
    let a = p.sequence()?;
    p.finish()?;
    Ok(a)
}

/// Lax parsing: unknown satisfiable effects are added to the library.
pub fn parse_action_lax(text: &str, lib: &mut ActionLibrary) -> Result<Action> {
    let a = parse_action_with(text, lib, EffectMode::Lax)?;
    admit_effects(&a, lib)?;
    Ok(a)
}

fn admit_effects(a: &Action, lib: &mut ActionLibrary) -> Result<()> {
    match a {
        Action::Noop => Ok(()),
        Action::Do(f) => {
            if !lib.contains_effect(f) {
                lib.admit(f.clone())?;
            }
            Ok(())
        }
        Action::Ite(_, x, y) | Action::Seq(x, y) => {
            admit_effects(x, lib)?;
            admit_effects(y, lib)
        }
    }
}
