//! Synthetic Peano rewriting system.
//!
//! Terms are `Z`, `S(t)` and `add(t,t)`. A goal is an equation `lhs = rhs`.
//! Five tactics are available:
//!
//! | tactic          | effect                                                   |
//! |-----------------|----------------------------------------------------------|
//! | `refl`          | closes the goal iff both sides are syntactically equal   |
//! | `rw_l add_zero` | rewrites `add(Z,y) -> y` at the leftmost-outermost redex of the lhs |
//! | `rw_l add_succ` | rewrites `add(S(x),y) -> S(add(x,y))` in the lhs         |
//! | `rw_r add_zero` | as `rw_l add_zero`, on the rhs                           |
//! | `rw_r add_succ` | as `rw_l add_succ`, on the rhs                           |
//!
//! Canonical text has no whitespace inside terms and a single ` = ` between
//! the sides, e.g. `add(S(Z),Z) = S(Z)`.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::environment::{messages, EnvOutcome, Environment};
use crate::error::EnvError;
use crate::search::ProofState;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Z,
    S(Box<Term>),
    Add(Box<Term>, Box<Term>),
}

impl Term {
    pub fn succ(t: Term) -> Term {
        Term::S(Box::new(t))
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    /// `S^n(Z)`.
    pub fn numeral(n: usize) -> Term {
        (0..n).fold(Term::Z, |t, _| Term::succ(t))
    }

    /// The natural number the term denotes.
    pub fn value(&self) -> u64 {
        match self {
            Term::Z => 0,
            Term::S(t) => 1 + t.value(),
            Term::Add(a, b) => a.value() + b.value(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Z => 1,
            Term::S(t) => 1 + t.size(),
            Term::Add(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn add_count(&self) -> usize {
        match self {
            Term::Z => 0,
            Term::S(t) => t.add_count(),
            Term::Add(a, b) => 1 + a.add_count() + b.add_count(),
        }
    }

    /// Polynomial interpretation `Z=1, S(t)=t+1, add(a,b)=2a+b`. Every rule
    /// application strictly decreases it, which bounds rewrite sequences.
    pub fn termination_weight(&self) -> u64 {
        match self {
            Term::Z => 1,
            Term::S(t) => t.termination_weight() + 1,
            Term::Add(a, b) => 2 * a.termination_weight() + b.termination_weight(),
        }
    }

    /// Generation depth: `Z` is 0, `S` adds one level, `add` adds two.
    pub fn nesting(&self) -> usize {
        match self {
            Term::Z => 0,
            Term::S(t) => 1 + t.nesting(),
            Term::Add(a, b) => 2 + a.nesting().max(b.nesting()),
        }
    }

    /// Rewrites the leftmost-outermost redex of `rule`, or returns `None`
    /// when the term contains no such redex.
    pub fn rewrite_once(&self, rule: Rule) -> Option<Term> {
        if let Some(reduct) = rule.apply_at_root(self) {
            return Some(reduct);
        }
        match self {
            Term::Z => None,
            Term::S(t) => t.rewrite_once(rule).map(Term::succ),
            Term::Add(a, b) => {
                if let Some(a2) = a.rewrite_once(rule) {
                    Some(Term::add(a2, (**b).clone()))
                } else {
                    b.rewrite_once(rule).map(|b2| Term::add((**a).clone(), b2))
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Z => f.write_str("Z"),
            Term::S(t) => write!(f, "S({t})"),
            Term::Add(a, b) => write!(f, "add({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Goal {
    pub lhs: Term,
    pub rhs: Term,
}

impl Goal {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Goal { lhs, rhs }
    }

    pub fn to_state(&self) -> ProofState {
        ProofState::new(self.to_string())
    }

    /// Provable iff both sides denote the same number (the system is
    /// orthogonal and terminating, so normal forms are numerals).
    pub fn is_provable(&self) -> bool {
        self.lhs.value() == self.rhs.value()
    }

    pub fn nesting(&self) -> usize {
        self.lhs.nesting().max(self.rhs.nesting())
    }

    /// Applies a tactic. Total on well-formed goals; failures are
    /// `TacticError` values with the stable messages from [`messages`].
    pub fn apply(&self, tactic: Tactic) -> EnvOutcome {
        match tactic {
            Tactic::Refl => {
                if self.lhs == self.rhs {
                    EnvOutcome::ProofFinished
                } else {
                    EnvOutcome::TacticError(messages::REFL_FAILED.to_string())
                }
            }
            Tactic::Rewrite(side, rule) => {
                let target = match side {
                    Side::Left => &self.lhs,
                    Side::Right => &self.rhs,
                };
                match target.rewrite_once(rule) {
                    None => EnvOutcome::TacticError(messages::RULE_NOT_APPLICABLE.to_string()),
                    Some(t) => {
                        let next = match side {
                            Side::Left => Goal::new(t, self.rhs.clone()),
                            Side::Right => Goal::new(self.lhs.clone(), t),
                        };
                        EnvOutcome::NewState(next.to_state())
                    }
                }
            }
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error: {}", self.0)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(ParseError(format!("expected `{token}` at byte {}", self.pos)))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.eat("add") {
            self.expect("(")?;
            let a = self.term()?;
            self.expect(",")?;
            let b = self.term()?;
            self.expect(")")?;
            Ok(Term::add(a, b))
        } else if self.eat("S") {
            self.expect("(")?;
            let t = self.term()?;
            self.expect(")")?;
            Ok(Term::succ(t))
        } else if self.eat("Z") {
            Ok(Term::Z)
        } else {
            Err(ParseError(format!("expected a term at byte {}", self.pos)))
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(ParseError(format!("trailing input at byte {}", self.pos)))
        }
    }
}

impl FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            bytes: s.as_bytes(),
            pos: 0,
        };
        let t = p.term()?;
        p.finish()?;
        Ok(t)
    }
}

impl FromStr for Goal {
    type Err = ParseError;

    /// Accepts any whitespace between tokens; `Display` gives the canonical form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            bytes: s.as_bytes(),
            pos: 0,
        };
        let lhs = p.term()?;
        p.expect("=")?;
        let rhs = p.term()?;
        p.finish()?;
        Ok(Goal::new(lhs, rhs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// `add(Z,y) -> y`
    AddZero,
    /// `add(S(x),y) -> S(add(x,y))`
    AddSucc,
}

impl Rule {
    fn apply_at_root(self, t: &Term) -> Option<Term> {
        let Term::Add(a, b) = t else { return None };
        match (self, &**a) {
            (Rule::AddZero, Term::Z) => Some((**b).clone()),
            (Rule::AddSucc, Term::S(x)) => Some(Term::succ(Term::add((**x).clone(), (**b).clone()))),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Rule::AddZero => "add_zero",
            Rule::AddSucc => "add_succ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tactic {
    Refl,
    Rewrite(Side, Rule),
}

impl Tactic {
    pub const ALL: [Tactic; 5] = [
        Tactic::Refl,
        Tactic::Rewrite(Side::Left, Rule::AddZero),
        Tactic::Rewrite(Side::Left, Rule::AddSucc),
        Tactic::Rewrite(Side::Right, Rule::AddZero),
        Tactic::Rewrite(Side::Right, Rule::AddSucc),
    ];
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tactic::Refl => f.write_str("refl"),
            Tactic::Rewrite(Side::Left, r) => write!(f, "rw_l {}", r.name()),
            Tactic::Rewrite(Side::Right, r) => write!(f, "rw_r {}", r.name()),
        }
    }
}

impl FromStr for Tactic {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tactic::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| ParseError(format!("unknown tactic `{s}`")))
    }
}

/// The five-tactic vocabulary as strings.
pub fn vocabulary() -> Vec<String> {
    Tactic::ALL.iter().map(Tactic::to_string).collect()
}

/// Stateless in-process Peano environment.
#[derive(Debug, Clone, Copy, Default)]
pub struct PeanoEnvironment;

impl PeanoEnvironment {
    /// Applies a tactic string to a state string without a timeout.
    pub fn apply_text(&self, state: &str, tactic: &str) -> EnvOutcome {
        let Ok(goal) = state.parse::<Goal>() else {
            return EnvOutcome::TacticError(messages::MALFORMED_STATE.to_string());
        };
        match tactic.trim().parse::<Tactic>() {
            Ok(t) => goal.apply(t),
            Err(_) => EnvOutcome::TacticError(messages::UNKNOWN_TACTIC.to_string()),
        }
    }
}

impl Environment for PeanoEnvironment {
    fn init(&self, goal: &str) -> Result<ProofState, EnvError> {
        goal.parse::<Goal>()
            .map(|g| g.to_state())
            .map_err(|e| EnvError::GoalRejected(e.to_string()))
    }

    fn apply(
        &self,
        state: &ProofState,
        tactic: &str,
        _timeout: Duration,
    ) -> Result<EnvOutcome, EnvError> {
        Ok(self.apply_text(state.text(), tactic))
    }

    fn vocabulary(&self) -> Vec<String> {
        vocabulary()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn goal(s: &str) -> Goal {
        s.parse().unwrap()
    }

    fn apply(s: &str, t: &str) -> EnvOutcome {
        PeanoEnvironment.apply_text(s, t)
    }

    fn state(s: &str) -> EnvOutcome {
        EnvOutcome::NewState(ProofState::new(s))
    }

    #[test]
    fn canonical_text_strips_whitespace() {
        assert_eq!(goal("add(Z, S(Z)) =  S( Z )").to_string(), "add(Z,S(Z)) = S(Z)");
        assert!("add(Z) = Z".parse::<Goal>().is_err());
        assert!("Z = Z extra".parse::<Goal>().is_err());
    }

    #[test]
    fn add_zero_on_lhs() {
        assert_eq!(apply("add(Z, S(Z)) = S(Z)", "rw_l add_zero"), state("S(Z) = S(Z)"));
    }

    #[test]
    fn refl_closes_identical_sides() {
        assert_eq!(apply("S(Z) = S(Z)", "refl"), EnvOutcome::ProofFinished);
        assert_eq!(
            apply("Z = S(Z)", "refl"),
            EnvOutcome::TacticError("refl failed".into())
        );
    }

    #[test]
    fn add_zero_does_not_match_succ_redex() {
        assert_eq!(
            apply("add(S(Z), Z) = S(Z)", "rw_l add_zero"),
            EnvOutcome::TacticError("rule not applicable".into())
        );
        assert_eq!(
            apply("add(S(Z), Z) = S(Z)", "rw_l add_succ"),
            state("S(add(Z,Z)) = S(Z)")
        );
    }

    #[test]
    fn peano_goal_rewrites_to_reflexive_state() {
        assert_eq!(apply("add(Z,Z) = Z", "rw_l add_zero"), state("Z = Z"));
        assert_eq!(
            apply("Z = Z", "rw_l add_zero"),
            EnvOutcome::TacticError("rule not applicable".into())
        );
    }

    #[test]
    fn outermost_redex_wins_then_leftmost() {
        // Both the root and the inner term are add_succ redexes.
        let t: Term = "add(S(add(S(Z),Z)),Z)".parse().unwrap();
        assert_eq!(
            t.rewrite_once(Rule::AddSucc).unwrap().to_string(),
            "S(add(add(S(Z),Z),Z))"
        );
        // No root redex: the left argument is rewritten before the right one.
        let t: Term = "add(add(Z,Z),add(Z,Z))".parse().unwrap();
        assert_eq!(
            t.rewrite_once(Rule::AddZero).unwrap().to_string(),
            "add(Z,add(Z,Z))"
        );
    }

    #[test]
    fn rhs_rewrites_leave_lhs_alone() {
        assert_eq!(
            apply("add(Z,Z) = add(Z,Z)", "rw_r add_zero"),
            state("add(Z,Z) = Z")
        );
    }

    #[test]
    fn unknown_tactic_and_bad_state_are_tactic_errors() {
        assert_eq!(
            apply("Z = Z", "simp"),
            EnvOutcome::TacticError("unknown tactic".into())
        );
        assert_eq!(
            apply("Z = ", "refl"),
            EnvOutcome::TacticError("malformed state".into())
        );
    }

    #[test]
    fn vocabulary_is_exactly_five_tactics() {
        assert_eq!(
            vocabulary(),
            vec!["refl", "rw_l add_zero", "rw_l add_succ", "rw_r add_zero", "rw_r add_succ"]
        );
        for v in vocabulary() {
            assert_eq!(v.parse::<Tactic>().unwrap().to_string(), v);
        }
    }

    #[test]
    fn nesting_bounds() {
        assert_eq!(Term::Z.nesting(), 0);
        assert_eq!(Term::numeral(3).nesting(), 3);
        assert_eq!(goal("add(Z,S(Z)) = Z").nesting(), 3);
    }
}
