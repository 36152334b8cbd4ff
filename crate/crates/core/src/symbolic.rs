//! Entities, predicates, grounded atoms and symbolic states.
//!
//! A [`SymbolicState`] is a conjunction of positive ground atoms read under a
//! closed-world assumption: an atom that is absent is false. Matching a
//! low-level label against a sub-goal is a subset test
//! ([`SymbolicState::satisfies`]), so sub-goal regions may overlap.
//!
//! Text syntax for a state is `Pred(Arg1,Arg2) & Pred2(Arg)`; `∧` is accepted
//! in place of `&` and the empty conjunction is written `true`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid identifier `{0}`")]
    InvalidName(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{predicate}` takes {expected} argument(s), got {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("syntax error in `{input}`: {reason}")]
    Syntax { input: String, reason: String },
    #[error("negated literal `{0}` cannot appear in a closed-world state")]
    NegatedLiteral(String),
    #[error("initial and goal states are identical")]
    InitialEqualsGoal,
    #[error("state is not expressed over this symbolic description: {0}")]
    SchemaMismatch(String),
}

fn is_identifier(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

/// A named object of the environment, e.g. `Key_1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Entity(String);

impl Entity {
    pub fn new(name: impl Into<String>) -> Result<Self, SymbolicError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(SymbolicError::InvalidName(name));
        }
        Ok(Self(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

impl Predicate {
    pub fn new(name: impl Into<String>, arity: usize) -> Result<Self, SymbolicError> {
        let name = name.into();
        if !is_identifier(&name) || arity == 0 {
            return Err(SymbolicError::InvalidName(format!("{name}/{arity}")));
        }
        Ok(Self { name, arity })
    }
}

/// A ground positive atom `pred(args..)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

/// An atom together with its polarity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        self.atom.fmt(f)
    }
}

/// Canonical conjunction of positive atoms. Ordering is structural, so two
/// states built from the same atoms in any order compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolicState {
    atoms: BTreeSet<Atom>,
}

impl SymbolicState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Self {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn insert(&mut self, atom: Atom) {
        self.atoms.insert(atom);
    }

    /// Closed-world entailment: every atom of `target` holds in `self`.
    pub fn satisfies(&self, target: &SymbolicState) -> bool {
        target.atoms.is_subset(&self.atoms)
    }

    /// Replace entity and predicate names through `rename`, leaving unmapped
    /// names untouched.
    pub fn map_names(&self, rename: impl Fn(&str) -> String) -> SymbolicState {
        SymbolicState::from_atoms(self.atoms.iter().map(|a| Atom {
            predicate: rename(&a.predicate),
            args: a.args.iter().map(|x| rename(x)).collect(),
        }))
    }
}

impl fmt::Display for SymbolicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("true");
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            atom.fmt(f)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SymbolicState {
    type Err = SymbolicError;

    /// Shape-only parse; names are not checked against any declarations.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let trimmed = text.trim();
        if trimmed == "true" || trimmed == "⊤" {
            return Ok(Self::empty());
        }
        let mut state = Self::empty();
        for part in split_conjunction(trimmed)? {
            let literal = parse_literal(part)?;
            if !literal.positive {
                return Err(SymbolicError::NegatedLiteral(literal.to_string()));
            }
            state.insert(literal.atom);
        }
        Ok(state)
    }
}

impl Serialize for SymbolicState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SymbolicState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse one `Pred(a,b)` atom, optionally negated with `!`, `¬` or `not `.
/// Names are checked for shape only; see [`SymbolicInfo::parse_state`] for
/// checking against declarations.
pub fn parse_literal(text: &str) -> Result<Literal, SymbolicError> {
    let syntax = |reason: &str| SymbolicError::Syntax {
        input: text.to_string(),
        reason: reason.to_string(),
    };
    let mut body = text.trim();
    let mut positive = true;
    for prefix in ["!", "¬", "~", "not "] {
        if let Some(rest) = body.strip_prefix(prefix) {
            positive = false;
            body = rest.trim_start();
            break;
        }
    }
    let open = body.find('(').ok_or_else(|| syntax("expected `(`"))?;
    if !body.ends_with(')') {
        return Err(syntax("expected closing `)`"));
    }
    let predicate = body[..open].trim();
    if !is_identifier(predicate) {
        return Err(syntax("bad predicate name"));
    }
    let inner = &body[open + 1..body.len() - 1];
    if inner.contains('(') || inner.contains(')') {
        return Err(syntax("nested parentheses"));
    }
    let args: Vec<String> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|a| a.trim().to_string()).collect()
    };
    if let Some(bad) = args.iter().find(|a| !is_identifier(a)) {
        return Err(syntax(&format!("bad argument `{bad}`")));
    }
    Ok(Literal {
        atom: Atom {
            predicate: predicate.to_string(),
            args,
        },
        positive,
    })
}

/// Split a conjunction into literal texts, respecting parentheses.
fn split_conjunction(text: &str) -> Result<Vec<&str>, SymbolicError> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '&' | '∧' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
        if depth < 0 {
            break;
        }
    }
    if depth != 0 {
        return Err(SymbolicError::Syntax {
            input: text.to_string(),
            reason: "unbalanced parentheses".into(),
        });
    }
    parts.push(&text[start..]);
    Ok(parts.into_iter().map(str::trim).collect())
}

/// The symbolic task description: declared entities, predicates, and the
/// initial and goal states. The state space itself is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicInfo {
    entities: Vec<Entity>,
    predicates: Vec<Predicate>,
    initial: SymbolicState,
    goal: SymbolicState,
}

impl SymbolicInfo {
    /// Validate declarations and parse the initial/goal expressions.
    pub fn new(
        entities: Vec<Entity>,
        predicates: Vec<Predicate>,
        initial: &str,
        goal: &str,
    ) -> Result<Self, SymbolicError> {
        let mut seen = HashSet::new();
        for name in entities
            .iter()
            .map(Entity::name)
            .chain(predicates.iter().map(|p| p.name.as_str()))
        {
            if !seen.insert(name) {
                return Err(SymbolicError::DuplicateName(name.to_string()));
            }
        }
        let mut info = Self {
            entities,
            predicates,
            initial: SymbolicState::empty(),
            goal: SymbolicState::empty(),
        };
        info.initial = info.parse_state(initial)?;
        info.goal = info.parse_state(goal)?;
        if info.initial == info.goal {
            return Err(SymbolicError::InitialEqualsGoal);
        }
        Ok(info)
    }

    /// Convenience constructor from plain names and `(name, arity)` pairs.
    pub fn from_names(
        entities: &[&str],
        predicates: &[(&str, usize)],
        initial: &str,
        goal: &str,
    ) -> Result<Self, SymbolicError> {
        let entities = entities
            .iter()
            .map(|e| Entity::new(*e))
            .collect::<Result<_, _>>()?;
        let predicates = predicates
            .iter()
            .map(|(n, a)| Predicate::new(*n, *a))
            .collect::<Result<_, _>>()?;
        Self::new(entities, predicates, initial, goal)
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn initial(&self) -> &SymbolicState {
        &self.initial
    }

    pub fn goal(&self) -> &SymbolicState {
        &self.goal
    }

    fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    fn has_entity(&self, name: &str) -> bool {
        self.entities.iter().any(|e| e.name() == name)
    }

    /// Check a single atom against the declarations.
    pub fn check_atom(&self, atom: &Atom) -> Result<(), SymbolicError> {
        let pred = self
            .predicate(&atom.predicate)
            .ok_or_else(|| SymbolicError::UnknownPredicate(atom.predicate.clone()))?;
        if atom.args.len() != pred.arity {
            return Err(SymbolicError::ArityMismatch {
                predicate: pred.name.clone(),
                expected: pred.arity,
                found: atom.args.len(),
            });
        }
        if let Some(arg) = atom.args.iter().find(|a| !self.has_entity(a)) {
            return Err(SymbolicError::UnknownEntity(arg.clone()));
        }
        Ok(())
    }

    pub fn check_state(&self, state: &SymbolicState) -> Result<(), SymbolicError> {
        state.atoms().try_for_each(|a| self.check_atom(a))
    }

    /// Parse a conjunction of atoms into a canonical state over this
    /// description.
    pub fn parse_state(&self, text: &str) -> Result<SymbolicState, SymbolicError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(SymbolicError::Syntax {
                input: text.to_string(),
                reason: "empty expression".into(),
            });
        }
        if trimmed == "true" || trimmed == "⊤" {
            return Ok(SymbolicState::empty());
        }
        let mut state = SymbolicState::empty();
        for part in split_conjunction(trimmed)? {
            if part.is_empty() {
                return Err(SymbolicError::Syntax {
                    input: text.to_string(),
                    reason: "empty conjunct".into(),
                });
            }
            let literal = parse_literal(part)?;
            self.check_atom(&literal.atom)?;
            if !literal.positive {
                return Err(SymbolicError::NegatedLiteral(literal.to_string()));
            }
            state.insert(literal.atom);
        }
        Ok(state)
    }

    /// [`SymbolicState::satisfies`] with both states checked against the
    /// declarations first.
    pub fn state_satisfies(
        &self,
        state: &SymbolicState,
        target: &SymbolicState,
    ) -> Result<bool, SymbolicError> {
        for s in [state, target] {
            self.check_state(s)
                .map_err(|e| SymbolicError::SchemaMismatch(e.to_string()))?;
        }
        Ok(state.satisfies(target))
    }

    /// Rename entities and predicates; names missing from `rename` keep
    /// their original spelling.
    pub fn renamed(&self, rename: impl Fn(&str) -> String) -> Result<Self, SymbolicError> {
        let entities = self
            .entities
            .iter()
            .map(|e| Entity::new(rename(e.name())))
            .collect::<Result<_, _>>()?;
        let predicates = self
            .predicates
            .iter()
            .map(|p| Predicate::new(rename(&p.name), p.arity))
            .collect::<Result<_, _>>()?;
        let initial = self.initial.map_names(&rename).to_string();
        let goal = self.goal.map_names(&rename).to_string();
        Self::new(entities, predicates, &initial, &goal)
    }
}

/// Maps a low-level environment state to the symbolic state that holds in
/// it. Implementations must be deterministic.
pub trait Labeler {
    type State;

    fn label(&self, state: &Self::State) -> SymbolicState;
}
