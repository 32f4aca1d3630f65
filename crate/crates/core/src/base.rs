//! Rule-base data model: atoms, literals, rules and rule bases.
//!
//! A rule base is a set of elements of the form `l1, ..., lm -> l0`. Elements
//! with an empty body are facts, all others are rules. Every element carries an
//! [`ElementId`] that is stable for the lifetime of the base; rule bases that
//! share a rule program (see [`crate::multiset::CaseSet`]) give shared rules
//! identical ids.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Mutex, OnceLock};

/// An interned propositional atom.
///
/// Two atoms with the same name are the same atom: they share one id and one
/// name allocation. Ordering is by name so that rendered output never depends
/// on interning order.
#[derive(Clone, Copy)]
pub struct Atom {
    id: u32,
    name: &'static str,
}

fn interner() -> &'static Mutex<HashMap<&'static str, u32>> {
    static INTERNER: OnceLock<Mutex<HashMap<&'static str, u32>>> = OnceLock::new();
    INTERNER.get_or_init(Default::default)
}

/// True when `name` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_valid_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Atom {
    /// Interns `name`. Returns `None` if it is not a valid identifier.
    pub fn new(name: &str) -> Option<Atom> {
        if !is_valid_atom_name(name) {
            return None;
        }
        let mut table = interner().lock().expect("atom interner poisoned");
        if let Some((&name, &id)) = table.get_key_value(name) {
            return Some(Atom { id, name });
        }
        let id = u32::try_from(table.len()).expect("too many atoms");
        let name: &'static str = Box::leak(name.to_owned().into_boxed_str());
        table.insert(name, id);
        Some(Atom { id, name })
    }

    /// Interns `name`, panicking on an invalid identifier. Meant for literals in
    /// code and tests.
    pub fn named(name: &str) -> Atom {
        Atom::new(name).unwrap_or_else(|| panic!("invalid atom name `{name}`"))
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn id(&self) -> u32 {
        self.id
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.id == other.id {
            Ordering::Equal
        } else {
            self.name.cmp(other.name)
        }
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

/// A signed atom.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, negated: false }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, negated: true }
    }

    pub fn negation(self) -> Self {
        Literal {
            atom: self.atom,
            negated: !self.negated,
        }
    }

    /// Parses `a`, `-a` or `¬a`.
    pub fn parse(text: &str) -> Option<Literal> {
        let text = text.trim();
        let (negated, name) = if let Some(rest) = text.strip_prefix('-') {
            (true, rest)
        } else if let Some(rest) = text.strip_prefix('¬') {
            (true, rest)
        } else {
            (false, text)
        };
        Atom::new(name.trim_start()).map(|atom| Literal { atom, negated })
    }

    /// Shorthand parser for tests and examples; panics on bad input.
    pub fn lit(text: &str) -> Literal {
        Literal::parse(text).unwrap_or_else(|| panic!("invalid literal `{text}`"))
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("-")?;
        }
        f.write_str(self.atom.name)
    }
}

/// `body -> head`. The body is kept sorted and free of duplicates, so two rules
/// are equal exactly when they are structurally the same implication.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    body: Vec<Literal>,
    head: Literal,
}

impl Rule {
    pub fn new(body: impl IntoIterator<Item = Literal>, head: Literal) -> Self {
        let mut body: Vec<Literal> = body.into_iter().collect();
        body.sort();
        body.dedup();
        Rule { body, head }
    }

    pub fn fact(head: Literal) -> Self {
        Rule { body: Vec::new(), head }
    }

    /// Parses a single implication such as `a, -b -> c`; a lone literal is a
    /// fact. Meant for tests and examples, panics on bad input. File parsing
    /// lives in [`crate::parser`].
    pub fn parse(text: &str) -> Rule {
        let text = text.trim().trim_end_matches('.');
        match text.split_once("->") {
            Some((body, head)) => Rule::new(body.split(',').map(Literal::lit), Literal::lit(head)),
            None => Rule::fact(Literal::lit(text)),
        }
    }

    pub fn body(&self) -> &[Literal] {
        &self.body
    }

    pub fn head(&self) -> Literal {
        self.head
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.body.iter().copied().chain(std::iter::once(self.head))
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        if !self.body.is_empty() {
            f.write_str(" -> ")?;
        }
        write!(f, "{}", self.head)
    }
}

/// Index of an element inside one [`RuleBase`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct ElementId(pub u32);

impl ElementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A finite set of facts and rules, each addressable by an [`ElementId`].
///
/// Elements are deduplicated structurally; ids are assigned densely in
/// insertion order starting at 0.
#[derive(Clone, Default)]
pub struct RuleBase {
    elements: Vec<Rule>,
    index: HashMap<Rule, ElementId>,
}

impl RuleBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `rule` and returns its id. Re-inserting an existing element
    /// returns the id it already has.
    pub fn insert(&mut self, rule: Rule) -> ElementId {
        if let Some(&id) = self.index.get(&rule) {
            return id;
        }
        let id = ElementId(u32::try_from(self.elements.len()).expect("rule base too large"));
        self.index.insert(rule.clone(), id);
        self.elements.push(rule);
        id
    }

    /// Builds a base from `a, b -> c`-style strings; see [`Rule::parse`].
    pub fn parse<'a>(elements: impl IntoIterator<Item = &'a str>) -> Self {
        elements.into_iter().map(Rule::parse).collect()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, id: ElementId) -> Option<&Rule> {
        self.elements.get(id.index())
    }

    pub fn id_of(&self, rule: &Rule) -> Option<ElementId> {
        self.index.get(rule).copied()
    }

    pub fn contains_id(&self, id: ElementId) -> bool {
        id.index() < self.elements.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = ElementId> + '_ {
        (0..self.elements.len() as u32).map(ElementId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementId, &Rule)> + '_ {
        self.elements.iter().enumerate().map(|(i, r)| (ElementId(i as u32), r))
    }

    /// F(B).
    pub fn facts(&self) -> impl Iterator<Item = (ElementId, &Rule)> + '_ {
        self.iter().filter(|(_, r)| r.is_fact())
    }

    /// R(B).
    pub fn rules(&self) -> impl Iterator<Item = (ElementId, &Rule)> + '_ {
        self.iter().filter(|(_, r)| !r.is_fact())
    }

    pub fn is_fact(&self, id: ElementId) -> bool {
        self.elements[id.index()].is_fact()
    }

    /// The sub-base made of `ids`, in the given order, together with the
    /// original id of every new element.
    pub fn restrict(&self, ids: &[ElementId]) -> (RuleBase, Vec<ElementId>) {
        let mut sub = RuleBase::new();
        let mut origin = Vec::with_capacity(ids.len());
        for &id in ids {
            let before = sub.len();
            sub.insert(self.elements[id.index()].clone());
            if sub.len() > before {
                origin.push(id);
            }
        }
        (sub, origin)
    }

    /// Copy of this base with `rule` added (no-op if already present).
    pub fn with(&self, rule: Rule) -> RuleBase {
        let mut b = self.clone();
        b.insert(rule);
        b
    }

    /// Copy without the element `id`; ids above it shift down by one.
    pub fn without(&self, id: ElementId) -> RuleBase {
        self.iter().filter(|&(i, _)| i != id).map(|(_, r)| r.clone()).collect()
    }
}

impl FromIterator<Rule> for RuleBase {
    fn from_iter<T: IntoIterator<Item = Rule>>(iter: T) -> Self {
        let mut b = RuleBase::new();
        for r in iter {
            b.insert(r);
        }
        b
    }
}

impl fmt::Debug for RuleBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elements.iter()).finish()
    }
}

impl PartialEq for RuleBase {
    /// Set equality, ignoring ids.
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.elements.iter().all(|r| other.index.contains_key(r))
    }
}

impl Eq for RuleBase {}

/// A set of literals; consistency is a property queried on it, not enforced.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct LiteralSet(BTreeSet<Literal>);

impl LiteralSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, l: Literal) -> bool {
        self.0.insert(l)
    }

    pub fn contains(&self, l: &Literal) -> bool {
        self.0.contains(l)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Literal> + '_ {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &LiteralSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// No pair `a`, `-a`.
    pub fn is_consistent(&self) -> bool {
        self.0.iter().all(|l| l.negated || !self.0.contains(&l.negation()))
    }
}

impl FromIterator<Literal> for LiteralSet {
    fn from_iter<T: IntoIterator<Item = Literal>>(iter: T) -> Self {
        LiteralSet(iter.into_iter().collect())
    }
}

impl fmt::Debug for LiteralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}
