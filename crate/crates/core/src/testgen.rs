//! Proptest strategies shared by unit tests.

use proptest::prelude::*;

use crate::base::{Atom, Literal, Rule, RuleBase};

fn literal(atoms: usize) -> impl Strategy<Value = Literal> {
    (0..atoms, any::<bool>()).prop_map(|(a, neg)| {
        let atom = Atom::named(&format!("p{a}"));
        if neg {
            Literal::neg(atom)
        } else {
            Literal::pos(atom)
        }
    })
}

/// An element: a fact about a third of the time, else a rule with one or
/// two body literals.
pub fn arb_rule(atoms: usize) -> impl Strategy<Value = Rule> {
    (prop::collection::vec(literal(atoms), 0..=2), literal(atoms), 0..3u8).prop_map(|(body, head, kind)| {
        if kind == 0 || body.is_empty() {
            Rule::fact(head)
        } else {
            Rule::new(body, head)
        }
    })
}

/// Bases of at most `max_elems` elements over four atoms.
pub fn arb_small_base(max_elems: usize) -> impl Strategy<Value = RuleBase> {
    prop::collection::vec(arb_rule(4), 0..=max_elems).prop_map(|rules| rules.into_iter().collect())
}
