//! Small worked rule bases used throughout the docs and tests.

use crate::base::{Literal, Rule, RuleBase};
use crate::multiset::CaseSet;
use crate::parser::{CaseRecord, RuleProgram};

/// The loan application: two facts about a customer and two rules that
/// disagree about credit worthiness.
pub fn loan_base() -> RuleBase {
    RuleBase::parse([
        "mentalCondition",
        "platinumCustomer",
        "platinumCustomer -> creditWorthy",
        "mentalCondition -> -creditWorthy",
    ])
}

/// `{a, a -> b, a -> -b}`: one fact, two clashing rules.
pub fn b2() -> RuleBase {
    RuleBase::parse(["a", "a -> b", "a -> -b"])
}

/// `{a, a -> b, -b}`: two facts, one rule.
pub fn b3() -> RuleBase {
    RuleBase::parse(["a", "a -> b", "-b"])
}

/// The five shared rules `r1..r5` of the four-case running example.
pub fn m1_rules() -> RuleProgram {
    RuleProgram::from_rules(
        ["a -> b", "c -> -b", "b -> x", "x -> z", "y -> -z"]
            .into_iter()
            .map(Rule::parse),
    )
}

/// Fact sets of the four cases `b1..b4`.
pub const M1_FACTS: [&[&str]; 4] = [&["a", "c"], &["a", "c"], &["a", "y"], &["a", "c", "y"]];

/// The running example as a case set.
pub fn m1() -> CaseSet {
    let cases = M1_FACTS
        .iter()
        .enumerate()
        .map(|(i, facts)| CaseRecord::new(format!("b{}", i + 1), facts.iter().map(|f| Literal::lit(f))))
        .collect();
    CaseSet::new(m1_rules(), cases)
}

/// One case of the running example as a plain rule base.
pub fn m1_case_base(facts: &[&str]) -> RuleBase {
    let mut base: RuleBase = m1_rules().rules().iter().cloned().collect();
    for f in facts {
        base.insert(Rule::fact(Literal::lit(f)));
    }
    base
}
