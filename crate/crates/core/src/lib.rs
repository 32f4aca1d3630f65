//! Inconsistency and culpability measurement for business rule bases.
//!
//! A rule base is a set of facts and rules `l1, …, lm -> l0` over signed
//! atoms. It is inconsistent when its minimal model contains both `a` and
//! `-a`. The crate enumerates minimal inconsistent subsets (MIs), measures
//! inconsistency on single bases, assigns blame to rules, and sums these
//! over a stream of cases that share one rule set.
//!
//! ```
//! use incmeter::{examples, Registry, Budget};
//!
//! let cases = examples::m1();
//! let analysis = cases.analyze(&Budget::default(), None).unwrap();
//! let reg = Registry::standard();
//! let total = analysis.sigma_measure(reg.inconsistency("mi").unwrap().as_ref()).unwrap();
//! assert_eq!(total.to_string(), "5");
//! ```

pub mod base;
pub mod bench;
pub mod error;
pub mod examples;
pub mod measures;
pub mod mi;
pub mod model;
pub mod multiset;
pub mod parser;
pub mod postulates;
pub mod rational;
pub mod report;
pub mod shapley;
pub mod synth;

#[cfg(test)]
mod testgen;

pub use base::{Atom, ElementId, Literal, LiteralSet, Rule, RuleBase};
pub use error::{BudgetKind, Error, ParseError, Result};
pub use measures::{
    c_d, c_hash, free_formulas, i_mi, AnalyzedBase, CulpabilityMeasure, InconsistencyMeasure, MeasureProperties,
    PayoffVector, Registry,
};
pub use mi::{
    enumerate_mi, enumerate_mi_bruteforce, enumerate_mi_with, is_mi, participates, Budget, MiCollection, MiSubset,
};
pub use model::{is_consistent, literal_set_consistent, minimal_model};
pub use multiset::{
    culpability_vector, multiset_free_formulas, rank_rules, sigma_culpability, sigma_measure, Analysis, CaseSet,
    CulpabilityVector, Rank,
};
pub use parser::{build_caseset, parse_cases, parse_rules, CaseFormat, CaseRecord, IngestOptions, RuleProgram};
pub use rational::Rational;
pub use shapley::{adjusted_shapley, shapley, shapley_mi_closedform, Enumeration};
