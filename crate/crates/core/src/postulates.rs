//! Randomized checks of the rationality postulates for Σ-induced
//! culpability measures.
//!
//! A check runs independent trials, each on a small random case set drawn
//! from its own ChaCha8 stream (`seed`, stream = trial index). Trials run in
//! parallel; the reported counterexample is always the one with the lowest
//! trial index, so results do not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{Literal, Rule};
use crate::error::{Error, Result};
use crate::measures::{CulpabilityMeasure, InconsistencyMeasure, Registry};
use crate::mi::Budget;
use crate::multiset::{Analysis, CaseSet};
use crate::parser::{parse_rules, CaseRecord};
use crate::rational::render;
use crate::synth::{random_caseset, random_extra_rule};

/// Largest shared rule set drawn per trial.
pub const MAX_RULES: usize = 8;
/// Largest number of cases drawn per trial.
pub const MAX_CASES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Postulate {
    /// Case order does not matter.
    RS,
    /// Rules in no MI of any case score 0.
    RM,
    /// `V̂ = 0` iff every case is consistent.
    CO,
    /// Adding a rule never lowers `V̂`.
    MO,
    /// Adding a rule that ends up free leaves `V̂` unchanged.
    IN,
    /// Rule values sum to the underlying Σ-measure.
    DIS,
    /// No rule value exceeds the underlying Σ-measure.
    UB,
    /// Facts score 0.
    FM,
}

impl Postulate {
    pub const ALL: [Postulate; 8] = [
        Postulate::RS,
        Postulate::RM,
        Postulate::CO,
        Postulate::MO,
        Postulate::IN,
        Postulate::DIS,
        Postulate::UB,
        Postulate::FM,
    ];

    /// Whether the postulate compares against an underlying inconsistency
    /// measure.
    pub fn needs_reference(self) -> bool {
        matches!(self, Postulate::DIS | Postulate::UB)
    }
}

impl fmt::Display for Postulate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Postulate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Postulate> {
        Postulate::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown postulate `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoCounterexample,
    Counterexample,
    NotApplicable,
}

impl Verdict {
    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::NoCounterexample => "✓",
            Verdict::Counterexample => "✗",
            Verdict::NotApplicable => "n/a",
        }
    }
}

/// A case set (and, for MO/IN, the added rule; for RS, the case order)
/// on which a postulate fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub postulate: Postulate,
    pub measure: String,
    pub seed: u64,
    pub trial: u64,
    /// The shared rules, in the rules-file grammar.
    pub rules: String,
    pub cases: Vec<WitnessCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub added_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    /// What went wrong, for people.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCase {
    pub case_id: String,
    pub facts: Vec<String>,
}

impl Witness {
    pub fn caseset(&self) -> Result<CaseSet> {
        let program = parse_rules(&self.rules)?;
        let cases = self
            .cases
            .iter()
            .map(|c| {
                let facts = c
                    .facts
                    .iter()
                    .map(|f| Literal::parse(f).ok_or_else(|| Error::InvalidConfig(format!("bad literal `{f}`"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CaseRecord::new(c.case_id.clone(), facts))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CaseSet::new(program, cases))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }

    pub fn from_json(text: &str) -> Result<Witness> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Re-evaluates the postulate on the recorded input. `Ok(true)` means the
    /// violation reproduces.
    pub fn replay(&self, registry: &Registry) -> Result<bool> {
        let subject = Subject::resolve(registry, &self.measure)?;
        let caseset = self.caseset()?;
        let input = TrialInput {
            caseset,
            added_rule: self.added_rule.as_deref().map(parse_one_rule).transpose()?,
            permutation: self.permutation.clone(),
        };
        Ok(subject.violation(self.postulate, &input)?.is_some())
    }
}

fn parse_one_rule(text: &str) -> Result<Rule> {
    let program = parse_rules(&format!("{text}."))?;
    program
        .rules()
        .first()
        .cloned()
        .ok_or_else(|| Error::InvalidConfig(format!("no rule in `{text}`")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostulateResult {
    pub postulate: Postulate,
    pub measure: String,
    pub trials: u64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// The culpability measure under test and the measure it distributes.
struct Subject {
    measure: std::sync::Arc<dyn CulpabilityMeasure>,
    reference: Option<std::sync::Arc<dyn InconsistencyMeasure>>,
}

impl Subject {
    fn resolve(registry: &Registry, name: &str) -> Result<Subject> {
        let measure = registry.culpability(name)?;
        let reference = ["adj-shapley-", "shapley-"]
            .iter()
            .find_map(|p| name.strip_prefix(p))
            .and_then(|inner| registry.inconsistency(inner).ok());
        Ok(Subject { measure, reference })
    }

    fn applies(&self, postulate: Postulate) -> bool {
        !postulate.needs_reference() || self.reference.is_some()
    }

    fn analyze(&self, caseset: &CaseSet) -> Result<Analysis> {
        caseset.analyze(&Budget::default(), None)
    }

    fn vector(&self, caseset: &CaseSet) -> Result<crate::multiset::Culpability> {
        self.analyze(caseset)?.culpability(self.measure.as_ref())
    }

    /// `Some(detail)` if the postulate fails on `input`.
    fn violation(&self, postulate: Postulate, input: &TrialInput) -> Result<Option<String>> {
        let cs = &input.caseset;
        let analysis = self.analyze(cs)?;
        let c = analysis.culpability(self.measure.as_ref())?;
        let v = &c.vector;
        Ok(match postulate {
            Postulate::RS => {
                let order = input.permutation.as_ref().expect("RS needs a permutation");
                let other = self.vector(&cs.permuted(order))?.vector;
                (other.values != v.values).then(|| "values change under case permutation".to_owned())
            }
            Postulate::RM => analysis.free_rules().into_iter().find_map(|id| {
                let x = &v.values[id.index()];
                (!x.is_zero()).then(|| format!("free rule `{}` scores {}", cs.rules()[id.index()], render(x)))
            }),
            Postulate::CO => {
                let all_consistent = (0..cs.classes().len()).all(|k| analysis.class(k).mis.is_empty());
                let zero = v.max().is_zero();
                (zero != all_consistent)
                    .then(|| format!("V̂ = {} while all cases consistent = {all_consistent}", render(&v.max())))
            }
            Postulate::MO | Postulate::IN => {
                let rule = input.added_rule.clone().expect("MO/IN need an added rule");
                let bigger = cs.with_rule(rule.clone());
                let big_analysis = self.analyze(&bigger)?;
                let big = big_analysis.culpability(self.measure.as_ref())?.vector;
                if postulate == Postulate::MO {
                    (big.max() < v.max()).then(|| {
                        format!(
                            "adding `{rule}` lowers V̂ from {} to {}",
                            render(&v.max()),
                            render(&big.max())
                        )
                    })
                } else {
                    let id = bigger.rule_id(&rule).expect("rule was added");
                    let free = big_analysis.free_rules().contains(&id);
                    (free && big.max() != v.max()).then(|| {
                        format!(
                            "adding free `{rule}` moves V̂ from {} to {}",
                            render(&v.max()),
                            render(&big.max())
                        )
                    })
                }
            }
            Postulate::DIS | Postulate::UB => {
                let reference = self.reference.as_ref().expect("checked by applies");
                let total = analysis.sigma_measure(reference.as_ref())?;
                if postulate == Postulate::DIS {
                    let sum: crate::rational::Rational = v.values.iter().sum();
                    (sum != total).then(|| {
                        format!(
                            "rule values sum to {} but the Σ-measure is {}",
                            render(&sum),
                            render(&total)
                        )
                    })
                } else {
                    (v.max() > total)
                        .then(|| format!("V̂ = {} exceeds the Σ-measure {}", render(&v.max()), render(&total)))
                }
            }
            Postulate::FM => c
                .facts
                .iter()
                .next()
                .map(|(f, x)| format!("fact `{f}` scores {}", render(x))),
        })
    }
}

struct TrialInput {
    caseset: CaseSet,
    added_rule: Option<Rule>,
    permutation: Option<Vec<usize>>,
}

fn trial_input(postulate: Postulate, seed: u64, trial: u64) -> TrialInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let caseset = random_caseset(&mut rng, MAX_RULES, MAX_CASES);
    let added_rule = matches!(postulate, Postulate::MO | Postulate::IN).then(|| random_extra_rule(&mut rng, &caseset));
    let permutation = (postulate == Postulate::RS).then(|| {
        let mut order: Vec<usize> = (0..caseset.len()).collect();
        order.shuffle(&mut rng);
        order
    });
    TrialInput {
        caseset,
        added_rule,
        permutation,
    }
}

fn witness(postulate: Postulate, measure: &str, seed: u64, trial: u64, input: &TrialInput, detail: String) -> Witness {
    let cs = &input.caseset;
    Witness {
        postulate,
        measure: measure.to_owned(),
        seed,
        trial,
        rules: cs.program().render(),
        cases: cs
            .cases()
            .iter()
            .map(|c| WitnessCase {
                case_id: c.case_id.clone(),
                facts: c.facts().iter().map(|l| l.to_string()).collect(),
            })
            .collect(),
        added_rule: input.added_rule.as_ref().map(|r| r.to_string()),
        permutation: input.permutation.clone(),
        detail,
    }
}

/// Runs `trials` random trials of `postulate` against the culpability
/// measure `measure`.
pub fn check_postulate(
    registry: &Registry,
    postulate: Postulate,
    measure: &str,
    trials: u64,
    seed: u64,
) -> Result<PostulateResult> {
    let subject = Subject::resolve(registry, measure)?;
    let mut result = PostulateResult {
        postulate,
        measure: measure.to_owned(),
        trials,
        verdict: Verdict::NoCounterexample,
        witness: None,
    };
    if !subject.applies(postulate) {
        result.verdict = Verdict::NotApplicable;
        return Ok(result);
    }
    let found = (0..trials).into_par_iter().find_map_first(|t| {
        let input = trial_input(postulate, seed, t);
        match subject.violation(postulate, &input) {
            Ok(None) => None,
            Ok(Some(detail)) => Some(Ok(witness(postulate, measure, seed, t, &input, detail))),
            Err(e) => Some(Err(e)),
        }
    });
    if let Some(w) = found {
        result.verdict = Verdict::Counterexample;
        result.witness = Some(w?);
    }
    Ok(result)
}

/// Rows of the compliance table, in order.
pub const TABLED_MEASURES: [&str; 3] = ["cd", "chash", "adj-shapley-mi"];

/// Every postulate against every tabled measure. DIS and UB are n/a for
/// measures that do not distribute an inconsistency measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub measure: String,
    pub results: Vec<PostulateResult>,
}

pub fn compliance_table(registry: &Registry, trials: u64, seed: u64) -> Result<Table> {
    table_for(registry, &TABLED_MEASURES, &Postulate::ALL, trials, seed)
}

pub fn table_for(
    registry: &Registry,
    measures: &[&str],
    postulates: &[Postulate],
    trials: u64,
    seed: u64,
) -> Result<Table> {
    let rows = measures
        .iter()
        .map(|m| {
            let results = postulates
                .iter()
                .map(|&p| check_postulate(registry, p, m, trials, seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(TableRow {
                measure: m.to_string(),
                results,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { trials, seed, rows })
}

impl Table {
    pub fn verdict(&self, measure: &str, postulate: Postulate) -> Option<Verdict> {
        self.rows
            .iter()
            .find(|r| r.measure == measure)?
            .results
            .iter()
            .find(|r| r.postulate == postulate)
            .map(|r| r.verdict)
    }

    pub fn render_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.measure.len()).max().unwrap_or(0).max(7);
        let postulates: Vec<Postulate> = self
            .rows
            .first()
            .map(|r| r.results.iter().map(|x| x.postulate).collect())
            .unwrap_or_default();
        let mut out = format!("{:width$}", "measure");
        for p in &postulates {
            out.push_str(&format!(" {:>4}", p.to_string()));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:width$}", row.measure));
            for r in &row.results {
                out.push_str(&format!(" {:>4}", r.verdict.symbol()));
            }
            out.push('\n');
        }
        out.push_str(&format!("({} trials per cell, seed {})\n", self.trials, self.seed));
        for w in self
            .rows
            .iter()
            .flat_map(|r| &r.results)
            .filter_map(|r| r.witness.as_ref())
        {
            out.push_str(&format!(
                "{} / {}: trial {}: {}\n",
                w.measure, w.postulate, w.trial, w.detail
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fm_fails_for_baselines_with_replayable_witness() {
        let reg = Registry::standard();
        for m in ["cd", "chash"] {
            let r = check_postulate(&reg, Postulate::FM, m, 1000, 3).unwrap();
            assert_eq!(r.verdict, Verdict::Counterexample, "{m}");
            let w = r.witness.unwrap();
            assert!(w.replay(&reg).unwrap());
            let back = Witness::from_json(&w.to_json()).unwrap();
            assert_eq!(back, w);
            assert!(back.replay(&reg).unwrap());
        }
    }

    #[test]
    fn proven_postulates_hold_briefly() {
        let reg = Registry::standard();
        for p in Postulate::ALL.into_iter().filter(|&p| p != Postulate::MO) {
            let r = check_postulate(&reg, p, "adj-shapley-mi", 300, 11).unwrap();
            assert_eq!(r.verdict, Verdict::NoCounterexample, "{p}: {:?}", r.witness);
        }
        for p in [
            Postulate::RS,
            Postulate::RM,
            Postulate::CO,
            Postulate::MO,
            Postulate::IN,
        ] {
            for m in ["cd", "chash"] {
                let r = check_postulate(&reg, p, m, 300, 11).unwrap();
                assert_eq!(r.verdict, Verdict::NoCounterexample, "{m} {p}: {:?}", r.witness);
            }
        }
    }

    #[test]
    fn table_shape_and_determinism() {
        let reg = Registry::standard();
        let a = compliance_table(&reg, 50, 5).unwrap();
        let b = compliance_table(&reg, 50, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.verdict("cd", Postulate::DIS), Some(Verdict::NotApplicable));
        assert_eq!(a.verdict("chash", Postulate::UB), Some(Verdict::NotApplicable));
        assert_eq!(
            a.verdict("adj-shapley-mi", Postulate::DIS),
            Some(Verdict::NoCounterexample)
        );
        let empty = compliance_table(&reg, 0, 5).unwrap();
        assert!(empty
            .rows
            .iter()
            .flat_map(|r| &r.results)
            .all(|r| r.verdict != Verdict::Counterexample));
        assert!(a.render_text().contains("adj-shapley-mi"));
    }

    #[test]
    fn a_tampered_witness_does_not_replay() {
        let reg = Registry::standard();
        let mut w = check_postulate(&reg, Postulate::FM, "chash", 1000, 3)
            .unwrap()
            .witness
            .unwrap();
        for c in &mut w.cases {
            c.facts.clear();
        }
        assert!(!w.replay(&reg).unwrap());
    }

    #[test]
    fn postulate_names_parse() {
        assert_eq!("dis".parse::<Postulate>().unwrap(), Postulate::DIS);
        assert!("XX".parse::<Postulate>().is_err());
    }

    #[test]
    fn adjusted_shapley_monotony_counterexample_replays() {
        let reg = Registry::standard();
        let r = check_postulate(&reg, Postulate::MO, "adj-shapley-mi", 2000, 11).unwrap();
        assert_eq!(r.verdict, Verdict::Counterexample);
        assert!(r.witness.unwrap().replay(&reg).unwrap());
    }
}
