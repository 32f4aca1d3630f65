//! Multisets of rule bases sharing one rule set, and Σ-induced measures.
//!
//! A [`CaseSet`] pairs a [`RuleProgram`] with an ordered list of fact sets.
//! Cases with equal fact sets have equal rule bases, so each distinct fact
//! set is analyzed once and weighted by its multiplicity.
//!
//! In every per-case base the shared rules come first: rule `i` of the
//! program is element `ElementId(i)` in every case, followed by that case's
//! facts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::base::{ElementId, Literal, Rule, RuleBase};
use crate::error::{Error, Result};
use crate::measures::{AnalyzedBase, CulpabilityMeasure, InconsistencyMeasure};
use crate::mi::Budget;
use crate::parser::{CaseRecord, RuleProgram};
use crate::rational::{int, Rational};

/// One distinct fact set and the cases that carry it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactClass {
    pub facts: Vec<Literal>,
    /// Indices into [`CaseSet::cases`], ascending.
    pub members: Vec<usize>,
}

impl FactClass {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct CaseSet {
    program: RuleProgram,
    cases: Vec<CaseRecord>,
    classes: Vec<FactClass>,
    class_of: Vec<usize>,
}

impl CaseSet {
    pub fn new(program: RuleProgram, cases: Vec<CaseRecord>) -> Self {
        let mut classes: Vec<FactClass> = Vec::new();
        let mut index: HashMap<&[Literal], usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(cases.len());
        for (i, case) in cases.iter().enumerate() {
            let c = *index.entry(case.facts()).or_insert_with(|| {
                classes.push(FactClass {
                    facts: case.facts().to_vec(),
                    members: Vec::new(),
                });
                classes.len() - 1
            });
            classes[c].members.push(i);
            class_of.push(c);
        }
        CaseSet {
            program,
            cases,
            classes,
            class_of,
        }
    }

    pub fn program(&self) -> &RuleProgram {
        &self.program
    }

    pub fn rules(&self) -> &[Rule] {
        self.program.rules()
    }

    pub fn cases(&self) -> &[CaseRecord] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn classes(&self) -> &[FactClass] {
        &self.classes
    }

    pub fn class_of(&self, case: usize) -> usize {
        self.class_of[case]
    }

    /// The rule base `F ∪ R` of a fact class.
    pub fn class_base(&self, class: usize) -> RuleBase {
        self.base_for(&self.classes[class].facts)
    }

    /// The rule base of case number `case`.
    pub fn case_base(&self, case: usize) -> RuleBase {
        self.base_for(self.cases[case].facts())
    }

    fn base_for(&self, facts: &[Literal]) -> RuleBase {
        let mut base: RuleBase = self.program.rules().iter().cloned().collect();
        for &f in facts {
            base.insert(Rule::fact(f));
        }
        base
    }

    /// Id of a shared rule in every case base.
    pub fn rule_id(&self, rule: &Rule) -> Option<ElementId> {
        self.program.position(rule).map(|i| ElementId(i as u32))
    }

    /// `M ∪ {r}`: `rule` added to every case.
    pub fn with_rule(&self, rule: Rule) -> CaseSet {
        let mut program = self.program.clone();
        program.push(rule, Default::default());
        CaseSet {
            program,
            ..self.clone()
        }
    }

    /// The same cases in the order `order` (a permutation of `0..len`).
    pub fn permuted(&self, order: &[usize]) -> CaseSet {
        assert_eq!(order.len(), self.len(), "not a permutation");
        CaseSet::new(
            self.program.clone(),
            order.iter().map(|&i| self.cases[i].clone()).collect(),
        )
    }

    /// Enumerates MI for every fact class, on `workers` threads (all cores
    /// when `None`).
    pub fn analyze(&self, budget: &Budget, workers: Option<usize>) -> Result<Analysis> {
        let classes = with_workers(workers, || {
            (0..self.classes.len())
                .into_par_iter()
                .map(|c| AnalyzedBase::new(self.class_base(c), budget))
                .collect::<Result<Vec<_>>>()
        })??;
        Ok(Analysis {
            caseset: self.clone(),
            classes,
            workers,
        })
    }
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// A case set together with MI(B) of every fact class.
#[derive(Debug, Clone)]
pub struct Analysis {
    caseset: CaseSet,
    classes: Vec<AnalyzedBase>,
    workers: Option<usize>,
}

/// Σ-induced values of one culpability measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Culpability {
    pub vector: CulpabilityVector,
    /// Σ-values of facts, keyed by fact literal; only nonzero entries.
    pub facts: BTreeMap<Literal, Rational>,
    pub blame_unassigned: bool,
}

/// Per-rule Σ-values over the shared rules, in program order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CulpabilityVector {
    pub measure: String,
    pub values: Vec<Rational>,
}

impl CulpabilityVector {
    /// `V̂`, the largest entry (0 for an empty rule set).
    pub fn max(&self) -> Rational {
        self.values.iter().max().cloned().unwrap_or_else(Rational::zero)
    }
}

impl Analysis {
    pub fn caseset(&self) -> &CaseSet {
        &self.caseset
    }

    pub fn class(&self, class: usize) -> &AnalyzedBase {
        &self.classes[class]
    }

    /// `I_MI` of every case, in case order.
    pub fn per_case_mi(&self) -> Vec<usize> {
        (0..self.caseset.len())
            .map(|i| self.classes[self.caseset.class_of(i)].mis.len())
            .collect()
    }

    /// `m^Σ_I(M) = Σ_B I(B)`.
    pub fn sigma_measure(&self, measure: &dyn InconsistencyMeasure) -> Result<Rational> {
        let per_class = self.per_class(|a| measure.eval(a))?;
        Ok(self.weighted_sum(per_class.iter()))
    }

    /// Σ-values of `measure` for every shared rule and every fact.
    pub fn culpability(&self, measure: &dyn CulpabilityMeasure) -> Result<Culpability> {
        let payoffs = self.per_class(|a| measure.evaluate(a))?;
        let r = self.caseset.rules().len();
        let mut values = vec![Rational::zero(); r];
        let mut facts: BTreeMap<Literal, Rational> = BTreeMap::new();
        let mut blame_unassigned = false;
        for (class, p) in self.caseset.classes.iter().zip(&payoffs) {
            let m = int(class.multiplicity() as i64);
            blame_unassigned |= p.blame_unassigned;
            for (acc, v) in values.iter_mut().zip(&p.values[..r]) {
                if !v.is_zero() {
                    *acc += v * &m;
                }
            }
            for (f, v) in class.facts.iter().zip(&p.values[r..]) {
                if !v.is_zero() {
                    *facts.entry(*f).or_insert_with(Rational::zero) += v * &m;
                }
            }
        }
        Ok(Culpability {
            vector: CulpabilityVector {
                measure: measure.name().to_owned(),
                values,
            },
            facts,
            blame_unassigned,
        })
    }

    /// Shared rules in no MI of any case.
    pub fn free_rules(&self) -> Vec<ElementId> {
        let r = self.caseset.rules().len();
        let mut used = vec![false; r];
        for a in &self.classes {
            for m in a.mis.iter() {
                for id in m.ids() {
                    if id.index() < r {
                        used[id.index()] = true;
                    }
                }
            }
        }
        (0..r).filter(|&i| !used[i]).map(|i| ElementId(i as u32)).collect()
    }

    /// For every rule that is non-free somewhere, its rank among those rules
    /// in each single case under `measure`, in case order.
    pub fn per_case_rank_distribution(&self, measure: &dyn CulpabilityMeasure) -> Result<Vec<(ElementId, Vec<Rank>)>> {
        let free = self.free_rules();
        let ranked: Vec<ElementId> = (0..self.caseset.rules().len() as u32)
            .map(ElementId)
            .filter(|id| !free.contains(id))
            .collect();
        if ranked.is_empty() {
            return Ok(Vec::new());
        }
        let payoffs = self.per_class(|a| measure.evaluate(a))?;
        let class_ranks: Vec<Vec<Rank>> = payoffs
            .iter()
            .map(|p| rank_rules(&ranked.iter().map(|id| p.get(*id).clone()).collect::<Vec<_>>()))
            .collect();
        Ok(ranked
            .iter()
            .enumerate()
            .map(|(j, &id)| {
                let samples = (0..self.caseset.len())
                    .map(|case| class_ranks[self.caseset.class_of(case)][j])
                    .collect();
                (id, samples)
            })
            .collect())
    }

    fn per_class<T: Send>(&self, f: impl Fn(&AnalyzedBase) -> Result<T> + Sync) -> Result<Vec<T>> {
        with_workers(self.workers, || {
            self.classes.par_iter().map(&f).collect::<Result<Vec<_>>>()
        })?
    }

    fn weighted_sum<'a>(&self, values: impl Iterator<Item = &'a Rational>) -> Rational {
        values
            .zip(&self.caseset.classes)
            .map(|(v, c)| v * int(c.multiplicity() as i64))
            .sum()
    }
}

/// `m^Σ_I(M)`.
pub fn sigma_measure(caseset: &CaseSet, measure: &dyn InconsistencyMeasure) -> Result<Rational> {
    caseset.analyze(&Budget::default(), None)?.sigma_measure(measure)
}

/// `m^Σ_C(M, r)` for a shared rule or a fact literal (as a fact rule).
pub fn sigma_culpability(caseset: &CaseSet, measure: &dyn CulpabilityMeasure, rule: &Rule) -> Result<Rational> {
    let c = caseset.analyze(&Budget::default(), None)?.culpability(measure)?;
    if rule.is_fact() {
        return Ok(c.facts.get(&rule.head()).cloned().unwrap_or_else(Rational::zero));
    }
    let id = caseset
        .rule_id(rule)
        .ok_or_else(|| Error::UnknownRule(rule.to_string()))?;
    Ok(c.vector.values[id.index()].clone())
}

/// `V^C(M)` over the shared rules.
pub fn culpability_vector(caseset: &CaseSet, measure: &dyn CulpabilityMeasure) -> Result<CulpabilityVector> {
    Ok(caseset.analyze(&Budget::default(), None)?.culpability(measure)?.vector)
}

/// Shared rules occurring in no MI of any case.
pub fn multiset_free_formulas(caseset: &CaseSet) -> Result<Vec<ElementId>> {
    Ok(caseset.analyze(&Budget::default(), None)?.free_rules())
}

/// A rank that is either an integer or halfway between two integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank {
    doubled: u64,
}

impl Rank {
    pub fn from_doubled(doubled: u64) -> Rank {
        Rank { doubled }
    }

    pub fn whole(rank: u64) -> Rank {
        Rank { doubled: 2 * rank }
    }

    pub fn is_integer(self) -> bool {
        self.doubled % 2 == 0
    }

    pub fn as_f64(self) -> f64 {
        self.doubled as f64 / 2.0
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.doubled / 2)
        } else {
            write!(f, "{}.5", self.doubled / 2)
        }
    }
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_integer() {
            s.serialize_u64(self.doubled / 2)
        } else {
            s.serialize_f64(self.as_f64())
        }
    }
}

/// Ranks for `values`, highest first. `k` tied values share the mean of the
/// `k` positions they occupy.
pub fn rank_rules(values: &[Rational]) -> Vec<Rank> {
    let order = ranking_order(values);
    let mut ranks = vec![Rank::whole(0); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end, mean = (start + 1 + end) / 2
        let rank = Rank::from_doubled((start + 1 + end) as u64);
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Indices of `values` by value descending, ties in index order.
pub fn ranking_order(values: &[Rational]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    order
}
