//! Shapley and adjusted Shapley inconsistency values.
//!
//! Exact values are computed by enumerating every coalition of the players.
//! Marginal contributions are accumulated as integers per coalition size
//! and only combined with the (exact, rational) Shapley weights at the end,
//! so the hot loop never touches big rationals.
//!
//! With [`Enumeration::Reduced`] only elements that occur in some MI play.
//! For measures that declare free-formula-independence' the remaining
//! elements are null players and dropping them changes no value, while the
//! number of coalitions shrinks from `2^|B|` to `2^|active|`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::base::{ElementId, RuleBase};
use crate::error::{BudgetKind, Error, Result};
use crate::measures::{AnalyzedBase, CoalitionValues, InconsistencyMeasure, MiCount, PayoffVector};
use crate::mi::Budget;
use crate::rational::{coalition_weight, Rational};

/// Which elements take part in the coalition enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Enumeration {
    /// Only elements of some MI; requires free-formula-independence'.
    #[default]
    Reduced,
    /// Every element of the base.
    Full,
}

/// Masks are `u32`; no realistic budget gets near this.
const HARD_PLAYER_LIMIT: usize = 30;

/// Below this many players the serial loop wins.
const PARALLEL_THRESHOLD: usize = 14;

/// Checks that `measure` declares consistency', monotony' and
/// free-formula-independence'.
pub fn require_properties(measure: &dyn InconsistencyMeasure) -> Result<()> {
    let p = measure.properties();
    let missing = [
        (p.consistency, "consistency'"),
        (p.monotony, "monotony'"),
        (p.free_formula_independence, "free-formula-independence'"),
    ]
    .into_iter()
    .find(|(ok, _)| !ok);
    match missing {
        Some((_, property)) => Err(Error::MissingProperty {
            measure: measure.name().to_owned(),
            property,
        }),
        None => Ok(()),
    }
}

/// `S_α(B) = Σ_{M ∈ MI(B), α ∈ M} 1/|M|`, the Shapley values of `I_MI`.
pub fn shapley_mi_closedform(base: &RuleBase) -> Result<PayoffVector> {
    Ok(shapley_mi_closedform_analyzed(&AnalyzedBase::with_default_budget(
        base.clone(),
    )?))
}

pub fn shapley_mi_closedform_analyzed(base: &AnalyzedBase) -> PayoffVector {
    let mut out = PayoffVector::zeros(base.base.len());
    for m in base.mis.iter() {
        let share = Rational::new(BigInt::one(), BigInt::from(m.len()));
        for id in m.ids() {
            out.values[id.index()] += &share;
        }
    }
    out
}

/// Shapley inconsistency values of every element of `base` w.r.t. `measure`.
pub fn shapley(base: &RuleBase, measure: &dyn InconsistencyMeasure, mode: Enumeration) -> Result<PayoffVector> {
    shapley_analyzed(&AnalyzedBase::with_default_budget(base.clone())?, measure, mode)
}

pub fn shapley_analyzed(
    base: &AnalyzedBase,
    measure: &dyn InconsistencyMeasure,
    mode: Enumeration,
) -> Result<PayoffVector> {
    let mode = if measure.properties().free_formula_independence {
        mode
    } else {
        Enumeration::Full
    };
    let game = Game::new(base, measure, mode)?;
    let acc = game.accumulate(false);
    Ok(game.finish(&acc, false))
}

/// Adjusted Shapley inconsistency values: facts get 0, and in every
/// coalition the facts' share is split evenly among its non-free rules.
pub fn adjusted_shapley(
    base: &RuleBase,
    measure: &dyn InconsistencyMeasure,
    mode: Enumeration,
) -> Result<PayoffVector> {
    adjusted_shapley_analyzed(&AnalyzedBase::with_default_budget(base.clone())?, measure, mode)
}

pub fn adjusted_shapley_analyzed(
    base: &AnalyzedBase,
    measure: &dyn InconsistencyMeasure,
    mode: Enumeration,
) -> Result<PayoffVector> {
    require_properties(measure)?;
    let game = Game::new(base, measure, mode)?;
    let acc = game.accumulate(true);
    Ok(game.finish(&acc, true))
}

/// Adjusted Shapley values of `I_MI`, the default culpability measure.
pub fn adjusted_shapley_mi(base: &RuleBase) -> Result<PayoffVector> {
    adjusted_shapley(base, &MiCount, Enumeration::Reduced)
}

/// The players of `base` under `mode`, with a sub-base made of just them.
///
/// Returns the sub-base and, for each of its elements, the id it has in
/// `base`.
pub fn reduce_to_active(base: &AnalyzedBase, mode: Enumeration) -> (RuleBase, Vec<ElementId>) {
    let players = players(base, mode);
    base.base.restrict(&players)
}

/// Spreads a payoff over a reduced base back to the ids of the full base.
pub fn expand(reduced: &PayoffVector, origin: &[ElementId], full_len: usize) -> PayoffVector {
    let mut out = PayoffVector::zeros(full_len);
    out.blame_unassigned = reduced.blame_unassigned;
    for (value, id) in reduced.values.iter().zip(origin) {
        out.values[id.index()] = value.clone();
    }
    out
}

fn players(base: &AnalyzedBase, mode: Enumeration) -> Vec<ElementId> {
    match mode {
        Enumeration::Reduced => base.mis.active_elements(),
        Enumeration::Full => base.base.ids().collect(),
    }
}

/// Coalition values scaled to integers, plus everything the loop needs.
struct Game {
    full_len: usize,
    players: Vec<ElementId>,
    /// `v[mask] / denom` is the measure on coalition `mask`.
    values: Scaled,
    denom: BigInt,
    /// Bit `i` set iff player `i` is a fact.
    fact_mask: u32,
    /// Players in some MI contained in the coalition.
    nonfree: Vec<u32>,
}

enum Scaled {
    Counts(Vec<u32>),
    Wide(Vec<i64>),
}

impl Scaled {
    #[inline]
    fn at(&self, mask: usize) -> i128 {
        match self {
            Scaled::Counts(v) => v[mask] as i128,
            Scaled::Wide(v) => v[mask] as i128,
        }
    }
}

/// Integer sums of marginal contributions, split by coalition size `b`
/// (and, for shifted fact blame, by number of receiving rules `k`).
struct Accumulators {
    n: usize,
    /// `cp[i * (n+1) + b]`
    cp: Vec<i128>,
    /// `ap[(i * (n+1) + b) * (n+1) + k]`
    ap: Vec<i128>,
    unassigned: bool,
}

impl Accumulators {
    fn new(n: usize, adjusted: bool) -> Self {
        Accumulators {
            n,
            cp: vec![0; n * (n + 1)],
            ap: if adjusted {
                vec![0; n * (n + 1) * (n + 1)]
            } else {
                Vec::new()
            },
            unassigned: false,
        }
    }

    fn merge(mut self, other: Accumulators) -> Accumulators {
        for (a, b) in self.cp.iter_mut().zip(&other.cp) {
            *a += b;
        }
        for (a, b) in self.ap.iter_mut().zip(&other.ap) {
            *a += b;
        }
        self.unassigned |= other.unassigned;
        self
    }
}

impl Game {
    fn new(base: &AnalyzedBase, measure: &dyn InconsistencyMeasure, mode: Enumeration) -> Result<Game> {
        let players = players(base, mode);
        check_players(players.len(), &base.budget)?;
        let n = players.len();

        let (values, denom) = match measure.coalition_values(base, &players)? {
            CoalitionValues::Counts(c) => (Scaled::Counts(c), BigInt::one()),
            CoalitionValues::Exact(v) => scale(&v)?,
        };

        let mut bit = vec![None; base.base.len()];
        for (i, id) in players.iter().enumerate() {
            bit[id.index()] = Some(i);
        }
        let fact_mask = players
            .iter()
            .enumerate()
            .filter(|(_, &id)| base.base.is_fact(id))
            .fold(0u32, |m, (i, _)| m | 1 << i);

        let mut nonfree = vec![0u32; 1 << n];
        for m in base.mis.iter() {
            let mask = m
                .ids()
                .iter()
                .map(|id| bit[id.index()].expect("MI elements are always players"))
                .fold(0u32, |acc, i| acc | 1 << i);
            nonfree[mask as usize] |= mask;
        }
        for i in 0..n {
            let b = 1usize << i;
            for mask in 0..nonfree.len() {
                if mask & b != 0 {
                    nonfree[mask] |= nonfree[mask ^ b];
                }
            }
        }

        Ok(Game {
            full_len: base.base.len(),
            players,
            values,
            denom,
            fact_mask,
            nonfree,
        })
    }

    fn accumulate(&self, adjusted: bool) -> Accumulators {
        let n = self.players.len();
        let total = 1usize << n;
        if n < PARALLEL_THRESHOLD {
            return self.accumulate_range(0..total, adjusted);
        }
        let chunk = total / 64;
        (0..64)
            .into_par_iter()
            .map(|c| self.accumulate_range(c * chunk..(c + 1) * chunk, adjusted))
            .reduce(|| Accumulators::new(n, adjusted), Accumulators::merge)
    }

    fn accumulate_range(&self, masks: std::ops::Range<usize>, adjusted: bool) -> Accumulators {
        let n = self.players.len();
        let stride = n + 1;
        let mut acc = Accumulators::new(n, adjusted);
        for mask in masks.start.max(1)..masks.end {
            let b = mask.count_ones() as usize;
            let here = self.values.at(mask);
            let mut fact_share = 0i128;
            let mut rest = mask;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let d = here - self.values.at(mask ^ (1 << i));
                acc.cp[i * stride + b] += d;
                if self.fact_mask & (1 << i) != 0 {
                    fact_share += d;
                }
            }
            if !adjusted || fact_share == 0 {
                continue;
            }
            let receivers = self.nonfree[mask] & !self.fact_mask;
            let k = receivers.count_ones() as usize;
            if k == 0 {
                acc.unassigned = true;
                continue;
            }
            let mut rest = receivers;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                acc.ap[(i * stride + b) * stride + k] += fact_share;
            }
        }
        acc
    }

    fn finish(&self, acc: &Accumulators, adjusted: bool) -> PayoffVector {
        let n = acc.n;
        let stride = n + 1;
        let weights: Vec<Rational> = (0..=n)
            .map(|b| {
                if b == 0 {
                    Rational::zero()
                } else {
                    coalition_weight(b, n)
                }
            })
            .collect();
        let denom = Rational::from_integer(self.denom.clone());
        let mut reduced = Vec::with_capacity(n);
        for i in 0..n {
            if adjusted && self.fact_mask & (1 << i) != 0 {
                reduced.push(Rational::zero());
                continue;
            }
            let mut s = Rational::zero();
            for b in 1..=n {
                let c = acc.cp[i * stride + b];
                if c != 0 {
                    s += &weights[b] * Rational::from_integer(BigInt::from(c));
                }
            }
            if adjusted {
                for b in 1..=n {
                    for k in 1..=n {
                        let c = acc.ap[(i * stride + b) * stride + k];
                        if c != 0 {
                            s += &weights[b] * Rational::new(BigInt::from(c), BigInt::from(k));
                        }
                    }
                }
            }
            reduced.push(s / &denom);
        }
        let reduced = PayoffVector {
            values: reduced,
            blame_unassigned: acc.unassigned,
        };
        expand(&reduced, &self.players, self.full_len)
    }
}

fn check_players(n: usize, budget: &Budget) -> Result<()> {
    let limit = budget.max_players.min(HARD_PLAYER_LIMIT);
    if n > limit {
        return Err(Error::BudgetExhausted {
            kind: BudgetKind::CoalitionPlayers,
            limit,
        });
    }
    Ok(())
}

/// Brings rationals to a common denominator with `i64` numerators.
fn scale(values: &[Rational]) -> Result<(Scaled, BigInt)> {
    let overflow = || Error::BudgetExhausted {
        kind: BudgetKind::ValueRange,
        limit: 63,
    };
    let denom = values.iter().fold(BigInt::one(), |d, v| d.lcm(v.denom()));
    let scaled = values
        .iter()
        .map(|v| (v.numer() * (&denom / v.denom())).to_i64().ok_or_else(overflow))
        .collect::<Result<Vec<_>>>()?;
    Ok((Scaled::Wide(scaled), denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::Rule;
    use crate::examples;
    use crate::measures::MeasureProperties;
    use crate::mi::enumerate_mi_bruteforce;
    use crate::rational::{int, ratio};
    use crate::testgen::arb_small_base;
    use proptest::prelude::*;

    fn id(base: &RuleBase, e: &str) -> ElementId {
        base.id_of(&Rule::parse(e)).unwrap()
    }

    /// `I_MI` of the sub-base made of `mask`, by brute force.
    fn brute_mi(base: &RuleBase, mask: u32) -> Rational {
        let ids: Vec<ElementId> = base.ids().filter(|id| mask & (1 << id.0) != 0).collect();
        let (sub, _) = base.restrict(&ids);
        int(enumerate_mi_bruteforce(&sub).unwrap().len() as i64)
    }

    /// Elements of `mask` that lie in some MI of that sub-base.
    fn brute_nonfree(base: &RuleBase, mask: u32) -> u32 {
        let ids: Vec<ElementId> = base.ids().filter(|id| mask & (1 << id.0) != 0).collect();
        let (sub, origin) = base.restrict(&ids);
        let mis = enumerate_mi_bruteforce(&sub).unwrap();
        mis.iter()
            .flat_map(|m| m.ids().to_vec())
            .fold(0, |acc, e| acc | 1 << origin[e.index()].0)
    }

    /// The adjusted Shapley definition, term by term, over all of `2^B`.
    fn oracle(base: &RuleBase, adjusted: bool) -> Vec<Rational> {
        let n = base.len();
        let v: Vec<Rational> = (0..1u32 << n).map(|m| brute_mi(base, m)).collect();
        let cp = |e: usize, m: u32| -> Rational {
            if m & (1 << e) == 0 {
                return Rational::zero();
            }
            coalition_weight(m.count_ones() as usize, n) * (&v[m as usize] - &v[(m ^ (1 << e)) as usize])
        };
        let facts: Vec<usize> = base.facts().map(|(i, _)| i.index()).collect();
        (0..n)
            .map(|e| {
                if adjusted && facts.contains(&e) {
                    return Rational::zero();
                }
                let mut s = Rational::zero();
                for m in 1..1u32 << n {
                    s += cp(e, m);
                    if !adjusted {
                        continue;
                    }
                    let nf = brute_nonfree(base, m);
                    if nf & (1 << e) == 0 {
                        continue;
                    }
                    let k = (0..n).filter(|r| nf & (1 << r) != 0 && !facts.contains(r)).count();
                    let fsum: Rational = facts.iter().map(|&f| cp(f, m)).sum();
                    s += fsum / int(k as i64);
                }
                s
            })
            .collect()
    }

    #[test]
    fn plain_shapley_b2() {
        let b2 = examples::b2();
        let s = shapley(&b2, &MiCount, Enumeration::Full).unwrap();
        assert!(s.values.iter().all(|v| *v == ratio(1, 3)));
        assert_eq!(shapley_mi_closedform(&b2).unwrap(), s);
    }

    #[test]
    fn adjusted_b2_splits_between_rules() {
        let b2 = examples::b2();
        let s = adjusted_shapley_mi(&b2).unwrap();
        assert_eq!(*s.get(id(&b2, "a")), int(0));
        assert_eq!(*s.get(id(&b2, "a -> b")), ratio(1, 2));
        assert_eq!(*s.get(id(&b2, "a -> -b")), ratio(1, 2));
        assert!(!s.blame_unassigned);
    }

    #[test]
    fn adjusted_b3_gives_single_rule_everything() {
        let b3 = examples::b3();
        let s = adjusted_shapley_mi(&b3).unwrap();
        assert_eq!(*s.get(id(&b3, "a")), int(0));
        assert_eq!(*s.get(id(&b3, "-b")), int(0));
        assert_eq!(*s.get(id(&b3, "a -> b")), int(1));
    }

    #[test]
    fn adjusted_running_example_cases() {
        let b1 = examples::m1_case_base(&["a", "c"]);
        let s = adjusted_shapley_mi(&b1).unwrap();
        assert_eq!(*s.get(id(&b1, "a -> b")), ratio(1, 2));
        assert_eq!(*s.get(id(&b1, "c -> -b")), ratio(1, 2));
        assert_eq!(*s.get(id(&b1, "b -> x")), int(0));

        let b3 = examples::m1_case_base(&["a", "y"]);
        let s = adjusted_shapley_mi(&b3).unwrap();
        for r in ["a -> b", "b -> x", "x -> z", "y -> -z"] {
            assert_eq!(*s.get(id(&b3, r)), ratio(1, 4), "{r}");
        }
        assert_eq!(*s.get(id(&b3, "c -> -b")), int(0));
    }

    #[test]
    fn contradictory_facts_flag_unassigned_blame() {
        let b = RuleBase::parse(["a", "-a", "q -> w"]);
        let s = adjusted_shapley_mi(&b).unwrap();
        assert!(s.blame_unassigned);
        assert!(s.values.iter().all(Zero::is_zero));
    }

    #[test]
    fn player_budget_is_enforced() {
        let elems: Vec<String> = (0..8)
            .flat_map(|i| [format!("p{i}"), format!("p{i} -> -p{i}x"), format!("p{i} -> p{i}x")])
            .collect();
        let b = RuleBase::parse(elems.iter().map(String::as_str));
        let mut budget = Budget::default();
        budget.max_players = 20;
        let a = AnalyzedBase::new(b, &budget).unwrap();
        let e = adjusted_shapley_analyzed(&a, &MiCount, Enumeration::Reduced).unwrap_err();
        assert!(e.is_budget());
    }

    #[test]
    fn adding_a_rule_can_lower_the_top_value() {
        // {-b, -c, -b -> c} puts all blame on `-b -> c`; the new rule opens a
        // second MI sharing both facts, and the facts' share gets split
        let before = RuleBase::parse(["-b", "-c", "-a, -c -> b", "-b -> c"]);
        let after = before.with(Rule::parse("-b, -c -> -a"));
        let s0 = adjusted_shapley_mi(&before).unwrap();
        let s1 = adjusted_shapley_mi(&after).unwrap();
        assert_eq!(*s0.get(id(&before, "-b -> c")), int(1));
        assert_eq!(*s1.get(id(&after, "-b -> c")), ratio(13, 15));
        assert_eq!(s1.values.iter().max().unwrap(), &ratio(13, 15));
        assert_eq!(s1.values, oracle(&after, true));
    }

    struct Halved;

    impl InconsistencyMeasure for Halved {
        fn name(&self) -> &str {
            "half"
        }
        fn properties(&self) -> MeasureProperties {
            MeasureProperties::ALL
        }
        fn eval(&self, base: &AnalyzedBase) -> Result<Rational> {
            Ok(ratio(base.mis.len() as i64, 2))
        }
    }

    #[test]
    fn rational_valued_measure_is_scaled_exactly() {
        let b = examples::m1_case_base(&["a", "c", "y"]);
        let half = adjusted_shapley(&b, &Halved, Enumeration::Reduced).unwrap();
        let full = adjusted_shapley_mi(&b).unwrap();
        for (h, f) in half.values.iter().zip(&full.values) {
            assert_eq!(h * int(2), *f);
        }
    }

    #[test]
    fn missing_property_is_reported() {
        struct Bare;
        impl InconsistencyMeasure for Bare {
            fn name(&self) -> &str {
                "bare"
            }
            fn properties(&self) -> MeasureProperties {
                MeasureProperties {
                    consistency: true,
                    monotony: true,
                    free_formula_independence: false,
                }
            }
            fn eval(&self, base: &AnalyzedBase) -> Result<Rational> {
                Ok(int(base.mis.len() as i64))
            }
        }
        let err = adjusted_shapley(&examples::b2(), &Bare, Enumeration::Full).unwrap_err();
        assert!(matches!(
            err,
            Error::MissingProperty {
                property: "free-formula-independence'",
                ..
            }
        ));
        // plain values fall back to full enumeration and still agree
        assert_eq!(
            shapley(&examples::b2(), &Bare, Enumeration::Reduced).unwrap(),
            shapley_mi_closedform(&examples::b2()).unwrap()
        );
    }

    #[test]
    fn parallel_path_matches_closed_form() {
        // 16 active players, above the parallel threshold
        let elems: Vec<String> = (0..4)
            .flat_map(|i| {
                [
                    format!("f{i}"),
                    format!("f{i} -> g{i}"),
                    format!("f{i} -> -g{i}"),
                    format!("f{i} -> h{i}"),
                ]
            })
            .chain((0..4).map(|i| format!("-h{i}")))
            .collect();
        let b = RuleBase::parse(elems.iter().map(String::as_str));
        let a = AnalyzedBase::with_default_budget(b).unwrap();
        assert!(a.mis.active_elements().len() >= PARALLEL_THRESHOLD);
        let exact = shapley_analyzed(&a, &MiCount, Enumeration::Reduced).unwrap();
        assert_eq!(exact, shapley_mi_closedform_analyzed(&a));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn matches_definition(base in arb_small_base(8)) {
            let adj = oracle(&base, true);
            let plain = oracle(&base, false);
            for mode in [Enumeration::Full, Enumeration::Reduced] {
                prop_assert_eq!(&adjusted_shapley(&base, &MiCount, mode).unwrap().values, &adj);
                prop_assert_eq!(&shapley(&base, &MiCount, mode).unwrap().values, &plain);
            }
        }

        #[test]
        fn closed_form_and_efficiency(base in arb_small_base(10)) {
            let exact = shapley(&base, &MiCount, Enumeration::Full).unwrap();
            prop_assert_eq!(&exact, &shapley_mi_closedform(&base).unwrap());
            let total = crate::measures::i_mi(&base).unwrap();
            prop_assert_eq!(exact.total(), total.clone());
            let adj = adjusted_shapley_mi(&base).unwrap();
            if !adj.blame_unassigned {
                prop_assert_eq!(adj.total(), total);
            }
        }
    }
}
