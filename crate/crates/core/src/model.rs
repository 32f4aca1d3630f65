//! Minimal models and consistency.
//!
//! Closure runs at the literal level: `a` and `-a` are independent symbols
//! while rules fire, and inconsistency is read off the finished model. Each
//! element keeps a count of body literals not yet derived; deriving a literal
//! decrements the counters of the elements watching it, so a full closure
//! touches every body literal at most once.

use rustc_hash::FxHashMap;

use crate::base::{Literal, LiteralSet, RuleBase};

/// A rule base compiled to dense literal indices, reusable for closures over
/// many sub-bases. Bodies and watcher lists are stored flat, indexed by
/// offset arrays.
#[derive(Debug, Clone)]
pub struct Propagator {
    literals: Vec<Literal>,
    complement: Vec<Option<u32>>,
    heads: Vec<u32>,
    body_start: Vec<u32>,
    body_lits: Vec<u32>,
    watch_start: Vec<u32>,
    watch_elems: Vec<u32>,
}

impl Propagator {
    pub fn new(base: &RuleBase) -> Self {
        let mut index = LiteralIndex::for_base(base);
        let mut literals = Vec::with_capacity(2 * base.len());
        let mut intern = |l: Literal, literals: &mut Vec<Literal>| index.intern(l, literals);

        let mut heads = Vec::with_capacity(base.len());
        let mut body_start = Vec::with_capacity(base.len() + 1);
        let mut body_lits = Vec::new();
        body_start.push(0);
        for (_, rule) in base.iter() {
            heads.push(intern(rule.head(), &mut literals));
            for &l in rule.body() {
                body_lits.push(intern(l, &mut literals));
            }
            body_start.push(body_lits.len() as u32);
        }

        // counting sort of (literal, element) pairs by literal
        let mut watch_start = vec![0u32; literals.len() + 1];
        for &l in &body_lits {
            watch_start[l as usize + 1] += 1;
        }
        for i in 0..literals.len() {
            watch_start[i + 1] += watch_start[i];
        }
        let mut fill = watch_start.clone();
        let mut watch_elems = vec![0u32; body_lits.len()];
        for e in 0..heads.len() {
            for &l in &body_lits[body_start[e] as usize..body_start[e + 1] as usize] {
                watch_elems[fill[l as usize] as usize] = e as u32;
                fill[l as usize] += 1;
            }
        }

        let complement = literals.iter().map(|l| index.get(l.negation())).collect();
        Propagator {
            literals,
            complement,
            heads,
            body_start,
            body_lits,
            watch_start,
            watch_elems,
        }
    }

    pub fn num_literals(&self) -> usize {
        self.literals.len()
    }

    pub fn head(&self, element: usize) -> usize {
        self.heads[element] as usize
    }

    pub fn body(&self, element: usize) -> &[u32] {
        &self.body_lits[self.body_start[element] as usize..self.body_start[element + 1] as usize]
    }

    /// Elements whose body mentions literal `index`.
    pub fn watchers(&self, index: usize) -> &[u32] {
        &self.watch_elems[self.watch_start[index] as usize..self.watch_start[index + 1] as usize]
    }

    pub fn complement(&self, index: usize) -> Option<usize> {
        self.complement[index].map(|c| c as usize)
    }

    pub fn num_elements(&self) -> usize {
        self.heads.len()
    }

    pub fn literal(&self, index: usize) -> Literal {
        self.literals[index]
    }

    /// Closure of the elements selected by `active`. Returns one flag per
    /// literal index.
    pub fn derive(&self, active: impl Fn(usize) -> bool) -> Vec<bool> {
        self.run(active, false).0
    }

    /// Whether the sub-base selected by `active` is consistent. Stops at the
    /// first complementary pair.
    pub fn consistent(&self, active: impl Fn(usize) -> bool) -> bool {
        !self.run(active, true).1
    }

    fn run(&self, active: impl Fn(usize) -> bool, stop_on_conflict: bool) -> (Vec<bool>, bool) {
        let mut derived = vec![false; self.literals.len()];
        let mut waiting: Vec<u32> = self.body_start.windows(2).map(|w| w[1] - w[0]).collect();
        let mut queue: Vec<u32> = Vec::new();
        let mut conflict = false;

        let push = |l: u32, derived: &mut Vec<bool>, queue: &mut Vec<u32>| -> bool {
            if derived[l as usize] {
                return false;
            }
            derived[l as usize] = true;
            queue.push(l);
            matches!(self.complement[l as usize], Some(c) if derived[c as usize])
        };

        for e in 0..self.heads.len() {
            if waiting[e] == 0 && active(e) {
                conflict |= push(self.heads[e], &mut derived, &mut queue);
            }
        }
        while let Some(l) = queue.pop() {
            if conflict && stop_on_conflict {
                break;
            }
            for &e in self.watchers(l as usize) {
                let e = e as usize;
                waiting[e] -= 1;
                if waiting[e] == 0 && active(e) {
                    conflict |= push(self.heads[e], &mut derived, &mut queue);
                }
            }
        }
        (derived, conflict)
    }
}

/// Literal to dense index. Atom ids come from a global interner, so a base
/// usually spans a compact id range and a flat table beats hashing; bases
/// with far-flung ids fall back to a map.
enum LiteralIndex {
    Table(Vec<u32>),
    Map(FxHashMap<Literal, u32>),
}

impl LiteralIndex {
    const EMPTY: u32 = u32::MAX;

    fn for_base(base: &RuleBase) -> Self {
        let max_id = base
            .iter()
            .flat_map(|(_, r)| r.literals())
            .map(|l| l.atom.id() as usize)
            .max()
            .unwrap_or(0);
        if max_id <= 4 * base.len() + 1024 {
            LiteralIndex::Table(vec![Self::EMPTY; 2 * (max_id + 1)])
        } else {
            let mut map = FxHashMap::default();
            map.reserve(2 * base.len());
            LiteralIndex::Map(map)
        }
    }

    fn slot(l: Literal) -> usize {
        2 * l.atom.id() as usize + l.negated as usize
    }

    fn intern(&mut self, l: Literal, literals: &mut Vec<Literal>) -> u32 {
        let next = literals.len() as u32;
        let index = match self {
            LiteralIndex::Table(t) => {
                let slot = &mut t[Self::slot(l)];
                if *slot == Self::EMPTY {
                    *slot = next;
                }
                *slot
            }
            LiteralIndex::Map(m) => *m.entry(l).or_insert(next),
        };
        if index == next {
            literals.push(l);
        }
        index
    }

    fn get(&self, l: Literal) -> Option<u32> {
        match self {
            LiteralIndex::Table(t) => t.get(Self::slot(l)).copied().filter(|&i| i != Self::EMPTY),
            LiteralIndex::Map(m) => m.get(&l).copied(),
        }
    }
}

/// The smallest literal set closed under every element of `base`.
pub fn minimal_model(base: &RuleBase) -> LiteralSet {
    let prop = Propagator::new(base);
    prop.derive(|_| true)
        .iter()
        .enumerate()
        .filter(|(_, &d)| d)
        .map(|(i, _)| prop.literal(i))
        .collect()
}

/// A base is consistent when its minimal model is.
pub fn is_consistent(base: &RuleBase) -> bool {
    Propagator::new(base).consistent(|_| true)
}

pub fn literal_set_consistent(set: &LiteralSet) -> bool {
    set.is_consistent()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::Rule;
    use crate::examples;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn set(lits: &[&str]) -> LiteralSet {
        lits.iter().map(|l| Literal::lit(l)).collect()
    }

    /// Fires rules in the given order until nothing changes.
    fn naive_model(base: &RuleBase, order: &[usize]) -> LiteralSet {
        let rules: Vec<&Rule> = base.iter().map(|(_, r)| r).collect();
        let mut model = LiteralSet::new();
        loop {
            let mut changed = false;
            for &i in order {
                let r = rules[i];
                if r.body().iter().all(|l| model.contains(l)) && model.insert(r.head()) {
                    changed = true;
                }
            }
            if !changed {
                return model;
            }
        }
    }

    fn is_closed(base: &RuleBase, m: &LiteralSet) -> bool {
        base.iter()
            .all(|(_, r)| !r.body().iter().all(|l| m.contains(l)) || m.contains(&r.head()))
    }

    /// Smallest closed set found by exhaustive search over the base's literals.
    fn brute_force_model(base: &RuleBase) -> LiteralSet {
        let lits: Vec<Literal> = base
            .iter()
            .flat_map(|(_, r)| r.literals())
            .collect::<LiteralSet>()
            .iter()
            .copied()
            .collect();
        assert!(lits.len() <= 12);
        let mut closed: Vec<LiteralSet> = (0u32..1 << lits.len())
            .map(|mask| {
                (0..lits.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| lits[i])
                    .collect::<LiteralSet>()
            })
            .filter(|m| is_closed(base, m))
            .collect();
        closed.sort_by_key(|m| m.len());
        let smallest = closed[0].clone();
        assert!(closed.iter().all(|m| smallest.is_subset(m)), "no least closed set");
        smallest
    }

    fn arb_base(atoms: usize, max_elems: usize) -> impl Strategy<Value = RuleBase> {
        let lit = (0..atoms, any::<bool>()).prop_map(|(a, neg)| {
            let atom = crate::base::Atom::named(&format!("p{a}"));
            if neg {
                Literal::neg(atom)
            } else {
                Literal::pos(atom)
            }
        });
        let elem = (proptest::collection::vec(lit.clone(), 0..3), lit).prop_map(|(body, head)| Rule::new(body, head));
        proptest::collection::vec(elem, 0..max_elems).prop_map(|v| v.into_iter().collect::<RuleBase>())
    }

    #[test]
    fn loan_example_model() {
        let model = minimal_model(&examples::loan_base());
        assert_eq!(
            model,
            set(&["mentalCondition", "platinumCustomer", "creditWorthy", "-creditWorthy"])
        );
        assert!(!literal_set_consistent(&model));
    }

    #[test]
    fn empty_and_chain() {
        assert!(minimal_model(&RuleBase::new()).is_empty());
        let b = RuleBase::parse(["a", "a -> b", "b -> c"]);
        assert_eq!(minimal_model(&b), set(&["a", "b", "c"]));
    }

    #[test]
    fn consistency_examples() {
        assert!(!is_consistent(&examples::loan_base()));
        assert!(!is_consistent(&examples::b2()));
        assert!(is_consistent(&RuleBase::parse(["a", "a -> b"])));
    }

    #[test]
    fn literal_set_examples() {
        assert!(!literal_set_consistent(&set(&["a", "-a"])));
        assert!(literal_set_consistent(&LiteralSet::new()));
        assert!(literal_set_consistent(&set(&["a", "-b"])));
    }

    #[test]
    fn negated_body_literals_fire() {
        let b = RuleBase::parse(["-a", "-a -> b", "b, -a -> -c"]);
        assert_eq!(minimal_model(&b), set(&["-a", "b", "-c"]));
    }

    proptest! {
        #[test]
        fn model_is_closed(base in arb_base(5, 10)) {
            prop_assert!(is_closed(&base, &minimal_model(&base)));
        }

        #[test]
        fn model_matches_exhaustive_search(base in arb_base(4, 8)) {
            prop_assert_eq!(minimal_model(&base), brute_force_model(&base));
        }

        #[test]
        fn model_is_monotone(base in arb_base(5, 8), extra in arb_base(5, 4)) {
            let mut bigger = base.clone();
            for (_, r) in extra.iter() {
                bigger.insert(r.clone());
            }
            prop_assert!(minimal_model(&base).is_subset(&minimal_model(&bigger)));
        }

        #[test]
        fn firing_order_is_irrelevant(base in arb_base(5, 10), seed in any::<u64>()) {
            let mut order: Vec<usize> = (0..base.len()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(naive_model(&base, &order), minimal_model(&base));
        }

        #[test]
        fn early_exit_agrees_with_model(base in arb_base(4, 10)) {
            prop_assert_eq!(is_consistent(&base), minimal_model(&base).is_consistent());
        }
    }
}
