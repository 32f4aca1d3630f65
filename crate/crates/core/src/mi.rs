//! Minimal inconsistent subsets.
//!
//! [`enumerate_mi`] tracks, for every derivable literal, the family of its
//! minimal supports: the ⊆-minimal sets of elements from which the literal
//! can be derived. Every MI is the union of a minimal support of some `a`
//! and a minimal support of `-a`, so minimizing all such unions yields
//! exactly MI(B). Survivors are re-checked with [`is_mi`].

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::base::{ElementId, RuleBase};
use crate::error::{BudgetKind, Error, Result};
use crate::model::Propagator;

/// Largest base accepted by [`enumerate_mi_bruteforce`].
pub const BRUTE_FORCE_CAP: usize = 20;

/// Resource caps for enumeration. Exceeding any of them is an error, never a
/// silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_mis: usize,
    pub max_supports_per_literal: usize,
    /// Largest player set for exact Shapley enumeration.
    pub max_players: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_mis: 1_000_000,
            max_supports_per_literal: 10_000,
            max_players: 24,
        }
    }
}

/// One minimal inconsistent subset, as sorted element ids.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MiSubset(Vec<ElementId>);

impl MiSubset {
    pub fn new(mut ids: Vec<ElementId>) -> Self {
        ids.sort();
        ids.dedup();
        MiSubset(ids)
    }

    pub fn ids(&self) -> &[ElementId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_subset(&self, other: &MiSubset) -> bool {
        self.0.iter().all(|&id| other.contains(id))
    }
}

impl fmt::Debug for MiSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter().map(|id| id.0)).finish()
    }
}

/// MI(B) of one base. Subsets are kept in a canonical order (by size, then
/// ids) so that two collections are equal iff they hold the same sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MiCollection {
    subsets: Vec<MiSubset>,
    base_len: usize,
}

impl MiCollection {
    pub fn new(mut subsets: Vec<MiSubset>, base_len: usize) -> Self {
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        subsets.dedup();
        MiCollection { subsets, base_len }
    }

    pub fn subsets(&self) -> &[MiSubset] {
        &self.subsets
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Size of the analyzed base.
    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn iter(&self) -> impl Iterator<Item = &MiSubset> + '_ {
        self.subsets.iter()
    }

    /// Number of MIs containing `id`.
    pub fn count_containing(&self, id: ElementId) -> usize {
        self.subsets.iter().filter(|m| m.contains(id)).count()
    }

    /// Per-element participation counts, indexed by element id.
    pub fn participation(&self) -> Vec<usize> {
        let mut counts = vec![0; self.base_len];
        for m in &self.subsets {
            for id in m.ids() {
                counts[id.index()] += 1;
            }
        }
        counts
    }

    /// Elements occurring in at least one MI, sorted.
    pub fn active_elements(&self) -> Vec<ElementId> {
        self.participation()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| ElementId(i as u32))
            .collect()
    }
}

fn check_ids(base: &RuleBase, ids: &[ElementId]) -> Result<()> {
    match ids.iter().find(|id| !base.contains_id(**id)) {
        Some(&id) => Err(Error::UnknownElement(id)),
        None => Ok(()),
    }
}

fn mi_with(prop: &Propagator, members: &FixedBitSet) -> bool {
    if prop.consistent(|e| members.contains(e)) {
        return false;
    }
    members
        .ones()
        .all(|drop| prop.consistent(|e| e != drop && members.contains(e)))
}

/// Whether `candidate` is a minimal inconsistent subset of `base`: it is
/// inconsistent and removing any single element makes it consistent.
pub fn is_mi(base: &RuleBase, candidate: &[ElementId]) -> Result<bool> {
    check_ids(base, candidate)?;
    let prop = Propagator::new(base);
    let mut members = FixedBitSet::with_capacity(base.len());
    for id in candidate {
        members.insert(id.index());
    }
    Ok(mi_with(&prop, &members))
}

/// Adds `set` to an antichain unless a subset is already present; drops
/// members that are supersets of it. Returns whether the family changed.
fn insert_minimal(family: &mut Vec<FixedBitSet>, set: FixedBitSet) -> bool {
    if family.iter().any(|s| s.is_subset(&set)) {
        return false;
    }
    family.retain(|s| !set.is_subset(s));
    family.push(set);
    true
}

fn to_subset(set: &FixedBitSet) -> MiSubset {
    MiSubset::new(set.ones().map(|i| ElementId(i as u32)).collect())
}

/// Minimal support families for every literal of the compiled base.
fn minimal_supports(prop: &Propagator, budget: &Budget) -> Result<Vec<Vec<FixedBitSet>>> {
    let n = prop.num_elements();
    let cap = budget.max_supports_per_literal;
    let mut supports: Vec<Vec<FixedBitSet>> = vec![Vec::new(); prop.num_literals()];
    let mut queued = vec![false; n];
    let mut queue: Vec<usize> = Vec::new();
    for e in 0..n {
        if prop.body(e).is_empty() {
            queued[e] = true;
            queue.push(e);
        }
    }

    while let Some(e) = queue.pop() {
        queued[e] = false;
        let mut seed = FixedBitSet::with_capacity(n);
        seed.insert(e);
        let mut partial = vec![seed];
        for &l in prop.body(e) {
            let options = &supports[l as usize];
            if options.is_empty() {
                partial.clear();
                break;
            }
            let mut next: Vec<FixedBitSet> = Vec::new();
            for p in &partial {
                for s in options {
                    let mut u = p.clone();
                    u.union_with(s);
                    insert_minimal(&mut next, u);
                    if next.len() > cap {
                        return Err(Error::budget(BudgetKind::SupportsPerLiteral, cap));
                    }
                }
            }
            partial = next;
        }

        let head = prop.head(e);
        let mut changed = false;
        for s in partial {
            changed |= insert_minimal(&mut supports[head], s);
        }
        if supports[head].len() > cap {
            return Err(Error::budget(BudgetKind::SupportsPerLiteral, cap));
        }
        if changed {
            for &w in prop.watchers(head) {
                let w = w as usize;
                if !queued[w] {
                    queued[w] = true;
                    queue.push(w);
                }
            }
        }
    }
    Ok(supports)
}

/// MI(B) with the default [`Budget`].
pub fn enumerate_mi(base: &RuleBase) -> Result<MiCollection> {
    enumerate_mi_with(base, &Budget::default())
}

pub fn enumerate_mi_with(base: &RuleBase, budget: &Budget) -> Result<MiCollection> {
    let prop = Propagator::new(base);
    if prop.consistent(|_| true) {
        return Ok(MiCollection::new(Vec::new(), base.len()));
    }
    let supports = minimal_supports(&prop, budget)?;

    let mut candidates: Vec<FixedBitSet> = Vec::new();
    for l in 0..prop.num_literals() {
        if prop.literal(l).negated {
            continue;
        }
        let Some(c) = prop.complement(l) else {
            continue;
        };
        for s in &supports[l] {
            for t in &supports[c] {
                let mut u = s.clone();
                u.union_with(t);
                insert_minimal(&mut candidates, u);
                if candidates.len() > budget.max_mis {
                    return Err(Error::budget(BudgetKind::MinimalInconsistentSubsets, budget.max_mis));
                }
            }
        }
    }

    let subsets = candidates
        .iter()
        .filter(|c| {
            let ok = mi_with(&prop, c);
            debug_assert!(ok, "support union {:?} is not minimal inconsistent", to_subset(c));
            ok
        })
        .map(to_subset)
        .collect();
    Ok(MiCollection::new(subsets, base.len()))
}

/// Reference enumeration over all 2^|B| subsets. Limited to
/// [`BRUTE_FORCE_CAP`] elements.
pub fn enumerate_mi_bruteforce(base: &RuleBase) -> Result<MiCollection> {
    let n = base.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::OracleCapExceeded {
            cap: BRUTE_FORCE_CAP,
            size: n,
        });
    }
    let prop = Propagator::new(base);
    let inconsistent: Vec<bool> = (0u32..1 << n)
        .map(|mask| !prop.consistent(|e| mask & (1 << e) != 0))
        .collect();
    let subsets = (0u32..1 << n)
        .filter(|&mask| {
            inconsistent[mask as usize]
                && (0..n)
                    .filter(|b| mask & (1 << b) != 0)
                    .all(|b| !inconsistent[(mask ^ (1 << b)) as usize])
        })
        .map(|mask| MiSubset::new((0..n as u32).filter(|b| mask & (1 << b) != 0).map(ElementId).collect()))
        .collect();
    Ok(MiCollection::new(subsets, n))
}

/// Whether `id` occurs in at least one MI of `base`.
pub fn participates(base: &RuleBase, id: ElementId) -> Result<bool> {
    check_ids(base, &[id])?;
    Ok(enumerate_mi(base)?.iter().any(|m| m.contains(id)))
}
