//! Inconsistency measures, culpability measures and the name registry.
//!
//! All values are exact [`Rational`]s. Measures are evaluated against an
//! [`AnalyzedBase`], which carries MI(B) so that several measures over the
//! same base share one enumeration.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::base::{ElementId, RuleBase};
use crate::error::{Error, Result};
use crate::mi::{enumerate_mi_with, Budget, MiCollection};
use crate::rational::{int, Rational};
use crate::shapley;

/// A rule base together with its minimal inconsistent subsets.
#[derive(Debug, Clone)]
pub struct AnalyzedBase {
    pub base: RuleBase,
    pub mis: MiCollection,
    pub budget: Budget,
}

impl AnalyzedBase {
    pub fn new(base: RuleBase, budget: &Budget) -> Result<Self> {
        let mis = enumerate_mi_with(&base, budget)?;
        Ok(AnalyzedBase {
            base,
            mis,
            budget: *budget,
        })
    }

    pub fn with_default_budget(base: RuleBase) -> Result<Self> {
        Self::new(base, &Budget::default())
    }

    fn check(&self, id: ElementId) -> Result<()> {
        if self.base.contains_id(id) {
            Ok(())
        } else {
            Err(Error::UnknownElement(id))
        }
    }
}

/// Single-base properties a measure may declare. Adjusted Shapley values
/// require all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MeasureProperties {
    /// `I(B) = 0` iff `B` is consistent.
    pub consistency: bool,
    /// `B ⊆ B'` implies `I(B) <= I(B')`.
    pub monotony: bool,
    /// Removing a free formula leaves the value unchanged.
    pub free_formula_independence: bool,
}

impl MeasureProperties {
    pub const ALL: MeasureProperties = MeasureProperties {
        consistency: true,
        monotony: true,
        free_formula_independence: true,
    };
}

/// Values of an inconsistency measure on every coalition of a player list,
/// indexed by bitmask over the players.
#[derive(Debug, Clone)]
pub enum CoalitionValues {
    Counts(Vec<u32>),
    Exact(Vec<Rational>),
}

/// A nonnegative function on rule bases.
pub trait InconsistencyMeasure: Send + Sync {
    fn name(&self) -> &str;

    fn properties(&self) -> MeasureProperties;

    fn eval(&self, base: &AnalyzedBase) -> Result<Rational>;

    /// The measure on every sub-base drawn from `players`. The default builds
    /// and analyzes each sub-base; implementations that can read the values
    /// off MI(B) should override it.
    fn coalition_values(&self, base: &AnalyzedBase, players: &[ElementId]) -> Result<CoalitionValues> {
        let n = players.len();
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0u64..1 << n {
            let ids: Vec<ElementId> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| players[i]).collect();
            let (sub, _) = base.base.restrict(&ids);
            out.push(self.eval(&AnalyzedBase::new(sub, &base.budget)?)?);
        }
        Ok(CoalitionValues::Exact(out))
    }
}

/// `I_MI`: the number of minimal inconsistent subsets.
#[derive(Debug, Clone, Copy, Default)]
pub struct MiCount;

impl InconsistencyMeasure for MiCount {
    fn name(&self) -> &str {
        "mi"
    }

    fn properties(&self) -> MeasureProperties {
        MeasureProperties::ALL
    }

    fn eval(&self, base: &AnalyzedBase) -> Result<Rational> {
        Ok(int(base.mis.len() as i64))
    }

    /// MI(B') of a sub-base is exactly the MIs of B contained in B', so the
    /// counts follow from a subset-sum over the MI masks.
    fn coalition_values(&self, base: &AnalyzedBase, players: &[ElementId]) -> Result<CoalitionValues> {
        let n = players.len();
        let mut bit = vec![None; base.base.len()];
        for (i, id) in players.iter().enumerate() {
            bit[id.index()] = Some(i);
        }
        let mut counts = vec![0u32; 1 << n];
        'mis: for m in base.mis.iter() {
            let mut mask = 0usize;
            for id in m.ids() {
                match bit[id.index()] {
                    Some(i) => mask |= 1 << i,
                    None => continue 'mis,
                }
            }
            counts[mask] += 1;
        }
        for i in 0..n {
            for mask in 0..counts.len() {
                if mask & (1 << i) != 0 {
                    counts[mask] += counts[mask ^ (1 << i)];
                }
            }
        }
        Ok(CoalitionValues::Counts(counts))
    }
}

/// Per-element values produced by a culpability measure on one base,
/// indexed by element id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffVector {
    pub values: Vec<Rational>,
    /// Some coalition had blame on facts but no non-free rule to shift it to.
    pub blame_unassigned: bool,
}

impl PayoffVector {
    pub fn zeros(len: usize) -> Self {
        PayoffVector {
            values: vec![Rational::zero(); len],
            blame_unassigned: false,
        }
    }

    pub fn get(&self, id: ElementId) -> &Rational {
        &self.values[id.index()]
    }

    pub fn total(&self) -> Rational {
        self.values.iter().sum()
    }
}

/// A nonnegative function on (rule base, element).
pub trait CulpabilityMeasure: Send + Sync {
    fn name(&self) -> &str;

    /// Elements in no MI receive 0.
    fn satisfies_min(&self) -> bool;

    /// Values for every element of the base.
    fn evaluate(&self, base: &AnalyzedBase) -> Result<PayoffVector>;

    fn eval(&self, base: &AnalyzedBase, id: ElementId) -> Result<Rational> {
        base.check(id)?;
        Ok(self.evaluate(base)?.values.swap_remove(id.index()))
    }
}

/// `C_D`: 1 for elements in some MI, else 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct Drastic;

impl CulpabilityMeasure for Drastic {
    fn name(&self) -> &str {
        "cd"
    }

    fn satisfies_min(&self) -> bool {
        true
    }

    fn evaluate(&self, base: &AnalyzedBase) -> Result<PayoffVector> {
        Ok(PayoffVector {
            values: base
                .mis
                .participation()
                .into_iter()
                .map(|c| int(i64::from(c > 0)))
                .collect(),
            blame_unassigned: false,
        })
    }
}

/// `C_#`: the number of MIs containing the element.
#[derive(Debug, Clone, Copy, Default)]
pub struct MiParticipation;

impl CulpabilityMeasure for MiParticipation {
    fn name(&self) -> &str {
        "chash"
    }

    fn satisfies_min(&self) -> bool {
        true
    }

    fn evaluate(&self, base: &AnalyzedBase) -> Result<PayoffVector> {
        Ok(PayoffVector {
            values: base.mis.participation().into_iter().map(|c| int(c as i64)).collect(),
            blame_unassigned: false,
        })
    }
}

/// Shapley inconsistency values of an inconsistency measure.
///
/// For `I_MI` the closed form `Σ_{M ∋ α} 1/|M|` is used, which has no size
/// limit; other measures go through exact coalition enumeration.
#[derive(Clone)]
pub struct ShapleyValue {
    name: String,
    measure: Arc<dyn InconsistencyMeasure>,
}

impl ShapleyValue {
    pub fn new(measure: Arc<dyn InconsistencyMeasure>) -> Self {
        ShapleyValue {
            name: format!("shapley-{}", measure.name()),
            measure,
        }
    }
}

impl CulpabilityMeasure for ShapleyValue {
    fn name(&self) -> &str {
        &self.name
    }

    fn satisfies_min(&self) -> bool {
        let p = self.measure.properties();
        p.consistency && p.free_formula_independence
    }

    fn evaluate(&self, base: &AnalyzedBase) -> Result<PayoffVector> {
        if self.measure.name() == MiCount.name() {
            Ok(shapley::shapley_mi_closedform_analyzed(base))
        } else {
            shapley::shapley_analyzed(base, self.measure.as_ref(), shapley::Enumeration::Reduced)
        }
    }
}

/// Adjusted Shapley inconsistency values: facts get 0 and their share moves
/// to the non-free rules of each coalition.
#[derive(Clone)]
pub struct AdjustedShapleyValue {
    name: String,
    measure: Arc<dyn InconsistencyMeasure>,
}

impl AdjustedShapleyValue {
    /// Fails unless `measure` declares consistency', monotony' and
    /// free-formula-independence'.
    pub fn new(measure: Arc<dyn InconsistencyMeasure>) -> Result<Self> {
        shapley::require_properties(measure.as_ref())?;
        Ok(AdjustedShapleyValue {
            name: format!("adj-shapley-{}", measure.name()),
            measure,
        })
    }
}

impl CulpabilityMeasure for AdjustedShapleyValue {
    fn name(&self) -> &str {
        &self.name
    }

    fn satisfies_min(&self) -> bool {
        true
    }

    fn evaluate(&self, base: &AnalyzedBase) -> Result<PayoffVector> {
        shapley::adjusted_shapley_analyzed(base, self.measure.as_ref(), shapley::Enumeration::Reduced)
    }
}

/// Measures addressable by name.
#[derive(Clone)]
pub struct Registry {
    inconsistency: Vec<Arc<dyn InconsistencyMeasure>>,
    culpability: Vec<Arc<dyn CulpabilityMeasure>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("inconsistency", &self.inconsistency_names())
            .field("culpability", &self.culpability_names())
            .finish()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::standard()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            inconsistency: Vec::new(),
            culpability: Vec::new(),
        }
    }

    /// `mi`, `cd`, `chash`, `shapley-mi`, `adj-shapley-mi`.
    pub fn standard() -> Self {
        let mut r = Registry::empty();
        r.culpability.push(Arc::new(Drastic));
        r.culpability.push(Arc::new(MiParticipation));
        r.register_inconsistency(Arc::new(MiCount))
            .expect("I_MI declares every property");
        r
    }

    /// Registers `measure` as `<name>` and its Shapley values as
    /// `shapley-<name>`; `adj-shapley-<name>` is added only when the measure
    /// declares all three primed properties.
    pub fn register_inconsistency(&mut self, measure: Arc<dyn InconsistencyMeasure>) -> Result<()> {
        self.ensure_unused(measure.name())?;
        self.culpability.push(Arc::new(ShapleyValue::new(measure.clone())));
        if let Ok(adj) = AdjustedShapleyValue::new(measure.clone()) {
            self.culpability.push(Arc::new(adj));
        }
        self.inconsistency.push(measure);
        Ok(())
    }

    pub fn register_culpability(&mut self, measure: Arc<dyn CulpabilityMeasure>) -> Result<()> {
        self.ensure_unused(measure.name())?;
        self.culpability.push(measure);
        Ok(())
    }

    fn ensure_unused(&self, name: &str) -> Result<()> {
        if self.inconsistency_names().contains(&name) || self.culpability_names().contains(&name) {
            return Err(Error::InvalidConfig(format!("measure `{name}` already registered")));
        }
        Ok(())
    }

    pub fn inconsistency(&self, name: &str) -> Result<Arc<dyn InconsistencyMeasure>> {
        self.inconsistency
            .iter()
            .find(|m| m.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownMeasure(name.to_owned()))
    }

    pub fn culpability(&self, name: &str) -> Result<Arc<dyn CulpabilityMeasure>> {
        self.culpability
            .iter()
            .find(|m| m.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownMeasure(name.to_owned()))
    }

    pub fn is_inconsistency(&self, name: &str) -> bool {
        self.inconsistency.iter().any(|m| m.name() == name)
    }

    pub fn inconsistency_names(&self) -> Vec<&str> {
        self.inconsistency.iter().map(|m| m.name()).collect()
    }

    pub fn culpability_names(&self) -> Vec<&str> {
        self.culpability.iter().map(|m| m.name()).collect()
    }
}

/// `I_MI(B)`.
pub fn i_mi(base: &RuleBase) -> Result<Rational> {
    MiCount.eval(&AnalyzedBase::with_default_budget(base.clone())?)
}

/// `C_D(B, e)`.
pub fn c_d(base: &RuleBase, id: ElementId) -> Result<Rational> {
    Drastic.eval(&AnalyzedBase::with_default_budget(base.clone())?, id)
}

/// `C_#(B, e)`.
pub fn c_hash(base: &RuleBase, id: ElementId) -> Result<Rational> {
    MiParticipation.eval(&AnalyzedBase::with_default_budget(base.clone())?, id)
}

/// Elements occurring in no MI, sorted.
pub fn free_formulas(base: &RuleBase) -> Result<Vec<ElementId>> {
    let analyzed = AnalyzedBase::with_default_budget(base.clone())?;
    Ok(free_in(&analyzed))
}

pub(crate) fn free_in(base: &AnalyzedBase) -> Vec<ElementId> {
    base.mis
        .participation()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| ElementId(i as u32))
        .collect()
}
