//! Synthetic rule sets and case streams.
//!
//! The chain shape produces `n` rules `a_i -> -a_{i+1}` over atoms named
//! `a, b, …, z, aa, ab, …` and fills each case with every atom
//! independently, as a positive fact. Everything is driven by a seeded
//! ChaCha8 generator, so equal configurations give identical output on
//! every platform.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{Atom, Literal, Rule, RuleBase};
use crate::error::{Error, Result};
use crate::multiset::CaseSet;
use crate::parser::{CaseRecord, RuleProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shape {
    /// `a_i -> -a_{i+1}`, positive facts.
    #[default]
    Chain,
    /// Random bodies and heads of mixed polarity, consistent fact sets.
    Random,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Shape> {
        match s {
            "chain" => Ok(Shape::Chain),
            "random" => Ok(Shape::Random),
            _ => Err(Error::InvalidConfig(format!(
                "unknown shape `{s}` (expected chain or random)"
            ))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Chain => "chain",
            Shape::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub n_rules: usize,
    pub n_cases: usize,
    pub fact_probability: f64,
    pub seed: u64,
    pub shape: Shape,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_rules: 10,
            n_cases: 100,
            fact_probability: 0.3,
            seed: 0,
            shape: Shape::Chain,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fact_probability) {
            return Err(Error::InvalidConfig(format!(
                "fact probability {} is outside [0, 1]",
                self.fact_probability
            )));
        }
        Ok(())
    }
}

/// `0 → a`, `25 → z`, `26 → aa`, `27 → ab`, …
pub fn atom_name(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

fn atom(index: usize) -> Atom {
    Atom::named(&atom_name(index))
}

/// The chain `a -> -b, b -> -c, …` with `n_rules` rules.
pub fn generate_rules(n_rules: usize) -> RuleProgram {
    RuleProgram::from_rules((0..n_rules).map(|i| Rule::new([Literal::pos(atom(i))], Literal::neg(atom(i + 1)))))
}

/// Rules and cases for `config`. Case ids are `c1, c2, …`.
pub fn generate_cases(config: &GenConfig) -> Result<CaseSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (program, atoms) = match config.shape {
        Shape::Chain => {
            let program = generate_rules(config.n_rules);
            let atoms = program.atoms();
            (program, atoms)
        }
        Shape::Random => {
            let atoms: Vec<Atom> = (0..random_atom_count(config.n_rules)).map(atom).collect();
            (random_program(&mut rng, &atoms, config.n_rules), atoms)
        }
    };
    let mixed = config.shape == Shape::Random;
    let cases = (0..config.n_cases)
        .map(|i| {
            let facts = random_facts(&mut rng, &atoms, config.fact_probability, mixed);
            CaseRecord::new(format!("c{}", i + 1), facts)
        })
        .collect();
    Ok(CaseSet::new(program, cases))
}

fn random_atom_count(n_rules: usize) -> usize {
    (n_rules / 2 + 2).max(2)
}

/// Each atom independently with probability `p`; with `mixed`, each chosen
/// atom gets a random polarity. Never both polarities of one atom.
pub fn random_facts(rng: &mut impl Rng, atoms: &[Atom], p: f64, mixed: bool) -> Vec<Literal> {
    let mut out = Vec::new();
    for &a in atoms {
        if !rng.gen_bool(p) {
            continue;
        }
        out.push(if mixed && rng.gen_bool(0.5) {
            Literal::neg(a)
        } else {
            Literal::pos(a)
        });
    }
    out
}

fn random_literal(rng: &mut impl Rng, atoms: &[Atom]) -> Literal {
    let a = *atoms.choose(rng).expect("at least one atom");
    if rng.gen_bool(0.5) {
        Literal::neg(a)
    } else {
        Literal::pos(a)
    }
}

/// A proper rule with one or two body literals.
pub fn random_rule(rng: &mut impl Rng, atoms: &[Atom]) -> Rule {
    let body_len = rng.gen_range(1..=2);
    let body: Vec<Literal> = (0..body_len).map(|_| random_literal(rng, atoms)).collect();
    Rule::new(body, random_literal(rng, atoms))
}

/// Up to `n_rules` distinct random rules (fewer if duplicates are drawn).
pub fn random_program(rng: &mut impl Rng, atoms: &[Atom], n_rules: usize) -> RuleProgram {
    RuleProgram::from_rules((0..n_rules).map(|_| random_rule(rng, atoms)))
}

/// A random base of `n_elements` draws (duplicates collapse) over
/// `n_atoms` atoms, each draw a fact with probability `fact_ratio`. Facts
/// may contradict each other.
pub fn random_base(rng: &mut impl Rng, n_elements: usize, n_atoms: usize, fact_ratio: f64) -> RuleBase {
    let atoms: Vec<Atom> = (0..n_atoms.max(1)).map(atom).collect();
    (0..n_elements)
        .map(|_| {
            if rng.gen_bool(fact_ratio) {
                Rule::fact(random_literal(rng, &atoms))
            } else {
                random_rule(rng, &atoms)
            }
        })
        .collect()
}

/// Small random case sets for property checks: at most `max_rules` rules,
/// at most `max_cases` cases, fact sets consistent, random or chain shape.
pub fn random_caseset(rng: &mut impl Rng, max_rules: usize, max_cases: usize) -> CaseSet {
    let n_rules = rng.gen_range(0..=max_rules);
    let n_cases = rng.gen_range(0..=max_cases);
    let (program, atoms) = if rng.gen_bool(0.2) {
        let program = generate_rules(n_rules);
        let atoms = program.atoms();
        (program, atoms)
    } else {
        let atoms: Vec<Atom> = (0..rng.gen_range(2..=4)).map(atom).collect();
        (random_program(rng, &atoms, n_rules), atoms)
    };
    let p = rng.gen_range(0.2..0.8);
    let cases = (0..n_cases)
        .map(|i| CaseRecord::new(format!("c{}", i + 1), random_facts(rng, &atoms, p, true)))
        .collect();
    CaseSet::new(program, cases)
}

/// A rule over the atoms of `caseset` (plus one spare atom), for
/// extending a case set.
pub fn random_extra_rule(rng: &mut impl Rng, caseset: &CaseSet) -> Rule {
    let mut atoms = caseset.program().atoms();
    for c in caseset.cases() {
        atoms.extend(c.facts().iter().map(|l| l.atom));
    }
    atoms.sort();
    atoms.dedup();
    atoms.push(atom(atoms.len() + 26));
    random_rule(rng, &atoms)
}
