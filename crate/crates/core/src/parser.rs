//! Rule files and case streams.
//!
//! Rules file grammar:
//!
//! ```text
//! rule    := body "->" literal "."
//! body    := literal ("," literal)*
//! literal := ["-"] atom
//! atom    := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! Whitespace is insignificant and `%` starts a comment running to the end of
//! the line. `¬` is accepted in place of `-`. Facts are not allowed in a rules
//! file; they arrive per case, either as JSON lines
//! (`{"case_id": "c1", "facts": ["a", "-b"]}`) or as CSV with header
//! `case_id,facts` and `;`-separated literals.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::base::{is_valid_atom_name, Atom, Literal, Rule};
use crate::error::{Error, ParseError, Result};
use crate::multiset::CaseSet;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

/// The shared rule set of a case stream, in file order, without duplicates.
#[derive(Debug, Clone, Default)]
pub struct RuleProgram {
    rules: Vec<Rule>,
    spans: Vec<Span>,
    index: HashMap<Rule, usize>,
}

impl RuleProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a program from proper rules; duplicates collapse onto the first
    /// occurrence. Panics on facts.
    pub fn from_rules(rules: impl IntoIterator<Item = Rule>) -> Self {
        let mut p = RuleProgram::new();
        for r in rules {
            p.push(r, Span::default());
        }
        p
    }

    /// Appends `rule` unless already present. Returns whether it was new.
    pub fn push(&mut self, rule: Rule, span: Span) -> bool {
        assert!(!rule.is_fact(), "facts cannot be part of a rule program");
        if self.index.contains_key(&rule) {
            return false;
        }
        self.index.insert(rule.clone(), self.rules.len());
        self.rules.push(rule);
        self.spans.push(span);
        true
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn position(&self, rule: &Rule) -> Option<usize> {
        self.index.get(rule).copied()
    }

    /// Atoms mentioned anywhere in the program, in order of first appearance.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut seen = HashSet::new();
        self.rules
            .iter()
            .flat_map(|r| r.literals())
            .map(|l| l.atom)
            .filter(|a| seen.insert(*a))
            .collect()
    }

    /// One rule per line, in the same grammar [`parse_rules`] reads.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push_str(".\n");
        }
        out
    }
}

impl PartialEq for RuleProgram {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Scanner {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_trivia();
        self.chars.peek().copied()
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        self.skip_trivia();
        for expected in token.chars() {
            match self.chars.peek() {
                Some(&c) if c == expected => {
                    self.bump();
                }
                Some(&c) => return Err(self.error(format!("expected `{token}`, found `{c}`"))),
                None => return Err(self.error(format!("expected `{token}`, found end of input"))),
            }
        }
        Ok(())
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let negated = match self.peek() {
            Some('-') | Some('¬') => {
                // `->` is not a negation sign
                let mut look = self.chars.clone();
                look.next();
                if look.peek() == Some(&'>') {
                    return Err(self.error("expected a literal, found `->`"));
                }
                self.bump();
                true
            }
            _ => false,
        };
        self.skip_trivia();
        let mut name = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                name.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if name.is_empty() {
            return Err(match self.chars.peek() {
                Some(&c) => self.error(format!("expected an atom, found `{c}`")),
                None => self.error("expected an atom, found end of input"),
            });
        }
        if !is_valid_atom_name(&name) {
            return Err(self.error(format!("`{name}` is not a valid atom name")));
        }
        let atom = Atom::new(&name).expect("validated above");
        Ok(Literal { atom, negated })
    }

    fn rule(&mut self) -> Result<(Rule, Span), ParseError> {
        self.skip_trivia();
        let span = self.span();
        if self.chars.peek() == Some(&'-') {
            let mut look = self.chars.clone();
            look.next();
            if look.peek() == Some(&'>') {
                return Err(self.error("rule without a body; facts belong to cases"));
            }
        }
        let mut body = vec![self.literal()?];
        loop {
            match self.peek() {
                Some(',') => {
                    self.bump();
                    body.push(self.literal()?);
                }
                Some('.') => return Err(self.error("fact in rules file; facts belong to cases")),
                _ => break,
            }
        }
        self.expect("->")?;
        let head = self.literal()?;
        self.expect(".")?;
        Ok((Rule::new(body, head), span))
    }
}

/// Parses a rules file. Duplicate rules collapse to one.
pub fn parse_rules(text: &str) -> Result<RuleProgram, ParseError> {
    let mut scanner = Scanner::new(text);
    let mut program = RuleProgram::new();
    while scanner.peek().is_some() {
        let (rule, span) = scanner.rule()?;
        program.push(rule, span);
    }
    Ok(program)
}

/// One case of a stream: its id and its fact literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseRecord {
    pub case_id: String,
    facts: Vec<Literal>,
}

impl CaseRecord {
    pub fn new(case_id: impl Into<String>, facts: impl IntoIterator<Item = Literal>) -> Self {
        let mut facts: Vec<Literal> = facts.into_iter().collect();
        facts.sort();
        facts.dedup();
        CaseRecord {
            case_id: case_id.into(),
            facts,
        }
    }

    /// Sorted and duplicate-free.
    pub fn facts(&self) -> &[Literal] {
        &self.facts
    }

    /// The first atom asserted with both polarities, if any.
    pub fn clash(&self) -> Option<Atom> {
        self.facts
            .iter()
            .find(|l| !l.negated && self.facts.binary_search(&l.negation()).is_ok())
            .map(|l| l.atom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    Jsonl,
    Csv,
}

impl CaseFormat {
    /// `.jsonl`/`.ndjson`/`.json` or `.csv`.
    pub fn from_path(path: &Path) -> Option<CaseFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(CaseFormat::Jsonl),
            "csv" => Some(CaseFormat::Csv),
            _ => None,
        }
    }
}

impl FromStr for CaseFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CaseFormat::Jsonl),
            "csv" => Ok(CaseFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown case format `{other}`"))),
        }
    }
}

impl fmt::Display for CaseFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseFormat::Jsonl => "jsonl",
            CaseFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub allow_contradictory_facts: bool,
}

#[derive(Deserialize)]
struct JsonCase {
    case_id: String,
    facts: Vec<String>,
}

fn line_error(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column: 0,
        message: message.into(),
    }
}

fn parse_fact(text: &str, line: usize) -> Result<Literal, ParseError> {
    Literal::parse(text).ok_or_else(|| line_error(line, format!("invalid literal `{text}`")))
}

struct Collector {
    seen: HashSet<String>,
    cases: Vec<CaseRecord>,
    options: IngestOptions,
}

impl Collector {
    fn add(&mut self, record: CaseRecord, line: usize) -> Result<(), ParseError> {
        if !self.seen.insert(record.case_id.clone()) {
            return Err(line_error(line, format!("duplicate case_id `{}`", record.case_id)));
        }
        if !self.options.allow_contradictory_facts {
            if let Some(atom) = record.clash() {
                return Err(line_error(
                    line,
                    format!("case `{}` asserts both `{atom}` and `-{atom}`", record.case_id),
                ));
            }
        }
        self.cases.push(record);
        Ok(())
    }
}

/// Reads a case stream, preserving case order.
pub fn parse_cases(
    reader: impl BufRead,
    format: CaseFormat,
    options: IngestOptions,
) -> Result<Vec<CaseRecord>, ParseError> {
    let mut out = Collector {
        seen: HashSet::new(),
        cases: Vec::new(),
        options,
    };
    match format {
        CaseFormat::Jsonl => {
            for (i, line) in reader.lines().enumerate() {
                let n = i + 1;
                let line = line.map_err(|e| line_error(n, e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: JsonCase = serde_json::from_str(&line).map_err(|e| line_error(n, e.to_string()))?;
                let facts = raw
                    .facts
                    .iter()
                    .map(|f| parse_fact(f, n))
                    .collect::<Result<Vec<_>, _>>()?;
                out.add(CaseRecord::new(raw.case_id, facts), n)?;
            }
        }
        CaseFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .flexible(false)
                .from_reader(reader);
            let headers = rdr.headers().map_err(|e| line_error(1, e.to_string()))?;
            if headers.iter().collect::<Vec<_>>() != ["case_id", "facts"] {
                return Err(line_error(1, "expected header `case_id,facts`"));
            }
            for record in rdr.records() {
                let record = record.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    line_error(line, e.to_string())
                })?;
                let n = record.position().map_or(0, |p| p.line() as usize);
                let facts = record[1]
                    .split(';')
                    .map(str::trim)
                    .filter(|f| !f.is_empty())
                    .map(|f| parse_fact(f, n))
                    .collect::<Result<Vec<_>, _>>()?;
                out.add(CaseRecord::new(&record[0], facts), n)?;
            }
        }
    }
    Ok(out.cases)
}

/// Matches every fact set against the shared rules.
pub fn build_caseset(program: RuleProgram, cases: Vec<CaseRecord>) -> CaseSet {
    CaseSet::new(program, cases)
}

/// JSON line for one case, in the format [`parse_cases`] reads.
pub fn render_case_jsonl(case: &CaseRecord) -> String {
    let facts: Vec<String> = case.facts().iter().map(|l| l.to_string()).collect();
    serde_json::json!({ "case_id": case.case_id, "facts": facts }).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jsonl(text: &str) -> Result<Vec<CaseRecord>, ParseError> {
        parse_cases(text.as_bytes(), CaseFormat::Jsonl, IngestOptions::default())
    }

    #[test]
    fn single_rule() {
        let p = parse_rules("platinumCustomer -> creditWorthy.").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.rules()[0], Rule::parse("platinumCustomer -> creditWorthy"));
    }

    #[test]
    fn negated_head() {
        let p = parse_rules("a -> -b.").unwrap();
        assert!(p.rules()[0].head().negated);
        let p = parse_rules("a->¬b.").unwrap();
        assert_eq!(p.rules()[0], Rule::parse("a -> -b"));
    }

    #[test]
    fn duplicates_collapse() {
        let p = parse_rules("a, b -> c. a, b -> c.").unwrap();
        assert_eq!(p.len(), 1);
        let p = parse_rules("a, b -> c.\nb, a -> c.").unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn comments_and_spans() {
        let p = parse_rules("% header\n  a -> b. % trailing\n\nc,\n -d -> e.\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.spans()[0], Span { line: 2, column: 3 });
        assert_eq!(p.spans()[1], Span { line: 4, column: 1 });
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_rules("a -> b.\nc -> .").unwrap_err();
        assert_eq!((e.line, e.column), (2, 6));
        let e = parse_rules("a -> b").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_rules("a.").unwrap_err();
        assert!(e.message.contains("fact"), "{e}");
        let e = parse_rules("-> a.").unwrap_err();
        assert!(e.message.contains("body"), "{e}");
        let e = parse_rules("a, -> b.").unwrap_err();
        assert_eq!((e.line, e.column), (1, 4));
        let e = parse_rules("9a -> b.").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn jsonl_cases() {
        let cases =
            jsonl("{\"case_id\":\"c1\",\"facts\":[\"a\",\"c\"]}\n\n{\"case_id\":\"c2\",\"facts\":[\"-b\"]}\n").unwrap();
        assert_eq!(cases[0], CaseRecord::new("c1", [Literal::lit("a"), Literal::lit("c")]));
        assert_eq!(cases[1].facts(), &[Literal::lit("-b")]);
    }

    #[test]
    fn csv_cases() {
        let text = "case_id,facts\nc3,a;y\nc4,\n";
        let cases = parse_cases(text.as_bytes(), CaseFormat::Csv, IngestOptions::default()).unwrap();
        assert_eq!(cases[0], CaseRecord::new("c3", [Literal::lit("a"), Literal::lit("y")]));
        assert!(cases[1].facts().is_empty());
        let err = parse_cases("id,facts\n".as_bytes(), CaseFormat::Csv, IngestOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn contradictory_facts_rejected_unless_allowed() {
        let line = r#"{"case_id":"c1","facts":["a","-a"]}"#;
        let e = jsonl(line).unwrap_err();
        assert_eq!(e.line, 1);
        let allowed = parse_cases(
            line.as_bytes(),
            CaseFormat::Jsonl,
            IngestOptions {
                allow_contradictory_facts: true,
            },
        )
        .unwrap();
        assert_eq!(allowed[0].facts().len(), 2);
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        let e = jsonl("{\"case_id\":\"c1\",\"facts\":[]}\n{oops}\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = jsonl("{\"case_id\":\"c1\",\"facts\":[]}\n{\"case_id\":\"c1\",\"facts\":[]}\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("duplicate"));
        let e = jsonl("{\"case_id\":\"c1\",\"facts\":[\"1x\"]}").unwrap_err();
        assert!(e.message.contains("invalid literal"));
        let e = parse_cases(
            "case_id,facts\nc1,a\nc1,b\n".as_bytes(),
            CaseFormat::Csv,
            IngestOptions::default(),
        )
        .unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            CaseFormat::from_path(Path::new("x/cases.jsonl")),
            Some(CaseFormat::Jsonl)
        );
        assert_eq!(CaseFormat::from_path(Path::new("cases.CSV")), Some(CaseFormat::Csv));
        assert_eq!(CaseFormat::from_path(Path::new("cases.txt")), None);
    }

    fn arb_rule() -> impl Strategy<Value = Rule> {
        let lit = (0..6usize, any::<bool>()).prop_map(|(a, neg)| {
            let atom = Atom::named(&format!("v{a}"));
            Literal { atom, negated: neg }
        });
        (proptest::collection::vec(lit.clone(), 1..4), lit).prop_map(|(b, h)| Rule::new(b, h))
    }

    proptest! {
        #[test]
        fn render_reparses(rules in proptest::collection::vec(arb_rule(), 0..12)) {
            let program = RuleProgram::from_rules(rules);
            let again = parse_rules(&program.render()).unwrap();
            prop_assert_eq!(again, program);
        }
    }
}
