//! Culpability reports over a case set, rendered as JSON or CSV.
//!
//! Rules are listed by descending value of the ranking measure, ties in
//! program order; `cases` are listed by case id, so the rendering does not
//! depend on the order cases arrived in.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::base::Rule;
use crate::error::{Error, Result};
use crate::measures::Registry;
use crate::multiset::{rank_rules, ranking_order, Analysis, Rank};
use crate::rational::{render, to_f64, Rational};

/// Which measures to report and how to rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportOptions {
    /// Registered names; inconsistency measures feed `overall`, culpability
    /// measures become per-rule columns.
    pub measures: Vec<String>,
    /// Culpability measure to rank by; defaults to the first one listed.
    pub rank_by: Option<String>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            measures: ["mi", "cd", "chash", "adj-shapley-mi"].map(String::from).to_vec(),
            rank_by: None,
        }
    }
}

pub const BLAME_UNASSIGNED: &str = "blame_unassigned";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CulpabilityReport {
    pub overall_measure: String,
    pub overall: Rational,
    /// Culpability measure names, in column order.
    pub columns: Vec<String>,
    pub rank_by: Option<String>,
    /// Sorted by rank.
    pub rules: Vec<RuleRow>,
    /// Sorted by case id.
    pub cases: Vec<(String, usize)>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleRow {
    pub rule: Rule,
    /// One per entry of `columns`.
    pub values: Vec<Rational>,
    pub rank: Rank,
}

pub fn build_report(analysis: &Analysis, registry: &Registry, options: &ReportOptions) -> Result<CulpabilityReport> {
    if options.measures.is_empty() {
        return Err(Error::InvalidConfig("at least one measure is required".into()));
    }
    let mut overall_measure = None;
    let mut columns = Vec::new();
    for name in &options.measures {
        if registry.is_inconsistency(name) {
            overall_measure.get_or_insert(name.clone());
        } else {
            registry.culpability(name)?;
            if !columns.contains(name) {
                columns.push(name.clone());
            }
        }
    }
    let overall_measure = overall_measure.unwrap_or_else(|| "mi".to_owned());
    let overall = analysis.sigma_measure(registry.inconsistency(&overall_measure)?.as_ref())?;

    let rank_by = match &options.rank_by {
        Some(name) if columns.contains(name) => Some(name.clone()),
        Some(name) => {
            return Err(Error::InvalidConfig(format!(
                "cannot rank by `{name}`: not among the requested culpability measures"
            )))
        }
        None => columns.first().cloned(),
    };

    let mut flags = Vec::new();
    let mut per_measure = Vec::with_capacity(columns.len());
    for name in &columns {
        let c = analysis.culpability(registry.culpability(name)?.as_ref())?;
        if c.blame_unassigned && !flags.iter().any(|f| f == BLAME_UNASSIGNED) {
            flags.push(BLAME_UNASSIGNED.to_owned());
        }
        per_measure.push(c.vector.values);
    }

    let rules = analysis.caseset().rules();
    let key: Vec<Rational> = match &rank_by {
        Some(name) => per_measure[columns.iter().position(|c| c == name).expect("rank_by is a column")].clone(),
        None => vec![Rational::default(); rules.len()],
    };
    let ranks = rank_rules(&key);
    let rows = ranking_order(&key)
        .into_iter()
        .map(|i| RuleRow {
            rule: rules[i].clone(),
            values: per_measure.iter().map(|v| v[i].clone()).collect(),
            rank: ranks[i],
        })
        .collect();

    let mut cases: Vec<(String, usize)> = analysis
        .caseset()
        .cases()
        .iter()
        .map(|c| c.case_id.clone())
        .zip(analysis.per_case_mi())
        .collect();
    cases.sort();

    Ok(CulpabilityReport {
        overall_measure,
        overall,
        columns,
        rank_by,
        rules: rows,
        cases,
        flags,
    })
}

impl CulpabilityReport {
    /// Pretty JSON with a trailing newline; `top` keeps only the first `k`
    /// rules.
    pub fn to_json(&self, top: Option<usize>) -> String {
        let mut s = serde_json::to_string_pretty(&JsonReport { report: self, top }).expect("report serializes");
        s.push('\n');
        s
    }

    /// `rule,rank,<m>,<m>_decimal,…`
    pub fn to_csv(&self, top: Option<usize>) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["rule".to_owned(), "rank".to_owned()];
        for c in &self.columns {
            header.push(c.clone());
            header.push(format!("{c}_decimal"));
        }
        w.write_record(&header).map_err(csv_error)?;
        for row in self.top_rules(top) {
            let mut record = vec![row.rule.to_string(), row.rank.to_string()];
            for v in &row.values {
                record.push(render(v));
                record.push(format!("{:.6}", to_f64(v)));
            }
            w.write_record(&record).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
    }

    pub fn top_rules(&self, top: Option<usize>) -> &[RuleRow] {
        &self.rules[..top.unwrap_or(usize::MAX).min(self.rules.len())]
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidConfig(e.to_string())
}

struct JsonReport<'a> {
    report: &'a CulpabilityReport,
    top: Option<usize>,
}

impl Serialize for JsonReport<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self.report;
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry(
            "overall",
            &serde_json::json!({ "measure": r.overall_measure, "value": render(&r.overall) }),
        )?;
        let rules: Vec<JsonRule> = r
            .top_rules(self.top)
            .iter()
            .map(|row| JsonRule {
                rule: row.rule.to_string(),
                values: Values(r.columns.iter().zip(&row.values).collect()),
                rank: row.rank,
            })
            .collect();
        map.serialize_entry("rules", &rules)?;
        let cases: Vec<serde_json::Value> = r
            .cases
            .iter()
            .map(|(id, n)| serde_json::json!({ "case_id": id, "i_mi": n }))
            .collect();
        map.serialize_entry("cases", &cases)?;
        map.serialize_entry("flags", &r.flags)?;
        map.end()
    }
}

#[derive(Serialize)]
struct JsonRule<'a> {
    rule: String,
    values: Values<'a>,
    rank: Rank,
}

/// Measure columns in report order.
struct Values<'a>(Vec<(&'a String, &'a Rational)>);

impl Serialize for Values<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, &render(v))?;
        }
        map.end()
    }
}
