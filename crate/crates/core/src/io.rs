//! Dataset ingestion and rule-file serialization.
//!
//! Datasets hold one respondent per JSON line (`id`, `issues`, `techs`, or
//! `id`, `items` for single-pool data) or per CSV row with the same column
//! names and `;`-separated item lists.
//!
//! Rule files carry the antecedent and consequent (names joined by `;`),
//! their namespaces, the four counts, an optional comparison label, and for
//! each measure a full-precision score plus a three-decimal display value.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Measure, RuleFrequencies, ScoredRule};
use crate::model::{Item, ItemSet, Namespace, Rule, Transaction, TransactionDatabase};
use crate::ranking::{Comparison, Label, LabeledRule, RankedList};

pub const ITEM_SEPARATOR: char = ';';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "jsonl" | "ndjson" | "json" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub database: TransactionDatabase,
    /// Non-fatal findings such as repeated items within one record.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RecordKind {
    Split,
    Generic,
}

struct RawRecord {
    line: usize,
    id: String,
    kind: Option<RecordKind>,
    issues: Vec<String>,
    techs: Vec<String>,
    items: Vec<String>,
}

struct Loader<'a> {
    path: &'a Path,
    warnings: Vec<String>,
}

impl Loader<'_> {
    fn parse_err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn itemset(&mut self, rec: &RawRecord, ns: Namespace, names: &[String]) -> Result<ItemSet> {
        let mut items = Vec::with_capacity(names.len());
        let mut seen = HashSet::new();
        for raw in names {
            if raw.contains(ITEM_SEPARATOR) {
                return Err(self.parse_err(
                    rec.line,
                    format!("item name {raw:?} contains the reserved separator ';'"),
                ));
            }
            let item = Item::new(ns, raw).map_err(|_| {
                self.parse_err(
                    rec.line,
                    format!("record {:?} has an empty item name", rec.id),
                )
            })?;
            if !seen.insert(item.clone()) {
                let msg = format!(
                    "{}:{}: record {:?} lists {:?} more than once",
                    self.path.display(),
                    rec.line,
                    rec.id,
                    item.name()
                );
                log::warn!("{msg}");
                self.warnings.push(msg);
                continue;
            }
            items.push(item);
        }
        ItemSet::new(items)
    }

    fn build(mut self, records: Vec<RawRecord>) -> Result<LoadedDataset> {
        let mode = records
            .iter()
            .find_map(|r| r.kind)
            .unwrap_or(RecordKind::Split);
        let mut txs = Vec::with_capacity(records.len());
        let mut ids = HashSet::with_capacity(records.len());
        for rec in &records {
            if !ids.insert(rec.id.as_str()) {
                return Err(Error::DuplicateTransactionId(rec.id.clone()));
            }
            if rec.kind.is_some_and(|k| k != mode) {
                return Err(Error::MixedDatabaseModes(rec.id.clone()));
            }
            let t = match mode {
                RecordKind::Split => {
                    let issues = self.itemset(rec, Namespace::Issue, &rec.issues)?;
                    let techs = self.itemset(rec, Namespace::Tech, &rec.techs)?;
                    Transaction::split(rec.id.clone(), issues, techs)?
                }
                RecordKind::Generic => {
                    let items = self.itemset(rec, Namespace::Generic, &rec.items)?;
                    Transaction::generic(rec.id.clone(), items)?
                }
            };
            txs.push(t);
        }
        Ok(LoadedDataset {
            database: TransactionDatabase::new(txs)?,
            warnings: self.warnings,
        })
    }
}

fn string_list(
    loader: &Loader<'_>,
    line: usize,
    key: &str,
    v: &serde_json::Value,
) -> Result<Vec<String>> {
    let arr = v
        .as_array()
        .ok_or_else(|| loader.parse_err(line, format!("{key:?} must be an array of strings")))?;
    arr.iter()
        .map(|x| {
            x.as_str().map(str::to_string).ok_or_else(|| {
                loader.parse_err(line, format!("{key:?} must be an array of strings"))
            })
        })
        .collect()
}

fn parse_jsonl_dataset<R: BufRead>(reader: R, loader: &Loader<'_>) -> Result<Vec<RawRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(loader.path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| loader.parse_err(lineno, format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| loader.parse_err(lineno, "record must be a JSON object"))?;
        let mut rec = RawRecord {
            line: lineno,
            id: String::new(),
            kind: None,
            issues: Vec::new(),
            techs: Vec::new(),
            items: Vec::new(),
        };
        let mut has_id = false;
        for (key, v) in obj {
            match key.as_str() {
                "id" => {
                    rec.id = match v {
                        serde_json::Value::String(s) => s.trim().to_string(),
                        serde_json::Value::Number(n) => n.to_string(),
                        _ => {
                            return Err(
                                loader.parse_err(lineno, "\"id\" must be a string or number")
                            )
                        }
                    };
                    has_id = true;
                }
                "issues" | "techs" | "items" => {
                    let kind = if key == "items" {
                        RecordKind::Generic
                    } else {
                        RecordKind::Split
                    };
                    if rec.kind.is_some_and(|k| k != kind) {
                        return Err(loader.parse_err(
                            lineno,
                            "record mixes \"items\" with \"issues\"/\"techs\"",
                        ));
                    }
                    rec.kind = Some(kind);
                    let list = string_list(loader, lineno, key, v)?;
                    match key.as_str() {
                        "issues" => rec.issues = list,
                        "techs" => rec.techs = list,
                        _ => rec.items = list,
                    }
                }
                other => {
                    return Err(Error::UnknownNamespaceTag {
                        path: loader.path.to_path_buf(),
                        line: lineno,
                        tag: other.to_string(),
                    })
                }
            }
        }
        if !has_id || rec.id.is_empty() {
            return Err(loader.parse_err(lineno, "record has no \"id\""));
        }
        records.push(rec);
    }
    Ok(records)
}

fn split_items(field: &str) -> Vec<String> {
    field
        .split(ITEM_SEPARATOR)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_csv_dataset<R: Read>(reader: R, loader: &Loader<'_>) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut id_col = None;
    let mut cols: Vec<(usize, &str)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        match h {
            "id" => id_col = Some(i),
            "issues" | "techs" | "items" => cols.push((i, h)),
            other => {
                return Err(Error::UnknownNamespaceTag {
                    path: loader.path.to_path_buf(),
                    line: 1,
                    tag: other.to_string(),
                })
            }
        }
    }
    let id_col = id_col.ok_or_else(|| loader.parse_err(1, "missing \"id\" column"))?;
    let has_items = cols.iter().any(|(_, h)| *h == "items");
    if has_items && cols.len() > 1 {
        return Err(loader.parse_err(1, "header mixes \"items\" with \"issues\"/\"techs\""));
    }
    let kind = if has_items {
        RecordKind::Generic
    } else {
        RecordKind::Split
    };

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            loader.parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let id = row.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(loader.parse_err(line, "record has no id"));
        }
        let mut rec = RawRecord {
            line,
            id,
            kind: Some(kind),
            issues: Vec::new(),
            techs: Vec::new(),
            items: Vec::new(),
        };
        for &(i, h) in &cols {
            let list = split_items(row.get(i).unwrap_or(""));
            match h {
                "issues" => rec.issues = list,
                "techs" => rec.techs = list,
                _ => rec.items = list,
            }
        }
        records.push(rec);
    }
    Ok(records)
}

/// Parses a dataset from any reader; `origin` labels error messages.
pub fn parse_dataset<R: Read>(reader: R, format: Format, origin: &Path) -> Result<LoadedDataset> {
    let loader = Loader {
        path: origin,
        warnings: Vec::new(),
    };
    let records = match format {
        Format::Jsonl => parse_jsonl_dataset(BufReader::new(reader), &loader)?,
        Format::Csv => parse_csv_dataset(reader, &loader)?,
    };
    loader.build(records)
}

pub fn load_dataset(path: &Path, format: Format) -> Result<LoadedDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(file, format, path)
}

fn measures_in<'a>(rows: impl Iterator<Item = &'a ScoredRule>) -> Vec<Measure> {
    let set: BTreeSet<Measure> = rows.flat_map(|r| r.measures()).collect();
    set.into_iter().collect()
}

fn joined(set: &ItemSet) -> Result<String> {
    let mut out = String::new();
    for (i, item) in set.iter().enumerate() {
        if item.name().contains(ITEM_SEPARATOR) {
            return Err(Error::ReservedCharacter(item.name().to_string()));
        }
        if i > 0 {
            out.push(ITEM_SEPARATOR);
        }
        out.push_str(item.name());
    }
    Ok(out)
}

fn display3(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(Serialize, Deserialize)]
struct JsonRule {
    antecedent: Vec<String>,
    antecedent_namespace: Namespace,
    consequent: Vec<String>,
    consequent_namespace: Namespace,
    cf_x: u64,
    cf_y: u64,
    cf_xy: u64,
    n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    #[serde(default)]
    scores: BTreeMap<Measure, f64>,
    #[serde(default, skip_deserializing)]
    display: BTreeMap<Measure, String>,
}

fn write_rows<W: Write>(
    rows: &[(&ScoredRule, Option<Label>)],
    writer: W,
    format: Format,
) -> Result<()> {
    let with_label = rows.iter().any(|(_, l)| l.is_some());
    let measures = measures_in(rows.iter().map(|(r, _)| *r));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            let mut header: Vec<String> = [
                "antecedent",
                "consequent",
                "antecedent_namespace",
                "consequent_namespace",
                "cf_x",
                "cf_y",
                "cf_xy",
                "n",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            if with_label {
                header.push("label".into());
            }
            for m in &measures {
                header.push(m.as_str().to_string());
                header.push(format!("{}_3dp", m.as_str()));
            }
            w.write_record(&header)?;
            for (r, label) in rows {
                let mut rec = vec![
                    joined(r.rule.antecedent())?,
                    joined(r.rule.consequent())?,
                    namespace_of(r.rule.antecedent()).as_str().to_string(),
                    namespace_of(r.rule.consequent()).as_str().to_string(),
                    r.freq.cf_x().to_string(),
                    r.freq.cf_y().to_string(),
                    r.freq.cf_xy().to_string(),
                    r.freq.n().to_string(),
                ];
                if with_label {
                    rec.push(label.map(|l| l.as_str().to_string()).unwrap_or_default());
                }
                for &m in &measures {
                    match r.score(m) {
                        Some(v) => {
                            rec.push(v.to_string());
                            rec.push(display3(v));
                        }
                        None => {
                            rec.push(String::new());
                            rec.push(String::new());
                        }
                    }
                }
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io("<rules>", e))?;
        }
        Format::Jsonl => {
            let mut w = BufWriter::new(writer);
            for (r, label) in rows {
                for name in r.rule.antecedent().iter().chain(r.rule.consequent().iter()) {
                    if name.name().contains(ITEM_SEPARATOR) {
                        return Err(Error::ReservedCharacter(name.name().to_string()));
                    }
                }
                let rec = JsonRule {
                    antecedent: names(r.rule.antecedent()),
                    antecedent_namespace: namespace_of(r.rule.antecedent()),
                    consequent: names(r.rule.consequent()),
                    consequent_namespace: namespace_of(r.rule.consequent()),
                    cf_x: r.freq.cf_x(),
                    cf_y: r.freq.cf_y(),
                    cf_xy: r.freq.cf_xy(),
                    n: r.freq.n(),
                    label: *label,
                    scores: r.scores().clone(),
                    display: r.scores().iter().map(|(&m, &v)| (m, display3(v))).collect(),
                };
                serde_json::to_writer(&mut w, &rec)?;
                w.write_all(b"\n").map_err(|e| Error::io("<rules>", e))?;
            }
            w.flush().map_err(|e| Error::io("<rules>", e))?;
        }
    }
    Ok(())
}

fn names(set: &ItemSet) -> Vec<String> {
    set.iter().map(|i| i.name().to_string()).collect()
}

fn namespace_of(set: &ItemSet) -> Namespace {
    set.namespace().expect("rule sides are non-empty")
}

pub fn write_rules_to<W: Write>(rules: &[ScoredRule], writer: W, format: Format) -> Result<()> {
    let rows: Vec<_> = rules.iter().map(|r| (r, None)).collect();
    write_rows(&rows, writer, format)
}

pub fn write_comparison_to<W: Write>(cmp: &Comparison, writer: W, format: Format) -> Result<()> {
    let rows: Vec<_> = cmp.union.iter().map(|r| (&r.rule, Some(r.label))).collect();
    write_rows(&rows, writer, format)
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes scored rules in the given order.
pub fn write_rules(rules: &[ScoredRule], path: &Path, format: Format) -> Result<()> {
    write_rules_to(rules, create(path)?, format).map_err(|e| with_path(e, path))
}

pub fn write_ranked(list: &RankedList, path: &Path, format: Format) -> Result<()> {
    write_rules(list.entries(), path, format)
}

pub fn write_comparison(cmp: &Comparison, path: &Path, format: Format) -> Result<()> {
    write_comparison_to(cmp, create(path)?, format).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

fn build_rule(
    ante: &[String],
    ante_ns: Namespace,
    cons: &[String],
    cons_ns: Namespace,
) -> Result<Rule> {
    Rule::new(
        ItemSet::from_names(ante_ns, ante)?,
        ItemSet::from_names(cons_ns, cons)?,
    )
}

/// A rule record read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRecord {
    pub rule: ScoredRule,
    pub label: Option<Label>,
}

fn read_csv_rules<R: Read>(reader: R, origin: &Path) -> Result<Vec<RuleRecord>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = [
        "antecedent",
        "consequent",
        "antecedent_namespace",
        "consequent_namespace",
        "cf_x",
        "cf_y",
        "cf_xy",
        "n",
    ];
    let mut idx = [0usize; 8];
    for (slot, name) in idx.iter_mut().zip(required) {
        *slot = col(name).ok_or_else(|| parse_err(1, format!("missing column {name:?}")))?;
    }
    let label_col = col("label");
    let mut measure_cols = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if required.contains(&h) || h == "label" {
            continue;
        }
        if let Some(base) = h.strip_suffix("_3dp") {
            Measure::from_str(base).map_err(|_| parse_err(1, format!("unknown column {h:?}")))?;
            continue;
        }
        let m = Measure::from_str(h).map_err(|_| parse_err(1, format!("unknown column {h:?}")))?;
        measure_cols.push((i, m));
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| row.get(i).unwrap_or("");
        let count = |i: usize| -> Result<u64> {
            get(i)
                .parse()
                .map_err(|_| parse_err(line, format!("bad count {:?}", get(i))))
        };
        let ns = |i: usize| -> Result<Namespace> { get(i).parse() };
        let rule = build_rule(
            &split_items(get(idx[0])),
            ns(idx[2])?,
            &split_items(get(idx[1])),
            ns(idx[3])?,
        )
        .map_err(|e| parse_err(line, e.to_string()))?;
        let freq = RuleFrequencies::new(
            count(idx[4])?,
            count(idx[5])?,
            count(idx[6])?,
            count(idx[7])?,
        )
        .map_err(|e| parse_err(line, e.to_string()))?;
        let mut scored = ScoredRule::unscored(rule, freq);
        for &(i, m) in &measure_cols {
            let cell = get(i);
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("bad {m} score {cell:?}")))?;
            scored
                .set_score(m, v)
                .map_err(|e| parse_err(line, e.to_string()))?;
        }
        let label = match label_col.map(get) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse()
                    .map_err(|e: Error| parse_err(line, e.to_string()))?,
            ),
        };
        out.push(RuleRecord {
            rule: scored,
            label,
        });
    }
    Ok(out)
}

fn read_jsonl_rules<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<RuleRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno,
            message,
        };
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRule = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let rule = build_rule(
            &rec.antecedent,
            rec.antecedent_namespace,
            &rec.consequent,
            rec.consequent_namespace,
        )
        .map_err(|e| parse_err(e.to_string()))?;
        let freq = RuleFrequencies::new(rec.cf_x, rec.cf_y, rec.cf_xy, rec.n)
            .map_err(|e| parse_err(e.to_string()))?;
        let mut scored = ScoredRule::unscored(rule, freq);
        for (m, v) in rec.scores {
            scored
                .set_score(m, v)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        out.push(RuleRecord {
            rule: scored,
            label: rec.label,
        });
    }
    Ok(out)
}

pub fn parse_rules<R: Read>(reader: R, format: Format, origin: &Path) -> Result<Vec<RuleRecord>> {
    match format {
        Format::Csv => read_csv_rules(reader, origin),
        Format::Jsonl => read_jsonl_rules(BufReader::new(reader), origin),
    }
}

pub fn read_rules(path: &Path, format: Format) -> Result<Vec<RuleRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_rules(file, format, path)
}

/// Reads a rule file as a ranked list under `measure`, keeping file order.
pub fn read_ranked(path: &Path, format: Format, measure: Measure) -> Result<RankedList> {
    let rules = read_rules(path, format)?
        .into_iter()
        .map(|r| r.rule)
        .collect();
    RankedList::from_ordered(measure, rules)
}

/// Rebuilds labeled rules from a comparison file.
pub fn read_comparison(path: &Path, format: Format) -> Result<Vec<LabeledRule>> {
    read_rules(path, format)?
        .into_iter()
        .map(|r| {
            let label = r.label.ok_or_else(|| Error::Parse {
                path: PathBuf::from(path),
                line: 0,
                message: format!("rule {} has no label", r.rule.rule),
            })?;
            Ok(LabeledRule {
                rule: r.rule,
                label,
            })
        })
        .collect()
}
