//! Items, itemsets, transactions and rules.
//!
//! Items live in one of three namespaces. Questionnaire data uses `issue`
//! for the antecedent side and `tech` for the consequent side; `generic`
//! carries single-pool databases where any disjoint split is a legal rule.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Namespace {
    Issue,
    Tech,
    Generic,
}

impl Namespace {
    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Issue => "issue",
            Namespace::Tech => "tech",
            Namespace::Generic => "generic",
        }
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Namespace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "issue" => Ok(Namespace::Issue),
            "tech" => Ok(Namespace::Tech),
            "generic" => Ok(Namespace::Generic),
            other => Err(Error::UnknownNamespace(other.to_string())),
        }
    }
}

/// A single answer choice. Names are trimmed and compared case-sensitively.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item {
    namespace: Namespace,
    name: Arc<str>,
}

impl Item {
    pub fn new(namespace: Namespace, name: &str) -> Result<Self> {
        let trimmed = name.trim();
        if trimmed.is_empty() {
            return Err(Error::EmptyItemName);
        }
        Ok(Item {
            namespace,
            name: Arc::from(trimmed),
        })
    }

    pub fn namespace(&self) -> Namespace {
        self.namespace
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A set of items from one namespace, kept sorted and deduplicated.
///
/// The derived ordering compares the sorted member sequences
/// lexicographically, which is the canonical order used for output and
/// tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ItemSet {
    items: Vec<Item>,
}

impl ItemSet {
    pub fn empty() -> Self {
        ItemSet { items: Vec::new() }
    }

    pub fn new<I: IntoIterator<Item = Item>>(items: I) -> Result<Self> {
        let mut items: Vec<Item> = items.into_iter().collect();
        items.sort();
        items.dedup();
        if let (Some(first), Some(last)) = (items.first(), items.last()) {
            // Sorting groups namespaces, so first and last disagree iff mixed.
            if first.namespace != last.namespace {
                return Err(Error::MixedNamespaces(
                    first.namespace.as_str(),
                    last.namespace.as_str(),
                ));
            }
        }
        Ok(ItemSet { items })
    }

    pub fn from_names<S: AsRef<str>>(namespace: Namespace, names: &[S]) -> Result<Self> {
        let items = names
            .iter()
            .map(|n| Item::new(namespace, n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        ItemSet::new(items)
    }

    /// Builds a set from members that are already sorted, unique and share
    /// a namespace (e.g. a subsequence of another set).
    pub(crate) fn from_sorted_unchecked(items: Vec<Item>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        ItemSet { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Item> {
        self.items.iter()
    }

    pub fn namespace(&self) -> Option<Namespace> {
        self.items.first().map(Item::namespace)
    }

    pub fn contains(&self, item: &Item) -> bool {
        self.items.binary_search(item).is_ok()
    }

    pub fn is_subset(&self, other: &ItemSet) -> bool {
        // Both sides are sorted, so a single merge walk suffices.
        let mut rest = other.items.iter();
        'outer: for item in &self.items {
            for candidate in rest.by_ref() {
                if candidate == item {
                    continue 'outer;
                }
                if candidate > item {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn is_disjoint(&self, other: &ItemSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.items.len() && j < other.items.len() {
            match self.items[i].cmp(&other.items[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn names(&self) -> Vec<&str> {
        self.items.iter().map(Item::name).collect()
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(item.name())?;
        }
        f.write_str("}")
    }
}

fn escape_into(out: &mut String, name: &str) {
    for c in name.chars() {
        if c == '\\' || c == ';' {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Stable text key for a non-empty itemset: `<namespace>:<name>;<name>...`
/// with `\` and `;` inside names escaped by a backslash.
pub fn canonical_encode(set: &ItemSet) -> Result<String> {
    let ns = set.namespace().ok_or(Error::EmptyItemSet)?;
    let mut key = String::with_capacity(16 * set.len());
    key.push_str(ns.as_str());
    key.push(':');
    for (i, item) in set.iter().enumerate() {
        if i > 0 {
            key.push(';');
        }
        escape_into(&mut key, item.name());
    }
    Ok(key)
}

/// Inverse of [`canonical_encode`].
pub fn canonical_decode(key: &str) -> Result<ItemSet> {
    let malformed = || Error::MalformedKey(key.to_string());
    let (ns, body) = key.split_once(':').ok_or_else(malformed)?;
    let ns: Namespace = ns.parse()?;
    let mut names = Vec::new();
    let mut current = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => current.push(chars.next().ok_or_else(malformed)?),
            ';' => names.push(std::mem::take(&mut current)),
            c => current.push(c),
        }
    }
    names.push(current);
    let items = names
        .iter()
        .map(|n| Item::new(ns, n).map_err(|_| malformed()))
        .collect::<Result<Vec<_>>>()?;
    let set = ItemSet::new(items)?;
    if set.len() != names.len() {
        return Err(malformed());
    }
    Ok(set)
}

/// The answer sets of one respondent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sides {
    /// Issues on the antecedent side, technologies on the consequent side.
    Split { issues: ItemSet, techs: ItemSet },
    /// A single pool of generic items serving both sides.
    Generic(ItemSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    id: String,
    sides: Sides,
}

impl Transaction {
    pub fn split(id: impl Into<String>, issues: ItemSet, techs: ItemSet) -> Result<Self> {
        check_namespace(&issues, Namespace::Issue)?;
        check_namespace(&techs, Namespace::Tech)?;
        Ok(Transaction {
            id: id.into(),
            sides: Sides::Split { issues, techs },
        })
    }

    pub fn generic(id: impl Into<String>, items: ItemSet) -> Result<Self> {
        check_namespace(&items, Namespace::Generic)?;
        Ok(Transaction {
            id: id.into(),
            sides: Sides::Generic(items),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sides(&self) -> &Sides {
        &self.sides
    }

    pub fn is_generic(&self) -> bool {
        matches!(self.sides, Sides::Generic(_))
    }

    /// Items eligible for the antecedent side of a rule.
    pub fn antecedent_pool(&self) -> &ItemSet {
        match &self.sides {
            Sides::Split { issues, .. } => issues,
            Sides::Generic(items) => items,
        }
    }

    /// Items eligible for the consequent side of a rule.
    pub fn consequent_pool(&self) -> &ItemSet {
        match &self.sides {
            Sides::Split { techs, .. } => techs,
            Sides::Generic(items) => items,
        }
    }

    /// True when every item of `set` appears in this transaction.
    pub fn contains(&self, set: &ItemSet) -> bool {
        match (&self.sides, set.namespace()) {
            (_, None) => true,
            (Sides::Split { issues, .. }, Some(Namespace::Issue)) => set.is_subset(issues),
            (Sides::Split { techs, .. }, Some(Namespace::Tech)) => set.is_subset(techs),
            (Sides::Generic(items), Some(Namespace::Generic)) => set.is_subset(items),
            _ => false,
        }
    }
}

fn check_namespace(set: &ItemSet, expected: Namespace) -> Result<()> {
    match set.namespace() {
        Some(ns) if ns != expected => Err(Error::MixedNamespaces(ns.as_str(), expected.as_str())),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatabaseMode {
    Split,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDatabase {
    transactions: Vec<Transaction>,
    mode: DatabaseMode,
}

impl TransactionDatabase {
    /// Requires at least one transaction, unique ids and a single mode.
    pub fn new(transactions: Vec<Transaction>) -> Result<Self> {
        let first = transactions.first().ok_or(Error::EmptyDatabase)?;
        let generic = first.is_generic();
        let mut seen = HashSet::with_capacity(transactions.len());
        for t in &transactions {
            if !seen.insert(t.id()) {
                return Err(Error::DuplicateTransactionId(t.id().to_string()));
            }
            if t.is_generic() != generic {
                return Err(Error::MixedDatabaseModes(t.id().to_string()));
            }
        }
        let mode = if generic {
            DatabaseMode::Generic
        } else {
            DatabaseMode::Split
        };
        Ok(TransactionDatabase { transactions, mode })
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn n(&self) -> usize {
        self.transactions.len()
    }

    pub fn mode(&self) -> DatabaseMode {
        self.mode
    }

    pub fn antecedent_namespace(&self) -> Namespace {
        match self.mode {
            DatabaseMode::Split => Namespace::Issue,
            DatabaseMode::Generic => Namespace::Generic,
        }
    }

    pub fn consequent_namespace(&self) -> Namespace {
        match self.mode {
            DatabaseMode::Split => Namespace::Tech,
            DatabaseMode::Generic => Namespace::Generic,
        }
    }

    /// Number of transactions containing every item of `set`, by direct scan.
    pub fn support(&self, set: &ItemSet) -> usize {
        self.transactions.iter().filter(|t| t.contains(set)).count()
    }

    /// True when `item` occurs in at least one transaction.
    pub fn knows(&self, item: &Item) -> bool {
        self.transactions.iter().any(|t| match t.sides() {
            Sides::Split { issues, techs } => issues.contains(item) || techs.contains(item),
            Sides::Generic(items) => items.contains(item),
        })
    }
}

/// An association rule `antecedent => consequent`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    antecedent: ItemSet,
    consequent: ItemSet,
}

impl Rule {
    pub fn new(antecedent: ItemSet, consequent: ItemSet) -> Result<Self> {
        if antecedent.is_empty() || consequent.is_empty() {
            return Err(Error::InvalidRule("both sides must be non-empty".into()));
        }
        if !antecedent.is_disjoint(&consequent) {
            return Err(Error::InvalidRule(format!(
                "{antecedent} and {consequent} overlap"
            )));
        }
        Ok(Rule {
            antecedent,
            consequent,
        })
    }

    pub fn antecedent(&self) -> &ItemSet {
        &self.antecedent
    }

    pub fn consequent(&self) -> &ItemSet {
        &self.consequent
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} => {}", self.antecedent, self.consequent)
    }
}
