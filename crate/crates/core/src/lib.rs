//! Association rule mining between two item namespaces (social issues and
//! information technologies) over small questionnaire databases.
//!
//! Rules are scored with confidence, conservative confidence (a lower
//! credible bound on `P(Y | X)`), casual confidence, and weighted casual
//! confidence, which mixes positive and negative evidence with weight `w`.

pub mod cli;
pub mod enumeration;
pub mod error;
pub mod io;
pub mod measures;
pub mod model;
pub mod ranking;
pub mod stats;

pub use enumeration::{
    combi, count_frequencies, generate_rules, FrequencyTable, MinedRule, MiningConfig,
};
pub use error::{Error, Result};
pub use measures::{Measure, MeasureConfig, RuleFrequencies, ScoredRule};
pub use model::{Item, ItemSet, Namespace, Rule, Transaction, TransactionDatabase};
pub use ranking::{
    compare_lists, sample_rule_pair, top_k, Comparison, Label, LabeledRule, RankedList,
};
