//! Candidate pair generation and frequency counting.
//!
//! Every transaction contributes all non-empty subsets of its antecedent
//! pool and of its consequent pool. A first pass counts `cf(X)` and `cf(Y)`;
//! a second pass pairs, per transaction, each subset `X` whose count reaches
//! the antecedent threshold with each consequent subset `Y` of the same
//! transaction, which counts `cf(X ∪ Y)` exactly.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::RuleFrequencies;
use crate::model::{ItemSet, Rule, Transaction, TransactionDatabase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiningConfig {
    /// Minimum `cf(X)` for an antecedent to take part in pairs.
    pub min_antecedent_count: usize,
    /// Minimum `cf(X ∪ Y)` for a pair to be kept; 0 disables the filter.
    pub min_cooccurrence: usize,
    pub max_antecedent_size: Option<usize>,
    pub max_consequent_size: Option<usize>,
    /// Upper bound on enumerated subsets per transaction and on the running
    /// total of enumerated pair instances.
    pub pair_budget: Option<u64>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_antecedent_count: 2,
            min_cooccurrence: 0,
            max_antecedent_size: None,
            max_consequent_size: None,
            pair_budget: None,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_antecedent_count < 1 {
            return Err(Error::InvalidMiningConfig(
                "min_antecedent_count must be at least 1".into(),
            ));
        }
        if self.max_antecedent_size == Some(0) || self.max_consequent_size == Some(0) {
            return Err(Error::InvalidMiningConfig(
                "size caps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// All non-empty subsets of `set` with at most `max_size` members, listed by
/// size and then in canonical order.
pub fn combi(set: &ItemSet, max_size: Option<usize>) -> Vec<ItemSet> {
    let items = set.items();
    let m = items.len();
    let top = max_size.map_or(m, |cap| cap.min(m));
    let mut out = Vec::new();
    let mut idx: Vec<usize> = Vec::with_capacity(top);
    for size in 1..=top {
        idx.clear();
        idx.extend(0..size);
        loop {
            out.push(ItemSet::from_sorted_unchecked(
                idx.iter().map(|&i| items[i].clone()).collect(),
            ));
            // Advance to the next index combination in lexicographic order.
            let Some(pos) = (0..size).rev().find(|&p| idx[p] != p + m - size) else {
                break;
            };
            idx[pos] += 1;
            for p in pos + 1..size {
                idx[p] = idx[p - 1] + 1;
            }
        }
    }
    out
}

/// `|combi(s)|` for `|s| = m`, saturating at `u64::MAX`.
pub fn combi_count(m: usize, max_size: Option<usize>) -> u64 {
    let top = max_size.map_or(m, |cap| cap.min(m));
    if top == m {
        return if m >= 64 { u64::MAX } else { (1u64 << m) - 1 };
    }
    let mut total: u64 = 0;
    let mut choose: u64 = 1;
    for j in 1..=top {
        // C(m, j) = C(m, j-1) * (m - j + 1) / j, exact in u128.
        choose = match u64::try_from(choose as u128 * (m - j + 1) as u128 / j as u128) {
            Ok(c) => c,
            Err(_) => return u64::MAX,
        };
        total = total.saturating_add(choose);
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    antecedent_counts: HashMap<ItemSet, usize>,
    consequent_counts: HashMap<ItemSet, usize>,
    pair_counts: HashMap<(ItemSet, ItemSet), usize>,
    n: usize,
    min_antecedent_count: usize,
}

impl FrequencyTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min_antecedent_count(&self) -> usize {
        self.min_antecedent_count
    }

    /// `cf(X)` over antecedent pools; 0 when never observed.
    pub fn cf_antecedent(&self, x: &ItemSet) -> usize {
        self.antecedent_counts.get(x).copied().unwrap_or(0)
    }

    /// `cf(Y)` over consequent pools; 0 when never observed.
    pub fn cf_consequent(&self, y: &ItemSet) -> usize {
        self.consequent_counts.get(y).copied().unwrap_or(0)
    }

    /// `cf(X ∪ Y)` for an enumerated pair.
    pub fn cf_pair(&self, x: &ItemSet, y: &ItemSet) -> Option<usize> {
        // Avoid cloning the key for a lookup by scanning only when needed.
        self.pair_counts.get(&(x.clone(), y.clone())).copied()
    }

    pub fn antecedent_counts(&self) -> &HashMap<ItemSet, usize> {
        &self.antecedent_counts
    }

    pub fn consequent_counts(&self) -> &HashMap<ItemSet, usize> {
        &self.consequent_counts
    }

    pub fn pair_counts(&self) -> &HashMap<(ItemSet, ItemSet), usize> {
        &self.pair_counts
    }

    pub fn pair_count(&self) -> usize {
        self.pair_counts.len()
    }
}

fn merge_counts<K: Hash + Eq>(mut a: HashMap<K, usize>, b: HashMap<K, usize>) -> HashMap<K, usize> {
    let (mut big, small) = if a.len() >= b.len() {
        (std::mem::take(&mut a), b)
    } else {
        (b, a)
    };
    for (k, v) in small {
        *big.entry(k).or_insert(0) += v;
    }
    big
}

fn check_subset_budget(t: &Transaction, cfg: &MiningConfig) -> Result<()> {
    let Some(budget) = cfg.pair_budget else {
        return Ok(());
    };
    let required = combi_count(t.antecedent_pool().len(), cfg.max_antecedent_size).saturating_add(
        combi_count(t.consequent_pool().len(), cfg.max_consequent_size),
    );
    if required > budget {
        return Err(Error::BudgetExceeded {
            transaction: t.id().to_string(),
            budget,
            required,
        });
    }
    Ok(())
}

struct PairWork {
    antecedents: Vec<ItemSet>,
    consequents: Vec<ItemSet>,
    instances: u64,
}

fn pair_work(
    t: &Transaction,
    generic: bool,
    cfg: &MiningConfig,
    counts: &HashMap<ItemSet, usize>,
) -> PairWork {
    let antecedents: Vec<ItemSet> = combi(t.antecedent_pool(), cfg.max_antecedent_size)
        .into_iter()
        .filter(|x| counts.get(x).copied().unwrap_or(0) >= cfg.min_antecedent_count)
        .collect();
    let instances = if generic {
        let m = t.antecedent_pool().len();
        antecedents.iter().fold(0u64, |acc, x| {
            acc.saturating_add(combi_count(m - x.len(), cfg.max_consequent_size))
        })
    } else {
        (antecedents.len() as u64).saturating_mul(combi_count(
            t.consequent_pool().len(),
            cfg.max_consequent_size,
        ))
    };
    let consequents = if antecedents.is_empty() {
        Vec::new()
    } else {
        combi(t.consequent_pool(), cfg.max_consequent_size)
    };
    PairWork {
        antecedents,
        consequents,
        instances,
    }
}

/// Counts `cf(X)`, `cf(Y)` and, for antecedents meeting the threshold,
/// `cf(X ∪ Y)` for every pair co-enumerated within some transaction.
///
/// Transactions are processed in parallel shards whose partial counts are
/// summed, so the result does not depend on the thread count.
pub fn count_frequencies(db: &TransactionDatabase, cfg: &MiningConfig) -> Result<FrequencyTable> {
    cfg.validate()?;
    let txs = db.transactions();
    for t in txs {
        check_subset_budget(t, cfg)?;
    }

    let (antecedent_counts, consequent_counts) = txs
        .par_iter()
        .fold(
            || (HashMap::new(), HashMap::new()),
            |(mut ante, mut cons), t| {
                for x in combi(t.antecedent_pool(), cfg.max_antecedent_size) {
                    *ante.entry(x).or_insert(0) += 1;
                }
                for y in combi(t.consequent_pool(), cfg.max_consequent_size) {
                    *cons.entry(y).or_insert(0) += 1;
                }
                (ante, cons)
            },
        )
        .reduce(
            || (HashMap::new(), HashMap::new()),
            |(a1, c1), (a2, c2)| (merge_counts(a1, a2), merge_counts(c1, c2)),
        );

    let generic = txs.first().is_some_and(Transaction::is_generic);
    let work: Vec<PairWork> = txs
        .par_iter()
        .map(|t| pair_work(t, generic, cfg, &antecedent_counts))
        .collect();

    if let Some(budget) = cfg.pair_budget {
        let mut total: u64 = 0;
        for (t, w) in txs.iter().zip(&work) {
            total = total.saturating_add(w.instances);
            if total > budget {
                return Err(Error::BudgetExceeded {
                    transaction: t.id().to_string(),
                    budget,
                    required: total,
                });
            }
        }
    }

    let mut pair_counts = work
        .par_iter()
        .fold(
            HashMap::new,
            |mut acc: HashMap<(ItemSet, ItemSet), usize>, w| {
                for x in &w.antecedents {
                    for y in &w.consequents {
                        if generic && !x.is_disjoint(y) {
                            continue;
                        }
                        *acc.entry((x.clone(), y.clone())).or_insert(0) += 1;
                    }
                }
                acc
            },
        )
        .reduce(HashMap::new, merge_counts);

    if cfg.min_cooccurrence > 0 {
        pair_counts.retain(|_, c| *c >= cfg.min_cooccurrence);
    }

    Ok(FrequencyTable {
        antecedent_counts,
        consequent_counts,
        pair_counts,
        n: db.n(),
        min_antecedent_count: cfg.min_antecedent_count,
    })
}

/// A candidate rule with its observed frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedRule {
    pub rule: Rule,
    pub freq: RuleFrequencies,
}

/// One entry per enumerated pair, ordered by antecedent then consequent.
pub fn generate_rules(ft: &FrequencyTable) -> Vec<MinedRule> {
    let mut keys: Vec<(&(ItemSet, ItemSet), usize)> =
        ft.pair_counts.iter().map(|(k, &v)| (k, v)).collect();
    keys.sort_unstable_by(|a, b| a.0.cmp(b.0));
    keys.into_iter()
        .map(|((x, y), cf_xy)| {
            let freq = RuleFrequencies::new(
                ft.cf_antecedent(x) as u64,
                ft.cf_consequent(y) as u64,
                cf_xy as u64,
                ft.n as u64,
            )
            .expect("counts from a single database are consistent");
            MinedRule {
                rule: Rule::new(x.clone(), y.clone())
                    .expect("enumerated pairs are non-empty and disjoint"),
                freq,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Namespace;

    fn generic(names: &[&str]) -> ItemSet {
        ItemSet::from_names(Namespace::Generic, names).unwrap()
    }

    fn table3() -> TransactionDatabase {
        let rows: [&[&str]; 8] = [
            &["i_A", "i_B", "i_E", "i_F"],
            &["i_A", "i_B", "i_E", "i_G"],
            &["i_A", "i_B", "i_E", "i_G"],
            &["i_A", "i_D", "i_G"],
            &["i_B", "i_C", "i_F", "i_G"],
            &["i_B", "i_C", "i_G"],
            &["i_B", "i_C", "i_G"],
            &["i_C", "i_D", "i_G"],
        ];
        let txs = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Transaction::generic(format!("t{}", i + 1), generic(r)).unwrap())
            .collect();
        TransactionDatabase::new(txs).unwrap()
    }

    #[test]
    fn combi_of_two_technologies() {
        let s = ItemSet::from_names(Namespace::Tech, &["Open Data", "SNS"]).unwrap();
        let subsets = combi(&s, None);
        let expected = vec![
            ItemSet::from_names(Namespace::Tech, &["Open Data"]).unwrap(),
            ItemSet::from_names(Namespace::Tech, &["SNS"]).unwrap(),
            s.clone(),
        ];
        assert_eq!(subsets, expected);
    }

    #[test]
    fn combi_sizes() {
        assert_eq!(combi(&generic(&["i_A"]), None), vec![generic(&["i_A"])]);
        assert_eq!(combi(&generic(&["a", "b", "c"]), None).len(), 7);
        assert!(combi(&ItemSet::empty(), None).is_empty());
        let capped = combi(&generic(&["a", "b", "c", "d"]), Some(2));
        assert_eq!(capped.len(), 4 + 6);
        assert!(capped.iter().all(|s| s.len() <= 2));
        for m in 0..12 {
            let names: Vec<String> = (0..m).map(|i| format!("x{i:02}")).collect();
            let set = ItemSet::from_names(Namespace::Generic, &names).unwrap();
            for cap in [None, Some(1), Some(3), Some(20)] {
                assert_eq!(combi(&set, cap).len() as u64, combi_count(m, cap));
            }
        }
        assert_eq!(combi_count(70, None), u64::MAX);
        assert_eq!(combi_count(70, Some(2)), 70 + 70 * 69 / 2);
    }

    #[test]
    fn counts_on_worked_example() {
        let ft = count_frequencies(&table3(), &MiningConfig::default()).unwrap();
        assert_eq!(ft.cf_antecedent(&generic(&["i_A"])), 4);
        assert_eq!(ft.cf_antecedent(&generic(&["i_B"])), 6);
        assert_eq!(ft.cf_antecedent(&generic(&["i_A", "i_B"])), 3);
        assert_eq!(ft.cf_consequent(&generic(&["i_G"])), 7);
        assert_eq!(ft.cf_pair(&generic(&["i_A"]), &generic(&["i_G"])), Some(3));
        assert_eq!(ft.cf_antecedent(&generic(&["i_A", "i_C"])), 0);
    }

    #[test]
    fn unsatisfiable_threshold_yields_no_rules() {
        let db = table3();
        let cfg = MiningConfig {
            min_antecedent_count: db.n() + 1,
            ..MiningConfig::default()
        };
        let ft = count_frequencies(&db, &cfg).unwrap();
        assert!(generate_rules(&ft).is_empty());
    }

    #[test]
    fn rules_are_sorted_and_cooccur() {
        let ft = count_frequencies(&table3(), &MiningConfig::default()).unwrap();
        let rules = generate_rules(&ft);
        assert!(rules.windows(2).all(|w| w[0].rule < w[1].rule));
        assert!(rules.iter().all(|r| r.freq.cf_xy() >= 1));
        assert!(rules.iter().all(|r| r.freq.cf_x() >= 2));
    }

    #[test]
    fn min_cooccurrence_drops_rare_pairs() {
        let cfg = MiningConfig {
            min_cooccurrence: 3,
            ..MiningConfig::default()
        };
        let ft = count_frequencies(&table3(), &cfg).unwrap();
        assert!(ft.pair_counts().values().all(|&c| c >= 3));
        assert_eq!(ft.cf_pair(&generic(&["i_F"]), &generic(&["i_A"])), None);
        assert_eq!(ft.cf_pair(&generic(&["i_B"]), &generic(&["i_A"])), Some(3));
    }

    #[test]
    fn budget_failure_names_transaction() {
        let cfg = MiningConfig {
            pair_budget: Some(40),
            ..MiningConfig::default()
        };
        match count_frequencies(&table3(), &cfg) {
            Err(Error::BudgetExceeded {
                transaction,
                budget,
                ..
            }) => {
                assert_eq!(budget, 40);
                assert!(transaction.starts_with('t'));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        // A wide transaction trips the per-transaction subset guard.
        let names: Vec<String> = (0..30).map(|i| format!("x{i}")).collect();
        let wide = Transaction::generic(
            "wide",
            ItemSet::from_names(Namespace::Generic, &names).unwrap(),
        )
        .unwrap();
        let db = TransactionDatabase::new(vec![wide]).unwrap();
        let cfg = MiningConfig {
            pair_budget: Some(1_000_000),
            ..MiningConfig::default()
        };
        assert!(matches!(
            count_frequencies(&db, &cfg),
            Err(Error::BudgetExceeded { transaction, .. }) if transaction == "wide"
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = MiningConfig {
            min_antecedent_count: 0,
            ..MiningConfig::default()
        };
        assert!(count_frequencies(&table3(), &cfg).is_err());
        let cfg = MiningConfig {
            max_consequent_size: Some(0),
            ..MiningConfig::default()
        };
        assert!(count_frequencies(&table3(), &cfg).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let db = table3();
        let cfg = MiningConfig::default();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| generate_rules(&count_frequencies(&db, &cfg).unwrap()))
        };
        let single = run(1);
        assert_eq!(single, run(4));
        assert_eq!(single, run(7));
    }
}
