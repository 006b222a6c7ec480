//! Helpers shared by the integration tests: a brute-force counting oracle
//! over bitmask transactions and a few fixture loaders.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rulemine::enumeration::{FrequencyTable, MiningConfig};
use rulemine::model::{Item, ItemSet, Namespace, Transaction, TransactionDatabase};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub type TableCounts = (
    BTreeMap<u16, usize>,
    BTreeMap<u16, usize>,
    BTreeMap<(u16, u16), usize>,
);

/// Transactions as bitmasks. In split mode antecedent items use bits
/// `0..n_ante` and consequent items bits `n_ante..n_ante + n_cons`; in
/// generic mode both sides share the bits `0..n_ante`.
#[derive(Debug, Clone)]
pub struct MaskDb {
    pub generic: bool,
    pub n_ante: usize,
    pub n_cons: usize,
    pub rows: Vec<u16>,
}

impl MaskDb {
    pub fn random<R: Rng>(rng: &mut R, generic: bool) -> Self {
        let n = rng.gen_range(1..=10);
        let (n_ante, n_cons) = if generic {
            (rng.gen_range(1..=8), 0)
        } else {
            let a = rng.gen_range(1..=4);
            (a, rng.gen_range(1..=8 - a))
        };
        let width = n_ante + n_cons;
        let density = rng.gen_range(0.2..0.8);
        let rows = (0..n)
            .map(|_| {
                (0..width).fold(
                    0u16,
                    |m, b| if rng.gen_bool(density) { m | 1 << b } else { m },
                )
            })
            .collect();
        MaskDb {
            generic,
            n_ante,
            n_cons,
            rows,
        }
    }

    fn ante_mask(&self) -> u16 {
        (1u16 << self.n_ante) - 1
    }

    fn cons_mask(&self) -> u16 {
        if self.generic {
            self.ante_mask()
        } else {
            ((1u16 << self.n_cons) - 1) << self.n_ante
        }
    }

    pub fn name(&self, bit: usize) -> String {
        if self.generic {
            format!("g{bit}")
        } else if bit < self.n_ante {
            format!("u{bit}")
        } else {
            format!("v{}", bit - self.n_ante)
        }
    }

    fn side_set(&self, mask: u16, ns: Namespace) -> ItemSet {
        let items = (0..16)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| Item::new(ns, &self.name(b)).unwrap());
        ItemSet::new(items).unwrap()
    }

    pub fn to_database(&self) -> TransactionDatabase {
        let txs = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, &row)| {
                let id = format!("t{i}");
                if self.generic {
                    Transaction::generic(id, self.side_set(row, Namespace::Generic)).unwrap()
                } else {
                    Transaction::split(
                        id,
                        self.side_set(row & self.ante_mask(), Namespace::Issue),
                        self.side_set(row & self.cons_mask(), Namespace::Tech),
                    )
                    .unwrap()
                }
            })
            .collect();
        TransactionDatabase::new(txs).unwrap()
    }

    pub fn mask_of(&self, set: &ItemSet) -> u16 {
        set.iter().fold(0, |m, item| {
            let name = item.name();
            let bit = match &name[..1] {
                "g" | "u" => name[1..].parse::<usize>().unwrap(),
                "v" => self.n_ante + name[1..].parse::<usize>().unwrap(),
                _ => panic!("unexpected item {name}"),
            };
            m | 1 << bit
        })
    }

    pub fn support(&self, mask: u16) -> usize {
        self.rows.iter().filter(|&&r| r & mask == mask).count()
    }

    /// Every non-empty submask of `pool` with at most `cap` bits.
    fn submasks(pool: u16, cap: Option<usize>) -> Vec<u16> {
        (1..=u16::MAX)
            .take_while(|&m| m <= pool)
            .filter(|&m| m & !pool == 0)
            .filter(|m| cap.is_none_or(|c| m.count_ones() as usize <= c))
            .collect()
    }

    pub fn antecedent_counts(&self, cfg: &MiningConfig) -> BTreeMap<u16, usize> {
        Self::submasks(self.ante_mask(), cfg.max_antecedent_size)
            .into_iter()
            .map(|m| (m, self.support(m)))
            .filter(|&(_, c)| c > 0)
            .collect()
    }

    pub fn consequent_counts(&self, cfg: &MiningConfig) -> BTreeMap<u16, usize> {
        Self::submasks(self.cons_mask(), cfg.max_consequent_size)
            .into_iter()
            .map(|m| (m, self.support(m)))
            .filter(|&(_, c)| c > 0)
            .collect()
    }

    /// Scans every candidate `(X, Y)` against every row.
    pub fn pairs(&self, cfg: &MiningConfig) -> BTreeMap<(u16, u16), usize> {
        let mut out = BTreeMap::new();
        let xs = Self::submasks(self.ante_mask(), cfg.max_antecedent_size);
        let ys = Self::submasks(self.cons_mask(), cfg.max_consequent_size);
        for &x in &xs {
            if self.support(x) < cfg.min_antecedent_count {
                continue;
            }
            for &y in &ys {
                if self.generic && x & y != 0 {
                    continue;
                }
                let c = self.support(x | y);
                if c > 0 && c >= cfg.min_cooccurrence {
                    out.insert((x, y), c);
                }
            }
        }
        out
    }

    pub fn table_counts(&self, ft: &FrequencyTable) -> TableCounts {
        let ante = ft
            .antecedent_counts()
            .iter()
            .map(|(s, &c)| (self.mask_of(s), c))
            .collect();
        let cons = ft
            .consequent_counts()
            .iter()
            .map(|(s, &c)| (self.mask_of(s), c))
            .collect();
        let pairs = ft
            .pair_counts()
            .iter()
            .map(|((x, y), &c)| ((self.mask_of(x), self.mask_of(y)), c))
            .collect();
        (ante, cons, pairs)
    }
}

/// Returns a description of the first disagreement with the oracle.
pub fn check_against_oracle(db: &MaskDb, cfg: &MiningConfig) -> Result<usize, String> {
    let ft = rulemine::enumeration::count_frequencies(&db.to_database(), cfg)
        .map_err(|e| e.to_string())?;
    let (ante, cons, pairs) = db.table_counts(&ft);
    if ante != db.antecedent_counts(cfg) {
        return Err(format!("antecedent counts differ on {db:?}"));
    }
    if cons != db.consequent_counts(cfg) {
        return Err(format!("consequent counts differ on {db:?}"));
    }
    let expected = db.pairs(cfg);
    if pairs != expected {
        return Err(format!("pairs differ on {db:?} with {cfg:?}"));
    }
    let rules = rulemine::enumeration::generate_rules(&ft);
    if rules.len() != expected.len() {
        return Err(format!(
            "generate_rules emitted {} of {}",
            rules.len(),
            expected.len()
        ));
    }
    for r in &rules {
        let x = db.mask_of(r.rule.antecedent());
        let y = db.mask_of(r.rule.consequent());
        let f = &r.freq;
        let ok = f.cf_x() as usize == db.support(x)
            && f.cf_y() as usize == db.support(y)
            && f.cf_xy() as usize == db.support(x | y)
            && f.n() as usize == db.rows.len();
        if !ok {
            return Err(format!("rule {} has frequencies {f:?}", r.rule));
        }
    }
    Ok(expected.len())
}

pub fn random_config<R: Rng>(rng: &mut R) -> MiningConfig {
    MiningConfig {
        min_antecedent_count: rng.gen_range(1..=3),
        min_cooccurrence: rng.gen_range(0..=2),
        max_antecedent_size: if rng.gen_bool(0.3) {
            Some(rng.gen_range(1..=3))
        } else {
            None
        },
        max_consequent_size: if rng.gen_bool(0.3) {
            Some(rng.gen_range(1..=3))
        } else {
            None
        },
        pair_budget: None,
    }
}
