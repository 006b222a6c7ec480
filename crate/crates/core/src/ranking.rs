//! Top-K extraction and comparison of two ranked rule lists.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Measure, ScoredRule};
use crate::model::Rule;

/// Ranking order: score descending, then `cf(X ∪ Y)` descending, then
/// antecedent and consequent in canonical order.
fn rank_order(a: &ScoredRule, a_score: f64, b: &ScoredRule, b_score: f64) -> Ordering {
    b_score
        .total_cmp(&a_score)
        .then_with(|| b.freq.cf_xy().cmp(&a.freq.cf_xy()))
        .then_with(|| a.rule.cmp(&b.rule))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    measure: Measure,
    entries: Vec<ScoredRule>,
}

impl RankedList {
    /// Wraps an already ordered list, checking that it is scored under
    /// `measure`, non-increasing, and free of duplicate rules.
    pub fn from_ordered(measure: Measure, entries: Vec<ScoredRule>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        let mut prev = f64::INFINITY;
        for e in &entries {
            let s = e.require_score(measure)?;
            if s > prev {
                return Err(Error::InvalidParameter(format!(
                    "list is not ordered by {measure}: {} follows a lower score",
                    e.rule
                )));
            }
            prev = s;
            if !seen.insert(&e.rule) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate rule {}",
                    e.rule
                )));
            }
        }
        Ok(RankedList { measure, entries })
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn entries(&self) -> &[ScoredRule] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<ScoredRule> {
        self.entries
    }
}

/// The `k` best rules under `measure`, or all of them when fewer exist.
/// Repeated rules keep only their best-ranked occurrence.
pub fn top_k(rules: &[ScoredRule], measure: Measure, k: usize) -> Result<RankedList> {
    if k < 1 {
        return Err(Error::InvalidK);
    }
    let mut keyed: Vec<(f64, &ScoredRule)> = rules
        .iter()
        .map(|r| Ok((r.require_score(measure)?, r)))
        .collect::<Result<_>>()?;
    let cmp = |a: &(f64, &ScoredRule), b: &(f64, &ScoredRule)| rank_order(a.1, a.0, b.1, b.0);

    let distinct = {
        let mut seen = HashSet::with_capacity(keyed.len());
        keyed.iter().all(|(_, r)| seen.insert(&r.rule))
    };
    if distinct && k < keyed.len() {
        keyed.select_nth_unstable_by(k - 1, cmp);
        keyed.truncate(k);
    }
    keyed.sort_unstable_by(cmp);
    if !distinct {
        let mut seen = HashSet::with_capacity(keyed.len());
        keyed.retain(|(_, r)| seen.insert(&r.rule));
        keyed.truncate(k);
    }
    Ok(RankedList {
        measure,
        entries: keyed.into_iter().map(|(_, r)| r.clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    OnlyA,
    OnlyB,
    Both,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::OnlyA => "only_a",
            Label::OnlyB => "only_b",
            Label::Both => "both",
        }
    }

    fn swapped(self) -> Self {
        match self {
            Label::OnlyA => Label::OnlyB,
            Label::OnlyB => Label::OnlyA,
            Label::Both => Label::Both,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "only_a" => Ok(Label::OnlyA),
            "only_b" => Ok(Label::OnlyB),
            "both" => Ok(Label::Both),
            other => Err(Error::InvalidParameter(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRule {
    pub rule: ScoredRule,
    pub label: Label,
}

impl LabeledRule {
    pub fn with_swapped_label(&self) -> LabeledRule {
        LabeledRule {
            rule: self.rule.clone(),
            label: self.label.swapped(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Entries of `a` in order, then entries found only in `b`.
    pub union: Vec<LabeledRule>,
    pub intersection_size: usize,
}

impl Comparison {
    pub fn union_size(&self) -> usize {
        self.union.len()
    }

    pub fn count(&self, label: Label) -> usize {
        self.union.iter().filter(|r| r.label == label).count()
    }
}

/// Union of two ranked lists with provenance labels. Rules present in both
/// carry the scores of both lists.
pub fn compare_lists(a: &RankedList, b: &RankedList) -> Comparison {
    let in_b: HashMap<&Rule, &ScoredRule> = b.entries.iter().map(|r| (&r.rule, r)).collect();
    let in_a: HashSet<&Rule> = a.entries.iter().map(|r| &r.rule).collect();

    let mut union = Vec::with_capacity(a.len() + b.len());
    let mut intersection_size = 0;
    for r in &a.entries {
        match in_b.get(&r.rule) {
            Some(other) => {
                intersection_size += 1;
                let mut merged = r.clone();
                for (&m, &s) in other.scores() {
                    if merged.score(m).is_none() {
                        merged
                            .set_score(m, s)
                            .expect("scores from a ranked list are in range");
                    }
                }
                union.push(LabeledRule {
                    rule: merged,
                    label: Label::Both,
                });
            }
            None => union.push(LabeledRule {
                rule: r.clone(),
                label: Label::OnlyA,
            }),
        }
    }
    for r in &b.entries {
        if !in_a.contains(&r.rule) {
            union.push(LabeledRule {
                rule: r.clone(),
                label: Label::OnlyB,
            });
        }
    }
    Comparison {
        union,
        intersection_size,
    }
}

/// Draws two rules with different labels, uniformly over all such
/// unordered pairs. The same seed always yields the same pair.
pub fn sample_rule_pair(union: &[LabeledRule], seed: u64) -> Result<(LabeledRule, LabeledRule)> {
    let mut per_label: HashMap<Label, u64> = HashMap::new();
    for r in union {
        *per_label.entry(r.label).or_insert(0) += 1;
    }
    if per_label.len() < 2 {
        return Err(Error::NotEnoughLabels);
    }
    let n = union.len() as u64;
    let same: u64 = per_label.values().map(|c| c * (c - 1) / 2).sum();
    let valid = n * (n - 1) / 2 - same;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut target = rng.gen_range(0..valid);
    for i in 0..union.len() {
        for j in i + 1..union.len() {
            if union[i].label == union[j].label {
                continue;
            }
            if target == 0 {
                return Ok((union[i].clone(), union[j].clone()));
            }
            target -= 1;
        }
    }
    unreachable!("target index is below the number of valid pairs")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::RuleFrequencies;
    use crate::model::{ItemSet, Namespace};
    use proptest::prelude::*;

    fn rule(x: &str, y: &str) -> Rule {
        Rule::new(
            ItemSet::from_names(Namespace::Issue, &[x]).unwrap(),
            ItemSet::from_names(Namespace::Tech, &[y]).unwrap(),
        )
        .unwrap()
    }

    fn scored(x: &str, y: &str, cf_xy: u64, s: f64) -> ScoredRule {
        let mut r =
            ScoredRule::unscored(rule(x, y), RuleFrequencies::new(10, 10, cf_xy, 20).unwrap());
        r.set_score(Measure::Wcc, s).unwrap();
        r
    }

    fn list(rules: Vec<ScoredRule>) -> RankedList {
        let n = rules.len();
        top_k(&rules, Measure::Wcc, n.max(1)).unwrap()
    }

    #[test]
    fn orders_by_score_then_evidence_then_rule() {
        let rules = vec![
            scored("b", "t", 2, 0.5),
            scored("a", "t", 2, 0.5),
            scored("c", "t", 5, 0.5),
            scored("d", "t", 1, 0.9),
        ];
        let ranked = top_k(&rules, Measure::Wcc, 10).unwrap();
        let order: Vec<String> = ranked
            .entries()
            .iter()
            .map(|r| r.rule.to_string())
            .collect();
        assert_eq!(
            order,
            ["{d} => {t}", "{c} => {t}", "{a} => {t}", "{b} => {t}"]
        );
    }

    #[test]
    fn saturates_and_rejects_zero() {
        let rules = vec![scored("a", "t", 1, 0.1), scored("b", "t", 1, 0.2)];
        assert_eq!(top_k(&rules, Measure::Wcc, 5).unwrap().len(), 2);
        assert!(matches!(
            top_k(&rules, Measure::Wcc, 0),
            Err(Error::InvalidK)
        ));
        assert!(matches!(
            top_k(&rules, Measure::Conf, 1),
            Err(Error::MissingScore { .. })
        ));
    }

    #[test]
    fn duplicates_collapse() {
        let rules = vec![
            scored("a", "t", 1, 0.1),
            scored("a", "t", 1, 0.1),
            scored("b", "t", 1, 0.05),
        ];
        let ranked = top_k(&rules, Measure::Wcc, 2).unwrap();
        assert_eq!(ranked.len(), 2);
        assert_ne!(ranked.entries()[0].rule, ranked.entries()[1].rule);
    }

    #[test]
    fn from_ordered_validates() {
        let good = vec![scored("a", "t", 1, 0.3), scored("b", "t", 1, 0.2)];
        assert!(RankedList::from_ordered(Measure::Wcc, good.clone()).is_ok());
        let mut bad = good.clone();
        bad.reverse();
        assert!(RankedList::from_ordered(Measure::Wcc, bad).is_err());
        let dup = vec![good[0].clone(), good[0].clone()];
        assert!(RankedList::from_ordered(Measure::Wcc, dup).is_err());
    }

    #[test]
    fn identical_lists_are_all_both() {
        let a = list(
            (0..5)
                .map(|i| scored(&format!("x{i}"), "t", 1, 0.1 * i as f64))
                .collect(),
        );
        let cmp = compare_lists(&a, &a);
        assert_eq!(cmp.union_size(), 5);
        assert_eq!(cmp.count(Label::Both), 5);
        assert_eq!(cmp.intersection_size, 5);
    }

    #[test]
    fn disjoint_lists() {
        let a = list(
            (0..3)
                .map(|i| scored(&format!("a{i}"), "t", 1, 0.1))
                .collect(),
        );
        let b = list(
            (0..4)
                .map(|i| scored(&format!("b{i}"), "t", 1, 0.1))
                .collect(),
        );
        let cmp = compare_lists(&a, &b);
        assert_eq!(cmp.union_size(), 7);
        assert_eq!(cmp.count(Label::Both), 0);
        assert_eq!(cmp.count(Label::OnlyA), 3);
        assert_eq!(cmp.count(Label::OnlyB), 4);
    }

    #[test]
    fn shared_rules_carry_both_scores() {
        let mut from_b = scored("a", "t", 1, 0.4);
        from_b.set_score(Measure::ConfLower, 0.2).unwrap();
        let a = list(vec![scored("a", "t", 1, 0.4)]);
        let b = RankedList::from_ordered(Measure::ConfLower, vec![from_b]).unwrap();
        let cmp = compare_lists(&a, &b);
        assert_eq!(cmp.union[0].rule.score(Measure::ConfLower), Some(0.2));
    }

    #[test]
    fn forced_pair_and_seed_determinism() {
        let union = vec![
            LabeledRule {
                rule: scored("a", "t", 1, 0.1),
                label: Label::OnlyA,
            },
            LabeledRule {
                rule: scored("b", "t", 1, 0.1),
                label: Label::OnlyB,
            },
        ];
        let (x, y) = sample_rule_pair(&union, 7).unwrap();
        assert_eq!((x.label, y.label), (Label::OnlyA, Label::OnlyB));

        let bigger: Vec<LabeledRule> = (0..9)
            .map(|i| LabeledRule {
                rule: scored(&format!("r{i}"), "t", 1, 0.1),
                label: [Label::OnlyA, Label::OnlyB, Label::Both][i % 3],
            })
            .collect();
        assert_eq!(
            sample_rule_pair(&bigger, 42).unwrap(),
            sample_rule_pair(&bigger, 42).unwrap()
        );
    }

    #[test]
    fn single_label_cannot_be_sampled() {
        let union = vec![
            LabeledRule {
                rule: scored("a", "t", 1, 0.1),
                label: Label::Both,
            },
            LabeledRule {
                rule: scored("b", "t", 1, 0.1),
                label: Label::Both,
            },
        ];
        assert!(matches!(
            sample_rule_pair(&union, 1),
            Err(Error::NotEnoughLabels)
        ));
        assert!(matches!(
            sample_rule_pair(&[], 1),
            Err(Error::NotEnoughLabels)
        ));
    }

    fn arb_rules() -> impl Strategy<Value = Vec<ScoredRule>> {
        proptest::collection::btree_map("[a-f]{1,2}", (0u64..5, 0u32..8), 0..25).prop_map(|m| {
            m.into_iter()
                .map(|(name, (cf_xy, s))| scored(&name, "t", cf_xy, s as f64 / 8.0))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn prefix_property(rules in arb_rules(), k in 1usize..30) {
            let short = top_k(&rules, Measure::Wcc, k).unwrap();
            let long = top_k(&rules, Measure::Wcc, k + 1).unwrap();
            prop_assert_eq!(short.entries(), &long.entries()[..short.len()]);
            let scores: Vec<f64> = long.entries().iter().map(|r| r.score(Measure::Wcc).unwrap()).collect();
            prop_assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn scaling_keeps_order(rules in arb_rules(), k in 1usize..30, exp in -3i32..=0) {
            // Power-of-two factors scale exactly, so no ties are created or broken.
            let factor = 2f64.powi(exp);
            let scaled: Vec<ScoredRule> = rules.iter().map(|r| {
                let mut r = r.clone();
                let s = r.score(Measure::Wcc).unwrap();
                r.set_score(Measure::Wcc, s * factor).unwrap();
                r
            }).collect();
            let before: Vec<Rule> = top_k(&rules, Measure::Wcc, k).unwrap().into_entries().into_iter().map(|r| r.rule).collect();
            let after: Vec<Rule> = top_k(&scaled, Measure::Wcc, k).unwrap().into_entries().into_iter().map(|r| r.rule).collect();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn comparison_counts(a in arb_rules(), b in arb_rules(), ka in 1usize..20, kb in 1usize..20) {
            let a = top_k(&a, Measure::Wcc, ka).unwrap();
            let b = top_k(&b, Measure::Wcc, kb).unwrap();
            let ab = compare_lists(&a, &b);
            let ba = compare_lists(&b, &a);
            prop_assert_eq!(ab.union_size() + ab.intersection_size, a.len() + b.len());
            prop_assert_eq!(ab.count(Label::Both), ab.intersection_size);
            prop_assert_eq!(ab.union_size(), ba.union_size());
            prop_assert_eq!(ab.count(Label::OnlyA), ba.count(Label::OnlyB));
            let swapped: HashMap<Rule, Label> =
                ba.union.iter().map(|r| (r.rule.rule.clone(), r.label)).collect();
            for r in &ab.union {
                prop_assert_eq!(r.with_swapped_label().label, swapped[&r.rule.rule]);
            }
        }
    }
}
