//! Interestingness measures over a rule's frequency quadruple.
//!
//! `Conf` is the plain ratio. The other three replace each conditional
//! probability by its lower credible bound, so rules seen only a handful of
//! times are scored conservatively. Casual confidence averages the positive
//! evidence `P(Y | X)` with the negative evidence `P(not Y | not X)`, and the
//! weighted variant tilts that average by `w`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Rule;
use crate::stats::{check_alpha, lower_bound};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_WEIGHT: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Conf,
    ConfLower,
    CasualConf,
    Wcc,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Conf,
        Measure::ConfLower,
        Measure::CasualConf,
        Measure::Wcc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Conf => "conf",
            Measure::ConfLower => "conf_lower",
            Measure::CasualConf => "casual_conf",
            Measure::Wcc => "wcc",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Measure::Conf => "Conf",
            Measure::ConfLower => "Conf_l",
            Measure::CasualConf => "Casual-Conf",
            Measure::Wcc => "WCC",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "conf" => Ok(Measure::Conf),
            "conf_lower" | "conf_l" => Ok(Measure::ConfLower),
            "casual_conf" => Ok(Measure::CasualConf),
            "wcc" => Ok(Measure::Wcc),
            _ => Err(Error::InvalidParameter(format!("unknown measure {s:?}"))),
        }
    }
}

/// Credibility level and positive-evidence weight shared by the bounded
/// measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    alpha: f64,
    w: f64,
}

impl MeasureConfig {
    pub fn new(alpha: f64, w: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(w > 0.0 && w < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "weight w must lie in (0, 2), got {w}"
            )));
        }
        Ok(MeasureConfig { alpha, w })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            alpha: DEFAULT_ALPHA,
            w: DEFAULT_WEIGHT,
        }
    }
}

/// `cf(X)`, `cf(Y)`, `cf(X ∪ Y)` and the database size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFrequencies")]
pub struct RuleFrequencies {
    cf_x: u64,
    cf_y: u64,
    cf_xy: u64,
    n: u64,
}

#[derive(Deserialize)]
struct RawFrequencies {
    cf_x: u64,
    cf_y: u64,
    cf_xy: u64,
    n: u64,
}

impl TryFrom<RawFrequencies> for RuleFrequencies {
    type Error = Error;

    fn try_from(raw: RawFrequencies) -> Result<Self> {
        RuleFrequencies::new(raw.cf_x, raw.cf_y, raw.cf_xy, raw.n)
    }
}

impl RuleFrequencies {
    pub fn new(cf_x: u64, cf_y: u64, cf_xy: u64, n: u64) -> Result<Self> {
        let bad = |why: &str| {
            Err(Error::InconsistentFrequencies(format!(
                "cf(X)={cf_x} cf(Y)={cf_y} cf(X∪Y)={cf_xy} n={n}: {why}"
            )))
        };
        if cf_x > n || cf_y > n {
            return bad("marginal count exceeds n");
        }
        if cf_xy > cf_x.min(cf_y) {
            return bad("joint count exceeds a marginal");
        }
        if cf_x + cf_y - cf_xy > n {
            return bad("negative count of transactions with neither side");
        }
        Ok(RuleFrequencies {
            cf_x,
            cf_y,
            cf_xy,
            n,
        })
    }

    pub fn cf_x(&self) -> u64 {
        self.cf_x
    }

    pub fn cf_y(&self) -> u64 {
        self.cf_y
    }

    pub fn cf_xy(&self) -> u64 {
        self.cf_xy
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `cf(X̄) = n - cf(X)`.
    pub fn cf_not_x(&self) -> u64 {
        self.n - self.cf_x
    }

    /// Transactions containing neither side: `n - cf(X) - cf(Y) + cf(X ∪ Y)`.
    pub fn cf_not_x_not_y(&self) -> u64 {
        self.n + self.cf_xy - self.cf_x - self.cf_y
    }

    fn require_antecedent(&self) -> Result<()> {
        if self.cf_x == 0 {
            Err(Error::UndefinedConfidence)
        } else {
            Ok(())
        }
    }
}

/// The two conservative probability estimates feeding casual confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceBounds {
    /// Lower bound of `P(Y | X)` from `(cf(X ∪ Y), cf(X))`.
    pub positive: f64,
    /// Lower bound of `P(Ȳ | X̄)` from `(cf(X̄ ∪ Ȳ), cf(X̄))`; equals alpha
    /// when `cf(X̄) = 0`.
    pub negative: f64,
}

pub fn evidence_bounds(f: &RuleFrequencies, alpha: f64) -> Result<EvidenceBounds> {
    f.require_antecedent()?;
    Ok(EvidenceBounds {
        positive: lower_bound(f.cf_xy, f.cf_x, alpha)?,
        negative: lower_bound(f.cf_not_x_not_y(), f.cf_not_x(), alpha)?,
    })
}

fn combine(measure: Measure, f: &RuleFrequencies, b: &EvidenceBounds, cfg: &MeasureConfig) -> f64 {
    match measure {
        Measure::Conf => f.cf_xy as f64 / f.cf_x as f64,
        Measure::ConfLower => b.positive,
        Measure::CasualConf => 0.5 * (b.positive + b.negative),
        Measure::Wcc => 0.5 * (cfg.w * b.positive + (2.0 - cfg.w) * b.negative),
    }
}

pub fn conf(f: &RuleFrequencies) -> Result<f64> {
    f.require_antecedent()?;
    Ok(f.cf_xy as f64 / f.cf_x as f64)
}

pub fn conf_lower(f: &RuleFrequencies, cfg: &MeasureConfig) -> Result<f64> {
    f.require_antecedent()?;
    lower_bound(f.cf_xy, f.cf_x, cfg.alpha)
}

pub fn casual_conf(f: &RuleFrequencies, cfg: &MeasureConfig) -> Result<f64> {
    let b = evidence_bounds(f, cfg.alpha)?;
    Ok(combine(Measure::CasualConf, f, &b, cfg))
}

pub fn wcc(f: &RuleFrequencies, cfg: &MeasureConfig) -> Result<f64> {
    let b = evidence_bounds(f, cfg.alpha)?;
    Ok(combine(Measure::Wcc, f, &b, cfg))
}

pub fn score(measure: Measure, f: &RuleFrequencies, cfg: &MeasureConfig) -> Result<f64> {
    match measure {
        Measure::Conf => conf(f),
        Measure::ConfLower => conf_lower(f, cfg),
        Measure::CasualConf => casual_conf(f, cfg),
        Measure::Wcc => wcc(f, cfg),
    }
}

/// Scores many rules over one database size, computing each lower bound
/// `L(k, m, alpha)` with `k <= m <= n` once. Results are bit-identical to
/// the free functions.
#[derive(Debug, Clone)]
pub struct Scorer {
    cfg: MeasureConfig,
    n: u64,
    // Row m holds L(0..=m, m); rows are concatenated.
    bounds: Vec<f64>,
}

impl Scorer {
    pub fn new(cfg: MeasureConfig, n: u64) -> Result<Self> {
        let mut bounds = Vec::with_capacity(((n + 1) * (n + 2) / 2) as usize);
        for m in 0..=n {
            for k in 0..=m {
                bounds.push(lower_bound(k, m, cfg.alpha)?);
            }
        }
        Ok(Scorer { cfg, n, bounds })
    }

    fn bound(&self, k: u64, m: u64) -> f64 {
        self.bounds[(m * (m + 1) / 2 + k) as usize]
    }

    pub fn config(&self) -> &MeasureConfig {
        &self.cfg
    }

    pub fn score(&self, measure: Measure, f: &RuleFrequencies) -> Result<f64> {
        if f.n != self.n {
            return score(measure, f, &self.cfg);
        }
        f.require_antecedent()?;
        let b = EvidenceBounds {
            positive: self.bound(f.cf_xy, f.cf_x),
            negative: self.bound(f.cf_not_x_not_y(), f.cf_not_x()),
        };
        Ok(combine(measure, f, &b, &self.cfg))
    }

    pub fn score_rule(
        &self,
        rule: Rule,
        freq: RuleFrequencies,
        measures: &[Measure],
    ) -> Result<ScoredRule> {
        let mut scored = ScoredRule::unscored(rule, freq);
        for &m in measures {
            let v = self.score(m, &freq)?;
            scored.scores.insert(m, v);
        }
        Ok(scored)
    }
}

/// A rule together with its frequencies and the scores computed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRule {
    pub rule: Rule,
    pub freq: RuleFrequencies,
    scores: BTreeMap<Measure, f64>,
}

impl ScoredRule {
    pub fn unscored(rule: Rule, freq: RuleFrequencies) -> Self {
        ScoredRule {
            rule,
            freq,
            scores: BTreeMap::new(),
        }
    }

    pub fn compute(
        rule: Rule,
        freq: RuleFrequencies,
        measures: &[Measure],
        cfg: &MeasureConfig,
    ) -> Result<Self> {
        let mut scored = ScoredRule::unscored(rule, freq);
        for &m in measures {
            scored.rescore(m, cfg)?;
        }
        Ok(scored)
    }

    pub fn rescore(&mut self, measure: Measure, cfg: &MeasureConfig) -> Result<f64> {
        let value = score(measure, &self.freq, cfg)?;
        self.scores.insert(measure, value);
        Ok(value)
    }

    /// Stores an externally computed score, e.g. one read back from disk.
    pub fn set_score(&mut self, measure: Measure, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidParameter(format!(
                "{measure} score {value} outside [0, 1]"
            )));
        }
        self.scores.insert(measure, value);
        Ok(())
    }

    pub fn score(&self, measure: Measure) -> Option<f64> {
        self.scores.get(&measure).copied()
    }

    pub fn require_score(&self, measure: Measure) -> Result<f64> {
        self.score(measure).ok_or_else(|| Error::MissingScore {
            rule: self.rule.to_string(),
            measure: measure.as_str(),
        })
    }

    pub fn scores(&self) -> &BTreeMap<Measure, f64> {
        &self.scores
    }

    pub fn measures(&self) -> impl Iterator<Item = Measure> + '_ {
        self.scores.keys().copied()
    }
}
