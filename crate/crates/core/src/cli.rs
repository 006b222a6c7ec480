//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for data errors and 3
//! when the enumeration budget is exceeded.

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::enumeration::{count_frequencies, generate_rules, MiningConfig};
use crate::error::{Error, Result};
use crate::io::{self, Format};
use crate::measures::{
    evidence_bounds, Measure, MeasureConfig, RuleFrequencies, ScoredRule, Scorer, DEFAULT_ALPHA,
    DEFAULT_WEIGHT,
};
use crate::model::{Item, ItemSet, Rule, TransactionDatabase};
use crate::ranking::{compare_lists, sample_rule_pair, top_k, Label};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rulemine",
    version,
    about = "Mine and rank issue => technology association rules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate candidate rules from a dataset and score them.
    Mine(MineArgs),
    /// Recompute scores for an existing rule file.
    Score(ScoreArgs),
    /// Keep the top-K rules of a rule file under one measure.
    Rank(RankArgs),
    /// Label the union of two ranked rule files by provenance.
    Compare(CompareArgs),
    /// Print the counts and formula instantiations behind one rule.
    Explain(ExplainArgs),
}

fn parse_measure(s: &str) -> std::result::Result<Measure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    /// One minus the credibility level of the lower bounds.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Weight on positive evidence for WCC, in (0, 2).
    #[arg(long, default_value_t = DEFAULT_WEIGHT)]
    pub w: f64,
}

impl MeasureArgs {
    fn config(&self) -> Result<MeasureConfig> {
        MeasureConfig::new(self.alpha, self.w)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MiningArgs {
    #[arg(long, default_value_t = 2)]
    pub min_antecedent_count: usize,
    #[arg(long, default_value_t = 0)]
    pub min_cooccurrence: usize,
    #[arg(long)]
    pub max_antecedent_size: Option<usize>,
    #[arg(long)]
    pub max_consequent_size: Option<usize>,
    /// Abort when enumeration would exceed this many subsets or pairs.
    #[arg(long)]
    pub pair_budget: Option<u64>,
}

impl From<&MiningArgs> for MiningConfig {
    fn from(a: &MiningArgs) -> Self {
        MiningConfig {
            min_antecedent_count: a.min_antecedent_count,
            min_cooccurrence: a.min_cooccurrence,
            max_antecedent_size: a.max_antecedent_size,
            max_consequent_size: a.max_consequent_size,
            pair_budget: a.pair_budget,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Destination file, or `-` for standard output.
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub output_format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Dataset format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    #[arg(long, value_delimiter = ',', value_parser = parse_measure,
          default_value = "conf,conf_lower,casual_conf,wcc")]
    pub measures: Vec<Measure>,
    #[command(flatten)]
    pub mining: MiningArgs,
    #[command(flatten)]
    pub scoring: MeasureArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Rule file to rescore.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    #[arg(long, value_delimiter = ',', value_parser = parse_measure,
          default_value = "conf,conf_lower,casual_conf,wcc")]
    pub measures: Vec<Measure>,
    #[command(flatten)]
    pub scoring: MeasureArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    #[arg(long, value_parser = parse_measure, default_value = "wcc")]
    pub measure: Measure,
    #[arg(long, short, default_value_t = 30)]
    pub k: usize,
    /// Used only for rules whose file lacks the requested score.
    #[command(flatten)]
    pub scoring: MeasureArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// First ranked rule file.
    #[arg(long)]
    pub a: PathBuf,
    /// Second ranked rule file.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, value_parser = parse_measure, default_value = "conf_lower")]
    pub measure_a: Measure,
    #[arg(long, value_parser = parse_measure, default_value = "wcc")]
    pub measure_b: Measure,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    /// Also draw one pair of differently labeled rules with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    /// Antecedent item names separated by `;`.
    #[arg(long)]
    pub antecedent: String,
    /// Consequent item names separated by `;`.
    #[arg(long)]
    pub consequent: String,
    #[command(flatten)]
    pub scoring: MeasureArgs,
}

fn resolve_format(explicit: Option<Format>, path: &Path) -> Format {
    explicit
        .or_else(|| Format::from_path(path))
        .unwrap_or(Format::Csv)
}

fn is_stdout(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn open_output<'a>(path: &Path, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    if is_stdout(path) {
        Ok(Box::new(stdout))
    } else {
        Ok(Box::new(
            File::create(path).map_err(|e| Error::io(path, e))?,
        ))
    }
}

fn load(path: &Path, format: Option<Format>) -> Result<TransactionDatabase> {
    let format = resolve_format(format, path);
    Ok(io::load_dataset(path, format)?.database)
}

#[derive(Debug, Clone)]
pub struct MineOutcome {
    pub rules: Vec<ScoredRule>,
    pub pair_count: usize,
}

/// Enumerates and scores every candidate rule of `db`.
pub fn mine(
    db: &TransactionDatabase,
    mining: &MiningConfig,
    measures: &[Measure],
    cfg: &MeasureConfig,
) -> Result<MineOutcome> {
    let table = count_frequencies(db, mining)?;
    let mined = generate_rules(&table);
    let scorer = Scorer::new(*cfg, db.n() as u64)?;
    let rules = mined
        .into_iter()
        .map(|m| scorer.score_rule(m.rule, m.freq, measures))
        .collect::<Result<Vec<_>>>()?;
    Ok(MineOutcome {
        pair_count: table.pair_count(),
        rules,
    })
}

pub fn cmd_mine(args: &MineArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = args.scoring.config()?;
    let mining = MiningConfig::from(&args.mining);
    mining.validate()?;
    let started = Instant::now();
    let db = load(&args.input, args.format)?;
    let outcome = mine(&db, &mining, &args.measures, &cfg)?;
    let elapsed = started.elapsed();
    let format = resolve_format(args.out.output_format, &args.out.output);
    io::write_rules_to(
        &outcome.rules,
        open_output(&args.out.output, stdout)?,
        format,
    )?;
    let _ = writeln!(
        stderr,
        "mined {} pairs from {} transactions in {:.3}s",
        outcome.pair_count,
        db.n(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

pub fn cmd_score(args: &ScoreArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.scoring.config()?;
    let format = resolve_format(args.format, &args.input);
    let rules = io::read_rules(&args.input, format)?
        .into_iter()
        .map(|r| ScoredRule::compute(r.rule.rule, r.rule.freq, &args.measures, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let out_format = resolve_format(args.out.output_format, &args.out.output);
    io::write_rules_to(&rules, open_output(&args.out.output, stdout)?, out_format)
}

pub fn cmd_rank(args: &RankArgs, stdout: &mut dyn Write) -> Result<()> {
    if args.k < 1 {
        return Err(Error::InvalidK);
    }
    let cfg = args.scoring.config()?;
    let format = resolve_format(args.format, &args.input);
    let mut rules: Vec<ScoredRule> = io::read_rules(&args.input, format)?
        .into_iter()
        .map(|r| r.rule)
        .collect();
    for r in &mut rules {
        if r.score(args.measure).is_none() {
            r.rescore(args.measure, &cfg)?;
        }
    }
    let ranked = top_k(&rules, args.measure, args.k)?;
    let out_format = resolve_format(args.out.output_format, &args.out.output);
    io::write_rules_to(
        ranked.entries(),
        open_output(&args.out.output, stdout)?,
        out_format,
    )
}

pub fn cmd_compare(
    args: &CompareArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let a = io::read_ranked(
        &args.a,
        resolve_format(args.format, &args.a),
        args.measure_a,
    )?;
    let b = io::read_ranked(
        &args.b,
        resolve_format(args.format, &args.b),
        args.measure_b,
    )?;
    let cmp = compare_lists(&a, &b);
    let out_format = resolve_format(args.out.output_format, &args.out.output);
    io::write_comparison_to(&cmp, open_output(&args.out.output, stdout)?, out_format)?;
    let _ = writeln!(
        stderr,
        "|a| = {}, |b| = {}, both = {}, only_a = {}, only_b = {}, union = {}",
        a.len(),
        b.len(),
        cmp.intersection_size,
        cmp.count(Label::OnlyA),
        cmp.count(Label::OnlyB),
        cmp.union_size()
    );
    if let Some(seed) = args.seed {
        let (x, y) = sample_rule_pair(&cmp.union, seed)?;
        let _ = writeln!(stderr, "sampled pair (seed {seed}):");
        let _ = writeln!(stderr, "  [{}] {}", x.label, x.rule.rule);
        let _ = writeln!(stderr, "  [{}] {}", y.label, y.rule.rule);
    }
    Ok(())
}

/// Counts, bounds and measure values behind a single rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub rule: Rule,
    pub freq: RuleFrequencies,
    pub cfg: MeasureConfig,
    /// `None` when `cf(X) = 0` and the conditional measures are undefined.
    pub positive_bound: Option<f64>,
    pub negative_bound: Option<f64>,
    pub scores: Vec<(Measure, f64)>,
}

fn side(db: &TransactionDatabase, names: &str, ns: crate::model::Namespace) -> Result<ItemSet> {
    let mut items = Vec::new();
    for raw in names.split(io::ITEM_SEPARATOR) {
        if raw.trim().is_empty() {
            continue;
        }
        let item = Item::new(ns, raw)?;
        if !db.knows(&item) {
            return Err(Error::UnknownItem(item.name().to_string()));
        }
        items.push(item);
    }
    ItemSet::new(items)
}

pub fn explain(
    db: &TransactionDatabase,
    antecedent: &str,
    consequent: &str,
    cfg: &MeasureConfig,
) -> Result<Explanation> {
    let x = side(db, antecedent, db.antecedent_namespace())?;
    let y = side(db, consequent, db.consequent_namespace())?;
    let rule = Rule::new(x, y)?;
    let both = db
        .transactions()
        .iter()
        .filter(|t| t.contains(rule.antecedent()) && t.contains(rule.consequent()))
        .count();
    let freq = RuleFrequencies::new(
        db.support(rule.antecedent()) as u64,
        db.support(rule.consequent()) as u64,
        both as u64,
        db.n() as u64,
    )?;
    let (positive_bound, negative_bound, scores) = match evidence_bounds(&freq, cfg.alpha()) {
        Ok(b) => {
            let scores = Measure::ALL
                .iter()
                .map(|&m| Ok((m, crate::measures::score(m, &freq, cfg)?)))
                .collect::<Result<Vec<_>>>()?;
            (Some(b.positive), Some(b.negative), scores)
        }
        Err(Error::UndefinedConfidence) => (None, None, Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(Explanation {
        rule,
        freq,
        cfg: *cfg,
        positive_bound,
        negative_bound,
        scores,
    })
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = &self.freq;
        let alpha = self.cfg.alpha();
        let w = self.cfg.w();
        writeln!(f, "rule: {}", self.rule)?;
        writeln!(f, "n                = {}", q.n())?;
        writeln!(f, "cf(X)            = {}", q.cf_x())?;
        writeln!(f, "cf(Y)            = {}", q.cf_y())?;
        writeln!(f, "cf(X ∪ Y)        = {}", q.cf_xy())?;
        writeln!(f, "cf(not X)        = n - cf(X) = {}", q.cf_not_x())?;
        writeln!(
            f,
            "cf(not X, not Y) = n - cf(X) - cf(Y) + cf(X ∪ Y) = {}",
            q.cf_not_x_not_y()
        )?;
        let (Some(pos), Some(neg)) = (self.positive_bound, self.negative_bound) else {
            return writeln!(f, "measures undefined: cf(X) = 0");
        };
        writeln!(
            f,
            "lower bound P(Y | X)         = L({}, {}; alpha={alpha}) = {pos:.6}",
            q.cf_xy(),
            q.cf_x()
        )?;
        writeln!(
            f,
            "lower bound P(not Y | not X) = L({}, {}; alpha={alpha}) = {neg:.6}",
            q.cf_not_x_not_y(),
            q.cf_not_x()
        )?;
        for &(m, v) in &self.scores {
            let formula = match m {
                Measure::Conf => format!("{}/{}", q.cf_xy(), q.cf_x()),
                Measure::ConfLower => format!("L({}, {})", q.cf_xy(), q.cf_x()),
                Measure::CasualConf => format!("1/2 [{pos:.6} + {neg:.6}]"),
                Measure::Wcc => format!("1/2 [{w}·{pos:.6} + (2 - {w})·{neg:.6}]"),
            };
            writeln!(f, "{:<12} = {formula} = {v:.6} ({v:.3})", m.display_name())?;
        }
        Ok(())
    }
}

pub fn cmd_explain(args: &ExplainArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.scoring.config()?;
    let db = load(&args.input, args.format)?;
    let e = explain(&db, &args.antecedent, &args.consequent, &cfg)?;
    write!(stdout, "{e}").map_err(|err| Error::io("<stdout>", err))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::InvalidParameter(_) | Error::InvalidMiningConfig(_) | Error::InvalidK => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Mine(a) => cmd_mine(a, stdout, stderr),
        Command::Score(a) => cmd_score(a, stdout),
        Command::Rank(a) => cmd_rank(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout, stderr),
        Command::Explain(a) => cmd_explain(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
