use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use chrono::NaiveDateTime;
use clap::{Args, Subcommand, ValueEnum};
use kmodel_core::analytics::{self, AnalyticsError, Scores};
use kmodel_core::familiarity::{
    normalize, relative_familiarity, standardize, Ebbinghaus, FamiliarityError, LogisticParams,
};
use kmodel_core::history::{HistoryStore, PersonHistories, StoreLock};
use kmodel_core::pipeline::{PageTexts, PipelineConfig};
use kmodel_core::report::{familiarity_rows, familiarity_table, scores_of, OutputFormat, Table};
use kmodel_core::timefmt::{format_datetime, parse_datetime};
use kmodel_core::topic::{merge_multiword_terms, tokenize, TokenizedContent};

use crate::config;
use crate::Failure;

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    person: Option<String>,
    /// Evaluation time, e.g. "2016-03-29 19:24:00"; defaults to now.
    #[arg(long)]
    at: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    retention_k: Option<f64>,
    #[arg(long)]
    retention_c: Option<f64>,
    #[command(subcommand)]
    command: ReportCommand,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Records,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Per-point frequency, cumulative time, latest date and familiarity.
    Familiarity {
        /// Restrict to these points (repeatable).
        #[arg(long = "point")]
        points: Vec<String>,
        /// Apply the configured complexity and worker factors.
        #[arg(long)]
        normalized: bool,
    },
    /// Familiarity divided by the person's mean familiarity.
    Relative {
        /// Report z-scores instead.
        #[arg(long)]
        standardize: bool,
    },
    /// Highest familiarities over records inside a time window.
    Concentrations {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Points both the person and another know.
    CommonTopics {
        #[arg(long)]
        other: String,
        #[arg(long)]
        branch: Option<String>,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        min_f: f64,
    },
    /// Concept pools by corpus statistics or familiarity thresholds.
    Pool(PoolArgs),
    /// Estimated comprehension of a talk covering the given points.
    Lecture {
        /// Comma-separated knowledge points.
        #[arg(long, value_delimiter = ',')]
        points: Vec<String>,
        /// JSON file with {"alpha0": .., "alphas": [..], "points": [..]}.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Rank candidate referees against a paper's knowledge-point shares.
    Referees {
        /// Comma-separated point=share pairs.
        #[arg(long, value_delimiter = ',')]
        paper: Vec<String>,
        /// Comma-separated persons; defaults to everyone in the store.
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long, default_value_t = 50)]
        top: usize,
    },
    /// Mastered points and mean familiarity within a branch.
    Expertise {
        #[arg(long)]
        branch: String,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        min_f: f64,
    },
}

#[derive(Args)]
struct PoolArgs {
    #[arg(long, value_enum)]
    kind: PoolKind,
    #[arg(long, default_value_t = 1)]
    min_tf: u64,
    #[arg(long, default_value_t = 0.0)]
    max_idf: f64,
    #[arg(long, default_value_t = 0.0)]
    min_f: f64,
    #[arg(long, default_value_t = 1.0)]
    quorum: f64,
    /// Group members for `group`; defaults to everyone in the store.
    #[arg(long, value_delimiter = ',')]
    persons: Vec<String>,
    /// Page texts used as the corpus for `tf` and `idf`, one document each.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolKind {
    Tf,
    Idf,
    Person,
    Group,
}

fn analytics_failure(e: AnalyticsError) -> Failure {
    match e {
        AnalyticsError::Tree(_) => Failure::not_found(e.into()),
        AnalyticsError::Familiarity(FamiliarityError::Undefined(_)) => Failure::math(e.into()),
        other => Failure::usage(other.into()),
    }
}

fn familiarity_failure(e: FamiliarityError) -> Failure {
    match e {
        FamiliarityError::Undefined(_) => Failure::math(e.into()),
        other => Failure::usage(other.into()),
    }
}

fn parse_time(raw: &str) -> Result<NaiveDateTime, Failure> {
    parse_datetime(raw).ok_or_else(|| Failure::usage(anyhow!("invalid time `{raw}`")))
}

struct Ctx {
    store: HistoryStore,
    at: NaiveDateTime,
    curve: Ebbinghaus,
    format: OutputFormat,
    cfg: PipelineConfig,
}

impl Ctx {
    fn person_arg<'a>(&self, args: &'a ReportArgs) -> Result<&'a str, Failure> {
        args.person
            .as_deref()
            .ok_or_else(|| Failure::usage(anyhow!("--person is required for this report")))
    }

    /// A person's histories; an empty store reports nothing rather than failing.
    fn histories(&self, person: &str) -> Result<PersonHistories, Failure> {
        if self.store.is_empty() {
            return Ok(PersonHistories::new());
        }
        self.store
            .person(person)
            .cloned()
            .ok_or_else(|| Failure::not_found(anyhow!("unknown person `{person}`")))
    }

    fn scores(&self, person: &str) -> Result<Scores, Failure> {
        let rows = familiarity_rows(&self.histories(person)?, self.at, &self.curve).map_err(familiarity_failure)?;
        Ok(scores_of(&rows))
    }

    fn tree(&self, flag: Option<&PathBuf>) -> Result<kmodel_core::KnowledgeTree, Failure> {
        let path = config::require(flag.or(self.cfg.paths.tree.as_ref()), "knowledge tree", "--tree")?;
        Ok(config::read_tree(path)?)
    }
}

fn score_table(label: &str, values: &BTreeMap<String, f64>) -> Table {
    let mut t = Table::new(["knowledge point", label]);
    for (p, v) in values {
        t.push(vec![p.clone(), format!("{v:.4}")]);
    }
    t
}

fn ranked_table(label: &str, key: &str, rows: &[(String, f64)]) -> Table {
    let mut t = Table::new(["rank", label, key]);
    for (i, (p, v)) in rows.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), p.clone(), format!("{v:.4}")]);
    }
    t
}

fn corpus(args: &PoolArgs, ctx: &Ctx) -> Result<Vec<TokenizedContent>, Failure> {
    let path = config::require(args.corpus.as_ref().or(ctx.cfg.paths.pages.as_ref()), "corpus", "--corpus")?;
    let pages = PageTexts::load(path)?;
    let tree = match args.tree.as_ref().or(ctx.cfg.paths.tree.as_ref()) {
        Some(p) => Some(config::read_tree(p)?),
        None => None,
    };
    let lexicon = config::read_lexicon(ctx.cfg.paths.lexicon.as_ref(), tree.as_ref())?;
    let stopwords = config::read_stopwords(args.stopwords.as_ref().or(ctx.cfg.paths.stopwords.as_ref()))?;
    Ok(pages
        .documents()
        .map(|(_, texts)| tokenize(&merge_multiword_terms(&texts.join("\n"), &lexicon), &stopwords))
        .collect())
}

pub fn run(args: &ReportArgs, mut cfg: PipelineConfig) -> Result<String, Failure> {
    if let Some(k) = args.retention_k {
        cfg.retention.k = k;
    }
    if let Some(c) = args.retention_c {
        cfg.retention.c = c;
    }
    if args.store.is_some() {
        cfg.paths.store.clone_from(&args.store);
    }
    let store_path = config::require(cfg.paths.store.as_ref(), "history store", "--store")?;
    if StoreLock::is_locked(store_path) {
        log::warn!("an ingest holds the store lock; reading the last committed state");
    }
    let store = HistoryStore::open(store_path)?;
    let at = match &args.at {
        Some(raw) => parse_time(raw)?,
        None => chrono::Local::now().naive_local(),
    };
    let curve = cfg.curve()?;
    let ctx = Ctx {
        store,
        at,
        curve,
        format: match args.format {
            Format::Table => OutputFormat::Table,
            Format::Records => OutputFormat::Records,
        },
        cfg,
    };

    let table = match &args.command {
        ReportCommand::Familiarity { points, normalized } => {
            let person = ctx.person_arg(args)?;
            let histories = ctx.histories(person)?;
            let mut rows = familiarity_rows(&histories, ctx.at, &ctx.curve).map_err(familiarity_failure)?;
            if !points.is_empty() {
                let wanted: Vec<String> = points.iter().map(|p| kmodel_core::tree::normalize_name(p)).collect();
                if let Some(missing) = wanted.iter().find(|w| !rows.iter().any(|r| &r.knowledge_point == *w)) {
                    if !ctx.store.is_empty() {
                        return Err(Failure::not_found(anyhow!("`{person}` has no history for `{missing}`")));
                    }
                }
                rows.retain(|r| wanted.contains(&r.knowledge_point));
            }
            if *normalized {
                let scaled = normalize(&scores_of(&rows), &ctx.cfg.normalization_config()).map_err(familiarity_failure)?;
                for r in &mut rows {
                    r.familiarity = scaled[&r.knowledge_point];
                }
            }
            familiarity_table(&rows)
        }
        ReportCommand::Relative { standardize: z } => {
            let scores = ctx.scores(ctx.person_arg(args)?)?;
            if scores.is_empty() {
                score_table("relative familiarity", &scores)
            } else if *z {
                score_table("z-score", &standardize(&scores).map_err(familiarity_failure)?)
            } else {
                score_table("relative familiarity", &relative_familiarity(&scores).map_err(familiarity_failure)?)
            }
        }
        ReportCommand::Concentrations { from, to, top } => {
            let person = ctx.person_arg(args)?;
            let window = (parse_time(from)?, parse_time(to)?);
            let r = analytics::research_concentrations(&ctx.histories(person)?, person, window, ctx.at, *top, &ctx.curve)
                .map_err(analytics_failure)?;
            ranked_table("knowledge point", "familiarity measure", &r.ranked)
        }
        ReportCommand::CommonTopics { other, branch, tree, min_f } => {
            let a = ctx.scores(ctx.person_arg(args)?)?;
            let b = ctx.scores(other)?;
            let tree = match branch {
                Some(_) => Some(ctx.tree(tree.as_ref())?),
                None => None,
            };
            let restrict = tree.as_ref().zip(branch.as_deref());
            let common = analytics::common_topics(&a, &b, restrict, *min_f).map_err(analytics_failure)?;
            ranked_table("knowledge point", "min familiarity", &common)
        }
        ReportCommand::Pool(p) => {
            let pool = match p.kind {
                PoolKind::Tf => analytics::pool_tf(&corpus(p, &ctx)?, p.min_tf).map_err(analytics_failure)?,
                PoolKind::Idf => analytics::pool_idf(&corpus(p, &ctx)?, p.max_idf).map_err(analytics_failure)?,
                PoolKind::Person => analytics::pool_person(&ctx.scores(ctx.person_arg(args)?)?, p.min_f),
                PoolKind::Group => {
                    let members: Vec<String> = if p.persons.is_empty() {
                        ctx.store.persons().map(String::from).collect()
                    } else {
                        p.persons.clone()
                    };
                    let mut group = BTreeMap::new();
                    for m in members {
                        let s = ctx.scores(&m)?;
                        group.insert(m, s);
                    }
                    analytics::pool_group(&group, p.min_f, p.quorum).map_err(analytics_failure)?
                }
            };
            let criteria: Vec<String> = pool.criteria.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let mut t = Table::new(["concept", "pool", "criteria"]);
            for m in &pool.members {
                t.push(vec![m.clone(), format!("{:?}", pool.pool_type), criteria.join(" ")]);
            }
            t
        }
        ReportCommand::Lecture { points, weights } => {
            let scores = ctx.scores(ctx.person_arg(args)?)?;
            let points: Vec<String> = points.iter().map(|p| kmodel_core::tree::normalize_name(p)).collect();
            let params: Option<LogisticParams> = match weights {
                Some(path) => {
                    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    Some(serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?)
                }
                None => None,
            };
            let score = analytics::lecture_comprehension(&scores, &points, params.as_ref()).map_err(analytics_failure)?;
            let mut t = Table::new(["mode", "score"]);
            let mode = if params.is_some() { "logistic" } else { "mean relative familiarity" };
            t.push(vec![mode.to_string(), format!("{score:.4}")]);
            t
        }
        ReportCommand::Referees { paper, candidates, from, to, top } => {
            let mut shares = BTreeMap::new();
            for pair in paper {
                let (p, v) = pair
                    .split_once('=')
                    .ok_or_else(|| Failure::usage(anyhow!("expected point=share, got `{pair}`")))?;
                let v: f64 = v.trim().parse().map_err(|_| Failure::usage(anyhow!("bad share in `{pair}`")))?;
                shares.insert(kmodel_core::tree::normalize_name(p), v);
            }
            let from = match from {
                Some(f) => parse_time(f)?,
                None => NaiveDateTime::MIN,
            };
            let to = match to {
                Some(t) => parse_time(t)?,
                None => ctx.at,
            };
            let people: Vec<String> = if candidates.is_empty() {
                ctx.store.persons().map(String::from).collect()
            } else {
                candidates.clone()
            };
            let mut reports = BTreeMap::new();
            for person in people {
                let r = analytics::research_concentrations(&ctx.histories(&person)?, &person, (from, to), ctx.at, *top, &ctx.curve)
                    .map_err(analytics_failure)?;
                reports.insert(person, r);
            }
            let m = analytics::match_referees(&shares, &reports).map_err(analytics_failure)?;
            ranked_table("referee", "similarity", &m.ranked_referees)
        }
        ReportCommand::Expertise { branch, tree, min_f } => {
            let tree = ctx.tree(tree.as_ref())?;
            let scores = ctx.scores(ctx.person_arg(args)?)?;
            let e = analytics::discipline_expertise(&scores, &tree, branch, *min_f).map_err(analytics_failure)?;
            let mut t = Table::new(["branch", "points", "mastered", "mean familiarity"]);
            t.push(vec![e.branch, e.points.to_string(), e.mastered.to_string(), format!("{:.4}", e.average)]);
            t
        }
    };
    let mut out = table.render(ctx.format);
    if ctx.format == OutputFormat::Table {
        out.push_str(&format!("evaluated at {}\n", format_datetime(&ctx.at)));
    }
    Ok(out)
}
