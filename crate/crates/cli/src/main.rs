mod config;
mod report;

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kmodel_core::activity::parse_event_log;
use kmodel_core::history::{HistoryStore, StoreLock};
use kmodel_core::pipeline::{ingest, PageTexts, PipelineConfig, Resources};

use crate::report::ReportArgs;

#[derive(Parser)]
#[command(name = "kmodel", version, about = "Learning-session analytics and familiarity measures")]
struct Cli {
    /// Configuration file (TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log warnings and progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct sessions from an event log and append learning records.
    Ingest(IngestArgs),
    /// Familiarity and analytics reports over a history store.
    Report(ReportArgs),
    /// Knowledge tree utilities.
    Tree {
        #[command(subcommand)]
        command: TreeCommand,
    },
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Check a tree file and print its normalized form.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct IngestArgs {
    /// Line-delimited event log.
    #[arg(long)]
    events: PathBuf,
    /// Page texts: a directory of <doc>/<page>.txt files or a JSON bundle.
    #[arg(long)]
    pages: Option<PathBuf>,
    #[arg(long)]
    person: String,
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    idle_threshold: Option<u64>,
    #[arg(long)]
    merge_gap: Option<u64>,
    #[arg(long)]
    min_page_dwell: Option<u64>,
    #[arg(long)]
    min_session: Option<u64>,
    /// Drop a session that was still open when the log ended.
    #[arg(long)]
    exclude_truncated: bool,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    top_m: Option<usize>,
}

impl IngestArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.sessions.idle_threshold_s, self.idle_threshold);
        set!(cfg.sessions.merge_gap_s, self.merge_gap);
        set!(cfg.sessions.min_page_dwell_s, self.min_page_dwell);
        set!(cfg.sessions.min_session_s, self.min_session);
        set!(cfg.lda.k, self.topics);
        set!(cfg.lda.alpha, self.alpha);
        set!(cfg.lda.beta, self.beta);
        set!(cfg.lda.iterations, self.iterations);
        set!(cfg.lda.seed, self.seed);
        set!(cfg.top_m, self.top_m);
        if self.exclude_truncated {
            cfg.sessions.include_truncated = false;
        }
        for (slot, flag) in [
            (&mut cfg.paths.tree, &self.tree),
            (&mut cfg.paths.store, &self.store),
            (&mut cfg.paths.lexicon, &self.lexicon),
            (&mut cfg.paths.stopwords, &self.stopwords),
            (&mut cfg.paths.pages, &self.pages),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
    }
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }

    pub fn not_found(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }

    pub fn math(error: anyhow::Error) -> Self {
        Failure { code: 3, error }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::usage(e.into())
    }
}

fn run_ingest(args: &IngestArgs, mut cfg: PipelineConfig) -> Result<()> {
    args.apply(&mut cfg);
    cfg.validate()?;
    let tree_path = config::require(cfg.paths.tree.as_ref(), "knowledge tree", "--tree")?;
    let store_path = config::require(cfg.paths.store.as_ref(), "history store", "--store")?;
    let pages_path = config::require(cfg.paths.pages.as_ref(), "page texts", "--pages")?;

    let tree = config::read_tree(tree_path)?;
    let stopwords = config::read_stopwords(cfg.paths.stopwords.as_ref())?;
    let lexicon = config::read_lexicon(cfg.paths.lexicon.as_ref(), Some(&tree))?;
    let pages = PageTexts::load(pages_path)?;
    let file = File::open(&args.events).with_context(|| format!("opening {}", args.events.display()))?;
    let events = parse_event_log(BufReader::new(file)).with_context(|| format!("reading {}", args.events.display()))?;

    let _lock = StoreLock::acquire(store_path)?;
    let mut store = HistoryStore::open(store_path)?;
    let resources = Resources {
        tree: &tree,
        lexicon: &lexicon,
        stopwords: &stopwords,
        pages: &pages,
    };
    let r = ingest(&events, &resources, &cfg, &mut store, &args.person)?;
    println!("events                   {}", r.events);
    println!("sessions (raw)           {}", r.raw_sessions);
    println!("sessions (merged)        {}", r.merged_sessions);
    println!("sessions (filtered)      {}", r.filtered_sessions);
    println!("already ingested         {}", r.already_ingested);
    println!("skipped, missing text    {}", r.skipped_missing_text);
    println!("skipped, too little text {}", r.skipped_too_little_text);
    println!("sessions ingested        {}", r.ingested_sessions);
    println!("records appended         {}", r.records_appended);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(args) => run_ingest(&args, cfg)?,
        Command::Report(args) => {
            let out = report::run(&args, cfg)?;
            print!("{out}");
        }
        Command::Tree {
            command: TreeCommand::Validate { file },
        } => {
            let tree = config::read_tree(&file)?;
            print!("{}", tree.to_indented());
            eprintln!("{} nodes, {} knowledge points", tree.len(), tree.leaves().len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "info" } else { "error" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
