//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for bad input or arguments, 1 for internal
//! failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ExperimentConfig, ScorerKind};
use crate::corpus::{self, Collection};
use crate::error::{Error, Result};
use crate::eval::{self, CutoffSummary, DEFAULT_TRAIN_COUNT};
use crate::index::{Granularity, Index, build_index};
use crate::retrieval::{DEFAULT_DEPTH, Retriever};
use crate::runfile;
use crate::statutes::{self, PassageAnnotations};
use crate::synthetic::{self, SyntheticConfig};
use crate::tuner::{self, ParamSpace, TrialResult, TuneContext};

#[derive(Debug, Parser)]
#[command(name = "lexcourt", version, about = "Lexical prior-case retrieval with passage fusion and statute fields")]
pub struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Collection statistics as JSON.
    Stats(StatsArgs),
    /// Detect statute sections and write passage annotations.
    Annotate(AnnotateArgs),
    /// Build an index file.
    Index(IndexArgs),
    /// Retrieve notice cases and write a TREC run file.
    Search(SearchArgs),
    /// Precision, recall and F1 at every rank of a run file.
    Eval(EvalArgs),
    /// Random search over retrieval hyperparameters.
    Tune(TuneArgs),
    /// Cut a run file down to a competition submission.
    Submit(SubmitArgs),
    /// Write a synthetic collection.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Directory of `<case_id>.txt` files.
    corpus_dir: PathBuf,
    /// Relevance file (`query<TAB>notice` per line); its queries become query cases.
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Query case ids, one per line; overrides the qrels keys.
    #[arg(long)]
    queries: Option<PathBuf>,
}

impl CorpusArgs {
    fn load(&self) -> Result<Collection> {
        corpus::load_collection(&self.corpus_dir, self.qrels.as_deref(), self.queries.as_deref())
    }
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Statute titles, one per line.
    #[arg(long)]
    titles: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Statute titles; annotates the collection and fills the statute field.
    #[arg(long, conflicts_with = "annotations")]
    titles: Option<PathBuf>,
    /// Precomputed annotations from `annotate`.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// `doc` or `passage` (default: config value, else passage).
    #[arg(long)]
    granularity: Option<Granularity>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Default)]
struct RetrievalFlags {
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scorer: Option<ScorerKind>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Query terms kept per query, or `none`.
    #[arg(long = "T", value_name = "T")]
    max_terms: Option<String>,
    /// Passage boost for query passages citing a statute section.
    #[arg(long = "Pb", value_name = "P_B")]
    passage_boost: Option<f64>,
    /// Weight of the statute field.
    #[arg(long = "sb", value_name = "S_B")]
    statute_boost: Option<f64>,
    #[arg(long = "krrf")]
    k_rrf: Option<f64>,
    /// Cases returned per query (at most 100).
    #[arg(long)]
    depth: Option<usize>,
}

impl RetrievalFlags {
    /// Defaults for the index granularity, then the config file, then flags.
    fn config(&self, granularity: Granularity) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults_for(granularity);
        if let Some(p) = &self.config {
            cfg = cfg.with_file(p)?;
        }
        if let Some(s) = self.scorer {
            cfg.scorer = s;
        }
        let floats = [
            (&mut cfg.k1, self.k1),
            (&mut cfg.b, self.b),
            (&mut cfg.lambda, self.lambda),
            (&mut cfg.passage_boost, self.passage_boost),
            (&mut cfg.statute_boost, self.statute_boost),
            (&mut cfg.k_rrf, self.k_rrf),
        ];
        for (slot, value) in floats {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if let Some(t) = &self.max_terms {
            cfg.set("T", t)?;
        }
        if let Some(d) = self.depth {
            cfg.depth = d;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    index: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    flags: RetrievalFlags,
    /// Run tag written in the last column.
    #[arg(long, default_value = "lexcourt")]
    tag: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    max_rank: usize,
    /// Score only the queries present in the run; by default every qrels
    /// query counts and missing ones have empty rankings.
    #[arg(long)]
    run_queries_only: bool,
    /// Metrics TSV (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// JSON summary of the selected cutoff (default: stderr).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    index: PathBuf,
    corpus_dir: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Query order for the train/dev split (default: lexicographic).
    #[arg(long)]
    query_order: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TRAIN_COUNT)]
    train_count: usize,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    max_rank: usize,
    /// Parameter ranges (`key=lo,hi` lines).
    #[arg(long)]
    space: Option<PathBuf>,
    /// Pin the statute boosts to P_b=1, s_b=0.
    #[arg(long, conflicts_with = "statutes_only")]
    no_statutes: bool,
    /// Search only P_b and s_b; everything else comes from the base config.
    #[arg(long)]
    statutes_only: bool,
    /// Base configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trials log to continue from.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Trials log (JSON lines).
    #[arg(long)]
    log: PathBuf,
    /// Best configuration, consumable by `search --config`.
    #[arg(long)]
    best_config: PathBuf,
    /// Dev-set report (JSON, default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SubmitArgs {
    run: PathBuf,
    #[arg(long)]
    cutoff: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Query cases (default: a fifth of the cases).
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    vocab: usize,
    /// Probability that an issue passage cites its statute section.
    #[arg(long, default_value_t = 0.7)]
    density: f64,
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Internal(e.to_string()))
}

fn load_index_for(path: &Path, collection: &Collection) -> Result<Index> {
    let index = Index::load(path)?;
    if index.case_count() != collection.cases.len()
        || collection.cases.keys().any(|c| index.units_of_case(c).is_empty())
    {
        return Err(Error::Validation(format!(
            "index {} was built from a different collection",
            path.display()
        )));
    }
    Ok(index)
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let collection = args.corpus.load()?;
    write_output(args.output.as_deref(), &to_json(&corpus::collection_stats(&collection))?)
}

fn cmd_annotate(args: &AnnotateArgs) -> Result<()> {
    let collection = args.corpus.load()?;
    let catalog = statutes::load_statute_titles(&args.titles)?;
    let ann = statutes::annotate_collection(&collection, &catalog);
    log::info!("{} statute section references", ann.ref_count());
    write_output(args.output.as_deref(), &ann.to_tsv())
}

fn cmd_index(args: &IndexArgs) -> Result<()> {
    let collection = args.corpus.load()?;
    let cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let granularity = args.granularity.or(cfg.granularity).unwrap_or(Granularity::Passage);
    let annotations = match (&args.titles, &args.annotations) {
        (Some(t), _) => Some(statutes::annotate_collection(&collection, &statutes::load_statute_titles(t)?)),
        (None, Some(a)) => Some(PassageAnnotations::from_tsv(&read(a)?)?),
        (None, None) => None,
    };
    let index = build_index(&collection, annotations.as_ref(), granularity, &cfg.pipeline_config()?)?;
    log::info!("indexed {} units from {} cases", index.unit_count(), index.case_count());
    index.save(&args.output)
}

fn cmd_search(args: &SearchArgs) -> Result<()> {
    let collection = args.corpus.load()?;
    let index = load_index_for(&args.index, &collection)?;
    let cfg = args.flags.config(index.granularity())?;
    let queries = collection.query_ids();
    if queries.is_empty() {
        return Err(Error::Argument("no query cases; pass --qrels or --queries".into()));
    }
    let retriever = Retriever::new(&index, &collection, cfg.retrieval_config()?)?;
    let rankings = retriever.retrieve_all(&queries)?;
    write_output(args.output.as_deref(), &runfile::write_run(&rankings, &args.tag))
}

#[derive(Serialize)]
struct EvalSummary {
    queries: usize,
    best_k: usize,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let run = runfile::parse_run(&read(&args.run)?)?;
    let qrels = corpus::load_qrels(&args.qrels)?;
    let mut lists = runfile::run_case_lists(&run);
    if !args.run_queries_only {
        for q in qrels.keys() {
            lists.entry(q.clone()).or_default();
        }
    }
    let metrics = eval::metrics_at_ranks(&lists, &qrels, args.max_rank)?;
    let best_k = eval::select_cutoff(&metrics)
        .ok_or_else(|| Error::Argument("max rank must be at least 1".into()))?;
    let m = metrics[best_k - 1];
    let summary = EvalSummary {
        queries: lists.len(),
        best_k,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    };
    write_output(args.output.as_deref(), &eval::metrics_tsv(&metrics))?;
    let json = to_json(&summary)?;
    match &args.summary {
        Some(p) => fs::write(p, json).map_err(|e| Error::io(p, e)),
        None => {
            eprint!("{json}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TuneReport {
    trials: usize,
    best_trial: usize,
    params: tuner::TrialParams,
    train: CutoffSummary,
    dev: CutoffSummary,
}

fn read_query_order(path: &Path) -> Result<Vec<String>> {
    Ok(read(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn cmd_tune(args: &TuneArgs) -> Result<()> {
    let qrels = corpus::load_qrels(&args.qrels)?;
    let collection = corpus::load_collection(&args.corpus_dir, Some(&args.qrels), None)?;
    let index = load_index_for(&args.index, &collection)?;
    let mut base = ExperimentConfig::defaults_for(index.granularity());
    if let Some(p) = &args.config {
        base = base.with_file(p)?;
    }
    base.retrieval_config()?;

    let queries = match &args.query_order {
        Some(p) => {
            let order = read_query_order(p)?;
            let mut sorted = order.clone();
            sorted.sort();
            sorted.dedup();
            if sorted != collection.query_ids() {
                return Err(Error::Validation(
                    "query order file must list every qrels query exactly once".into(),
                ));
            }
            order
        }
        None => collection.query_ids(),
    };
    let (train, dev) = eval::split_train_dev(&queries, args.train_count)?;
    log::info!("{} train and {} dev queries", train.len(), dev.len());

    let mut space = match &args.space {
        Some(p) => ParamSpace::parse(&read(p)?)?,
        None => ParamSpace::default(),
    };
    if args.no_statutes {
        space = space.without_statutes();
    } else if args.statutes_only {
        space = ParamSpace {
            passage_boost: space.passage_boost,
            statute_boost: space.statute_boost,
            ..ParamSpace::statutes_only(&base)
        };
    }

    let resumed = match &args.resume {
        Some(p) if p.exists() => tuner::parse_trials_log(&read(p)?)?,
        _ => Vec::new(),
    };
    let mut log_text = String::new();
    for t in &resumed {
        log_text.push_str(&trial_line(t)?);
    }
    fs::write(&args.log, &log_text).map_err(|e| Error::io(&args.log, e))?;
    let mut log_file = fs::OpenOptions::new()
        .append(true)
        .open(&args.log)
        .map_err(|e| Error::io(&args.log, e))?;

    let ctx = TuneContext {
        index: &index,
        collection: &collection,
        qrels: &qrels,
        base: base.clone(),
        queries: train.clone(),
        max_rank: args.max_rank,
    };
    let results = tuner::run_random_search(&ctx, &space, args.trials, args.seed, resumed, &mut |t| {
        log_file
            .write_all(trial_line(t)?.as_bytes())
            .map_err(|e| Error::io(&args.log, e))
    })?;

    let best = &results[0];
    let best_cfg = best.params.apply(&base);
    fs::write(&args.best_config, best_cfg.to_text()).map_err(|e| Error::io(&args.best_config, e))?;
    let train_summary = CutoffSummary::at(&best.metrics, best.best_k, train.len())
        .ok_or_else(|| Error::Internal("best cutoff outside metrics".into()))?;
    let dev_summary = ctx.evaluate_at(&best_cfg, &dev, best.best_k)?;
    let report = TuneReport {
        trials: results.len(),
        best_trial: best.trial,
        params: best.params,
        train: train_summary,
        dev: dev_summary,
    };
    write_output(args.report.as_deref(), &to_json(&report)?)
}

fn trial_line(t: &TrialResult) -> Result<String> {
    serde_json::to_string(t)
        .map(|s| s + "\n")
        .map_err(|e| Error::Internal(e.to_string()))
}

fn cmd_submit(args: &SubmitArgs) -> Result<()> {
    if args.cutoff == 0 {
        return Err(Error::Argument("cutoff must be at least 1".into()));
    }
    let run = runfile::parse_run(&read(&args.run)?)?;
    if run.is_empty() {
        log::warn!("run file {} is empty", args.run.display());
    }
    write_output(args.output.as_deref(), &runfile::write_submission(&run, args.cutoff))
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut cfg = SyntheticConfig::new(args.seed, args.cases, args.vocab, args.density);
    cfg.n_queries = args.queries;
    let synth = synthetic::generate(&cfg)?;
    synth.write_to(&args.output_dir)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Argument(e.to_string()))?;
    execute(cli)
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Annotate(a) => cmd_annotate(a),
        Command::Index(a) => cmd_index(a),
        Command::Search(a) => cmd_search(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Submit(a) => cmd_submit(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Binary entry point: parses the process arguments and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "scorer=bm25\nk1=2\nT=100\n").unwrap();
        let flags = RetrievalFlags {
            config: Some(path),
            k1: Some(0.5),
            max_terms: Some("none".into()),
            ..Default::default()
        };
        let cfg = flags.config(Granularity::Document).unwrap();
        assert_eq!(cfg.scorer, ScorerKind::Bm25);
        assert_eq!(cfg.k1, 0.5);
        assert_eq!(cfg.max_terms, None);
        // unset keys fall back to the document-level defaults
        assert_eq!(cfg.b, 0.99);
    }

    #[test]
    fn granularity_picks_defaults() {
        let flags = RetrievalFlags::default();
        let doc = flags.config(Granularity::Document).unwrap();
        assert_eq!(doc.max_terms, Some(200));
        assert_eq!((doc.k1, doc.b, doc.lambda), (1.09, 0.99, 0.64));
        assert_eq!(flags.config(Granularity::Passage).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn parses_search_flags() {
        let cli = Cli::try_parse_from([
            "lexcourt", "search", "idx", "corpus", "--qrels", "q.tsv", "--scorer", "lm", "--T", "200", "--Pb", "2",
            "--sb", "0.5", "--krrf", "60", "-o", "run.txt",
        ])
        .unwrap();
        let Command::Search(s) = cli.command else {
            panic!("expected search");
        };
        let cfg = s.flags.config(Granularity::Passage).unwrap();
        assert_eq!(cfg.max_terms, Some(200));
        assert_eq!((cfg.passage_boost, cfg.statute_boost), (2.0, 0.5));
    }

    #[test]
    fn bad_arguments_exit_two() {
        let err = run(["lexcourt", "search"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
