use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexcourt::index::{Field, Granularity, Index};

fn lexcourt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexcourt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = lexcourt(args);
    assert!(
        out.status.success(),
        "lexcourt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn synth(cases: usize, queries: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        ok(&[
            "synth",
            s(&root.join("data")),
            "--seed",
            "5",
            "--cases",
            &cases.to_string(),
            "--queries",
            &queries.to_string(),
        ]);
        Fixture { _dir: dir, root }
    }

    fn p(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn cases(&self) -> PathBuf {
        self.p("data/cases")
    }

    fn qrels(&self) -> PathBuf {
        self.p("data/qrels.tsv")
    }

    fn titles(&self) -> PathBuf {
        self.p("data/titles.txt")
    }
}

#[test]
fn stats_reports_collection_shape() {
    let f = Fixture::synth(40, 8);
    let out = ok(&["stats", s(&f.cases()), "--qrels", s(&f.qrels())]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["total_cases"], 40);
    assert_eq!(v["query_cases"], 8);
    assert!(v["notice_cases_per_query"]["max"].as_f64().unwrap() >= 1.0);

    let out = ok(&["stats", s(&f.cases())]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["notice_cases_per_query"].is_null());
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = lexcourt(&["stats", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = lexcourt(&["index", s(&dir.path().join("missing")), "-o", s(&dir.path().join("i"))]);
    assert_eq!(out.status.code(), Some(2));

    let out = lexcourt(&["search"]);
    assert_eq!(out.status.code(), Some(2));

    let f = Fixture::synth(20, 4);
    let index = f.p("idx");
    ok(&["index", s(&f.cases()), "-o", s(&index)]);
    let out = lexcourt(&["search", s(&index), s(&f.cases()), "--qrels", s(&f.qrels()), "--depth", "101"]);
    assert_eq!(out.status.code(), Some(2));

    let run = dir.path().join("run.txt");
    let qrels = dir.path().join("qrels.tsv");
    fs::write(&run, "zz Q0 a 1 1.0 t\n").unwrap();
    fs::write(&qrels, "q\ta\n").unwrap();
    let out = lexcourt(&["eval", s(&run), "--qrels", s(&qrels)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn passage_index_has_one_unit_per_passage() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases");
    fs::create_dir(&cases).unwrap();
    fs::write(cases.join("a.txt"), "[1] First passage about refugees.\n[2] Second passage.\n").unwrap();
    fs::write(cases.join("b.txt"), "One paragraph.\n\nAnother paragraph.\n\nA third one.").unwrap();
    let index = dir.path().join("idx");
    ok(&["index", s(&cases), "--granularity", "passage", "-o", s(&index)]);
    let idx = Index::load(&index).unwrap();
    assert_eq!(idx.granularity(), Granularity::Passage);
    assert_eq!(idx.unit_count(), 5);
    assert!(!idx.has_statute_field());
}

#[test]
fn titles_populate_statute_field() {
    let f = Fixture::synth(30, 6);
    let index = f.p("idx");
    ok(&["index", s(&f.cases()), "--titles", s(&f.titles()), "-o", s(&index)]);
    let idx = Index::load(&index).unwrap();
    assert!(idx.has_statute_field());
    assert!(idx.vocabulary_size(Field::Statute) > 0);

    // annotate + index --annotations builds the same index
    let ann = f.p("ann.tsv");
    ok(&["annotate", s(&f.cases()), "--titles", s(&f.titles()), "-o", s(&ann)]);
    let index2 = f.p("idx2");
    ok(&["index", s(&f.cases()), "--annotations", s(&ann), "-o", s(&index2)]);
    assert_eq!(fs::read(&index).unwrap(), fs::read(&index2).unwrap());
}

#[test]
fn search_eval_submit_pipeline() {
    let f = Fixture::synth(40, 8);
    let index = f.p("idx");
    ok(&["index", s(&f.cases()), "--titles", s(&f.titles()), "-o", s(&index)]);
    let run = f.p("run.txt");
    ok(&["search", s(&index), s(&f.cases()), "--qrels", s(&f.qrels()), "-o", s(&run)]);
    let text = fs::read_to_string(&run).unwrap();
    let parsed = lexcourt::runfile::parse_run(&text).unwrap();
    assert_eq!(parsed.len(), 8);
    for rows in parsed.values() {
        assert!(rows.len() <= 100);
        assert!(rows.windows(2).all(|w| w[0].score >= w[1].score));
    }
    let mut ids: Vec<&String> = parsed.keys().collect();
    ids.sort();
    assert_eq!(ids, parsed.keys().collect::<Vec<_>>());

    let metrics = f.p("metrics.tsv");
    let summary = f.p("summary.json");
    ok(&["eval", s(&run), "--qrels", s(&f.qrels()), "-o", s(&metrics), "--summary", s(&summary)]);
    let tsv = fs::read_to_string(&metrics).unwrap();
    assert!(tsv.starts_with("k\tprecision\trecall\tf1\n"));
    assert_eq!(tsv.lines().count(), 101);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    let k = v["best_k"].as_u64().unwrap() as usize;

    let sub = f.p("sub.tsv");
    ok(&["submit", s(&run), "--cutoff", &k.to_string(), "-o", s(&sub)]);
    let sub_text = fs::read_to_string(&sub).unwrap();
    for q in parsed.keys() {
        let n = sub_text.lines().filter(|l| l.starts_with(&format!("{q}\t"))).count();
        assert_eq!(n, k.min(parsed[q].len()));
    }
}

#[test]
fn statute_boosts_off_matches_plain_index() {
    let f = Fixture::synth(40, 8);
    let with = f.p("with");
    let without = f.p("without");
    ok(&["index", s(&f.cases()), "--titles", s(&f.titles()), "-o", s(&with)]);
    ok(&["index", s(&f.cases()), "-o", s(&without)]);
    let run_with = f.p("a.txt");
    let run_without = f.p("b.txt");
    let qrels = f.qrels();
    let common = ["--qrels", s(&qrels), "--sb", "0", "--Pb", "1"];
    ok(&[&["search", s(&with), s(&f.cases())][..], &common, &["-o", s(&run_with)]].concat());
    ok(&[&["search", s(&without), s(&f.cases())][..], &common, &["-o", s(&run_without)]].concat());
    assert_eq!(fs::read(&run_with).unwrap(), fs::read(&run_without).unwrap());
}

#[test]
fn empty_run_gives_empty_submission() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run.txt");
    let sub = dir.path().join("sub.tsv");
    fs::write(&run, "").unwrap();
    let out = ok(&["submit", s(&run), "--cutoff", "7", "-o", s(&sub)]);
    assert_eq!(fs::read_to_string(&sub).unwrap(), "");
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

fn tune(f: &Fixture, index: &Path, log: &str, extra: &[&str]) -> serde_json::Value {
    let cases = f.cases();
    let qrels = f.qrels();
    let mut args = vec![
        "tune",
        s(index),
        s(&cases),
        "--qrels",
        s(&qrels),
        "--train-count",
        "8",
        "--trials",
        "4",
        "--seed",
        "3",
    ];
    let log = f.p(log);
    let best = f.p("best.cfg");
    args.extend(["--log", s(&log), "--best-config", s(&best)]);
    args.extend(extra);
    let out = ok(&args);
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn tune_is_deterministic_and_resumable() {
    let f = Fixture::synth(60, 12);
    let index = f.p("idx");
    ok(&["index", s(&f.cases()), "--titles", s(&f.titles()), "-o", s(&index)]);

    let r1 = tune(&f, &index, "log1.jsonl", &[]);
    let r2 = tune(&f, &index, "log2.jsonl", &[]);
    assert_eq!(r1, r2);
    let log1 = fs::read_to_string(f.p("log1.jsonl")).unwrap();
    assert_eq!(log1, fs::read_to_string(f.p("log2.jsonl")).unwrap());
    assert_eq!(log1.lines().count(), 4);
    assert_eq!(r1["dev"]["queries"], 4);

    // resume from the first two trials
    let partial: String = log1.lines().take(2).map(|l| format!("{l}\n")).collect();
    fs::write(f.p("partial.jsonl"), partial).unwrap();
    let partial_path = f.p("partial.jsonl");
    let r3 = tune(&f, &index, "log3.jsonl", &["--resume", s(&partial_path)]);
    assert_eq!(r1, r3);
    assert_eq!(fs::read_to_string(f.p("log3.jsonl")).unwrap(), log1);

    // the best config feeds straight into search
    let run = f.p("run.txt");
    let best = f.p("best.cfg");
    ok(&["search", s(&index), s(&f.cases()), "--qrels", s(&f.qrels()), "--config", s(&best), "-o", s(&run)]);
}

#[test]
fn eval_of_search_output_matches_in_process_metrics() {
    use lexcourt::{ExperimentConfig, Retriever, load_collection};
    use std::collections::BTreeMap;

    let f = Fixture::synth(40, 8);
    let index = f.p("idx");
    ok(&["index", s(&f.cases()), "--titles", s(&f.titles()), "-o", s(&index)]);
    let run = f.p("run.txt");
    ok(&["search", s(&index), s(&f.cases()), "--qrels", s(&f.qrels()), "--Pb", "2", "--sb", "1", "-o", s(&run)]);
    let metrics = f.p("m.tsv");
    ok(&["eval", s(&run), "--qrels", s(&f.qrels()), "-o", s(&metrics)]);

    let collection = load_collection(&f.cases(), Some(&f.qrels()), None).unwrap();
    let idx = Index::load(&index).unwrap();
    let cfg = ExperimentConfig {
        passage_boost: 2.0,
        statute_boost: 1.0,
        ..ExperimentConfig::default()
    };
    let retriever = Retriever::new(&idx, &collection, cfg.retrieval_config().unwrap()).unwrap();
    let rankings = retriever.retrieve_all(&collection.query_ids()).unwrap();
    let lists: BTreeMap<String, Vec<String>> =
        rankings.into_iter().map(|r| (r.query_id.clone(), r.case_ids())).collect();
    let expected = lexcourt::eval::metrics_at_ranks(&lists, &collection.qrels, 100).unwrap();
    assert_eq!(fs::read_to_string(&metrics).unwrap(), lexcourt::eval::metrics_tsv(&expected));
}
