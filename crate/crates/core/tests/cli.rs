use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use codeprobe::cli::report::{read_rows, HEADER};

fn codeprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codeprobe"))
        .args(args)
        .env_remove("CODEPROBE_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = codeprobe(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Three utterances `b eh g`, `b eh g`, `b ae g` with two frames per phoneme.
fn toy_corpus(dir: &Path) -> (String, String) {
    let codes = dir.join("codes.tsv");
    let ali = dir.join("ali.tsv");
    fs::write(&codes, "u1\ts1\t1 1 2 2 3 3\nu2\ts2\t1 1 2 2 3 3\nu3\ts1\t1 1 4 4 3 3\n").unwrap();
    let mut text = String::new();
    for (utt, mid) in [("u1", "eh"), ("u2", "eh"), ("u3", "ae")] {
        for (i, label) in ["b", mid, "g"].iter().enumerate() {
            text.push_str(&format!("{utt}\t{label}\t{}\t{}\n", 2 * i, 2 * i + 2));
        }
    }
    fs::write(&ali, text).unwrap();
    (p(&codes).to_owned(), p(&ali).to_owned())
}

fn synth(dir: &Path, extra: &[&str]) -> (String, String) {
    let mut args = vec!["synth", "--out-dir", p(dir)];
    args.extend_from_slice(extra);
    ok(&args);
    (p(&dir.join("codes.tsv")).to_owned(), p(&dir.join("alignments.tsv")).to_owned())
}

#[test]
fn toy_corpus_yields_two_triples() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) = toy_corpus(dir.path());
    let text = ok(&["triples", "--codes", &codes, "--alignments", &ali]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6, "{text}");
    let roles: Vec<&str> = lines.iter().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(roles, ["A", "B", "X", "A", "B", "X"]);
    assert!(lines.iter().all(|l| l.ends_with("b-eh-g") || l.ends_with("b-ae-g")));

    let capped = ok(&["triples", "--codes", &codes, "--alignments", &ali, "--max-per-contrast", "1"]);
    assert_eq!(capped.lines().count(), 3);
}

#[test]
fn triple_seed_matters_only_when_capped() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) = synth(dir.path(), &["--utts", "300", "--phonemes", "6", "--codebook", "32"]);
    let run = |cap: &str, seed: &str| {
        ok(&["triples", "--codes", &codes, "--alignments", &ali, "--max-per-contrast", cap, "--seed", seed])
    };
    assert_ne!(run("2", "1"), run("2", "2"));
    assert_eq!(run("2", "1"), run("2", "1"));
    assert_eq!(run("1000000", "1"), run("1000000", "2"));
}

#[test]
fn synth_writes_requested_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) = synth(dir.path(), &["--utts", "5000", "--seed", "3"]);
    assert_eq!(fs::read_to_string(&codes).unwrap().lines().count(), 5000);
    assert!(fs::read_to_string(&ali).unwrap().lines().count() >= 5000 * 8);
    assert!(dir.path().join("channel.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "synth");
    assert_eq!(manifest["run_id"].as_str().unwrap().len(), 16);
}

#[test]
fn perfect_channel_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) =
        synth(dir.path(), &["--purity", "1.0", "--codebook", "39", "--phonemes", "39", "--utts", "400"]);
    let out = dir.path().join("report.csv");
    ok(&["eval", "--codes", &codes, "--alignments", &ali, "--metrics", "nmi,rsa", "--out", p(&out)]);
    let rows = read_rows(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!((r.value - 1.0).abs() < 1e-9, "{r:?}");
        assert_eq!(r.config, "K=39");
    }
    assert_eq!(rows[0].input_kind, "frame");
    assert!(Path::new(&format!("{}.manifest.json", p(&out))).exists());
}

#[test]
fn eval_reports_every_metric() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) =
        synth(dir.path(), &["--purity", "1.0", "--codebook", "8", "--phonemes", "8", "--utts", "300"]);
    let text = ok(&[
        "eval",
        "--codes",
        &codes,
        "--alignments",
        &ali,
        "--make-triples",
        "--rsa-input",
        "both",
        "--abx-regime",
        "segment",
        "--config-label",
        "toy",
    ]);
    assert!(text.starts_with(&format!("{}\n", HEADER.join(","))));
    let rows = read_rows(text.as_bytes()).unwrap();
    let kinds: Vec<(&str, &str)> = rows.iter().map(|r| (r.metric.as_str(), r.input_kind.as_str())).collect();
    assert_eq!(
        kinds,
        [("nmi", "frame"), ("dc", "frame"), ("rsa", "complete"), ("rsa", "triplet"), ("abx", "segment-encoded")]
    );
    assert!(rows.iter().all(|r| r.config == "toy" && r.run_id == rows[0].run_id));
    for r in &rows {
        assert!(r.value > 0.9, "{r:?}");
    }
}

#[test]
fn eval_with_triples_file_matches_built_triples() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) = synth(dir.path(), &["--codebook", "32", "--phonemes", "6", "--utts", "200"]);
    let triples = dir.path().join("triples.tsv");
    ok(&["triples", "--codes", &codes, "--alignments", &ali, "--out", p(&triples)]);
    let text = ok(&["eval", "--codes", &codes, "--alignments", &ali, "--metrics", "abx", "--triples", p(&triples)]);
    let rows = read_rows(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].n as usize, fs::read_to_string(&triples).unwrap().lines().count() / 3);
    assert!((0.0..=1.0).contains(&rows[0].value));
}

#[test]
fn abx_without_triples_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) = toy_corpus(dir.path());
    let out = codeprobe(&["eval", "--codes", &codes, "--alignments", &ali, "--metrics", "abx"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--triples") && err.contains("--make-triples"), "{err}");
}

#[test]
fn malformed_inputs_fail_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, _) = toy_corpus(dir.path());
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "u1\tb\t0\n").unwrap();
    let out = codeprobe(&["eval", "--codes", &codes, "--alignments", p(&bad), "--metrics", "nmi"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.tsv") && err.contains("line 1"), "{err}");

    let missing = codeprobe(&["eval", "--codes", &codes, "--alignments", "/nonexistent/ali.tsv"]);
    assert!(!missing.status.success());
}

#[test]
fn codebook_sweep_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let plots = dir.path().join("plots");
    ok(&[
        "sweep",
        "codebook",
        "--utts",
        "60",
        "--replicates",
        "3",
        "--out",
        p(&out),
        "--plot-dir",
        p(&plots),
    ]);
    let rows = read_rows(fs::File::open(&out).unwrap()).unwrap();
    let per_cell: Vec<_> = rows.iter().filter(|r| ["nmi", "dc", "rsa", "abx"].contains(&r.metric.as_str())).collect();
    assert_eq!(per_cell.len(), 6 * 3 * 4);
    for k in [32, 64, 128, 256, 512, 1024] {
        let prefix = format!("K={k};");
        assert_eq!(per_cell.iter().filter(|r| r.config.starts_with(&prefix)).count(), 12);
    }
    assert!(rows.iter().any(|r| r.metric == "abx_loess"));
    assert!(rows.iter().any(|r| r.metric.starts_with("corr_")));
    assert!(fs::read_dir(&plots).unwrap().count() > 0);
}

#[test]
fn report_summarizes_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    ok(&["sweep", "purity", "--utts", "60", "--replicates", "2", "--out", p(&sweep)]);
    let summary = dir.path().join("summary.csv");
    let svg = dir.path().join("nmi.svg");
    ok(&[
        "report",
        p(&sweep),
        "--out",
        p(&summary),
        "--plot",
        p(&svg),
        "--metric",
        "nmi",
        "--x-key",
        "alpha",
    ]);
    let text = fs::read_to_string(&summary).unwrap();
    assert!(text.starts_with("metric,input_kind,config,count,mean,std,min,max\n"));
    assert!(text.lines().any(|l| l.starts_with("nmi,frame,K=64;alpha=1,2,")), "{text}");
    let plot = fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<svg") && plot.contains("<polyline"));

    let foreign = dir.path().join("foreign.csv");
    fs::write(&foreign, "a,b\n1,2\n").unwrap();
    assert!(!codeprobe(&["report", p(&foreign)]).status.success());
}

#[test]
fn quantize_maps_features_to_codes() {
    let dir = tempfile::tempdir().unwrap();
    let codebook = dir.path().join("codebook.tsv");
    let features = dir.path().join("features.tsv");
    fs::write(&codebook, "2 2\n0 0\n10 10\n").unwrap();
    fs::write(&features, "u1\ts1\n1 1\n9 9\n0 1\n\nu2\ts2\n10 9\n").unwrap();
    let text = ok(&["quantize", "--codebook", p(&codebook), "--features", p(&features)]);
    assert_eq!(text, "u1\ts1\t0 1 0\nu2\ts2\t1\n");
}

#[test]
fn jobs_env_var_is_honoured_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let (codes, ali) = toy_corpus(dir.path());
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_codeprobe"))
            .args(["eval", "--codes", &codes, "--alignments", &ali, "--metrics", "nmi"])
            .env("CODEPROBE_JOBS", jobs)
            .output()
            .unwrap()
    };
    let one = run("1");
    let two = run("2");
    assert!(one.status.success() && two.status.success());
    assert_eq!(one.stdout, two.stdout);
    assert!(!run("many").status.success());
}
