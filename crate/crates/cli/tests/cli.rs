use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use simpgate::classifiers::{load_model, save_model, ConstantModel, Model, ModelFile};
use simpgate::corpus::Label;
use simpgate::evaluation::EvalReport;
use tempfile::TempDir;

fn toy(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/toy")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn simpgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simpgate"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = simpgate(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn with_resources() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "train-resources",
        "--source",
        &toy("parallel.src"),
        "--target",
        &toy("parallel.tgt"),
        "--out-dir",
        &path(dir.path(), "resources"),
    ]);
    dir
}

fn train(dir: &Path, kind: &str, out: &str) {
    ok(&[
        "train",
        "--data",
        &toy("train.jsonl"),
        "--resources",
        &path(dir, "resources"),
        "--classifier",
        kind,
        "--out",
        &path(dir, out),
    ]);
}

#[test]
fn misaligned_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = path(dir.path(), "a.src");
    let tgt = path(dir.path(), "a.tgt");
    fs::write(&src, "one\ntwo\nthree\n").unwrap();
    fs::write(&tgt, "eins\nzwei\n").unwrap();
    let out = simpgate(&[
        "train-resources",
        "--source",
        &src,
        "--target",
        &tgt,
        "--out-dir",
        &path(dir.path(), "r"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("alignment mismatch") && err.contains('3') && err.contains('2'),
        "{err}"
    );
}

#[test]
fn unknown_classifier_is_a_usage_error() {
    let out = simpgate(&[
        "train",
        "--data",
        "x",
        "--resources",
        "y",
        "--classifier",
        "tree",
        "--out",
        "z",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(simpgate(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_model_fails_gate() {
    let dir = with_resources();
    let cfg = fs::read_to_string(toy("gate.template.json")).unwrap();
    fs::write(dir.path().join("gate.json"), cfg).unwrap();
    let out = simpgate(&[
        "gate",
        "--config",
        &path(dir.path(), "gate.json"),
        "--input",
        &toy("gate_input.txt"),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.json"));
}

#[test]
fn resources_are_reproducible() {
    let a = with_resources();
    let b = with_resources();
    let mut names: Vec<_> = fs::read_dir(a.path().join("resources"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        let x = fs::read(a.path().join("resources").join(&n)).unwrap();
        let y = fs::read(b.path().join("resources").join(&n)).unwrap();
        assert_eq!(x, y, "{n:?}");
    }
}

#[test]
fn svm_training_is_deterministic() {
    let dir = with_resources();
    train(dir.path(), "svm", "a.json");
    train(dir.path(), "svm", "b.json");
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );
    assert!(dir.path().join("a.report.json").exists());
}

#[test]
fn nb_priors_follow_class_frequencies() {
    let dir = with_resources();
    train(dir.path(), "nb", "nb.json");
    let Model::Nb(nb) = load_model(dir.path().join("nb.json")).unwrap().model else {
        panic!("expected a naive Bayes model");
    };
    assert_eq!((nb.prior_yes, nb.prior_no), (0.5, 0.5));
}

#[test]
fn evaluate_json_is_a_report() {
    let dir = with_resources();
    train(dir.path(), "nb", "nb.json");
    let json = ok(&[
        "evaluate",
        "--data",
        &toy("test.jsonl"),
        "--resources",
        &path(dir.path(), "resources"),
        "--model",
        &path(dir.path(), "nb.json"),
        "--json",
    ]);
    let rep: EvalReport = serde_json::from_slice(&json).unwrap();
    assert_eq!(rep.confusion.total(), 18);
    assert_eq!(rep.confusion.human_total(Label::Yes), 8);
    assert!((0.0..=1.0).contains(&rep.accuracy));
}

#[test]
fn constant_no_model_routes_every_original() {
    let dir = with_resources();
    save_model(
        dir.path().join("model.json"),
        &ModelFile::new(Model::Constant(ConstantModel { label: Label::No })),
    )
    .unwrap();
    fs::write(
        dir.path().join("gate.json"),
        fs::read_to_string(toy("gate.template.json")).unwrap(),
    )
    .unwrap();
    let stdout = ok(&[
        "gate",
        "--config",
        &path(dir.path(), "gate.json"),
        "--input",
        &toy("gate_input.txt"),
    ]);
    let inputs: Vec<String> = fs::read_to_string(toy("gate_input.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(String::from)
        .collect();
    let lines: Vec<serde_json::Value> = String::from_utf8(stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), inputs.len() + 1);
    for (d, input) in lines.iter().zip(&inputs) {
        assert_eq!(d["original"], input.as_str());
        assert_eq!(d["routed"], input.as_str());
        assert_eq!(d["routed_is_simplified"], false);
    }
    let summary = &lines.last().unwrap()["summary"];
    assert_eq!(summary["routed_simplified"], 0);
    assert_eq!(summary["routed_original"], inputs.len());
}
