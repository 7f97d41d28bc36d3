use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lve_core::gallery::{Gallery, MatchThreshold, Split};
use lve_core::GrayImage;

fn lve(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lve"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lve(dir, args);
    assert!(
        out.status.success(),
        "lve {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = lve(dir, args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Relative path -> bytes for every file below `root`.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn without_manifest(mut files: BTreeMap<PathBuf, Vec<u8>>) -> BTreeMap<PathBuf, Vec<u8>> {
    files.retain(|p, _| p.file_name().unwrap() != "manifest.json");
    files
}

/// A small synthetic gallery with calibrated thresholds and a ridge
/// generator, all under `dir`.
fn pipeline(dir: &Path) {
    ok(dir, &["gallery", "synth", "--identities", "8", "--partials", "3", "--seed", "5", "--out", "g"]);
    ok(dir, &["calibrate", "--gallery", "g", "--out", "t", "--split", "train", "--fmr", "0.1,0.01"]);
    ok(dir, &["calibrate", "--gallery", "g", "--out", "t", "--split", "test", "--fmr", "0.1,0.01"]);
    ok(dir, &["gen-fixture", "--out", "w", "--seed", "1"]);
}

#[test]
fn gallery_build_splits_disjoint_halves_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    Gallery::synthetic(10, 2, 3).save(&dir.path().join("src")).unwrap();
    std::fs::write(dir.path().join("src/synth0003/readme.txt"), "not an image").unwrap();

    let out = lve(dir.path(), &["gallery", "build", "--source", "src", "--seed", "1", "--out", "a"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped non-image file"));
    ok(dir.path(), &["gallery", "build", "--source", "src", "--seed", "1", "--out", "b"]);

    let split = Split::load(&dir.path().join("a/split.tsv")).unwrap();
    let (train, test) = (split.train(), split.test());
    assert_eq!((train.len(), test.len()), (5, 5));
    assert!(train.iter().all(|id| !test.contains(id)));
    assert_eq!(
        std::fs::read(dir.path().join("a/split.tsv")).unwrap(),
        std::fs::read(dir.path().join("b/split.tsv")).unwrap()
    );
    assert_eq!(without_manifest(snapshot(&dir.path().join("a"))), without_manifest(snapshot(&dir.path().join("b"))));
}

#[test]
fn gallery_build_halves_a_large_layout() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::from_fn(16, 16, |x, y| ((x * 16 + y) % 256) as u8);
    for i in 0..720 {
        let d = dir.path().join("src").join(format!("subject{i:03}"));
        std::fs::create_dir_all(&d).unwrap();
        img.save_png(&d.join("0.png")).unwrap();
    }
    ok(dir.path(), &["gallery", "build", "--source", "src", "--out", "g"]);
    let split = Split::load(&dir.path().join("g/split.tsv")).unwrap();
    assert_eq!((split.train().len(), split.test().len()), (360, 360));
}

#[test]
fn gallery_build_rejects_empty_source() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    assert_eq!(code(dir.path(), &["gallery", "build", "--source", "empty", "--out", "g"]).0, 3);
    assert_eq!(code(dir.path(), &["gallery", "build", "--source", "missing", "--out", "g"]).0, 3);
}

#[test]
fn calibrate_writes_one_file_per_fmr() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gallery", "synth", "--identities", "6", "--partials", "2", "--out", "g"]);
    let out = lve(d, &["calibrate", "--gallery", "g", "--out", "t"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("low-confidence"));
    for fmr in ["0.01", "0.001", "0.0001"] {
        let thr = MatchThreshold::load(&d.join(format!("t/default_train_fmr{fmr}.json"))).unwrap();
        assert_eq!(thr.matcher_id, "default");
    }

    ok(d, &["calibrate", "--gallery", "g", "--out", "u", "--fmr", "1.0"]);
    let hist = std::fs::read_to_string(d.join("u/default_train_impostor_scores.csv")).unwrap();
    let min_score: u32 = hist.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    let thr = MatchThreshold::load(&d.join("u/default_train_fmr1.json")).unwrap();
    assert_eq!(thr.score, min_score);

    ok(d, &["calibrate", "--gallery", "g", "--out", "v"]);
    assert_eq!(without_manifest(snapshot(&d.join("t"))), without_manifest(snapshot(&d.join("v"))));
}

#[test]
fn calibrate_needs_two_identities() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gallery", "synth", "--identities", "2", "--partials", "2", "--out", "g"]);
    let (c, err) = code(dir.path(), &["calibrate", "--gallery", "g", "--out", "t"]);
    assert_eq!(c, 3, "{err}");
    assert!(err.contains("calibration"), "{err}");
}

#[test]
fn evolve_one_generation_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    let common = ["evolve", "--gallery", "g", "--weights", "w/generator.lvw", "--thresholds", "t", "--seed", "3"];
    let run = |extra: &[&str]| {
        let mut args = common.to_vec();
        args.extend_from_slice(extra);
        lve(d, &args)
    };

    let one = run(&["--budget", "17", "--out", "one"]);
    assert!(one.status.success());
    assert!(String::from_utf8_lossy(&one.stderr).contains("gen     1"));
    for f in ["best.png", "best.pgm", "best_latent.csv", "history.csv", "result.json", "checkpoint.lvec"] {
        assert!(d.join("one").join(f).is_file(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(d.join("one/history.csv")).unwrap().lines().count(), 2);

    assert!(run(&["--budget", "68", "--fmr", "0.01", "--out", "full"]).status.success());
    assert!(run(&["--budget", "34", "--fmr", "0.01", "--out", "part"]).status.success());
    assert!(run(&["--budget", "68", "--fmr", "0.01", "--resume", "part/checkpoint.lvec", "--out", "resumed"])
        .status
        .success());
    for f in ["best.png", "best_latent.csv", "history.csv", "result.json", "checkpoint.lvec"] {
        assert_eq!(
            std::fs::read(d.join("full").join(f)).unwrap(),
            std::fs::read(d.join("resumed").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn evolve_picks_threshold_by_fmr_and_checks_inputs_first() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    ok(d, &["calibrate", "--gallery", "g", "--out", "t", "--fmr", "0.001"]);
    ok(d, &["evolve", "--gallery", "g", "--weights", "w/generator.lvw", "--thresholds", "t", "--fmr", "0.001", "--budget", "17", "--out", "r"]);
    let manifest = std::fs::read_to_string(d.join("r/manifest.json")).unwrap();
    assert!(manifest.contains("default_train_fmr0.001.json"));

    let (c, err) = code(d, &["evolve", "--gallery", "g", "--weights", "w/generator.lvw", "--thresholds", "t", "--fmr", "0.5", "--out", "x"]);
    assert_eq!(c, 3);
    assert!(err.contains("default_train_fmr0.5.json") && err.contains("lve calibrate"), "{err}");
    assert!(!d.join("x").exists(), "nothing is written before inputs are checked");

    let (c, _) = code(d, &["evolve", "--gallery", "g", "--weights", "nope.lvw", "--thresholds", "t", "--out", "x"]);
    assert_eq!(c, 3);
    assert_eq!(code(d, &["evolve", "--gallery", "g", "--thresholds", "t", "--out", "x"]).0, 2);
}

#[test]
fn evaluate_reports_rows_per_split_and_matcher() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    for split in ["train", "test"] {
        ok(d, &["calibrate", "--gallery", "g", "--out", "t", "--split", split, "--matcher", "strict", "--fmr", "0.1,0.01"]);
    }
    ok(d, &["evolve", "--gallery", "g", "--weights", "w/generator.lvw", "--thresholds", "t", "--budget", "17", "--fmr", "0.1", "--out", "r"]);

    let table = ok(d, &["evaluate", "--gallery", "g", "--thresholds", "t", "--result", "r", "--fmr", "0.1", "--out", "e"]);
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(table.lines().nth(1).unwrap().starts_with("train"));
    assert!(table.lines().nth(2).unwrap().starts_with("test"));
    let csv = std::fs::read_to_string(d.join("e/report.csv")).unwrap();
    assert!(csv.starts_with("split,matcher_id,fmr,threshold,matched,identities,percent\n"));

    let table = ok(d, &["evaluate", "--gallery", "g", "--thresholds", "t", "--result", "r", "--matchers", "default,strict", "--fmr", "0.1,0.01", "--out", "e2"]);
    assert_eq!(table.lines().count(), 1 + 2 * 2 * 2);
    assert!(table.contains("strict"));

    GrayImage::filled(128, 128, 0).save_png(&d.join("black.png")).unwrap();
    ok(d, &["evaluate", "--gallery", "g", "--thresholds", "t", "--image", "black.png", "--fmr", "0.1,0.01", "--out", "b"]);
    let csv = std::fs::read_to_string(d.join("b/report.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0,4,0.00")), "{csv}");

    let (c, err) = code(d, &["evaluate", "--gallery", "g", "--thresholds", "t", "--result", "r", "--matchers", "nist", "--out", "e3"]);
    assert_eq!(c, 2);
    assert!(err.contains("available: default, strict"), "{err}");
}

#[test]
fn gen_sample_is_seeded_and_reports_noise_control() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-fixture", "--out", "w"]);
    let summary = ok(d, &["gen-sample", "--weights", "w/generator.lvw", "--n", "4", "--seed", "9", "--out", "a"]);
    ok(d, &["gen-sample", "--weights", "w/generator.lvw", "--n", "4", "--seed", "9", "--out", "b"]);
    assert_eq!(without_manifest(snapshot(&d.join("a"))), without_manifest(snapshot(&d.join("b"))));
    assert!(d.join("a/sample_03.png").is_file());

    let noise_max: usize = summary
        .lines()
        .find(|l| l.starts_with("noise"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(noise_max <= 2, "{summary}");

    ok(d, &["gen-sample", "--weights", "w/generator.lvw", "--latent", "a/sample_02.csv", "--out", "c"]);
    assert_eq!(std::fs::read(d.join("c/sample_00.png")).unwrap(), std::fs::read(d.join("a/sample_02.png")).unwrap());
}

#[test]
fn gen_sample_handles_non_square_generators() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-fixture", "--kind", "random", "--seed", "0", "--out", "w"]);
    ok(d, &["gen-sample", "--weights", "w/generator.lvw", "--n", "2", "--out", "s"]);
    let model = lve_core::generator::format::load_generator_file(&d.join("w/generator.lvw")).unwrap();
    let img = GrayImage::load(&d.join("s/sample_00.png")).unwrap();
    assert_eq!((img.height(), img.width()), model.output_shape());
}

#[test]
fn config_file_fills_unset_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"identities": 6, "partials": 2, "seed": 4, "out": "from_config"}"#).unwrap();
    ok(d, &["gallery", "synth", "--config", "cfg.json", "--partials", "1"]);
    let m = std::fs::read_to_string(d.join("from_config/manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&m).unwrap();
    assert_eq!(m["config"]["identities"], 6);
    assert_eq!(m["config"]["partials"], 1);
    assert_eq!(m["seed"], 4);

    std::fs::write(d.join("bad.json"), r#"{"identities": "many"}"#).unwrap();
    assert_eq!(code(d, &["gallery", "synth", "--config", "bad.json", "--out", "x"]).0, 2);
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    ok(d, &["evolve", "--gallery", "g", "--weights", "w/generator.lvw", "--thresholds", "t", "--budget", "34", "--fmr", "0.1", "--seed", "8", "--out", "r"]);
    ok(d, &["rerun", "r/manifest.json", "--out", "again"]);
    let read = |p: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(d.join(p)).unwrap()).unwrap()
    };
    let (a, b) = (read("r/manifest.json"), read("again/manifest.json"));
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["inputs"], b["inputs"]);
    assert_eq!(a["seed"], 8);
    assert!(a["outputs"].as_array().unwrap().iter().all(|o| o["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn writes_stay_inside_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    let before = snapshot(d);
    ok(d, &["evolve", "--gallery", "g", "--weights", "w/generator.lvw", "--thresholds", "t", "--budget", "17", "--fmr", "0.1", "--out", "r"]);
    ok(d, &["evaluate", "--gallery", "g", "--thresholds", "t", "--result", "r", "--fmr", "0.1", "--out", "e"]);
    ok(d, &["gen-sample", "--weights", "w/generator.lvw", "--n", "2", "--out", "s"]);
    let mut after = snapshot(d);
    after.retain(|p, _| !["r", "e", "s"].iter().any(|o| p.starts_with(o)));
    assert_eq!(before, after);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["gallery", "synth"]).0, 2);
    assert_eq!(code(dir.path(), &["calibrate", "--bogus"]).0, 2);
    assert_eq!(code(dir.path(), &["gen-fixture", "--kind", "huge", "--out", "x"]).0, 2);
    assert_eq!(code(dir.path(), &["gallery", "synth", "--out", "x", "--workers", "0"]).0, 2);
    assert_eq!(code(dir.path(), &["calibrate", "--gallery", "g", "--out", "t", "--fmr", "1.5"]).0, 2);
}
