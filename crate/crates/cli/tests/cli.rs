use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use calsteg::calibration::{write_features_csv, FeatureKind, FeatureVector, Label, N_FEATURES};

fn calsteg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calsteg")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn corpus(dir: &Path, n: usize, bpb: &str, seed: &str) -> PathBuf {
    let out = calsteg(&["--seed", seed, "corpus", "--synthetic", &n.to_string(), "--algo", "lsb-replace", "--bpb", bpb, "--out", p(dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("manifest.csv")
}

fn extract(manifest: &Path, out_csv: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["extract", "--manifest", p(manifest), "--out", p(out_csv)];
    args.extend_from_slice(extra);
    calsteg(&args)
}

fn separable_features(path: &Path, kind: FeatureKind) {
    let rows: Vec<FeatureVector> = (0..40)
        .map(|i| {
            let stego = i % 2 == 1;
            let values = (0..N_FEATURES).map(|j| if stego { 5.0 } else { 0.0 } + ((i * 7 + j) % 11) as f64 * 0.05).collect();
            FeatureVector::new(values, if stego { Label::Stego } else { Label::Cover }, kind, format!("{:05}", i / 2))
        })
        .collect();
    write_features_csv(fs::File::create(path).unwrap(), &rows).unwrap();
}

#[test]
fn corpus_writes_pairs_and_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    corpus(a.path(), 20, "6.25", "7");
    corpus(b.path(), 20, "6.25", "7");
    let wavs = |d: &Path| fs::read_dir(d).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav")).count();
    assert_eq!(wavs(a.path()), 40);
    for name in ["manifest.csv", "cover_00003.wav", "stego_00019.wav"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let manifest = fs::read_to_string(a.path().join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 41);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&calsteg(&["corpus", "--synthetic", "2", "--algo", "lsb-replace", "--bpb", "6.25"])), 2);
    assert_eq!(code(&calsteg(&["frobnicate"])), 2);
    assert_eq!(code(&calsteg(&[])), 2);
    let out = calsteg(&["corpus", "--synthetic", "2", "--bpb", "6.25", "--out", "x"]);
    assert_eq!(code(&out), 2);
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn extract_counts_rows_and_guards_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(&dir.path().join("c"), 20, "6.25", "1");
    let (f1, f2) = (dir.path().join("f1.csv"), dir.path().join("f2.csv"));
    assert_eq!(code(&extract(&manifest, &f1, &["--kind", "plain"])), 0);
    assert_eq!(code(&extract(&manifest, &f2, &["--kind", "plain", "--jobs", "1"])), 0);
    let text = fs::read_to_string(&f1).unwrap();
    assert_eq!(text.lines().count(), 41);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 3 + N_FEATURES);
    assert_eq!(text, fs::read_to_string(&f2).unwrap());

    assert_eq!(code(&extract(&manifest, &f1, &["--kind", "calibrated"])), 2);
    let cal = extract(&manifest, &f1, &["--kind", "calibrated", "--algo", "lsb-replace", "--bpb", "6.25"]);
    assert_eq!(code(&cal), 0);
    assert!(fs::read_to_string(&f1).unwrap().lines().nth(1).unwrap().contains(",calibrated,"));
}

#[test]
fn extract_lists_unreadable_files() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(&dir.path().join("c"), 3, "6.25", "2");
    fs::remove_file(dir.path().join("c/stego_00001.wav")).unwrap();
    let out_csv = dir.path().join("f.csv");
    let failed = extract(&manifest, &out_csv, &[]);
    assert_eq!(code(&failed), 1);
    assert!(String::from_utf8_lossy(&failed.stderr).contains("stego_00001.wav"));
    assert_eq!(code(&extract(&manifest, &out_csv, &["--keep-going"])), 0);
    assert_eq!(fs::read_to_string(&out_csv).unwrap().lines().count(), 6);
}

#[test]
fn eval_on_separable_features_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("f.csv");
    separable_features(&features, FeatureKind::Plain);
    let out = dir.path().join("out");
    let run = calsteg(&["eval", "--features", p(&features), "--repetitions", "3", "--c", "8", "--gamma", "0.01", "--out", p(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["mean_accuracy"], 100.0);
    assert_eq!(report["trials"].as_array().unwrap().len(), 3);
    assert!(out.join("roc.csv").exists());
}

#[test]
fn train_rejects_single_class_and_scan_rejects_bad_models() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("f.csv");
    separable_features(&features, FeatureKind::Calibrated);
    let model = dir.path().join("model.json");
    let train = calsteg(&[
        "train", "--features", p(&features), "--c", "8", "--gamma", "0.01", "--algo", "lsb-replace", "--bpb", "6.25", "--out", p(&model),
    ]);
    assert_eq!(code(&train), 0, "{}", String::from_utf8_lossy(&train.stderr));

    let wav_dir = tempfile::tempdir().unwrap();
    corpus(wav_dir.path(), 1, "6.25", "3");
    let cover = wav_dir.path().join("cover_00000.wav");
    // calibrated model, plain input
    assert_eq!(code(&calsteg(&["scan", "--model", p(&model), "--kind", "plain", p(&cover)])), 1);
    assert_eq!(code(&calsteg(&["scan", "--model", p(&model), p(&cover)])), 0);

    let text = fs::read_to_string(&model).unwrap().replace("calsteg-svm/1", "calsteg-svm/0");
    let old = dir.path().join("old.json");
    fs::write(&old, text).unwrap();
    assert_eq!(code(&calsteg(&["scan", "--model", p(&old), p(&cover)])), 1);

    let single = dir.path().join("single.csv");
    let only_cover: String = fs::read_to_string(&features)
        .unwrap()
        .lines()
        .filter(|l| !l.contains(",stego,"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&single, only_cover).unwrap();
    assert_eq!(code(&calsteg(&["train", "--features", p(&single), "--c", "1", "--gamma", "1", "--out", p(&model)])), 1);
}

#[test]
fn scan_ranks_stego_above_its_cover() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(&dir.path().join("train"), 40, "25", "11");
    let features = dir.path().join("f.csv");
    let cal = ["--kind", "calibrated", "--algo", "lsb-replace", "--bpb", "25"];
    assert_eq!(code(&extract(&manifest, &features, &cal)), 0);
    let model = dir.path().join("model.json");
    let train = calsteg(&["train", "--features", p(&features), "--algo", "lsb-replace", "--bpb", "25", "--out", p(&model)]);
    assert_eq!(code(&train), 0, "{}", String::from_utf8_lossy(&train.stderr));

    let fresh = dir.path().join("fresh");
    corpus(&fresh, 1, "25", "12");
    let scan = calsteg(&["scan", "--model", p(&model), p(&fresh.join("cover_00000.wav")), p(&fresh.join("stego_00000.wav"))]);
    assert_eq!(code(&scan), 0, "{}", String::from_utf8_lossy(&scan.stderr));
    let stdout = String::from_utf8(scan.stdout).unwrap();
    let d: Vec<f64> = stdout.lines().map(|l| l.rsplit('\t').next().unwrap().parse().unwrap()).collect();
    assert_eq!(d.len(), 2);
    assert!(d[1] > d[0], "{stdout}");
}

#[test]
fn pipeline_is_deterministic() {
    let run = |dir: &Path| {
        let manifest = corpus(&dir.join("c"), 12, "25", "5");
        let features = dir.join("f.csv");
        assert_eq!(code(&extract(&manifest, &features, &["--kind", "calibrated", "--algo", "lsb-replace", "--bpb", "25"])), 0);
        let out = dir.join("out");
        let eval = calsteg(&["--seed", "5", "eval", "--features", p(&features), "--repetitions", "3", "--folds", "3", "--out", p(&out)]);
        assert_eq!(code(&eval), 0, "{}", String::from_utf8_lossy(&eval.stderr));
        (fs::read(out.join("report.json")).unwrap(), fs::read(out.join("roc.csv")).unwrap())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(a.path()) == run(b.path()));
}

#[test]
fn compare_writes_both_reports_and_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(&dir.path().join("c"), 12, "25", "6");
    let out = dir.path().join("cmp");
    let run = calsteg(&["compare", "--manifest", p(&manifest), "--repetitions", "2", "--c", "8", "--gamma", "0.01", "--out", p(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["plain/report.json", "calibrated/roc.csv", "comparison.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let scatter = fs::read_to_string(out.join("scatter_calibrated.csv")).unwrap();
    assert_eq!(scatter.lines().next().unwrap().split(',').count(), 4);
    assert_eq!(scatter.lines().count(), 25);
}
