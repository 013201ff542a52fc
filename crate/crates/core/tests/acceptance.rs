//! Acceptance gate. Each test checks one criterion and writes a single
//! `criterion N: PASS|FAIL ...` line straight to stderr, so the verdicts show
//! up in `cargo test` output without `--nocapture`.

mod common;

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use calsteg::audio::{bpb_percent, int_range, AudioSignal};
use calsteg::calibration::{feature_vector_plain, FeatureKind, FeatureVector, Label, N_FEATURES};
use calsteg::classifier::{
    default_c_grid, default_gamma_grid, kernel_matrix, predict, solve_dual, train_svm, KKT_TOLERANCE, MAX_PAIR_UPDATES,
};
use calsteg::embed::{
    capacity_bits, dsss_embed_detailed, gen_payload, lsb_match_embed, lsb_match_extract, lsb_replace_embed,
    lsb_replace_extract, EmbedConfig, LsbSchedule, DSSS_DEFAULT_TARGET_SNR_DB,
};
use calsteg::eval::{
    build_corpus, compare_feature_kinds, extract_manifest, roc_and_auc, run_trials, synth_cover, Comparison, CoverSource,
    EvalConfig, ExtractConfig, Hyper, ManifestRow, ScatterSelection, SynthSpec,
};
use calsteg::features::{hos_stats, hz_of_rmel, rmel_of_hz, rmfcc_signal, RMelFilterbank, RmfccMatrix, N_COEFFS};
use calsteg::seed;
use common::{brute_force_objective, mann_whitney_auc, naive_moments};
use rand::Rng;

const DESK_COVERS: usize = 200;
const DESK_SEED: u64 = 2024;
const DESK_REPETITIONS: usize = 5;

fn verdict(n: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {status} {detail}");
    assert!(pass, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_1_rmel_scale() {
    let fs = 44_100.0;
    let top_is_zero = rmel_of_hz(fs / 2.0, fs).unwrap() == 0.0;
    let sweep: Vec<f64> = (0..1000).map(|i| rmel_of_hz(i as f64 * (fs / 2.0) / 999.0, fs).unwrap()).collect();
    let decreasing = sweep.windows(2).all(|w| w[1] < w[0]);
    let worst = (0..1000)
        .map(|i| {
            let f = i as f64 * (fs / 2.0) / 999.0;
            (hz_of_rmel(rmel_of_hz(f, fs).unwrap(), fs).unwrap() - f).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        1,
        top_is_zero && decreasing && worst <= 1e-6 * fs,
        &format!("rmel(fs/2)=0: {top_is_zero}, strictly decreasing: {decreasing}, max round-trip error {worst:.2e} Hz"),
    );
}

#[test]
fn criterion_2_pipeline_shape() {
    let x: Vec<f64> = (0..441_000).map(|i| 0.5 * (i as f64 * 0.031).sin() + 0.2 * (i as f64 * 0.7).sin()).collect();
    let signal = AudioSignal::from_samples(&x, 44_100, 16).unwrap();
    let bank = RMelFilterbank::standard(44_100).unwrap();
    let m = rmfcc_signal(&signal, &bank).unwrap();
    let fv = feature_vector_plain(&signal, &bank).unwrap();
    let ok = m.n_frames() == 860 && m.values[0].len() == 29 && fv.values.len() == 116;
    verdict(2, ok, &format!("{}x{} matrix, {}-dim vector", m.n_frames(), m.values[0].len(), fv.values.len()));
}

#[test]
fn criterion_3_statistics_oracle() {
    let mut rng = seed::rng(3);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let frames = rng.gen_range(2..200);
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let values: Vec<[f64; N_COEFFS]> = (0..frames)
            .map(|_| std::array::from_fn(|_| scale * (rng.gen::<f64>().powi(3) - 0.2)))
            .collect();
        let m = RmfccMatrix {
            values,
            source_id: format!("{trial}"),
        };
        let stats = hos_stats(&m).unwrap();
        for j in 0..N_COEFFS {
            let col: Vec<f64> = m.values.iter().map(|r| r[j]).collect();
            let want = naive_moments(&col);
            let got = [stats.mean[j], stats.std[j], stats.skewness[j], stats.kurtosis[j]];
            for (g, w) in got.iter().zip(want) {
                // relative to the column scale for the location/scale moments
                let denom = if w.abs() > 0.0 { w.abs() } else { 1.0 };
                worst = worst.max((g - w).abs() / denom.max(1e-300));
            }
        }
    }
    verdict(3, worst <= 1e-9, &format!("max relative error {worst:.2e} over 100 matrices"));
}

#[test]
fn criterion_4_auc_oracle() {
    let mut rng = seed::rng(4);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 500 {
        let n = rng.gen_range(2..=100);
        let levels = rng.gen_range(1..40);
        let scores: Vec<(f64, Label)> = (0..n)
            .map(|_| {
                let v = f64::from(rng.gen_range(0..levels)) * 0.1;
                (v, if rng.gen() { Label::Stego } else { Label::Cover })
            })
            .collect();
        if !(scores.iter().any(|s| s.1 == Label::Stego) && scores.iter().any(|s| s.1 == Label::Cover)) {
            continue;
        }
        worst = worst.max((roc_and_auc(&scores).unwrap().auc - mann_whitney_auc(&scores)).abs());
        checked += 1;
    }
    verdict(4, worst <= 1e-9, &format!("max |AUC - U/(n+ n-)| = {worst:.2e} over {checked} score sets"));
}

#[test]
fn criterion_5_svm_oracle() {
    let mut rng = seed::rng(5);
    let mut worst = 0.0f64;
    let mut constraints_ok = true;
    for _ in 0..200 {
        let n = rng.gen_range(2..=8);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let mut y: Vec<f64> = (0..n).map(|_| if rng.gen() { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let c = rng.gen_range(0.1..10.0);
        let k = kernel_matrix(&x, rng.gen_range(0.1..2.0));
        let sol = solve_dual(&k, &y, c, KKT_TOLERANCE, MAX_PAIR_UPDATES);
        let oracle = brute_force_objective(&k, &y, c);
        worst = worst.max((sol.objective - oracle).abs() / oracle.abs().max(1.0));
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        constraints_ok &= sol.converged && balance.abs() < 1e-9 && sol.alpha.iter().all(|&a| (0.0..=c).contains(&a));
    }
    let xor: Vec<FeatureVector> = [([0.0, 0.0], Label::Cover), ([1.0, 1.0], Label::Cover), ([0.0, 1.0], Label::Stego), ([1.0, 0.0], Label::Stego)]
        .iter()
        .map(|(v, l)| FeatureVector::new(v.to_vec(), *l, FeatureKind::Plain, ""))
        .collect();
    let model = train_svm(&xor, 10.0, 1.0).unwrap();
    let xor_ok = xor.iter().all(|f| predict(&model, f).unwrap().0 == f.label);
    let signed_sum: f64 = model.alphas.iter().sum();
    constraints_ok &= signed_sum.abs() < 1e-9 && model.alphas.iter().all(|a| a.abs() <= model.c_reg);
    verdict(
        5,
        worst <= 1e-4 && xor_ok && constraints_ok,
        &format!("max relative objective gap {worst:.2e} on 200 instances, XOR 100%: {xor_ok}, dual constraints: {constraints_ok}"),
    );
}

#[test]
fn criterion_6_embedder_contracts() {
    let ladder = [25.0, 12.5, 6.25, 3.125, 1.56, 0.78];
    let mut rng = seed::rng(6);
    let mut failures = 0;
    for trial in 0..10_000u64 {
        let n = rng.gen_range(16..400);
        let depth = if rng.gen_bool(0.2) { 8 } else { 16 };
        let (lo, hi) = int_range(depth);
        let raw: Vec<i32> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
        let cover = AudioSignal::from_raw(raw, 44_100, depth).unwrap();
        let bpb = ladder[rng.gen_range(0..ladder.len())];
        let matching = rng.gen();
        let cfg = if matching { EmbedConfig::lsb_match(bpb, trial) } else { EmbedConfig::lsb_replace(bpb, trial) };
        let bits = rng.gen_range(0..=capacity_bits(&cfg, &cover));
        let payload = gen_payload(bits, trial ^ 0xABCD);
        let extracted = if matching {
            lsb_match_extract(&lsb_match_embed(&cover, &payload, &cfg).unwrap(), bits, &cfg).unwrap()
        } else {
            lsb_replace_extract(&lsb_replace_embed(&cover, &payload, &cfg).unwrap(), bits, &cfg).unwrap()
        };
        if extracted != payload {
            failures += 1;
        }
    }

    let mut worst_snr = 0.0f64;
    for i in 0..20 {
        let cover = synth_cover(&SynthSpec::new(20, 1.0, 66), i).unwrap();
        let cfg = EmbedConfig::dsss(DSSS_DEFAULT_TARGET_SNR_DB, i as u64);
        let payload = gen_payload(capacity_bits(&cfg, &cover), i as u64);
        let (_, stats) = dsss_embed_detailed(&cover, &payload, &cfg).unwrap();
        worst_snr = worst_snr.max((stats.pre_clip_snr_db - DSSS_DEFAULT_TARGET_SNR_DB).abs());
    }

    let cover = AudioSignal::from_raw(vec![0; 4096], 44_100, 16).unwrap();
    let exact = [25.0, 12.5, 6.25, 3.125, 1.5625, 0.78125];
    let ladder_ok = ladder.iter().zip(exact).all(|(&bpb, want)| {
        let cfg = EmbedConfig::lsb_replace(bpb, 0);
        LsbSchedule::from_capacity(bpb, 16).payload_bits(cover.len()) == capacity_bits(&cfg, &cover)
            && bpb_percent(capacity_bits(&cfg, &cover), &cover) == want
    });
    verdict(
        6,
        failures == 0 && worst_snr <= 0.1 && ladder_ok,
        &format!("LSB round-trip failures {failures}/10000, DSSS max |SNR - 27.7| = {worst_snr:.3} dB, BPB ladder exact: {ladder_ok}"),
    );
}

struct DeskRun {
    comparison: Comparison,
    calibrated: Vec<FeatureVector>,
}

fn extract_all(rows: &[ManifestRow], dir: &Path, cfg: &ExtractConfig) -> Vec<FeatureVector> {
    extract_manifest(rows, dir, cfg).into_iter().collect::<Result<_, _>>().unwrap()
}

fn desk_eval_config() -> EvalConfig {
    EvalConfig {
        repetitions: DESK_REPETITIONS,
        ..EvalConfig::new(
            Hyper::Grid {
                c_grid: default_c_grid(),
                gamma_grid: default_gamma_grid(),
                folds: 5,
            },
            DESK_SEED,
        )
    }
}

/// Desk corpus of 200 one-second synthetic covers embedded with LsbReplace at
/// `bpb`, evaluated with both feature kinds on shared splits.
fn desk_run(bpb: f64) -> DeskRun {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec::new(DESK_COVERS, 1.0, DESK_SEED);
    let cfg = EmbedConfig::lsb_replace(bpb, DESK_SEED);
    let rows = build_corpus(&CoverSource::Synthetic(spec), &cfg, dir.path()).unwrap();
    let cal_cfg = cfg.with_seed(seed::derive(DESK_SEED, seed::stream::CALIBRATION, 0));
    let plain = extract_all(&rows, dir.path(), &ExtractConfig::plain());
    let calibrated = extract_all(&rows, dir.path(), &ExtractConfig::calibrated(cal_cfg));
    let comparison = compare_feature_kinds(&plain, &calibrated, &desk_eval_config(), &ScatterSelection::TStatistic).unwrap();
    DeskRun { comparison, calibrated }
}

fn desk_k1() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| desk_run(6.25))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn criterion_7_calibration_separation() {
    let run = desk_k1();
    let norms = |l: Label| {
        median(
            run.calibrated
                .iter()
                .filter(|f| f.label == l)
                .map(|f| f.mean_block().iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
        )
    };
    let (stego, cover) = (norms(Label::Stego), norms(Label::Cover));
    verdict(7, stego < cover, &format!("median mean-block norm: stego {stego:.4} < cover {cover:.4}"));
}

#[test]
fn criterion_8_directional_auc() {
    let k1 = &desk_k1().comparison;
    let k4 = desk_run(25.0).comparison;
    let order_ok = k1.calibrated.roc.auc >= k1.plain.roc.auc;
    let high_ok = k4.calibrated.roc.auc >= 0.95;
    verdict(
        8,
        order_ok && high_ok,
        &format!(
            "6.25 BPB: AUC calibrated {:.4} vs plain {:.4}; 25 BPB: AUC calibrated {:.4} (plain {:.4})",
            k1.calibrated.roc.auc, k1.plain.roc.auc, k4.calibrated.roc.auc, k4.plain.roc.auc
        ),
    );
}

fn pipeline_report(dir: &Path) -> (String, Vec<u8>) {
    let spec = SynthSpec::new(DESK_COVERS, 1.0, DESK_SEED);
    let cfg = EmbedConfig::lsb_replace(6.25, DESK_SEED);
    let rows = build_corpus(&CoverSource::Synthetic(spec), &cfg, dir).unwrap();
    let cal_cfg = cfg.with_seed(seed::derive(DESK_SEED, seed::stream::CALIBRATION, 0));
    let features = extract_all(&rows, dir, &ExtractConfig::calibrated(cal_cfg));
    assert_eq!(features[0].values.len(), N_FEATURES);
    let report = run_trials(&features, &desk_eval_config()).unwrap();
    report.save(dir.join("out")).unwrap();
    (
        std::fs::read_to_string(dir.join("out/report.json")).unwrap(),
        std::fs::read(dir.join("out/roc.csv")).unwrap(),
    )
}

#[test]
fn criterion_9_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline_report(a.path());
    let second = pipeline_report(b.path());
    let stego_same = std::fs::read(a.path().join("stego_00000.wav")).unwrap() == std::fs::read(b.path().join("stego_00000.wav")).unwrap();
    verdict(
        9,
        first == second && stego_same,
        &format!("report.json identical: {}, roc.csv identical: {}, stego WAVs identical: {stego_same}", first.0 == second.0, first.1 == second.1),
    );
}
