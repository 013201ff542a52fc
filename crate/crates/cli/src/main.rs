//! `calsteg` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Every random
//! stream is derived from `--seed` (default 0).

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use calsteg::calibration::{read_features_csv, write_features_csv, FeatureKind, FeatureVector};
use calsteg::classifier::{default_c_grid, default_gamma_grid, grid_search, predict, train_svm, GaConfig, SvmModel};
use calsteg::embed::{Algorithm, EmbedConfig, DSSS_DEFAULT_TARGET_SNR_DB};
use calsteg::eval::{
    build_corpus, compare_feature_kinds, extract_file, extract_manifest, read_manifest, run_trials, CoverSource,
    EvalConfig, EvalReport, ExtractConfig, Hyper, ManifestRow, ScatterSelection, SynthSpec, DEFAULT_REPETITIONS,
    DEFAULT_TRAIN_FRAC,
};
use calsteg::{seed, Label};
use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "calsteg", version, about = "Calibrated audio steganalysis")]
struct Cli {
    /// Worker threads for file-level and trial-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build paired cover/stego WAVs and a manifest.
    Corpus(CorpusArgs),
    /// Extract plain or calibrated features for a manifest.
    Extract(ExtractArgs),
    /// Train an SVM on a feature file.
    Train(TrainArgs),
    /// Repeated 70/30 evaluation of a feature file.
    Eval(EvalArgs),
    /// Plain versus calibrated features on one corpus with shared splits.
    Compare(CompareArgs),
    /// Classify WAV files with a trained model.
    Scan(ScanArgs),
}

#[derive(Debug, Args, Clone)]
struct EmbedArgs {
    /// Embedding algorithm: lsb-replace, lsb-match, dsss, cox-dct.
    #[arg(long)]
    algo: Option<Algorithm>,
    /// Capacity in bits per cover bit, percent (LSB algorithms).
    #[arg(long)]
    bpb: Option<f64>,
    /// Embedding strength (DSSS alpha or Cox alpha).
    #[arg(long)]
    strength: Option<f64>,
    /// Target SNR in dB (DSSS).
    #[arg(long)]
    target_snr: Option<f64>,
}

impl EmbedArgs {
    fn config(&self, seed: u64) -> Result<Option<EmbedConfig>, CliError> {
        let Some(algorithm) = self.algo else {
            if self.bpb.is_some() || self.strength.is_some() || self.target_snr.is_some() {
                return Err(CliError::Usage("embedding options need --algo".into()));
            }
            return Ok(None);
        };
        let target_snr_db = match (algorithm, self.target_snr, self.strength) {
            (Algorithm::Dsss, None, None) => Some(DSSS_DEFAULT_TARGET_SNR_DB),
            (_, t, _) => t,
        };
        let capacity_bpb = match (algorithm.is_lsb(), self.bpb) {
            (true, Some(b)) => b,
            (true, None) => return Err(CliError::Usage(format!("--algo {algorithm} needs --bpb"))),
            (false, b) => b.unwrap_or(0.0),
        };
        let cfg = EmbedConfig {
            algorithm,
            capacity_bpb,
            strength: self.strength,
            target_snr_db,
            seed,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Some(cfg))
    }
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Number of synthetic covers to generate.
    #[arg(long, conflicts_with = "covers", required_unless_present = "covers")]
    synthetic: Option<usize>,
    /// Duration of each synthetic cover in seconds.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Cover WAV files or directories of WAV files.
    #[arg(long, num_args = 1..)]
    covers: Vec<PathBuf>,
    #[command(flatten)]
    embed: EmbedArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// plain or calibrated.
    #[arg(long, default_value = "plain")]
    kind: FeatureKind,
    /// Calibration embedder (required for --kind calibrated).
    #[command(flatten)]
    embed: EmbedArgs,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Skip unreadable files instead of failing.
    #[arg(long)]
    keep_going: bool,
}

#[derive(Debug, Args, Clone)]
struct HyperArgs {
    /// SVM regularization; with --gamma skips the grid search.
    #[arg(long, requires = "gamma")]
    c: Option<f64>,
    /// RBF kernel width; with --c skips the grid search.
    #[arg(long, requires = "c")]
    gamma: Option<f64>,
    /// Cross-validation folds for the grid search.
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

impl HyperArgs {
    fn hyper(&self) -> Hyper {
        match (self.c, self.gamma) {
            (Some(c_reg), Some(gamma)) => Hyper::Fixed { c_reg, gamma },
            _ => Hyper::Grid {
                c_grid: default_c_grid(),
                gamma_grid: default_gamma_grid(),
                folds: self.folds,
            },
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Calibration embedder to record in a calibrated model.
    #[command(flatten)]
    embed: EmbedArgs,
    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    repetitions: usize,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRAC)]
    train_frac: f64,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Manifest the features came from, recorded in the report.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Embedder recorded in the report.
    #[command(flatten)]
    embed: EmbedArgs,
    /// Output directory for report.json and roc.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Calibration embedder; defaults to the manifest's algorithm and capacity.
    #[command(flatten)]
    embed: EmbedArgs,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    repetitions: usize,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRAC)]
    train_frac: f64,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Choose the scatter dimensions with the GA instead of the t-statistic.
    #[arg(long)]
    ga: bool,
    #[arg(long, default_value_t = 20)]
    ga_generations: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature kind to compute; defaults to the model's.
    #[arg(long)]
    kind: Option<FeatureKind>,
    /// Calibration embedder; overrides the one stored in the model.
    #[command(flatten)]
    embed: EmbedArgs,
    /// WAV files to classify.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn calibration_seed(root: u64) -> u64 {
    seed::derive(root, seed::stream::CALIBRATION, 0)
}

fn wav_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| runtime(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Usage("no cover files given".into()));
    }
    Ok(files)
}

fn cmd_corpus(a: &CorpusArgs, root: u64) -> Result<(), CliError> {
    let cfg = a.embed.config(root)?.ok_or_else(|| CliError::Usage("corpus needs --algo".into()))?;
    let source = match a.synthetic {
        Some(count) => {
            let spec = SynthSpec::new(count, a.duration, root);
            spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            CoverSource::Synthetic(spec)
        }
        None => CoverSource::Files(wav_files(&a.covers)?),
    };
    let rows = build_corpus(&source, &cfg, &a.out).map_err(runtime)?;
    log::info!("wrote {} files to {}", rows.len(), a.out.display());
    Ok(())
}

fn load_manifest(path: &Path) -> Result<(Vec<ManifestRow>, PathBuf), CliError> {
    let rows = read_manifest(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((rows, base))
}

fn extract_config(kind: FeatureKind, embed: &EmbedArgs, root: u64) -> Result<ExtractConfig, CliError> {
    match (kind, embed.config(calibration_seed(root))?) {
        (FeatureKind::Plain, _) => Ok(ExtractConfig::plain()),
        (FeatureKind::Calibrated, Some(c)) => Ok(ExtractConfig::calibrated(c)),
        (FeatureKind::Calibrated, None) => Err(CliError::Usage("--kind calibrated needs --algo (the calibration embedder)".into())),
    }
}

/// Collects extraction results; failures are listed and either skipped
/// (`keep_going`) or turned into a runtime error.
fn collect_features(
    results: Vec<Result<FeatureVector, calsteg::eval::EvalError>>,
    keep_going: bool,
) -> Result<Vec<FeatureVector>, CliError> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(f) => ok.push(f),
            Err(e) => failed.push(e.to_string()),
        }
    }
    for f in &failed {
        eprintln!("error: {f}");
    }
    if !failed.is_empty() && !keep_going {
        return Err(CliError::Runtime(format!("{} file(s) could not be processed", failed.len())));
    }
    Ok(ok)
}

fn cmd_extract(a: &ExtractArgs, root: u64) -> Result<(), CliError> {
    let cfg = extract_config(a.kind, &a.embed, root)?;
    let (rows, base) = load_manifest(&a.manifest)?;
    let features = collect_features(extract_manifest(&rows, &base, &cfg), a.keep_going)?;
    let file = fs::File::create(&a.out).map_err(|e| runtime(format!("{}: {e}", a.out.display())))?;
    write_features_csv(file, &features).map_err(runtime)?;
    Ok(())
}

fn load_features(path: &Path) -> Result<Vec<FeatureVector>, CliError> {
    let file = fs::File::open(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    read_features_csv(file).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Attaches the calibration embedder (feature CSVs do not carry it).
fn tag_calibration(features: &mut [FeatureVector], embed: &EmbedArgs, root: u64) -> Result<(), CliError> {
    if let Some(cfg) = embed.config(calibration_seed(root))? {
        for f in features.iter_mut().filter(|f| f.kind == FeatureKind::Calibrated) {
            f.embedder_used_for_calibration = Some(cfg);
        }
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs, root: u64) -> Result<(), CliError> {
    let mut features = load_features(&a.features)?;
    tag_calibration(&mut features, &a.embed, root)?;
    let (c_reg, gamma) = match a.hyper.hyper() {
        Hyper::Fixed { c_reg, gamma } => (c_reg, gamma),
        Hyper::Grid {
            c_grid,
            gamma_grid,
            folds,
        } => {
            let best = grid_search(&features, &c_grid, &gamma_grid, folds, seed::derive(root, seed::stream::FOLDS, 0))
                .map_err(runtime)?;
            log::info!("grid search: C={} gamma={} CV accuracy {:.4}", best.c_reg, best.gamma, best.accuracy);
            (best.c_reg, best.gamma)
        }
    };
    let model = train_svm(&features, c_reg, gamma).map_err(runtime)?;
    model.save(&a.out).map_err(runtime)
}

fn eval_config(reps: usize, train_frac: f64, hyper: &HyperArgs, root: u64) -> Result<EvalConfig, CliError> {
    if reps == 0 {
        return Err(CliError::Usage("--repetitions must be at least 1".into()));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(CliError::Usage("--train-frac must lie in (0, 1)".into()));
    }
    Ok(EvalConfig {
        repetitions: reps,
        train_frac,
        ..EvalConfig::new(hyper.hyper(), root)
    })
}

fn cmd_eval(a: &EvalArgs, root: u64) -> Result<(), CliError> {
    let cfg = eval_config(a.repetitions, a.train_frac, &a.hyper, root)?;
    let mut features = load_features(&a.features)?;
    tag_calibration(&mut features, &a.embed, root)?;
    let mut report = run_trials(&features, &cfg).map_err(runtime)?;
    report.manifest = a.manifest.as_ref().map(|p| p.display().to_string());
    report.save(&a.out).map_err(runtime)?;
    println!(
        "accuracy {:.2} ± {:.2}  sensitivity {:.2}  specificity {:.2}  AUC {:.4}",
        report.mean_accuracy, report.std_accuracy, report.mean_sensitivity, report.mean_specificity, report.roc.auc
    );
    Ok(())
}

fn save_report(report: &mut EvalReport, manifest: &Path, dir: &Path) -> Result<(), CliError> {
    report.manifest = Some(manifest.display().to_string());
    report.save(dir).map_err(runtime)
}

fn write_csv_file(path: &Path, write: impl FnOnce(fs::File) -> Result<(), calsteg::eval::EvalError>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    write(file).map_err(runtime)
}

fn cmd_compare(a: &CompareArgs, root: u64) -> Result<(), CliError> {
    let cfg = eval_config(a.repetitions, a.train_frac, &a.hyper, root)?;
    let (rows, base) = load_manifest(&a.manifest)?;
    let cal_cfg = match a.embed.config(calibration_seed(root))? {
        Some(c) => c,
        None => {
            let first = rows.first().ok_or_else(|| runtime("empty manifest"))?;
            let args = EmbedArgs {
                algo: Some(first.algorithm),
                bpb: Some(first.capacity_bpb),
                strength: None,
                target_snr: None,
            };
            args.config(calibration_seed(root))?.expect("algorithm is set")
        }
    };
    let plain = collect_features(extract_manifest(&rows, &base, &ExtractConfig::plain()), false)?;
    let calibrated = collect_features(extract_manifest(&rows, &base, &ExtractConfig::calibrated(cal_cfg)), false)?;
    let selection = if a.ga {
        ScatterSelection::Genetic(GaConfig {
            generations: a.ga_generations,
            seed: seed::derive(root, seed::stream::GA, 0),
            ..GaConfig::default()
        })
    } else {
        ScatterSelection::TStatistic
    };
    let mut cmp = compare_feature_kinds(&plain, &calibrated, &cfg, &selection).map_err(runtime)?;
    fs::create_dir_all(&a.out).map_err(runtime)?;
    save_report(&mut cmp.plain, &a.manifest, &a.out.join("plain"))?;
    save_report(&mut cmp.calibrated, &a.manifest, &a.out.join("calibrated"))?;
    write_csv_file(&a.out.join("scatter_plain.csv"), |f| cmp.plain_scatter.write_csv(f))?;
    write_csv_file(&a.out.join("scatter_calibrated.csv"), |f| cmp.calibrated_scatter.write_csv(f))?;
    let summary = serde_json::json!({
        "auc_plain": cmp.plain.roc.auc,
        "auc_calibrated": cmp.calibrated.roc.auc,
        "auc_delta": cmp.auc_delta,
        "mean_accuracy_plain": cmp.plain.mean_accuracy,
        "mean_accuracy_calibrated": cmp.calibrated.mean_accuracy,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(runtime)? + "\n";
    fs::write(a.out.join("comparison.json"), text).map_err(runtime)?;
    println!(
        "AUC plain {:.4}  calibrated {:.4}  delta {:+.4}",
        cmp.plain.roc.auc, cmp.calibrated.roc.auc, cmp.auc_delta
    );
    Ok(())
}

fn cmd_scan(a: &ScanArgs, root: u64) -> Result<(), CliError> {
    let model = SvmModel::load(&a.model).map_err(|e| runtime(format!("{}: {e}", a.model.display())))?;
    let kind = a.kind.or(model.feature_kind).unwrap_or(FeatureKind::Plain);
    let cfg = match kind {
        FeatureKind::Plain => ExtractConfig::plain(),
        FeatureKind::Calibrated => {
            let cal = a.embed.config(calibration_seed(root))?.or(model.calibration).ok_or_else(|| {
                CliError::Usage("calibrated scan needs --algo (the model does not record its calibration embedder)".into())
            })?;
            ExtractConfig::calibrated(cal)
        }
    };
    let results: Vec<_> = {
        use rayon::prelude::*;
        a.files
            .par_iter()
            .map(|p| {
                let fv = extract_file(p, Label::Unknown, &cfg).map_err(runtime)?;
                predict(&model, &fv).map_err(|e| runtime(format!("{}: {e}", p.display())))
            })
            .collect()
    };
    let mut failures = 0;
    for (path, r) in a.files.iter().zip(results) {
        match r {
            Ok((label, d)) => println!("{}\t{}\t{d:.6}", path.display(), label.as_str()),
            Err(CliError::Runtime(e) | CliError::Usage(e)) => {
                eprintln!("error: {e}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Runtime(format!("{failures} file(s) could not be scanned")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(runtime)?;
    }
    match &cli.command {
        Command::Corpus(a) => cmd_corpus(a, cli.seed),
        Command::Extract(a) => cmd_extract(a, cli.seed),
        Command::Train(a) => cmd_train(a, cli.seed),
        Command::Eval(a) => cmd_eval(a, cli.seed),
        Command::Compare(a) => cmd_compare(a, cli.seed),
        Command::Scan(a) => cmd_scan(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let _ = Cli::command().write_long_help(&mut std::io::stderr());
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
