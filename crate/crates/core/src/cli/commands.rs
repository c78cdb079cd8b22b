use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::*;
use super::files::*;
use super::{AnalysisOpts, AnalyzeArgs, CliError, CommonOpts, GenerateArgs, SweepArgs, TrainArgs, TrainOpts};
use crate::geometry::{
    classify_threshold, dim_report, distance_fidelity_table, geodesic_correlation, local_curvature,
    CorrelationReport, DimReport, DistanceBin, DistancePair, ThresholdBand,
};
use crate::model::{encode, Architecture, ModelParams};
use crate::qcore::DensityMatrix;
use crate::rng;
use crate::stategen::{sample_dataset, ChannelKind, StateRecord};
use crate::training::{evaluate, train_observed, Example, TrainConfig, TrainHistory};

const ANALYSIS_STREAM: u64 = 0x0400_0000_0000;

struct Context {
    file: FileConfig,
    seed: u64,
    out: PathBuf,
}

fn context(common: &CommonOpts) -> Result<Context, CliError> {
    let file = FileConfig::load(common.config.as_deref())?;
    let seed = resolve_seed(common.seed, file.seed)?;
    let out = pick(common.out.clone(), &file.out, PathBuf::from(DEFAULT_OUT));
    Ok(Context { file, seed, out })
}

fn purity_histogram(records: &[StateRecord], lo: f64, hi: f64) -> Vec<usize> {
    let mut bins = vec![0; 5];
    let width = (hi - lo) / 5.0;
    for r in records {
        let b = if width > 0.0 { ((r.purity - lo) / width).floor() } else { 0.0 };
        bins[(b.max(0.0) as usize).min(4)] += 1;
    }
    bins
}

/// Writes `<out>/train.jsonl` and `<out>/val.jsonl`. Returns both datasets.
pub fn generate(args: &GenerateArgs) -> Result<(Dataset, Dataset), CliError> {
    let ctx = context(&args.common)?;
    let f = &ctx.file;
    let n_train = pick(args.n_train, &f.n_train, DEFAULT_N_TRAIN);
    let n_val = pick(args.n_val, &f.n_val, DEFAULT_N_VAL);
    let lo = pick(args.purity_min, &f.purity_min, DEFAULT_PURITY.0);
    let hi = pick(args.purity_max, &f.purity_max, DEFAULT_PURITY.1);
    if !(lo > 0.25 && lo <= hi && hi <= 1.0) {
        return Err(CliError::Usage(format!(
            "purity range [{lo}, {hi}] must satisfy 0.25 < min <= max <= 1"
        )));
    }
    let mut sets = Vec::new();
    for (name, n, offset) in [("train", n_train, 0), ("val", n_val, VAL_STREAM_OFFSET)] {
        let records = sample_dataset(n, (lo, hi), ctx.seed, offset)?;
        let ds = Dataset {
            header: DatasetHeader::new(ctx.seed, offset, [lo, hi], records.len()),
            records,
        };
        let path = ctx.out.join(format!("{name}.jsonl"));
        save_dataset(&path, &ds)?;
        println!("{name}: {} states -> {}", ds.records.len(), path.display());
        for kind in ChannelKind::ALL {
            let count = ds.records.iter().filter(|r| r.channel == kind).count();
            println!("  {:<18} {count}", kind.name());
        }
        let hist = purity_histogram(&ds.records, lo, hi);
        println!("  purity histogram over [{lo}, {hi}] (5 bins): {hist:?}");
        sets.push(ds);
    }
    let val = sets.pop().expect("two datasets");
    let tr = sets.pop().expect("two datasets");
    Ok((tr, val))
}

fn train_config(opts: &TrainOpts, f: &FileConfig, seed: u64) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    let mode = match opts.decoder.clone().or_else(|| f.decoder.clone()) {
        Some(s) => s.parse()?,
        None => d.mode,
    };
    let grad_method = match opts.grad_method.clone().or_else(|| f.grad_method.clone()) {
        Some(s) => s.parse()?,
        None => d.grad_method,
    };
    let arch = Architecture {
        input: d.architecture.input,
        hidden1: pick(opts.hidden1, &f.hidden1, d.architecture.hidden1),
        hidden2: pick(opts.hidden2, &f.hidden2, d.architecture.hidden2),
        latent: pick(opts.latent_dim, &f.latent_dim, d.architecture.latent),
    };
    if arch.hidden1 == 0 || arch.hidden2 == 0 || arch.latent == 0 {
        return Err(CliError::Usage("layer widths must be >= 1".into()));
    }
    let cfg = TrainConfig {
        epochs_max: pick(opts.epochs, &f.epochs, d.epochs_max),
        batch_size: pick(opts.batch_size, &f.batch_size, d.batch_size),
        learning_rate: pick(opts.learning_rate, &f.learning_rate, d.learning_rate),
        lambda_metric: pick(opts.lambda_metric, &f.lambda_metric, d.lambda_metric),
        pairs_per_batch: pick(opts.pairs_per_batch, &f.pairs_per_batch, d.pairs_per_batch),
        patience: pick(opts.patience, &f.patience, d.patience),
        seed,
        mode,
        grad_method,
        architecture: arch,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn dataset_paths(opts: &TrainOpts, ctx: &Context) -> (PathBuf, PathBuf) {
    (
        pick(opts.train.clone(), &ctx.file.train, ctx.out.join("train.jsonl")),
        pick(opts.val.clone(), &ctx.file.val, ctx.out.join("val.jsonl")),
    )
}

fn examples(path: &Path) -> Result<Vec<Example>, CliError> {
    Ok(Example::from_records(&load_dataset(path)?.records)?)
}

struct TrainRun {
    checkpoint: Checkpoint,
    history: TrainHistory,
}

fn run_training(
    cfg: &TrainConfig,
    train_set: &[Example],
    val_set: &[Example],
    dir: &Path,
) -> Result<TrainRun, CliError> {
    let outcome = train_observed(train_set, val_set, cfg, |r| {
        if r.epoch == 1 || r.epoch % 10 == 0 {
            eprintln!(
                "epoch {:>4}  recon {:.5}  metric {:.5}  total {:.5}  val F {:.5}",
                r.epoch, r.recon_loss, r.metric_loss, r.total_loss, r.val_fidelity
            );
        }
    })?;
    let best = outcome.history.best().copied();
    let checkpoint = Checkpoint::new(outcome.params, cfg.clone(), best);
    save_checkpoint(&dir.join("checkpoint.jsonl"), &checkpoint)?;
    let mut csv = Vec::new();
    outcome.history.write_csv(&mut csv).map_err(CliError::csv)?;
    write_atomic(&dir.join("history.csv"), &csv)?;
    Ok(TrainRun {
        checkpoint,
        history: outcome.history,
    })
}

/// Trains on `<out>/train.jsonl`, writes `checkpoint.jsonl` and
/// `history.csv` into the run directory.
pub fn train(args: &TrainArgs) -> Result<(Checkpoint, TrainHistory), CliError> {
    let ctx = context(&args.common)?;
    let cfg = train_config(&args.train, &ctx.file, ctx.seed)?;
    let (tp, vp) = dataset_paths(&args.train, &ctx);
    let (tr, va) = (examples(&tp)?, examples(&vp)?);
    let run = run_training(&cfg, &tr, &va, &ctx.out)?;
    if let Some(b) = run.history.best() {
        println!(
            "best epoch {} of {}: val fidelity {:.6}",
            b.epoch,
            run.history.len(),
            b.val_fidelity
        );
    }
    println!("wrote {}", ctx.out.join("checkpoint.jsonl").display());
    Ok((run.checkpoint, run.history))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub k_mle: usize,
    pub k_curv: usize,
    pub n_pairs: usize,
    pub seed: u64,
}

impl AnalysisSettings {
    fn resolve(opts: &AnalysisOpts, f: &FileConfig, seed: u64) -> Self {
        Self {
            k_mle: pick(opts.k_mle, &f.k_mle, DEFAULT_K_MLE),
            k_curv: pick(opts.k_curv, &f.k_curv, DEFAULT_K_CURV),
            n_pairs: pick(opts.pairs, &f.pairs, DEFAULT_N_PAIRS),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub n_pairs: usize,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub spearman_rho: f64,
    pub r_squared: f64,
    pub slope: f64,
    pub intercept: f64,
    pub rmse: f64,
    pub mae: f64,
    pub band: ThresholdBand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub k_curv: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub iqr: f64,
    pub flagged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSummary {
    pub mean_fidelity: f64,
    pub median_fidelity: f64,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub format_version: u32,
    pub n_states: usize,
    pub settings: AnalysisSettings,
    pub reconstruction: ReconstructionSummary,
    pub correlation: CorrelationSummary,
    pub dimension: DimReport,
    pub curvature: CurvatureSummary,
    pub distance_fidelity: Vec<DistanceBin>,
}

#[derive(Serialize)]
struct SpectrumRow {
    component: usize,
    eigenvalue: f64,
    explained: f64,
    cumulative: f64,
}

#[derive(Serialize)]
struct KappaRow {
    index: usize,
    kappa: f64,
}

#[derive(Serialize)]
struct BinRow<'a> {
    label: &'a str,
    latent_lo: f64,
    latent_hi: Option<f64>,
    count: usize,
    mean_bures: Option<f64>,
    mean_fidelity: Option<f64>,
}

fn clamp_k(name: &str, k: usize, n: usize, min: usize) -> Result<usize, CliError> {
    if n <= min {
        return Err(CliError::Usage(format!("{name} needs more than {min} states, got {n}")));
    }
    if k >= n {
        eprintln!("warning: {name} = {k} reduced to {} for {n} states", n - 1);
        return Ok(n - 1);
    }
    Ok(k.max(min))
}

struct Analysis {
    report: ReportFile,
    correlation: CorrelationReport,
    kappa: Vec<f64>,
}

fn analyze_states(
    params: &ModelParams,
    data: &[Example],
    settings: AnalysisSettings,
) -> Result<Analysis, CliError> {
    let n = data.len();
    let settings = AnalysisSettings {
        k_mle: clamp_k("k_mle", settings.k_mle, n, 2)?,
        k_curv: clamp_k("k_curv", settings.k_curv, n, 1)?,
        ..settings
    };
    let latents = data
        .iter()
        .map(|e| encode(&e.x, &params.encoder).map(|z| z.0))
        .collect::<crate::Result<Vec<_>>>()?;
    let rhos: Vec<DensityMatrix> = data.iter().map(|e| e.rho.clone()).collect();
    let mut r = rng::stream(settings.seed, ANALYSIS_STREAM);
    let corr = geodesic_correlation(&latents, &rhos, settings.n_pairs, &mut r)?;
    let dim = dim_report(&latents, settings.k_mle)?;
    let curv = local_curvature(&latents, settings.k_curv)?;
    let eval = evaluate(params, data)?;
    let report = ReportFile {
        format: "geolatent-report".into(),
        format_version: FORMAT_VERSION,
        n_states: n,
        settings,
        reconstruction: ReconstructionSummary {
            mean_fidelity: eval.mean,
            median_fidelity: eval.median,
        },
        correlation: CorrelationSummary {
            n_pairs: corr.n_pairs,
            pearson_r: corr.pearson_r,
            pearson_p: corr.pearson_p,
            spearman_rho: corr.spearman_rho,
            r_squared: corr.r_squared,
            slope: corr.slope,
            intercept: corr.intercept,
            rmse: corr.rmse,
            mae: corr.mae,
            band: classify_threshold(corr.pearson_r),
        },
        dimension: dim,
        curvature: CurvatureSummary {
            k_curv: curv.k_curv,
            mean: curv.mean,
            std: curv.std,
            median: curv.median,
            min: curv.min,
            max: curv.max,
            iqr: curv.iqr,
            flagged: curv.flagged,
        },
        distance_fidelity: distance_fidelity_table(&corr.pairs),
    };
    Ok(Analysis {
        report,
        correlation: corr,
        kappa: curv.kappa,
    })
}

fn write_analysis(dir: &Path, a: &Analysis) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(&a.report).expect("serializable report") + "\n";
    write_atomic(&dir.join("report.json"), json.as_bytes())?;
    let pairs: &[DistancePair] = &a.correlation.pairs;
    write_atomic(&dir.join("pairs.csv"), &csv_bytes(pairs, &["i", "j", "d_latent", "d_bures"])?)?;
    let spec = &a.report.dimension.pca_spectrum;
    let total: f64 = spec.iter().sum();
    let mut acc = 0.0;
    let rows: Vec<SpectrumRow> = spec
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            acc += v;
            SpectrumRow {
                component: i + 1,
                eigenvalue: v,
                explained: v / total,
                cumulative: acc / total,
            }
        })
        .collect();
    write_atomic(
        &dir.join("pca_spectrum.csv"),
        &csv_bytes(&rows, &["component", "eigenvalue", "explained", "cumulative"])?,
    )?;
    let rows: Vec<KappaRow> = a
        .kappa
        .iter()
        .enumerate()
        .map(|(index, &kappa)| KappaRow { index, kappa })
        .collect();
    write_atomic(&dir.join("curvature.csv"), &csv_bytes(&rows, &["index", "kappa"])?)?;
    let rows: Vec<BinRow> = a
        .report
        .distance_fidelity
        .iter()
        .map(|b| BinRow {
            label: &b.label,
            latent_lo: b.latent_lo,
            latent_hi: b.latent_hi,
            count: b.count,
            mean_bures: b.mean_bures,
            mean_fidelity: b.mean_fidelity,
        })
        .collect();
    write_atomic(
        &dir.join("distance_fidelity.csv"),
        &csv_bytes(
            &rows,
            &["label", "latent_lo", "latent_hi", "count", "mean_bures", "mean_fidelity"],
        )?,
    )?;
    Ok(())
}

fn load_for_analysis(checkpoint: &Path, data: &[PathBuf]) -> Result<(Checkpoint, Vec<Example>), CliError> {
    let cp = load_checkpoint(checkpoint)?;
    if cp.params.architecture().input != crate::measurement::N_OBSERVABLES {
        return Err(CliError::Format(format!(
            "{}: encoder input width {} does not match {} Pauli expectations",
            checkpoint.display(),
            cp.params.architecture().input,
            crate::measurement::N_OBSERVABLES
        )));
    }
    let mut all = Vec::new();
    for p in data {
        all.extend(examples(p)?);
    }
    Ok((cp, all))
}

/// Embeds the datasets with a checkpoint and writes `report.json` plus
/// `pairs.csv`, `pca_spectrum.csv`, `curvature.csv` and
/// `distance_fidelity.csv` into the run directory.
pub fn analyze(args: &AnalyzeArgs) -> Result<ReportFile, CliError> {
    let ctx = context(&args.common)?;
    let settings = AnalysisSettings::resolve(&args.analysis, &ctx.file, ctx.seed);
    let checkpoint = pick(
        args.checkpoint.clone(),
        &ctx.file.checkpoint,
        ctx.out.join("checkpoint.jsonl"),
    );
    let data = if !args.data.is_empty() {
        args.data.clone()
    } else {
        ctx.file
            .data
            .clone()
            .unwrap_or_else(|| vec![ctx.out.join("train.jsonl"), ctx.out.join("val.jsonl")])
    };
    let (cp, examples) = load_for_analysis(&checkpoint, &data)?;
    let analysis = analyze_states(&cp.params, &examples, settings)?;
    write_analysis(&ctx.out, &analysis)?;
    let r = &analysis.report;
    println!(
        "pearson r {:.4} ({}), p {:.3e}, spearman {:.4}, R² {:.4}, fit d_L = {:.4}·d_B + {:.4}",
        r.correlation.pearson_r,
        r.correlation.band,
        r.correlation.pearson_p,
        r.correlation.spearman_rho,
        r.correlation.r_squared,
        r.correlation.slope,
        r.correlation.intercept
    );
    println!(
        "MLE dimension {:.3} ± {:.3}; PCA 95% {} / 99% {}; curvature {:.4} ± {:.4}",
        r.dimension.mle_mean,
        r.dimension.mle_std,
        r.dimension.d_pca_95,
        r.dimension.d_pca_99,
        r.curvature.mean,
        r.curvature.std
    );
    println!("wrote {}", ctx.out.join("report.json").display());
    Ok(analysis.report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub best_epoch: Option<usize>,
    pub val_fidelity: f64,
    pub pearson_r: f64,
    pub spearman_rho: f64,
}

/// One training and analysis run per λ under `<out>/lambda_<λ>/`, with a
/// summary in `<out>/sweep_lambda.csv`.
pub fn sweep_lambda(args: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    let ctx = context(&args.common)?;
    let lambdas = if !args.lambdas.is_empty() {
        args.lambdas.clone()
    } else {
        ctx.file.lambdas.clone().unwrap_or_default()
    };
    if lambdas.is_empty() {
        return Err(CliError::Usage("--lambdas needs at least one value".into()));
    }
    let base = train_config(&args.train, &ctx.file, ctx.seed)?;
    let settings = AnalysisSettings::resolve(&args.analysis, &ctx.file, ctx.seed);
    let (tp, vp) = dataset_paths(&args.train, &ctx);
    let (tr, va) = (examples(&tp)?, examples(&vp)?);
    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let cfg = TrainConfig {
            lambda_metric: lambda,
            ..base.clone()
        };
        cfg.validate()?;
        let dir = ctx.out.join(format!("lambda_{lambda}"));
        eprintln!("lambda = {lambda}");
        let run = run_training(&cfg, &tr, &va, &dir)?;
        let combined: Vec<Example> = tr.iter().chain(&va).cloned().collect();
        let analysis = analyze_states(&run.checkpoint.params, &combined, settings)?;
        write_analysis(&dir, &analysis)?;
        let best = run.history.best();
        let row = SweepRow {
            lambda,
            best_epoch: best.map(|b| b.epoch),
            val_fidelity: best.map_or(f64::NAN, |b| b.val_fidelity),
            pearson_r: analysis.report.correlation.pearson_r,
            spearman_rho: analysis.report.correlation.spearman_rho,
        };
        println!(
            "lambda {:<8} val F {:.5}  pearson r {:.4}",
            row.lambda, row.val_fidelity, row.pearson_r
        );
        rows.push(row);
    }
    write_atomic(
        &ctx.out.join("sweep_lambda.csv"),
        &csv_bytes(&rows, &["lambda", "best_epoch", "val_fidelity", "pearson_r", "spearman_rho"])?,
    )?;
    Ok(rows)
}
