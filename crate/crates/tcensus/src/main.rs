//! Command-line front end: transform, block selection, training, detection,
//! and the two evaluation reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tcensus::census::{ct_image, utct_images, GrayImage};
use tcensus::classifier::{bootstrap_train, LinearModel};
use tcensus::config::RunConfig;
use tcensus::dataset::{list_images, load_window_images, sample_negative_windows, DatasetManifest};
use tcensus::detector::{detect, Detection};
use tcensus::error::{Error, Result};
use tcensus::evaluation::{
    diff_csv, diff_negative_fraction, diff_scores_for_class, roc, roc_csv, DescriptorTag,
    LabeledFeatureSet, RocSummary,
};
use tcensus::features::{
    extract_centrist, extract_tcentrist, grid_positions, select_local_optimal_blocks, BinScheme,
    BlockLayout, BlockVariant, FeatureVector, SelectionConfig,
};
use tcensus::image_io::{annotate, atomic_write, load_image, save_pgm, save_png};

#[derive(Parser)]
#[command(
    name = "tcensus",
    version,
    about = "Ternary census-transform pedestrian detection toolkit"
)]
struct Cli {
    /// Override every seed from configs and manifests.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DescriptorArg {
    Centrist,
    Tcentrist,
}

#[derive(Subcommand)]
enum Command {
    /// Write the ternary label images (.i1/.i2) and the binary census image
    /// (.ct) of an input image as PGM files.
    Transform {
        image: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Pick the best block structure per grid position on the training set.
    SelectBlocks {
        manifest: PathBuf,
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the detector: linear SVM, hard-negative mining, retrain.
    Train {
        manifest: PathBuf,
        config: PathBuf,
        /// Block layout JSON (defaults to the config's base grid).
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run multi-scale detection over images; one record per detection.
    Detect {
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Directory for copies of the inputs with detection boxes drawn in.
        #[arg(long)]
        annotate: Option<PathBuf>,
        /// Scan parameters (defaults when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Similarity-score statistics of a descriptor over the training set.
    EvalSim {
        manifest: PathBuf,
        config: PathBuf,
        #[arg(long, value_enum)]
        descriptor: DescriptorArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-window classification ROC on the manifest's test split.
    EvalRoc {
        model: PathBuf,
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the brute-force-oracle equivalence suite.
    Selftest,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e);
            ExitCode::FAILURE
        }
    }
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("TCENSUS_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Transform { image, out_prefix } => transform(&image, &out_prefix),
        Command::SelectBlocks {
            manifest,
            config,
            out,
        } => select_blocks(&manifest, &config, &out, cli.seed),
        Command::Train {
            manifest,
            config,
            layout,
            out,
        } => train(&manifest, &config, layout.as_deref(), &out, cli.seed),
        Command::Detect {
            model,
            images,
            out,
            annotate,
            config,
        } => run_detect(&model, &images, &out, annotate.as_deref(), config.as_deref()),
        Command::EvalSim {
            manifest,
            config,
            descriptor,
            out,
        } => eval_sim(&manifest, &config, descriptor, &out, cli.seed),
        Command::EvalRoc {
            model,
            manifest,
            out,
        } => eval_roc(&model, &manifest, &out),
        Command::Selftest => Ok(selftest()),
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn transform(image: &Path, out_prefix: &Path) -> Result<ExitCode> {
    let img = load_image(image)?;
    let codes = utct_images(&img)?;
    let ct = ct_image(&img)?;
    let (w, h) = (img.width(), img.height());
    let (p1, p2) = codes.planes();
    save_pgm(&with_suffix(out_prefix, ".i1.pgm"), &GrayImage::new(w, h, p1.to_vec()))?;
    save_pgm(&with_suffix(out_prefix, ".i2.pgm"), &GrayImage::new(w, h, p2.to_vec()))?;
    save_pgm(&with_suffix(out_prefix, ".ct.pgm"), &GrayImage::new(w, h, ct.codes().to_vec()))?;
    Ok(ExitCode::SUCCESS)
}

/// Training windows: positives (optionally mirrored) first, then sampled
/// negative windows; labels +1/-1 in the same order.
fn training_windows(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    seed: u64,
) -> Result<(Vec<GrayImage>, Vec<i8>)> {
    let mut windows = load_window_images(
        &manifest.positives,
        cfg.window_width,
        cfg.window_height,
        cfg.mirror_positives,
    )?;
    let positives = windows.len();
    let negatives: Vec<GrayImage> = list_images(&manifest.negatives)?
        .iter()
        .map(|p| load_image(p))
        .collect::<Result<_>>()?;
    windows.extend(sample_negative_windows(
        &negatives,
        cfg.negative_samples,
        cfg.window_width,
        cfg.window_height,
        seed,
    )?);
    let mut labels = vec![1i8; positives];
    labels.extend(std::iter::repeat(-1).take(windows.len() - positives));
    Ok((windows, labels))
}

fn select_blocks(
    manifest_path: &Path,
    config_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<ExitCode> {
    let cfg = load_config(config_path, seed_override)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let seed = seed_override.unwrap_or(manifest.seed);
    let (windows, labels) = training_windows(&manifest, &cfg, seed)?;
    let grid = grid_positions(
        cfg.window_width,
        cfg.window_height,
        cfg.block_width,
        cfg.block_height,
        cfg.block_stride,
    )?;
    let candidates: &[BlockVariant] = if cfg.extension_candidates {
        &BlockVariant::ALL
    } else {
        &BlockVariant::ALL[..1]
    };
    let layout = select_local_optimal_blocks(
        &windows,
        &labels,
        cfg.window_width,
        cfg.window_height,
        &grid,
        candidates,
        &SelectionConfig {
            svm: cfg.svm(),
            split_seed: cfg.seed,
        },
    )?;
    atomic_write(out, layout.to_json().as_bytes())?;
    eprintln!("wrote layout with {} blocks to {}", layout.block_count(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn train(
    manifest_path: &Path,
    config_path: &Path,
    layout_path: Option<&Path>,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<ExitCode> {
    let cfg = load_config(config_path, seed_override)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let layout = match layout_path {
        Some(path) => BlockLayout::from_json(&std::fs::read_to_string(path)?)?,
        None => cfg.layout()?,
    };
    if (layout.window_width(), layout.window_height()) != (cfg.window_width, cfg.window_height) {
        return Err(Error::InvalidConfig(
            "layout window size differs from the config".into(),
        ));
    }
    let positives = load_window_images(
        &manifest.positives,
        cfg.window_width,
        cfg.window_height,
        cfg.mirror_positives,
    )?;
    let negatives: Vec<GrayImage> = list_images(&manifest.negatives)?
        .iter()
        .map(|p| load_image(p))
        .collect::<Result<_>>()?;
    let mut boot = cfg.bootstrap();
    if let Some(seed) = seed_override {
        boot.svm.seed = seed;
        boot.sample_seed = seed;
    } else {
        boot.sample_seed = manifest.seed;
    }
    let model = bootstrap_train(&positives, &negatives, &layout, &boot)?;
    atomic_write(out, model.to_json().as_bytes())?;
    eprintln!(
        "trained on {} positives, {} sampled + {} mined negatives; model at {}",
        positives.len(),
        boot.negative_samples,
        model.meta().hard_negatives_added,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DetectionRecord {
    image: String,
    left: u32,
    top: u32,
    width: u32,
    height: u32,
    score: f64,
    level: usize,
}

impl DetectionRecord {
    fn new(image: &str, det: &Detection) -> Self {
        Self {
            image: image.to_string(),
            left: det.rect.left,
            top: det.rect.top,
            width: det.rect.width,
            height: det.rect.height,
            score: det.score,
            level: det.level,
        }
    }
}

fn run_detect(
    model_path: &Path,
    images: &[PathBuf],
    out: &Path,
    annotate_dir: Option<&Path>,
    config_path: Option<&Path>,
) -> Result<ExitCode> {
    let model = LinearModel::from_json(&std::fs::read_to_string(model_path)?)?;
    let cfg = match config_path {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = annotate_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut records = Vec::new();
    for path in images {
        let img = load_image(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let detections = detect(&img, &model, &cfg.pyramid, &cfg.detect_params())?;
        for det in &detections {
            println!(
                "{} {} {} {} {} {} {}",
                id, det.rect.left, det.rect.top, det.rect.width, det.rect.height, det.score,
                det.level
            );
            records.push(DetectionRecord::new(&id, det));
        }
        if let Some(dir) = annotate_dir {
            save_png(&dir.join(format!("{id}.png")), &annotate(&img, &detections))?;
        }
    }
    atomic_write(out, serde_json::to_string_pretty(&records)?.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn descriptor_features(
    windows: &[GrayImage],
    layout: &BlockLayout,
    descriptor: DescriptorTag,
    normalize: bool,
) -> Result<Vec<FeatureVector>> {
    windows
        .iter()
        .map(|w| {
            let mut f = match descriptor {
                DescriptorTag::Tcentrist => extract_tcentrist(&utct_images(w)?, layout, (0, 0))?,
                DescriptorTag::Centrist => extract_centrist(&ct_image(w)?, layout, (0, 0))?,
            };
            if normalize {
                f.l1_normalize_blocks(layout);
            }
            Ok(f)
        })
        .collect()
}

fn eval_sim(
    manifest_path: &Path,
    config_path: &Path,
    descriptor: DescriptorArg,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<ExitCode> {
    let cfg = load_config(config_path, seed_override)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let seed = seed_override.unwrap_or(manifest.seed);
    let descriptor = match descriptor {
        DescriptorArg::Centrist => DescriptorTag::Centrist,
        DescriptorArg::Tcentrist => DescriptorTag::Tcentrist,
    };
    let (windows, labels) = training_windows(&manifest, &cfg, seed)?;
    let layout = match descriptor {
        DescriptorTag::Tcentrist => cfg.layout()?,
        DescriptorTag::Centrist => cfg.layout_ct()?,
    };
    let features = descriptor_features(&windows, &layout, descriptor, cfg.normalize)?;
    let labels: Vec<i32> = labels.iter().map(|&l| i32::from(l)).collect();
    let set = LabeledFeatureSet::new(features, labels.clone(), descriptor);

    let mut rows = Vec::new();
    for class in [1, -1] {
        let scores = diff_scores_for_class(&set, class)?;
        let members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        rows.extend(members.into_iter().zip(scores));
    }
    rows.sort_by_key(|&(i, _)| i);
    atomic_write(out, diff_csv(&labels, &rows).as_bytes())?;

    #[derive(Serialize)]
    struct SimSummary {
        descriptor: DescriptorTag,
        negative_diff_percent_positives: f64,
        negative_diff_percent_negatives: f64,
    }
    let summary = SimSummary {
        descriptor,
        negative_diff_percent_positives: diff_negative_fraction(&set, 1)?,
        negative_diff_percent_negatives: diff_negative_fraction(&set, -1)?,
    };
    atomic_write(
        &with_suffix(out, ".summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    eprintln!(
        "{descriptor}: {:.3}% negative diffs on positives, {:.3}% on negatives",
        summary.negative_diff_percent_positives, summary.negative_diff_percent_negatives
    );
    Ok(ExitCode::SUCCESS)
}

fn eval_roc(model_path: &Path, manifest_path: &Path, out: &Path) -> Result<ExitCode> {
    let model = LinearModel::from_json(&std::fs::read_to_string(model_path)?)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let (pos_dir, neg_dir) = match (&manifest.test_positives, &manifest.test_negatives) {
        (Some(p), Some(n)) => (p.clone(), n.clone()),
        _ => {
            return Err(Error::InvalidConfig(
                "manifest lacks test_positives/test_negatives directories".into(),
            ))
        }
    };
    let layout = model.layout();
    let (ww, wh) = (layout.window_width(), layout.window_height());
    let descriptor = match layout.bins() {
        BinScheme::Utct59 => DescriptorTag::Tcentrist,
        BinScheme::Ct256 => DescriptorTag::Centrist,
    };

    let positives = load_window_images(&pos_dir, ww, wh, false)?;
    let negatives = match manifest.test_negative_samples {
        Some(count) => {
            let images: Vec<GrayImage> = list_images(&neg_dir)?
                .iter()
                .map(|p| load_image(p))
                .collect::<Result<_>>()?;
            sample_negative_windows(&images, count, ww, wh, manifest.seed)?
        }
        None => load_window_images(&neg_dir, ww, wh, false)?,
    };

    let normalized = model.meta().normalized;
    let pos_features = descriptor_features(&positives, layout, descriptor, normalized)?;
    let neg_features = descriptor_features(&negatives, layout, descriptor, normalized)?;
    let pos_scores: Vec<f64> = pos_features.iter().map(|f| model.score(f)).collect();
    let neg_scores: Vec<f64> = neg_features.iter().map(|f| model.score(f)).collect();

    let curve = roc(&pos_scores, &neg_scores)?;
    atomic_write(out, roc_csv(&curve).as_bytes())?;
    let summary = RocSummary::from_curve(descriptor, &curve);
    atomic_write(
        &with_suffix(out, ".summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    eprintln!(
        "{descriptor}: detection rate {:.4} at FPR 1e-2, {:.4} at FPR 1e-1",
        summary.rate_at_fpr_1e2, summary.rate_at_fpr_1e1
    );
    Ok(ExitCode::SUCCESS)
}

fn selftest() -> ExitCode {
    let mut failed = false;
    for check in tcensus::selftest::run_all() {
        if check.passed {
            println!("PASS {}: {}", check.name, check.detail);
        } else {
            println!("FAIL {}: {}", check.name, check.detail);
            failed = true;
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
