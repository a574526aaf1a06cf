//! Commands behind the CLI verbs. Each takes its parsed inputs and writes
//! report lines to `out`; progress notes go to `log`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lesion_core::boosting::{fit_xgboost, BoostedModel, Dataset};
use lesion_core::features::{builtin_descriptor, FeatureFile, FeatureRecord};
use lesion_core::imaging::{dice, normalize, ImageGrid};
use lesion_core::levelset::{fuzzy_level_set_segment, SegmentOptions, Segmentation};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{FeatureSource, PipelineConfig};
use crate::error::{CadError, Result};
use crate::featfile::{load_features, save_features};
use crate::model_io::{load_model, save_model};
use crate::pgm::{load_image, load_mask, save_image, save_mask};
use crate::text::fmt_f64;

/// Fraction of each class held out by `train`.
pub const HOLDOUT_FRACTION: f64 = 0.2;
pub const MODEL_FILE: &str = "model.txt";
pub const FEATURE_FILE: &str = "features.feat";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

/// Ratios whose denominator is zero are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut cm = Self::default();
        for (truth, predicted) in pairs {
            match (truth, predicted) {
                (true, true) => cm.tp += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (true, false) => cm.fn_ += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Result<Metrics> {
        if self.total() == 0 {
            return Err(CadError::Core(lesion_core::Error::Empty("confusion matrix")));
        }
        Ok(Metrics {
            accuracy: (self.tp + self.tn) as f64 / self.total() as f64,
            sensitivity: ratio(self.tp, self.tp + self.fn_),
            specificity: ratio(self.tn, self.tn + self.fp),
            precision: ratio(self.tp, self.tp + self.fp),
        })
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "confusion tp {} fp {} tn {} fn {}", self.tp, self.fp, self.tn, self.fn_)
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), fmt_f64);
        writeln!(f, "accuracy {}", fmt_f64(self.accuracy))?;
        writeln!(f, "sensitivity {}", show(self.sensitivity))?;
        writeln!(f, "specificity {}", show(self.specificity))?;
        write!(f, "precision {}", show(self.precision))
    }
}

fn write_line(out: &mut dyn Write, line: impl fmt::Display) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| CadError::io("<stdout>", e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CadError::io(dir, e))
}

/// Seeded stratified split. Each class with `n` samples contributes
/// `round(n · fraction)` samples to the holdout while keeping at least one
/// for training. Both index lists come back in ascending order.
pub fn stratified_split(labels: &[u8], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64 * fraction).round() as usize).min(idx.len().saturating_sub(1));
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Score on the label scale and the thresholded class.
pub fn classify_row(model: &BoostedModel, row: &[f64], threshold: f64) -> Result<(bool, f64)> {
    let score = model.predict_score(row)?;
    Ok((score >= threshold, score))
}

fn check_dim(cfg: &PipelineConfig, found: usize) -> Result<()> {
    match cfg.feature_dim {
        Some(expected) if expected != found => {
            Err(lesion_core::Error::DimensionMismatch { expected, found }.into())
        }
        _ => Ok(()),
    }
}

fn binary_labels(ds: &Dataset) -> Vec<u8> {
    ds.labels().iter().map(|&y| (y == 1.0) as u8).collect()
}

fn confusion(model: &BoostedModel, ds: &Dataset, threshold: f64) -> Result<ConfusionMatrix> {
    let pairs = (0..ds.n_samples())
        .map(|i| Ok((ds.labels()[i] == 1.0, classify_row(model, ds.row(i), threshold)?.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfusionMatrix::from_pairs(pairs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub model_path: PathBuf,
    pub model: BoostedModel,
    pub train_size: usize,
    /// `None` when the data is too small to hold anything out.
    pub holdout: Option<ConfusionMatrix>,
}

/// Trains on a seeded stratified 80/20 split, writes `<out>/model.txt` and
/// reports holdout metrics.
pub fn cmd_train(features: &Path, cfg: &PipelineConfig, out: &mut dyn Write) -> Result<TrainReport> {
    let file = load_features(features)?;
    check_dim(cfg, file.dim())?;
    let ds = file.to_dataset()?;
    let labels = binary_labels(&ds);
    if ds.is_empty() {
        return Err(lesion_core::Error::Empty("training data").into());
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(CadError::DegenerateLabels(labels[0]));
    }
    let (train_idx, test_idx) = stratified_split(&labels, HOLDOUT_FRACTION, cfg.seed);
    let boost = lesion_core::boosting::GbmConfig { seed: cfg.seed, ..cfg.boost.clone() };
    let model = fit_xgboost(&ds.select(&train_idx), &boost, cfg.loss)?;

    create_dir(&cfg.out)?;
    let model_path = cfg.out.join(MODEL_FILE);
    save_model(&model, &model_path)?;
    write_line(out, format_args!("model {}", model_path.display()))?;
    write_line(out, format_args!("train {} holdout {}", train_idx.len(), test_idx.len()))?;
    let holdout = if test_idx.is_empty() {
        None
    } else {
        let cm = confusion(&model, &ds.select(&test_idx), cfg.threshold)?;
        write_line(out, cm)?;
        write_line(out, cm.metrics()?)?;
        Some(cm)
    };
    Ok(TrainReport { model_path, model, train_size: train_idx.len(), holdout })
}

/// Metrics of a saved model on every record of a labeled feature file.
pub fn cmd_eval(model_path: &Path, features: &Path, cfg: &PipelineConfig, out: &mut dyn Write) -> Result<ConfusionMatrix> {
    let model = load_model(model_path)?;
    let file = load_features(features)?;
    check_dim(cfg, file.dim())?;
    let ds = file.to_dataset()?;
    if ds.n_features() != model.n_features {
        return Err(lesion_core::Error::DimensionMismatch { expected: model.n_features, found: ds.n_features() }.into());
    }
    let cm = confusion(&model, &ds, cfg.threshold)?;
    write_line(out, cm)?;
    write_line(out, cm.metrics()?)?;
    Ok(cm)
}

/// Record id for an image: its file stem, which must be non-empty and free of whitespace.
pub fn image_id(path: &Path) -> Result<String> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    if stem.is_empty() || stem.chars().any(char::is_whitespace) {
        return Err(CadError::Usage(format!("{}: image name cannot serve as a record id", path.display())));
    }
    Ok(stem.to_string())
}

/// Loads an image and rescales it to `[0, 1]`.
pub fn load_normalized(path: &Path) -> Result<ImageGrid> {
    Ok(normalize(&load_image(path)?))
}

/// How images are turned into feature vectors.
#[derive(Debug, Clone)]
pub enum ImageFeatures {
    Builtin,
    /// Vectors looked up by image id.
    Table(FeatureFile),
}

impl ImageFeatures {
    pub fn from_config(cfg: &PipelineConfig, features: Option<&Path>, builtin_flag: bool) -> Result<Self> {
        match (features, builtin_flag) {
            (Some(_), true) => Err(CadError::Usage("--features and --builtin-features are exclusive".into())),
            (Some(path), false) => Ok(ImageFeatures::Table(load_features(path)?)),
            (None, true) => Ok(ImageFeatures::Builtin),
            (None, false) => match cfg.feature_source {
                FeatureSource::Builtin => Ok(ImageFeatures::Builtin),
                FeatureSource::File => Err(CadError::Usage("features.source = file needs --features <path>".into())),
            },
        }
    }

    fn vector(&self, id: &str, image: &ImageGrid) -> Result<Vec<f64>> {
        match self {
            ImageFeatures::Builtin => Ok(builtin_descriptor(image)?),
            ImageFeatures::Table(file) => file
                .records()
                .iter()
                .find(|r| r.id == id)
                .map(|r| r.vector.clone())
                .ok_or_else(|| CadError::Usage(format!("no feature record with id `{id}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub id: String,
    pub positive: bool,
    pub score: f64,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.id, self.positive as u8, fmt_f64(self.score))
    }
}

fn classify_one(model: &BoostedModel, id: String, vector: &[f64], threshold: f64) -> Result<Classification> {
    if vector.len() != model.n_features {
        return Err(lesion_core::Error::DimensionMismatch { expected: model.n_features, found: vector.len() }.into());
    }
    let (positive, score) = classify_row(model, vector, threshold)?;
    Ok(Classification { id, positive, score })
}

/// Classifies every record of a feature file.
pub fn cmd_classify_records(
    model_path: &Path,
    features: &Path,
    cfg: &PipelineConfig,
    out: &mut dyn Write,
) -> Result<Vec<Classification>> {
    let model = load_model(model_path)?;
    let file = load_features(features)?;
    check_dim(cfg, file.dim())?;
    file.into_records()
        .into_iter()
        .map(|FeatureRecord { id, vector, .. }| {
            let c = classify_one(&model, id, &vector, cfg.threshold)?;
            write_line(out, &c)?;
            Ok(c)
        })
        .collect()
}

/// Classifies images.
pub fn cmd_classify_images(
    model_path: &Path,
    images: &[PathBuf],
    source: &ImageFeatures,
    cfg: &PipelineConfig,
    out: &mut dyn Write,
) -> Result<Vec<Classification>> {
    let model = load_model(model_path)?;
    images
        .iter()
        .map(|path| {
            let id = image_id(path)?;
            let vector = source.vector(&id, &load_normalized(path)?)?;
            check_dim(cfg, vector.len())?;
            let c = classify_one(&model, id, &vector, cfg.threshold)?;
            write_line(out, &c)?;
            Ok(c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub id: String,
    pub mask_path: PathBuf,
    pub overlay_path: PathBuf,
    pub iterations: usize,
    pub area: usize,
    pub dice: Option<f64>,
}

impl fmt::Display for SegmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} iterations {} area {}", self.id, self.iterations, self.area)?;
        if let Some(d) = self.dice {
            write!(f, " dice {}", fmt_f64(d))?;
        }
        Ok(())
    }
}

pub fn segment_options(cfg: &PipelineConfig) -> SegmentOptions {
    let mut opts = cfg.segment.clone();
    opts.fcm.seed = cfg.seed;
    opts
}

/// Segments one image into `<out>/<stem>.mask.pgm` and
/// `<out>/<stem>.overlay.pgm`; the overlay is the input with the mask
/// boundary drawn at 255.
pub fn segment_image(path: &Path, truth: Option<&Path>, cfg: &PipelineConfig) -> Result<(SegmentReport, Segmentation)> {
    let id = image_id(path)?;
    let raw = load_image(path)?;
    let seg = fuzzy_level_set_segment(&normalize(&raw), &segment_options(cfg))?;
    let dice = match truth {
        Some(t) => Some(dice(&seg.mask, &load_mask(t)?)?),
        None => None,
    };

    create_dir(&cfg.out)?;
    let mask_path = cfg.out.join(format!("{id}.mask.pgm"));
    let overlay_path = cfg.out.join(format!("{id}.overlay.pgm"));
    save_mask(&seg.mask, &mask_path)?;
    let mut overlay = raw;
    for (v, &edge) in overlay.values_mut().iter_mut().zip(seg.mask.boundary().bits()) {
        if edge {
            *v = 255.0;
        }
    }
    save_image(&overlay, &overlay_path)?;
    let report = SegmentReport {
        id,
        mask_path,
        overlay_path,
        iterations: seg.params.iterations,
        area: seg.mask.area(),
        dice,
    };
    Ok((report, seg))
}

pub fn cmd_segment(image: &Path, truth: Option<&Path>, cfg: &PipelineConfig, out: &mut dyn Write) -> Result<SegmentReport> {
    let (report, _) = segment_image(image, truth, cfg)?;
    write_line(out, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineReport {
    pub classifications: Vec<Classification>,
    pub segmentations: Vec<SegmentReport>,
    /// Positive images whose clustering produced no lesion region.
    pub no_lesion: Vec<String>,
}

/// Classifies every image and segments the positives. Classification lines
/// go to `out`, segmentation summaries to `log`.
pub fn cmd_pipeline(
    model_path: &Path,
    images: &[PathBuf],
    source: &ImageFeatures,
    cfg: &PipelineConfig,
    out: &mut dyn Write,
    log: &mut dyn Write,
) -> Result<PipelineReport> {
    let model = load_model(model_path)?;
    let mut report = PipelineReport::default();
    for path in images {
        let id = image_id(path)?;
        let vector = source.vector(&id, &load_normalized(path)?)?;
        check_dim(cfg, vector.len())?;
        let c = classify_one(&model, id, &vector, cfg.threshold)?;
        write_line(out, &c)?;
        if c.positive {
            match segment_image(path, None, cfg) {
                Ok((seg, _)) => {
                    write_line(log, &seg)?;
                    report.segmentations.push(seg);
                }
                Err(CadError::Core(lesion_core::Error::NoLesionRegion)) => {
                    write_line(log, format_args!("{}: no lesion region after clustering", c.id))?;
                    report.no_lesion.push(c.id.clone());
                }
                Err(e) => return Err(e),
            }
        }
        report.classifications.push(c);
    }
    Ok(report)
}

/// Builds `<out>/features.feat` from a manifest of `<image path> <0|1|?>`
/// lines using the built-in descriptor. Relative paths are taken from the
/// manifest's directory; blank lines and `#` comments are skipped.
pub fn cmd_extract(manifest: &Path, cfg: &PipelineConfig, out: &mut dyn Write) -> Result<PathBuf> {
    let text = fs::read_to_string(manifest).map_err(|e| CadError::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CadError::Usage(format!("{}:{}: expected `<image> <0|1|?>`", manifest.display(), i + 1));
        let (path, label) = line.rsplit_once(char::is_whitespace).ok_or_else(bad)?;
        let label = match label {
            "0" => Some(0),
            "1" => Some(1),
            "?" => None,
            _ => return Err(bad()),
        };
        let path = base.join(path.trim());
        let vector = builtin_descriptor(&load_normalized(&path)?)?;
        records.push(FeatureRecord::new(image_id(&path)?, label, vector));
    }
    let file = FeatureFile::new(lesion_core::features::DESCRIPTOR_LEN, records)?;
    create_dir(&cfg.out)?;
    let dest = cfg.out.join(FEATURE_FILE);
    save_features(&file, &dest)?;
    write_line(out, format_args!("features {} records {}", dest.display(), file.records().len()))?;
    Ok(dest)
}
