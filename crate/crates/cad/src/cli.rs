use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{CadError, Result, EXIT_OK, EXIT_USAGE};
use crate::pipeline::{
    cmd_classify_images, cmd_classify_records, cmd_eval, cmd_extract, cmd_pipeline, cmd_segment, cmd_train,
    ImageFeatures,
};

#[derive(Debug, Parser)]
#[command(name = "lesioncad", version, about = "Lesion classification and segmentation for CT slices")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    /// Feature file (`lesionfeat v1`); image ids are file stems.
    #[arg(long, value_name = "PATH")]
    pub features: Option<PathBuf>,
    /// Compute the built-in descriptor from each image.
    #[arg(long, conflicts_with = "features")]
    pub builtin_features: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the classifier on a labeled feature file; writes <out>/model.txt.
    Train {
        #[arg(long, value_name = "PATH")]
        features: PathBuf,
    },
    /// Print `<id> <class> <score>` for records of a feature file or for images.
    Classify {
        model: PathBuf,
        images: Vec<PathBuf>,
        #[command(flatten)]
        source: FeatureArgs,
    },
    /// Segment one image into <out>/<stem>.mask.pgm and <out>/<stem>.overlay.pgm.
    Segment {
        image: PathBuf,
        /// Ground-truth mask; prints the Dice overlap.
        #[arg(long, value_name = "MASK")]
        truth: Option<PathBuf>,
    },
    /// Classify images and segment the positive ones.
    Pipeline {
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[command(flatten)]
        source: FeatureArgs,
    },
    /// Confusion matrix and metrics of a model on a labeled feature file.
    Eval {
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        features: PathBuf,
    },
    /// Build <out>/features.feat from `<image> <0|1|?>` manifest lines with the built-in descriptor.
    Extract { manifest: PathBuf },
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

pub fn run(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Train { features } => cmd_train(&features, &cfg, out).map(drop),
        Command::Classify { model, images, source } => {
            if images.is_empty() {
                let features = source
                    .features
                    .ok_or_else(|| CadError::Usage("classify needs --features <path> or image paths".into()))?;
                if source.builtin_features {
                    return Err(CadError::Usage("--builtin-features needs image paths".into()));
                }
                cmd_classify_records(&model, &features, &cfg, out).map(drop)
            } else {
                let src = ImageFeatures::from_config(&cfg, source.features.as_deref(), source.builtin_features)?;
                cmd_classify_images(&model, &images, &src, &cfg, out).map(drop)
            }
        }
        Command::Segment { image, truth } => cmd_segment(&image, truth.as_deref(), &cfg, out).map(drop),
        Command::Pipeline { model, images, source } => {
            let src = ImageFeatures::from_config(&cfg, source.features.as_deref(), source.builtin_features)?;
            let report = cmd_pipeline(&model, &images, &src, &cfg, out, log)?;
            if report.no_lesion.is_empty() {
                Ok(())
            } else {
                Err(lesion_core::Error::NoLesionRegion.into())
            }
        }
        Command::Eval { model, features } => cmd_eval(&model, &features, &cfg, out).map(drop),
        Command::Extract { manifest } => cmd_extract(&manifest, &cfg, out).map(drop),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
    match run(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
