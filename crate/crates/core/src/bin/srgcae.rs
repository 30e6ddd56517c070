use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use srgcae::change::{ChangeMap, DifferenceImage, DifferenceKind};
use srgcae::metrics::MetricsRow;
use srgcae::pipeline::{self, PipelineConfig, SyntheticSpec};
use srgcae::raster::{load_raster, save_raster, Raster};
use srgcae::segment::SegmentationMap;
use srgcae::srgcae::{load_model, save_model, Objective};
use srgcae::{Error, Result};

#[derive(Parser)]
#[command(name = "srgcae", version, about = "Unsupervised multimodal change detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set segment.merge_threshold=25`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got {s:?}")))?;
            cfg.set(k, v)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    pre: PathBuf,
    #[arg(long)]
    post: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Edge,
    Vertex,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiffKindArg {
    Local,
    Nonlocal,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline from two rasters to a refined change map.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        pre: Option<PathBuf>,
        #[arg(long)]
        post: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Co-segment a normalized image pair into objects.
    Segment {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one autoencoder on the structural graphs of a segmented pair.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        seg: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch mean loss as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Local or nonlocal difference image from a trained model.
    Diff {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        seg: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        kind: DiffKindArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Variance-weighted fusion of a local and a nonlocal difference image.
    Fuse {
        #[arg(long)]
        local: PathBuf,
        #[arg(long)]
        nonlocal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Otsu threshold of a difference image into a PGM change map.
    Threshold {
        #[arg(long)]
        di: PathBuf,
        #[arg(long, default_value_t = 256)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Morphological closing then opening of a change map.
    Refine {
        #[arg(long)]
        cm: PathBuf,
        #[arg(long, default_value_t = 3)]
        close: usize,
        #[arg(long, default_value_t = 3)]
        open: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy of a change map against a reference.
    Eval {
        #[arg(long)]
        cm: PathBuf,
        #[arg(long)]
        di: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "run")]
        dataset: String,
        /// Write the metrics CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Synthetic optical/SAR pair with planted change.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 120)]
        regions: usize,
        #[arg(long, default_value_t = 0.1)]
        change_fraction: f64,
        #[arg(long, default_value_t = 2.2)]
        gamma: f64,
        #[arg(long, default_value_t = 4.0)]
        looks: f64,
        #[arg(long, default_value_t = 0.03)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_pair(cfg: &PipelineConfig, pair: &PairArgs) -> Result<(Raster, Raster)> {
    pipeline::prepare_pair(
        load_raster(&pair.pre)?,
        load_raster(&pair.post)?,
        cfg.pre_modality,
        cfg.post_modality,
    )
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::from)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { cfg, pre, post, reference, out } => {
            let mut cfg = cfg.resolve()?;
            if let Some(p) = pre {
                cfg.pre = p;
            }
            if let Some(p) = post {
                cfg.post = p;
            }
            if reference.is_some() {
                cfg.reference = reference;
            }
            if let Some(p) = out {
                cfg.output_dir = p;
            }
            let summary = pipeline::run_pipeline(&cfg)?;
            println!(
                "objects={} changed_pixels={} output={}",
                summary.n_objects,
                summary.changed_pixels,
                summary.output_dir.display()
            );
            if let Some(m) = summary.metrics {
                print!("{}", m.to_csv());
            }
        }
        Command::Segment { cfg, pair, out } => {
            let cfg = cfg.resolve()?;
            let (x, y) = load_pair(&cfg, &pair)?;
            let seg = pipeline::co_segment(&x, &y, &cfg.segmentation())?;
            seg.save(&out)?;
            println!("objects={}", seg.n_objects());
        }
        Command::Train { cfg, pair, seg, objective, out, report } => {
            let cfg = cfg.resolve()?;
            let (x, y) = load_pair(&cfg, &pair)?;
            let seg = SegmentationMap::load(&seg)?;
            let (gx, gy) = pipeline::build_graph_pair(&x, &y, &seg, &cfg.graphs())?;
            let (objective, seed) = match objective {
                ObjectiveArg::Edge => (Objective::Edge, cfg.edge_seed()),
                ObjectiveArg::Vertex => (Objective::Vertex, cfg.vertex_seed()),
            };
            let (model, rep) = pipeline::train_for_pair(&x, &y, &gx, &gy, objective, seed, &cfg.train)?;
            save_model(&model, &out)?;
            if let Some(path) = report {
                let mut csv = String::from("epoch,mean_loss\n");
                for (i, l) in rep.epoch_losses.iter().enumerate() {
                    csv.push_str(&format!("{},{l:e}\n", i + 1));
                }
                write_text(&path, &csv)?;
            }
            println!("final_loss={:e}", rep.final_loss().unwrap_or(f64::NAN));
        }
        Command::Diff { cfg, pair, seg, model, kind, out } => {
            let cfg = cfg.resolve()?;
            let (x, y) = load_pair(&cfg, &pair)?;
            let seg = SegmentationMap::load(&seg)?;
            let model = load_model(&model)?;
            let (gx, gy) = pipeline::build_graph_pair(&x, &y, &seg, &cfg.graphs())?;
            let di = match kind {
                DiffKindArg::Local => pipeline::local_stage(&model, &gx, &gy, &seg)?,
                DiffKindArg::Nonlocal => pipeline::nonlocal_stage(&model, &gx, &gy, &seg, &cfg.nonlocal)?,
            };
            di.save(&out)?;
        }
        Command::Fuse { local, nonlocal, out } => {
            let l = DifferenceImage::load(&local, DifferenceKind::Local)?;
            let n = DifferenceImage::load(&nonlocal, DifferenceKind::Nonlocal)?;
            pipeline::fuse_stage(&l, &n)?.save(&out)?;
        }
        Command::Threshold { di, bins, out } => {
            let di = DifferenceImage::load(&di, DifferenceKind::Fused)?;
            let cm = pipeline::threshold_stage(&di, bins)?;
            cm.save_pgm(&out)?;
            println!("changed_pixels={}", cm.count_changed());
        }
        Command::Refine { cm, close, open, out } => {
            let cm = ChangeMap::load_pgm(&cm)?;
            let refined = pipeline::refine_stage(&cm, close, open)?;
            refined.save_pgm(&out)?;
            println!("changed_pixels={}", refined.count_changed());
        }
        Command::Eval { cm, di, reference, dataset, out, roc } => {
            let cm = ChangeMap::load_pgm(&cm)?;
            let di = DifferenceImage::load(&di, DifferenceKind::Fused)?;
            let reference = ChangeMap::load_pgm(&reference)?;
            let (accuracy, curve) = pipeline::evaluate(&cm, &di, &reference)?;
            let row = MetricsRow {
                dataset,
                accuracy,
                auc: curve.auc,
                runtime_seconds: 0.0,
            };
            match out {
                Some(path) => write_text(&path, &row.to_csv())?,
                None => print!("{}", row.to_csv()),
            }
            if let Some(path) = roc {
                write_text(&path, &curve.to_csv())?;
            }
        }
        Command::Synth { out, height, width, regions, change_fraction, gamma, looks, noise, seed } => {
            let pair = pipeline::generate_synthetic_pair(&SyntheticSpec {
                height,
                width,
                n_regions: regions,
                change_fraction,
                gamma,
                speckle_looks: looks,
                noise_level: noise,
                seed,
            })?;
            fs::create_dir_all(&out)?;
            save_raster(&pair.pre, out.join("pre.mmr"))?;
            save_raster(&pair.post, out.join("post.mmr"))?;
            pair.truth.save_pgm(out.join("truth.pgm"))?;
            println!("changed_pixels={}", pair.truth.count_changed());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: code={} msg={msg:?}", e.code());
            ExitCode::from(1)
        }
    }
}
