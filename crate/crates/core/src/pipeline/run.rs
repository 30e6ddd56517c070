//! End-to-end orchestration and the individual stages it is built from.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::PipelineConfig;
use crate::change::{
    self, adaptive_fuse, morph_refine, otsu_threshold_with_bins, ChangeMap, DifferenceImage,
    DifferenceKind, KernelRole, MorphKernel, NonlocalConfig,
};
use crate::error::{Error, Result};
use crate::graphs::{build_all_graphs, GraphConfig, StructuralGraph};
use crate::metrics::{confusion, oa_f1_kappa, roc_auc, Accuracy, MetricsRow, RocCurve};
use crate::raster::{load_raster, normalize, stack_channels, Modality, Raster};
use crate::segment::{fnea_segment, SegmentationConfig, SegmentationMap};
use crate::srgcae::{
    encode_all, init_model, init_model_shared, save_model, train, ImageSide, Objective,
    SrGcaeModel, TrainConfig, TrainReport,
};

/// Applies optional modality overrides, checks co-registration and
/// normalizes both images.
pub fn prepare_pair(
    pre: Raster,
    post: Raster,
    pre_modality: Option<Modality>,
    post_modality: Option<Modality>,
) -> Result<(Raster, Raster)> {
    if pre.height() != post.height() || pre.width() != post.width() {
        return Err(Error::ShapeMismatch(format!(
            "pre {}x{} vs post {}x{}",
            pre.height(),
            pre.width(),
            post.height(),
            post.width()
        )));
    }
    let pre = match pre_modality {
        Some(m) => pre.with_modality(m),
        None => pre,
    };
    let post = match post_modality {
        Some(m) => post.with_modality(m),
        None => post,
    };
    Ok((normalize(&pre)?, normalize(&post)?))
}

/// Co-segmentation on the channel stack of both normalized images.
pub fn co_segment(x: &Raster, y: &Raster, cfg: &SegmentationConfig) -> Result<SegmentationMap> {
    fnea_segment(&stack_channels(x, y)?, cfg)
}

pub fn build_graph_pair(
    x: &Raster,
    y: &Raster,
    seg: &SegmentationMap,
    cfg: &GraphConfig,
) -> Result<(Vec<StructuralGraph>, Vec<StructuralGraph>)> {
    Ok((build_all_graphs(x, seg, cfg)?, build_all_graphs(y, seg, cfg)?))
}

/// A fresh model for a pair of images. The input projection is shared when
/// both images come from the same sensor type with the same band count.
pub fn init_for_pair(x: &Raster, y: &Raster, objective: Objective, seed: u64) -> Result<SrGcaeModel> {
    if x.modality() == y.modality() && x.channels() == y.channels() {
        init_model_shared(x.channels(), objective, seed)
    } else {
        init_model(x.channels(), y.channels(), objective, seed)
    }
}

pub fn train_for_pair(
    x: &Raster,
    y: &Raster,
    graphs_x: &[StructuralGraph],
    graphs_y: &[StructuralGraph],
    objective: Objective,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<(SrGcaeModel, TrainReport)> {
    train(init_for_pair(x, y, objective, seed)?, graphs_x, graphs_y, cfg)
}

/// Local difference image from the edge-objective model.
pub fn local_stage(
    edge_model: &SrGcaeModel,
    graphs_x: &[StructuralGraph],
    graphs_y: &[StructuralGraph],
    seg: &SegmentationMap,
) -> Result<DifferenceImage> {
    change::local_difference_image(edge_model, graphs_x, graphs_y, seg)
}

/// Nonlocal difference image from the vertex-objective model.
///
/// `k_similar` is capped at one less than the object count; with a single
/// object there are no peers to compare against and the image is all zero.
pub fn nonlocal_stage(
    vertex_model: &SrGcaeModel,
    graphs_x: &[StructuralGraph],
    graphs_y: &[StructuralGraph],
    seg: &SegmentationMap,
    cfg: &NonlocalConfig,
) -> Result<DifferenceImage> {
    let n = seg.n_objects();
    if n < 2 {
        return DifferenceImage::new(
            seg.height(),
            seg.width(),
            vec![0.0; seg.height() * seg.width()],
            DifferenceKind::Nonlocal,
        );
    }
    let cfg = NonlocalConfig {
        k_similar: cfg.k_similar.min(n - 1),
        ..cfg.clone()
    };
    let fx = encode_all(vertex_model, graphs_x, ImageSide::X)?;
    let fy = encode_all(vertex_model, graphs_y, ImageSide::Y)?;
    change::nonlocal_difference_from_features(&fx, &fy, seg, &cfg)
}

/// Adaptive fusion. Two flat inputs carry no change evidence and fuse to
/// an all-zero image.
pub fn fuse_stage(local: &DifferenceImage, nonlocal: &DifferenceImage) -> Result<DifferenceImage> {
    match adaptive_fuse(local, nonlocal) {
        Err(Error::BothVariancesZero) => DifferenceImage::new(
            local.height(),
            local.width(),
            vec![0.0; local.height() * local.width()],
            DifferenceKind::Fused,
        ),
        other => other,
    }
}

/// Otsu thresholding. A constant image yields an empty change map.
pub fn threshold_stage(di: &DifferenceImage, bins: usize) -> Result<ChangeMap> {
    match otsu_threshold_with_bins(di, bins) {
        Ok(r) => Ok(r.change_map),
        Err(Error::ConstantImage) => Ok(ChangeMap::empty(di.height(), di.width())),
        Err(e) => Err(e),
    }
}

pub fn refine_stage(cm: &ChangeMap, close_side: usize, open_side: usize) -> Result<ChangeMap> {
    let close = MorphKernel::new(close_side, KernelRole::Close)?;
    let open = MorphKernel::new(open_side, KernelRole::Open)?;
    Ok(morph_refine(cm, &close, &open))
}

/// Accuracy of a change map and ROC of the difference image it came from.
pub fn evaluate(cm: &ChangeMap, di: &DifferenceImage, reference: &ChangeMap) -> Result<(Accuracy, RocCurve)> {
    let accuracy = oa_f1_kappa(&confusion(cm, reference)?)?;
    Ok((accuracy, roc_auc(di, reference)?))
}

/// Everything a run produces, held in memory.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub segmentation: SegmentationMap,
    pub edge_model: SrGcaeModel,
    pub vertex_model: SrGcaeModel,
    pub edge_report: TrainReport,
    pub vertex_report: TrainReport,
    pub di_local: DifferenceImage,
    pub di_nonlocal: DifferenceImage,
    pub di_final: DifferenceImage,
    pub cm_raw: ChangeMap,
    pub cm_refined: ChangeMap,
    /// Wall-clock seconds per stage, in execution order.
    pub timings: Vec<(&'static str, f64)>,
}

impl PipelineOutput {
    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|(_, s)| s).sum()
    }
}

fn timed<T>(timings: &mut Vec<(&'static str, f64)>, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    timings.push((stage, start.elapsed().as_secs_f64()));
    Ok(out)
}

/// Runs every stage on in-memory rasters.
pub fn run_on_rasters(pre: Raster, post: Raster, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut t = Vec::new();
    let (x, y) = timed(&mut t, "normalize", || {
        prepare_pair(pre, post, cfg.pre_modality, cfg.post_modality)
    })?;
    let seg = timed(&mut t, "segment", || co_segment(&x, &y, &cfg.segmentation()))?;
    let (gx, gy) = timed(&mut t, "graphs", || build_graph_pair(&x, &y, &seg, &cfg.graphs()))?;
    let (edge_model, edge_report) = timed(&mut t, "train_edge", || {
        train_for_pair(&x, &y, &gx, &gy, Objective::Edge, cfg.edge_seed(), &cfg.train)
    })?;
    let (vertex_model, vertex_report) = timed(&mut t, "train_vertex", || {
        train_for_pair(&x, &y, &gx, &gy, Objective::Vertex, cfg.vertex_seed(), &cfg.train)
    })?;
    let di_local = timed(&mut t, "diff_local", || local_stage(&edge_model, &gx, &gy, &seg))?;
    let di_nonlocal = timed(&mut t, "diff_nonlocal", || {
        nonlocal_stage(&vertex_model, &gx, &gy, &seg, &cfg.nonlocal)
    })?;
    let di_final = timed(&mut t, "fuse", || fuse_stage(&di_local, &di_nonlocal))?;
    let cm_raw = timed(&mut t, "threshold", || threshold_stage(&di_final, cfg.otsu_bins))?;
    let cm_refined = timed(&mut t, "refine", || refine_stage(&cm_raw, cfg.close_side, cfg.open_side))?;
    Ok(PipelineOutput {
        segmentation: seg,
        edge_model,
        vertex_model,
        edge_report,
        vertex_report,
        di_local,
        di_nonlocal,
        di_final,
        cm_raw,
        cm_refined,
        timings: t,
    })
}

/// Kappa of the local-only, nonlocal-only, fused and refined change maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ablation {
    pub kc_local: f64,
    pub kc_nonlocal: f64,
    pub kc_fused: f64,
    pub kc_refined: f64,
}

impl Ablation {
    pub fn to_csv(&self) -> String {
        format!(
            "variant,kc\nlocal,{:.6}\nnonlocal,{:.6}\nfused,{:.6}\nrefined,{:.6}\n",
            self.kc_local, self.kc_nonlocal, self.kc_fused, self.kc_refined
        )
    }
}

pub fn ablation(out: &PipelineOutput, reference: &ChangeMap, bins: usize) -> Result<Ablation> {
    let kc = |cm: &ChangeMap| -> Result<f64> { Ok(oa_f1_kappa(&confusion(cm, reference)?)?.kappa) };
    Ok(Ablation {
        kc_local: kc(&threshold_stage(&out.di_local, bins)?)?,
        kc_nonlocal: kc(&threshold_stage(&out.di_nonlocal, bins)?)?,
        kc_fused: kc(&out.cm_raw)?,
        kc_refined: kc(&out.cm_refined)?,
    })
}

/// What a file-based run reports back.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub n_objects: usize,
    pub changed_pixels: usize,
    pub metrics: Option<MetricsRow>,
    pub ablation: Option<Ablation>,
}

/// Artifacts whose bytes depend only on config and inputs. The last two are
/// written only when a reference map is supplied.
pub const DETERMINISTIC_ARTIFACTS: [&str; 12] = [
    "manifest.txt",
    "segmentation.mmrseg",
    "model_edge.gcae",
    "model_vertex.gcae",
    "train_report.csv",
    "di_local.mmr",
    "di_nonlocal.mmr",
    "di_final.mmr",
    "cm_raw.pgm",
    "cm_refined.pgm",
    "roc.csv",
    "ablation.csv",
];

fn train_report_csv(edge: &TrainReport, vertex: &TrainReport) -> String {
    let mut out = String::from("objective,epoch,mean_loss\n");
    for (name, report) in [("edge", edge), ("vertex", vertex)] {
        for (i, loss) in report.epoch_losses.iter().enumerate() {
            writeln!(out, "{name},{},{loss:e}", i + 1).expect("writing to a String");
        }
    }
    out
}

/// Writes the intermediate artifacts of an in-memory run into `dir`.
pub fn write_artifacts(out: &PipelineOutput, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = cfg.to_text();
    writeln!(manifest, "# objects = {}", out.segmentation.n_objects()).expect("writing to a String");
    writeln!(manifest, "# changed_pixels = {}", out.cm_refined.count_changed()).expect("writing to a String");
    fs::write(dir.join("manifest.txt"), manifest)?;
    out.segmentation.save(dir.join("segmentation.mmrseg"))?;
    save_model(&out.edge_model, dir.join("model_edge.gcae"))?;
    save_model(&out.vertex_model, dir.join("model_vertex.gcae"))?;
    fs::write(
        dir.join("train_report.csv"),
        train_report_csv(&out.edge_report, &out.vertex_report),
    )?;
    out.di_local.save(dir.join("di_local.mmr"))?;
    out.di_nonlocal.save(dir.join("di_nonlocal.mmr"))?;
    out.di_final.save(dir.join("di_final.mmr"))?;
    out.cm_raw.save_pgm(dir.join("cm_raw.pgm"))?;
    out.cm_refined.save_pgm(dir.join("cm_refined.pgm"))?;
    let mut timings = String::from("stage,seconds\n");
    for (stage, secs) in &out.timings {
        writeln!(timings, "{stage},{secs:.6}").expect("writing to a String");
    }
    fs::write(dir.join("timings.txt"), timings)?;
    Ok(())
}

/// Loads the inputs named in `cfg`, runs every stage and writes all
/// artifacts to `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    let start = Instant::now();
    let pre = load_raster(&cfg.pre)?;
    let post = load_raster(&cfg.post)?;
    let reference = cfg.reference.as_ref().map(ChangeMap::load_pgm).transpose()?;
    let out = run_on_rasters(pre, post, cfg)?;
    write_artifacts(&out, cfg, &cfg.output_dir)?;

    let (mut metrics, mut abl) = (None, None);
    if let Some(reference) = &reference {
        let (accuracy, roc) = evaluate(&out.cm_refined, &out.di_final, reference)?;
        let row = MetricsRow {
            dataset: cfg.dataset.clone(),
            accuracy,
            auc: roc.auc,
            runtime_seconds: start.elapsed().as_secs_f64(),
        };
        let a = ablation(&out, reference, cfg.otsu_bins)?;
        fs::write(cfg.output_dir.join("metrics.csv"), row.to_csv())?;
        fs::write(cfg.output_dir.join("roc.csv"), roc.to_csv())?;
        fs::write(cfg.output_dir.join("ablation.csv"), a.to_csv())?;
        metrics = Some(row);
        abl = Some(a);
    }
    Ok(RunSummary {
        output_dir: cfg.output_dir.clone(),
        n_objects: out.segmentation.n_objects(),
        changed_pixels: out.cm_refined.count_changed(),
        metrics,
        ablation: abl,
    })
}
