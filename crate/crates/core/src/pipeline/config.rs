//! Line-oriented `key = value` configuration.
//!
//! Keys use dotted section prefixes (`segment.merge_threshold = 3`). Lines
//! starting with `#` and blank lines are ignored. The same format is used for
//! run manifests, so a manifest can be fed back as a config to replay a run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::change::NonlocalConfig;
use crate::error::{Error, Result};
use crate::graphs::GraphConfig;
use crate::raster::Modality;
use crate::segment::SegmentationConfig;
use crate::srgcae::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub pre: PathBuf,
    pub post: PathBuf,
    pub reference: Option<PathBuf>,
    /// Overrides the modality tag stored in the pre-change file.
    pub pre_modality: Option<Modality>,
    pub post_modality: Option<Modality>,
    pub output_dir: PathBuf,
    pub dataset: String,
    pub seed: u64,
    pub segment: SegmentationConfig,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub nonlocal: NonlocalConfig,
    pub otsu_bins: usize,
    pub close_side: usize,
    pub open_side: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pre: PathBuf::from("pre.mmr"),
            post: PathBuf::from("post.mmr"),
            reference: None,
            pre_modality: None,
            post_modality: None,
            output_dir: PathBuf::from("out"),
            dataset: "run".to_string(),
            seed: 0,
            segment: SegmentationConfig::default(),
            graph: GraphConfig::default(),
            train: TrainConfig::default(),
            nonlocal: NonlocalConfig::default(),
            otsu_bins: crate::change::DEFAULT_BINS,
            close_side: 3,
            open_side: 3,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_modality(key: &str, value: &str) -> Result<Option<Modality>> {
    if value.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    Modality::parse(value)
        .map(Some)
        .ok_or_else(|| Error::InvalidConfig(format!("{key}: unknown modality {value:?}")))
}

impl PipelineConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "input.pre" => self.pre = PathBuf::from(value),
            "input.post" => self.post = PathBuf::from(value),
            "input.reference" => {
                self.reference = (!value.is_empty() && value != "none").then(|| PathBuf::from(value))
            }
            "input.pre_modality" => self.pre_modality = parse_modality(key, value)?,
            "input.post_modality" => self.post_modality = parse_modality(key, value)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "output.dataset" => self.dataset = value.to_string(),
            "seed" => self.seed = parse_num(key, value)?,
            "segment.merge_threshold" => self.segment.merge_threshold = parse_num(key, value)?,
            "segment.w_channel" => self.segment.w_channel = parse_num(key, value)?,
            "segment.w_compactness" => self.segment.w_compactness = parse_num(key, value)?,
            "segment.min_object_size" => self.segment.min_object_size = parse_num(key, value)?,
            "graph.phi1" => self.graph.phi1 = parse_num(key, value)?,
            "graph.max_vertices" => self.graph.max_vertices = parse_num(key, value)?,
            "train.epochs" => self.train.epochs = parse_num(key, value)?,
            "train.learning_rate" => self.train.learning_rate = parse_num(key, value)?,
            "train.weight_decay" => self.train.weight_decay = parse_num(key, value)?,
            "nonlocal.k_similar" => self.nonlocal.k_similar = parse_num(key, value)?,
            "nonlocal.phi2" => self.nonlocal.phi2 = parse_num(key, value)?,
            "threshold.bins" => self.otsu_bins = parse_num(key, value)?,
            "morph.close_side" => self.close_side = parse_num(key, value)?,
            "morph.open_side" => self.open_side = parse_num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn to_text(&self) -> String {
        let modality = |m: Option<Modality>| m.map_or("auto", Modality::name);
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        };
        kv("input.pre", self.pre.display().to_string());
        kv("input.post", self.post.display().to_string());
        kv(
            "input.reference",
            self.reference
                .as_ref()
                .map_or("none".to_string(), |p| p.display().to_string()),
        );
        kv("input.pre_modality", modality(self.pre_modality).to_string());
        kv("input.post_modality", modality(self.post_modality).to_string());
        kv("output.dir", self.output_dir.display().to_string());
        kv("output.dataset", self.dataset.clone());
        kv("seed", self.seed.to_string());
        kv("segment.merge_threshold", self.segment.merge_threshold.to_string());
        kv("segment.w_channel", self.segment.w_channel.to_string());
        kv("segment.w_compactness", self.segment.w_compactness.to_string());
        kv("segment.min_object_size", self.segment.min_object_size.to_string());
        kv("graph.phi1", self.graph.phi1.to_string());
        kv("graph.max_vertices", self.graph.max_vertices.to_string());
        kv("train.epochs", self.train.epochs.to_string());
        kv("train.learning_rate", self.train.learning_rate.to_string());
        kv("train.weight_decay", self.train.weight_decay.to_string());
        kv("nonlocal.k_similar", self.nonlocal.k_similar.to_string());
        kv("nonlocal.phi2", self.nonlocal.phi2.to_string());
        kv("threshold.bins", self.otsu_bins.to_string());
        kv("morph.close_side", self.close_side.to_string());
        kv("morph.open_side", self.open_side.to_string());
        out
    }

    /// Sub-configs with seeds derived from the master seed.
    pub fn segmentation(&self) -> SegmentationConfig {
        SegmentationConfig {
            rng_seed: self.seed,
            ..self.segment.clone()
        }
    }

    pub fn graphs(&self) -> GraphConfig {
        GraphConfig {
            rng_seed: self.seed,
            ..self.graph.clone()
        }
    }

    pub fn edge_seed(&self) -> u64 {
        self.seed
    }

    pub fn vertex_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.segmentation().validate()?;
        self.graphs().validate()?;
        self.nonlocal.validate()?;
        if !(self.train.learning_rate > 0.0) || !(self.train.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(
                "train.learning_rate must be > 0 and train.weight_decay >= 0".into(),
            ));
        }
        if self.otsu_bins < 2 {
            return Err(Error::InvalidConfig("threshold.bins must be >= 2".into()));
        }
        crate::change::MorphKernel::new(self.close_side, crate::change::KernelRole::Close)?;
        crate::change::MorphKernel::new(self.open_side, crate::change::KernelRole::Open)?;
        Ok(())
    }
}
