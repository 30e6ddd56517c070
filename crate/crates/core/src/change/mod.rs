//! From learned representations to a refined binary change map.

mod difference;
mod fusion;
mod morphology;
mod otsu;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::formats;
use crate::raster::{Modality, Raster};

pub use difference::{
    knn_similar_objects, local_difference_from_features, local_difference_image,
    local_object_distance, nonlocal_difference_from_features, nonlocal_difference_image,
    nonlocal_directed_distance, object_signature, NonlocalConfig,
};
pub use fusion::{adaptive_fuse, intensity_variance};
pub use morphology::{close, dilate, erode, morph_refine, open, KernelRole, MorphKernel};
pub use otsu::{otsu_threshold, otsu_threshold_with_bins, OtsuResult, DEFAULT_BINS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DifferenceKind {
    Local,
    Nonlocal,
    Fused,
}

/// Per-pixel change intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceImage {
    height: usize,
    width: usize,
    intensity: Vec<f64>,
    kind: DifferenceKind,
}

impl DifferenceImage {
    pub fn new(height: usize, width: usize, intensity: Vec<f64>, kind: DifferenceKind) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyRaster);
        }
        if intensity.len() != height * width {
            return Err(Error::DimensionMismatch {
                declared: height * width,
                actual: intensity.len(),
            });
        }
        if intensity.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue);
        }
        Ok(Self {
            height,
            width,
            intensity,
            kind,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn kind(&self) -> DifferenceKind {
        self.kind
    }

    pub fn get(&self, h: usize, w: usize) -> f64 {
        self.intensity[h * self.width + w]
    }

    pub fn to_raster(&self) -> Raster {
        Raster::new(self.height, self.width, 1, self.intensity.clone(), Modality::Generic)
            .expect("difference image is a valid raster")
    }

    pub fn from_raster(r: &Raster, kind: DifferenceKind) -> Result<Self> {
        if r.channels() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "difference image needs one channel, got {}",
                r.channels()
            )));
        }
        Self::new(r.height(), r.width(), r.data().to_vec(), kind)
    }

    /// Writes a single-channel MMR raster.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::raster::save_raster(&self.to_raster(), path)
    }

    pub fn load(path: impl AsRef<Path>, kind: DifferenceKind) -> Result<Self> {
        Self::from_raster(&crate::raster::load_raster(path)?, kind)
    }
}

/// Binary decision map; `true` marks the change class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChangeMap {
    height: usize,
    width: usize,
    mask: Vec<bool>,
}

impl ChangeMap {
    pub fn new(height: usize, width: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != height * width {
            return Err(Error::DimensionMismatch {
                declared: height * width,
                actual: mask.len(),
            });
        }
        Ok(Self { height, width, mask })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            mask: vec![false; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, h: usize, w: usize) -> bool {
        self.mask[h * self.width + w]
    }

    pub fn count_changed(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let px: Vec<u8> = self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        formats::encode_pgm(self.height, self.width, &px)
    }

    /// Writes a P5 PGM with values {0, 255}.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_pgm_bytes())?;
        Ok(())
    }

    /// Reads a P5 PGM; any nonzero sample is the change class.
    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let (height, width, px) = formats::decode_pgm(&fs::read(path)?)?;
        Self::new(height, width, px.into_iter().map(|v| v != 0).collect())
    }
}
