//! Raster data model, file I/O and modality-aware normalization.
//!
//! A [`Raster`] stores `height × width × channels` samples as 64-bit floats in
//! row-major, channel-interleaved order, so the channel vector of pixel
//! `(h, w)` is the contiguous slice starting at `(h * width + w) * channels`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::formats;

/// Sensor family of a raster. Decides which normalization applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Modality {
    #[default]
    Generic,
    Optical,
    Sar,
}

impl Modality {
    pub fn code(self) -> u8 {
        match self {
            Modality::Generic => 0,
            Modality::Optical => 1,
            Modality::Sar => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Modality::Generic),
            1 => Some(Modality::Optical),
            2 => Some(Modality::Sar),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Generic => "generic",
            Modality::Optical => "optical",
            Modality::Sar => "sar",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "generic" => Some(Modality::Generic),
            "optical" => Some(Modality::Optical),
            "sar" => Some(Modality::Sar),
            _ => None,
        }
    }
}

/// On-disk encodings understood by [`load_raster`] / [`save_raster_as`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    /// `MMRASTR1` multimodal raster, lossless for any valid raster.
    Mmr,
    /// Netpbm P5, single channel, integer samples in `[0, 255]`.
    Pgm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
    modality: Modality,
}

impl Raster {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
        modality: Modality,
    ) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::EmptyRaster);
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                declared: expected,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue);
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
            modality,
        })
    }

    pub fn filled(
        height: usize,
        width: usize,
        channels: usize,
        value: f64,
        modality: Modality,
    ) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
            modality,
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn n_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn with_modality(mut self, modality: Modality) -> Self {
        self.modality = modality;
        self
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.data[(h * self.width + w) * self.channels + c]
    }

    /// Channel vector of pixel `(h, w)`.
    #[inline]
    pub fn pixel(&self, h: usize, w: usize) -> &[f64] {
        let start = (h * self.width + w) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Channel vector of the pixel with flat index `idx = h * width + w`.
    #[inline]
    pub fn pixel_at(&self, idx: usize) -> &[f64] {
        let start = idx * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Returns `(min, max)` of channel `c`.
    pub fn channel_range(&self, c: usize) -> (f64, f64) {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    fn same_shape(&self, other: &Raster) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Reads a raster, dispatching on the file's magic bytes.
pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let bytes = fs::read(path.as_ref())?;
    decode_raster(&bytes)
}

pub fn decode_raster(bytes: &[u8]) -> Result<Raster> {
    if bytes.starts_with(formats::MMR_MAGIC) {
        formats::decode_mmr(bytes)
    } else if bytes.starts_with(b"P5") {
        let (height, width, pixels) = formats::decode_pgm(bytes)?;
        let data = pixels.into_iter().map(f64::from).collect();
        Raster::new(height, width, 1, data, Modality::Generic)
    } else {
        Err(Error::UnsupportedFormat(
            "expected MMRASTR1 or P5 magic".to_string(),
        ))
    }
}

/// Writes `r` in the MMR format.
pub fn save_raster(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    save_raster_as(r, path, RasterFormat::Mmr)
}

pub fn save_raster_as(r: &Raster, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let bytes = match format {
        RasterFormat::Mmr => formats::encode_mmr(r),
        RasterFormat::Pgm => encode_pgm_raster(r)?,
    };
    fs::write(path.as_ref(), bytes)?;
    Ok(())
}

fn encode_pgm_raster(r: &Raster) -> Result<Vec<u8>> {
    if r.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM holds one channel, raster has {}",
            r.channels
        )));
    }
    let pixels = r
        .data
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
                Ok(v as u8)
            } else {
                Err(Error::PgmRequiresIntegerRange)
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(formats::encode_pgm(r.height, r.width, &pixels))
}

/// Per-channel min-max rescaling to `[0, 1]`. Constant channels map to zero.
pub fn normalize_optical(r: &Raster) -> Raster {
    let ranges: Vec<(f64, f64)> = (0..r.channels).map(|c| r.channel_range(c)).collect();
    let data = r
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (lo, hi) = ranges[i % r.channels];
            if hi > lo {
                (v - lo) / (hi - lo)
            } else {
                0.0
            }
        })
        .collect();
    Raster {
        data,
        ..r.clone()
    }
}

/// `log(1 + x)` despeckling followed by [`normalize_optical`].
pub fn normalize_sar(r: &Raster) -> Result<Raster> {
    if let Some(&bad) = r.data.iter().find(|&&v| v < 0.0) {
        return Err(Error::NegativeSarValue(bad));
    }
    let logged = Raster {
        data: r.data.iter().map(|v| v.ln_1p()).collect(),
        ..r.clone()
    };
    Ok(normalize_optical(&logged))
}

/// Normalizes according to the raster's own modality tag. Generic rasters
/// are min-max scaled like optical ones.
pub fn normalize(r: &Raster) -> Result<Raster> {
    match r.modality {
        Modality::Sar => normalize_sar(r),
        Modality::Optical | Modality::Generic => Ok(normalize_optical(r)),
    }
}

/// Concatenates the channels of `x` and `y` pixel by pixel, `x` first.
pub fn stack_channels(x: &Raster, y: &Raster) -> Result<Raster> {
    if !x.same_shape(y) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            x.height, x.width, y.height, y.width
        )));
    }
    let channels = x.channels + y.channels;
    let mut data = Vec::with_capacity(x.n_pixels() * channels);
    for idx in 0..x.n_pixels() {
        data.extend_from_slice(x.pixel_at(idx));
        data.extend_from_slice(y.pixel_at(idx));
    }
    Ok(Raster {
        height: x.height,
        width: x.width,
        channels,
        data,
        modality: Modality::Generic,
    })
}
