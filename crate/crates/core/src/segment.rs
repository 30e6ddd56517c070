//! Region-merging co-segmentation of a stacked image pair into superpixel
//! objects.
//!
//! Every pixel starts as its own region. Regions are merged bottom-up while
//! the merge cost
//!
//! ```text
//! f = w_channel · h_channel + (1 − w_channel) · h_spatial
//! ```
//!
//! stays below `merge_threshold`, following the Baatz–Schäpe heterogeneity
//! definitions:
//!
//! * `h_channel = Σ_c n_m·σ_m,c − (n_1·σ_1,c + n_2·σ_2,c)` with population
//!   standard deviations;
//! * `h_spatial = w_compactness · h_compact + (1 − w_compactness) · h_smooth`,
//!   where `h_compact` compares `n·ℓ/√n` and `h_smooth` compares `n·ℓ/b`
//!   (`ℓ` is the 4-adjacency boundary length, `b` the bounding-box
//!   perimeter).
//!
//! A merge only executes when the two regions are each other's cheapest
//! neighbor. Regions are visited in a seeded shuffled order, and a region
//! merges at most once per pass.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formats::{self, Reader};
use crate::raster::Raster;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    /// Largest heterogeneity increase a merge may cause. The default suits
    /// `[0, 1]`-normalized inputs, giving a few hundred objects on 256 × 256.
    pub merge_threshold: f64,
    pub w_channel: f64,
    pub w_compactness: f64,
    pub min_object_size: usize,
    pub rng_seed: u64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            merge_threshold: 3.0,
            w_channel: 0.9,
            w_compactness: 0.5,
            min_object_size: 10,
            rng_seed: 0,
        }
    }
}

impl SegmentationConfig {
    pub fn w_spatial(&self) -> f64 {
        1.0 - self.w_channel
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.merge_threshold > 0.0) || !self.merge_threshold.is_finite() {
            return Err(Error::InvalidConfig(
                "segment.merge_threshold must be > 0".into(),
            ));
        }
        for (name, w) in [
            ("segment.w_channel", self.w_channel),
            ("segment.w_compactness", self.w_compactness),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Partition of the image plane into dense, 4-connected objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    object_pixels: Vec<Vec<(usize, usize)>>,
}

impl SegmentationMap {
    /// Builds a map from a label array; ids must be dense in `0..n`.
    pub fn from_labels(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyRaster);
        }
        if labels.len() != height * width {
            return Err(Error::DimensionMismatch {
                declared: height * width,
                actual: labels.len(),
            });
        }
        let n_objects = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut object_pixels = vec![Vec::new(); n_objects];
        for (idx, &l) in labels.iter().enumerate() {
            object_pixels[l as usize].push((idx / width, idx % width));
        }
        if let Some(id) = object_pixels.iter().position(Vec::is_empty) {
            return Err(Error::MalformedHeader(format!(
                "label ids are not dense: {id} never occurs"
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
            object_pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_objects(&self) -> usize {
        self.object_pixels.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, h: usize, w: usize) -> usize {
        self.labels[h * self.width + w] as usize
    }

    pub fn object_pixels(&self, id: usize) -> Result<&[(usize, usize)]> {
        self.object_pixels
            .get(id)
            .map(Vec::as_slice)
            .ok_or(Error::BadObjectId {
                id,
                n_objects: self.n_objects(),
            })
    }

    pub fn objects(&self) -> impl Iterator<Item = &[(usize, usize)]> {
        self.object_pixels.iter().map(Vec::as_slice)
    }

    /// True when every object is 4-connected.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.labels.len()];
        self.object_pixels.iter().enumerate().all(|(id, pixels)| {
            let (h0, w0) = pixels[0];
            let mut stack = vec![h0 * self.width + w0];
            seen[stack[0]] = true;
            let mut visited = 0;
            while let Some(idx) = stack.pop() {
                visited += 1;
                for nb in neighbors4(idx, self.height, self.width) {
                    if !seen[nb] && self.labels[nb] as usize == id {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
            visited == pixels.len()
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + 8 + self.labels.len() * 4);
        out.extend_from_slice(formats::SEG_MAGIC);
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader::new(bytes);
        if rd.take(7)? != formats::SEG_MAGIC {
            return Err(Error::UnsupportedFormat("missing MMRSEG1 magic".into()));
        }
        let height = rd.u32()? as usize;
        let width = rd.u32()? as usize;
        let payload = rd.remaining();
        if payload.len() != height * width * 4 {
            return Err(Error::DimensionMismatch {
                declared: height * width * 4,
                actual: payload.len(),
            });
        }
        let labels = payload
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::from_labels(height, width, labels)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

fn neighbors4(idx: usize, height: usize, width: usize) -> impl Iterator<Item = usize> {
    let (h, w) = (idx / width, idx % width);
    let up = (h > 0).then(|| idx - width);
    let down = (h + 1 < height).then(|| idx + width);
    let left = (w > 0).then(|| idx - 1);
    let right = (w + 1 < width).then(|| idx + 1);
    [up, down, left, right].into_iter().flatten()
}

/// Per-channel arithmetic mean of object `id`.
pub fn object_mean(stacked: &Raster, seg: &SegmentationMap, id: usize) -> Result<Vec<f64>> {
    let pixels = seg.object_pixels(id)?;
    let mut mean = vec![0.0; stacked.channels()];
    for &(h, w) in pixels {
        for (m, v) in mean.iter_mut().zip(stacked.pixel(h, w)) {
            *m += v;
        }
    }
    let n = pixels.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Merge costs accepted during the heterogeneity-driven phase, in order.
#[derive(Debug, Clone, Default)]
pub struct MergeAudit {
    pub accepted_costs: Vec<f64>,
    pub passes: usize,
    /// Merges performed by the minimum-size cleanup (not threshold-gated).
    pub size_merges: usize,
}

pub fn fnea_segment(stacked: &Raster, cfg: &SegmentationConfig) -> Result<SegmentationMap> {
    fnea_segment_audited(stacked, cfg).map(|(seg, _)| seg)
}

pub fn fnea_segment_audited(
    stacked: &Raster,
    cfg: &SegmentationConfig,
) -> Result<(SegmentationMap, MergeAudit)> {
    cfg.validate()?;
    if stacked.n_pixels() == 0 {
        return Err(Error::EmptyRaster);
    }
    let mut merger = Merger::new(stacked, cfg);
    let mut audit = MergeAudit::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    loop {
        audit.passes += 1;
        let merged = merger.pass(&mut rng, &mut audit.accepted_costs);
        if merged == 0 {
            break;
        }
    }
    audit.size_merges = merger.absorb_small(cfg.min_object_size);
    Ok((merger.finish(), audit))
}

#[derive(Debug, Clone)]
struct Region {
    n: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    perimeter: i64,
    bbox: [usize; 4],
    neighbors: BTreeMap<usize, i64>,
}

impl Region {
    fn std_dev_sum(n: usize, sum: &[f64], sumsq: &[f64]) -> f64 {
        let n = n as f64;
        sum.iter()
            .zip(sumsq)
            .map(|(s, q)| {
                let mean = s / n;
                (q / n - mean * mean).max(0.0).sqrt()
            })
            .sum()
    }

    fn bbox_perimeter(bbox: &[usize; 4]) -> f64 {
        (2 * ((bbox[1] - bbox[0] + 1) + (bbox[3] - bbox[2] + 1))) as f64
    }
}

struct Merger {
    height: usize,
    width: usize,
    w_channel: f64,
    w_compactness: f64,
    threshold: f64,
    regions: Vec<Option<Region>>,
    parent: Vec<usize>,
}

impl Merger {
    fn new(img: &Raster, cfg: &SegmentationConfig) -> Self {
        let (height, width) = (img.height(), img.width());
        let regions = (0..img.n_pixels())
            .map(|idx| {
                let px = img.pixel_at(idx);
                let neighbors: BTreeMap<usize, i64> =
                    neighbors4(idx, height, width).map(|nb| (nb, 1)).collect();
                let (h, w) = (idx / width, idx % width);
                Some(Region {
                    n: 1,
                    sum: px.to_vec(),
                    sumsq: px.iter().map(|v| v * v).collect(),
                    perimeter: 4,
                    bbox: [h, h, w, w],
                    neighbors,
                })
            })
            .collect();
        Self {
            height,
            width,
            w_channel: cfg.w_channel,
            w_compactness: cfg.w_compactness,
            threshold: cfg.merge_threshold,
            regions,
            parent: (0..img.n_pixels()).collect(),
        }
    }

    fn region(&self, id: usize) -> &Region {
        self.regions[id].as_ref().expect("live region")
    }

    fn cost(&self, a: usize, b: usize) -> f64 {
        let (ra, rb) = (self.region(a), self.region(b));
        let shared = ra.neighbors[&b];
        let n_m = ra.n + rb.n;

        let sum: Vec<f64> = ra.sum.iter().zip(&rb.sum).map(|(x, y)| x + y).collect();
        let sumsq: Vec<f64> = ra.sumsq.iter().zip(&rb.sumsq).map(|(x, y)| x + y).collect();
        let h_channel = n_m as f64 * Region::std_dev_sum(n_m, &sum, &sumsq)
            - (ra.n as f64 * Region::std_dev_sum(ra.n, &ra.sum, &ra.sumsq)
                + rb.n as f64 * Region::std_dev_sum(rb.n, &rb.sum, &rb.sumsq));

        let l_m = (ra.perimeter + rb.perimeter - 2 * shared) as f64;
        let bbox_m = [
            ra.bbox[0].min(rb.bbox[0]),
            ra.bbox[1].max(rb.bbox[1]),
            ra.bbox[2].min(rb.bbox[2]),
            ra.bbox[3].max(rb.bbox[3]),
        ];
        let compact = |n: usize, l: f64| n as f64 * l / (n as f64).sqrt();
        let smooth = |n: usize, l: f64, bbox: &[usize; 4]| n as f64 * l / Region::bbox_perimeter(bbox);
        let (la, lb) = (ra.perimeter as f64, rb.perimeter as f64);
        let h_compact = compact(n_m, l_m) - (compact(ra.n, la) + compact(rb.n, lb));
        let h_smooth =
            smooth(n_m, l_m, &bbox_m) - (smooth(ra.n, la, &ra.bbox) + smooth(rb.n, lb, &rb.bbox));
        let h_spatial = self.w_compactness * h_compact + (1.0 - self.w_compactness) * h_smooth;

        self.w_channel * h_channel + (1.0 - self.w_channel) * h_spatial
    }

    /// Cheapest neighbor of `id`, ties broken by lower neighbor id.
    fn best_neighbor(&self, id: usize) -> Option<(usize, f64)> {
        self.region(id)
            .neighbors
            .keys()
            .map(|&nb| (nb, self.cost(id, nb)))
            .fold(None, |best, (nb, f)| match best {
                Some((_, bf)) if bf <= f => best,
                _ => Some((nb, f)),
            })
    }

    fn pass(&mut self, rng: &mut ChaCha8Rng, log: &mut Vec<f64>) -> usize {
        let mut order: Vec<usize> = (0..self.regions.len())
            .filter(|&i| self.regions[i].is_some())
            .collect();
        order.shuffle(rng);
        let mut touched = vec![false; self.regions.len()];
        let mut merged = 0;
        for id in order {
            if touched[id] || self.regions[id].is_none() {
                continue;
            }
            let Some((nb, f)) = self.best_neighbor(id) else {
                continue;
            };
            if f >= self.threshold || touched[nb] {
                continue;
            }
            if self.best_neighbor(nb).map(|(back, _)| back) != Some(id) {
                continue;
            }
            let survivor = self.merge(id, nb);
            touched[survivor] = true;
            log.push(f);
            merged += 1;
        }
        merged
    }

    /// Merges `a` and `b`; returns the surviving id.
    fn merge(&mut self, a: usize, b: usize) -> usize {
        let (keep, gone) = if self.region(a).neighbors.len() >= self.region(b).neighbors.len() {
            (a, b)
        } else {
            (b, a)
        };
        let absorbed = self.regions[gone].take().expect("live region");
        self.parent[gone] = keep;
        let shared = absorbed.neighbors[&keep];

        for (&nb, &count) in &absorbed.neighbors {
            if nb == keep {
                continue;
            }
            let other = self.regions[nb].as_mut().expect("live neighbor");
            other.neighbors.remove(&gone);
            *other.neighbors.entry(keep).or_insert(0) += count;
        }
        let target = self.regions[keep].as_mut().expect("live region");
        target.neighbors.remove(&gone);
        for (&nb, &count) in &absorbed.neighbors {
            if nb != keep {
                *target.neighbors.entry(nb).or_insert(0) += count;
            }
        }
        target.n += absorbed.n;
        target.sum.iter_mut().zip(&absorbed.sum).for_each(|(x, y)| *x += y);
        target.sumsq.iter_mut().zip(&absorbed.sumsq).for_each(|(x, y)| *x += y);
        target.perimeter += absorbed.perimeter - 2 * shared;
        target.bbox = [
            target.bbox[0].min(absorbed.bbox[0]),
            target.bbox[1].max(absorbed.bbox[1]),
            target.bbox[2].min(absorbed.bbox[2]),
            target.bbox[3].max(absorbed.bbox[3]),
        ];
        keep
    }

    /// Folds every region smaller than `min_size` into the neighbor with the
    /// closest mean channel vector. Returns the number of merges.
    fn absorb_small(&mut self, min_size: usize) -> usize {
        let mut merges = 0;
        loop {
            let mut small: Vec<(usize, usize)> = self
                .regions
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.as_ref().filter(|r| r.n < min_size).map(|r| (r.n, i)))
                .collect();
            if small.is_empty() {
                return merges;
            }
            small.sort_unstable();
            let mut progressed = false;
            for (_, id) in small {
                let Some(region) = self.regions[id].as_ref() else {
                    continue;
                };
                if region.n >= min_size {
                    continue;
                }
                let mean = |r: &Region| r.sum.iter().map(|s| s / r.n as f64).collect::<Vec<_>>();
                let own = mean(region);
                let target = region
                    .neighbors
                    .keys()
                    .map(|&nb| {
                        let d: f64 = mean(self.region(nb))
                            .iter()
                            .zip(&own)
                            .map(|(x, y)| (x - y) * (x - y))
                            .sum();
                        (nb, d)
                    })
                    .fold(None, |best: Option<(usize, f64)>, (nb, d)| match best {
                        Some((_, bd)) if bd <= d => best,
                        _ => Some((nb, d)),
                    });
                if let Some((nb, _)) = target {
                    self.merge(id, nb);
                    merges += 1;
                    progressed = true;
                }
            }
            if !progressed {
                // A lone region covering the whole frame has no neighbor.
                return merges;
            }
        }
    }

    fn root(&self, mut idx: usize) -> usize {
        while self.parent[idx] != idx {
            idx = self.parent[idx];
        }
        idx
    }

    fn finish(mut self) -> SegmentationMap {
        let n = self.height * self.width;
        for idx in 0..n {
            let r = self.root(idx);
            self.parent[idx] = r;
        }
        let mut dense = vec![u32::MAX; n];
        let mut next = 0u32;
        let labels = (0..n)
            .map(|idx| {
                let r = self.parent[idx];
                if dense[r] == u32::MAX {
                    dense[r] = next;
                    next += 1;
                }
                dense[r]
            })
            .collect();
        SegmentationMap::from_labels(self.height, self.width, labels)
            .expect("merger produces a dense partition")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Modality;

    fn raster(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Raster {
        let data = (0..h * w).map(|i| f(i / w, i % w)).collect();
        Raster::new(h, w, 1, data, Modality::Generic).unwrap()
    }

    #[test]
    fn constant_image_becomes_one_object() {
        let img = raster(12, 9, |_, _| 0.3);
        let cfg = SegmentationConfig {
            merge_threshold: 1e6,
            ..Default::default()
        };
        let seg = fnea_segment(&img, &cfg).unwrap();
        assert_eq!(seg.n_objects(), 1);
        assert_eq!(seg.object_pixels(0).unwrap().len(), 108);
    }

    #[test]
    fn tiny_threshold_keeps_every_pixel() {
        let img = raster(7, 5, |h, w| ((h * 5 + w) % 3) as f64 / 2.0);
        let cfg = SegmentationConfig {
            merge_threshold: 1e-12,
            min_object_size: 1,
            ..Default::default()
        };
        let seg = fnea_segment(&img, &cfg).unwrap();
        assert_eq!(seg.n_objects(), 35);
    }

    #[test]
    fn object_mean_arithmetic() {
        let img = raster(1, 2, |_, w| [0.2, 0.4][w]);
        let seg = SegmentationMap::from_labels(1, 2, vec![0, 0]).unwrap();
        let m = object_mean(&img, &seg, 0).unwrap();
        assert!((m[0] - 0.3).abs() < 1e-15);

        let seg = SegmentationMap::from_labels(1, 2, vec![0, 1]).unwrap();
        assert_eq!(object_mean(&img, &seg, 1).unwrap(), vec![0.4]);
        assert!(matches!(
            object_mean(&img, &seg, 2),
            Err(Error::BadObjectId { id: 2, n_objects: 2 })
        ));
    }

    #[test]
    fn labels_must_be_dense() {
        assert!(SegmentationMap::from_labels(1, 3, vec![0, 2, 2]).is_err());
    }

    #[test]
    fn label_file_round_trip() {
        let seg = SegmentationMap::from_labels(2, 3, vec![0, 0, 1, 2, 2, 1]).unwrap();
        let bytes = seg.encode();
        assert_eq!(&bytes[..7], b"MMRSEG1");
        assert_eq!(bytes.len(), 7 + 8 + 24);
        assert_eq!(SegmentationMap::decode(&bytes).unwrap(), seg);
    }

    #[test]
    fn connectivity_check_detects_split_object() {
        let seg = SegmentationMap::from_labels(1, 3, vec![0, 1, 0]).unwrap();
        assert!(!seg.is_connected());
        let seg = SegmentationMap::from_labels(1, 3, vec![0, 0, 1]).unwrap();
        assert!(seg.is_connected());
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let img = raster(2, 2, |_, _| 0.0);
        let cfg = SegmentationConfig {
            merge_threshold: 0.0,
            ..Default::default()
        };
        assert!(matches!(fnea_segment(&img, &cfg), Err(Error::InvalidConfig(_))));
    }
}
