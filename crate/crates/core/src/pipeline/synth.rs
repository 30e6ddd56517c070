//! Synthetic co-registered multimodal image pairs with planted change.
//!
//! A seeded Voronoi partition gives the land-cover layout. Each region draws a
//! reflectance from a small palette of cover classes. The pre-change image is
//! an optical-style rendering (three gamma-curved bands plus additive
//! Gaussian noise); the post-change image is a SAR-style rendering of the
//! same layout (an increasing radiometric transform of reflectance, scaled to
//! digital numbers and multiplied by Gamma-distributed speckle). A contiguous
//! group of regions switches cover class before the post-change acquisition;
//! the truth map marks exactly those regions.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::change::ChangeMap;
use crate::error::{Error, Result};
use crate::raster::{Modality, Raster};

const COVER_LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const BAND_GAINS: [f64; 3] = [1.0, 0.85, 0.7];
const FRACTION_TOLERANCE: f64 = 0.2;
/// Digital-number scale of the SAR rendering.
const SAR_SCALE: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub height: usize,
    pub width: usize,
    pub n_regions: usize,
    /// Requested share of changed pixels, strictly inside (0, 1).
    pub change_fraction: f64,
    /// Gamma of the optical rendering curve.
    pub gamma: f64,
    /// Equivalent number of looks of the SAR speckle.
    pub speckle_looks: f64,
    /// Standard deviation of optical noise, relative to full scale.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            height: 256,
            width: 256,
            n_regions: 120,
            change_fraction: 0.1,
            gamma: 2.2,
            speckle_looks: 4.0,
            noise_level: 0.03,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.change_fraction > 0.0 && self.change_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "change fraction must lie strictly inside (0, 1)".into(),
            ));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::EmptyRaster);
        }
        if self.n_regions < 2 || self.n_regions > self.height * self.width {
            return Err(Error::InvalidConfig(format!(
                "n_regions must lie in [2, {}]",
                self.height * self.width
            )));
        }
        if !(self.gamma > 0.0) || !(self.speckle_looks > 0.0) || !(self.noise_level >= 0.0) {
            return Err(Error::InvalidConfig(
                "gamma and speckle_looks must be > 0, noise_level >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub pre: Raster,
    pub post: Raster,
    pub truth: ChangeMap,
    /// Voronoi region of every pixel.
    pub regions: Vec<usize>,
}

fn voronoi(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let sites: Vec<(f64, f64)> = (0..spec.n_regions)
        .map(|_| {
            (
                rng.random_range(0.0..spec.height as f64),
                rng.random_range(0.0..spec.width as f64),
            )
        })
        .collect();
    (0..spec.height * spec.width)
        .map(|idx| {
            let (h, w) = ((idx / spec.width) as f64 + 0.5, (idx % spec.width) as f64 + 0.5);
            sites
                .iter()
                .enumerate()
                .map(|(i, &(sh, sw))| ((sh - h).powi(2) + (sw - w).powi(2), i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("at least one site")
                .1
        })
        .collect()
}

fn region_adjacency(regions: &[usize], height: usize, width: usize, n: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for idx in 0..regions.len() {
        let (h, w) = (idx / width, idx % width);
        let a = regions[idx];
        for nb in [(h + 1 < height).then(|| idx + width), (w + 1 < width).then(|| idx + 1)]
            .into_iter()
            .flatten()
        {
            let b = regions[nb];
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Grows a connected set of regions from every possible start and keeps
/// the one whose area is closest to `target`.
fn pick_changed_regions(
    areas: &[usize],
    adj: &[Vec<usize>],
    target: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, usize) {
    let mut starts: Vec<usize> = (0..areas.len()).filter(|&r| areas[r] > 0).collect();
    starts.shuffle(rng);
    let mut best: (f64, Vec<usize>, usize) = (f64::INFINITY, Vec::new(), 0);
    for &start in &starts {
        let mut chosen = Vec::new();
        let mut area = 0usize;
        let mut seen = vec![false; areas.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(r) = queue.pop_front() {
            let next = area + areas[r];
            if (next as f64 - target).abs() > (area as f64 - target).abs() && !chosen.is_empty() {
                break;
            }
            chosen.push(r);
            area = next;
            for &nb in &adj[r] {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        let err = (area as f64 - target).abs();
        if err < best.0 {
            best = (err, chosen, area);
        }
    }
    (best.1, best.2)
}

pub fn generate_synthetic_pair(spec: &SyntheticSpec) -> Result<SyntheticPair> {
    spec.validate()?;
    let (height, width) = (spec.height, spec.width);
    let n_pixels = height * width;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let regions = voronoi(spec, &mut rng);
    let mut areas = vec![0usize; spec.n_regions];
    for &r in &regions {
        areas[r] += 1;
    }
    let adj = region_adjacency(&regions, height, width, spec.n_regions);

    let classes: Vec<usize> = (0..spec.n_regions)
        .map(|_| rng.random_range(0..COVER_LEVELS.len()))
        .collect();
    let reflect_pre: Vec<f64> = classes
        .iter()
        .map(|&c| COVER_LEVELS[c] + rng.random_range(-0.03..0.03))
        .collect();

    let target = spec.change_fraction * n_pixels as f64;
    let (changed, area) = pick_changed_regions(&areas, &adj, target, &mut rng);
    let achieved = area as f64 / n_pixels as f64;
    if (achieved - spec.change_fraction).abs() > FRACTION_TOLERANCE * spec.change_fraction {
        return Err(Error::ChangeFractionUnreachable {
            requested: spec.change_fraction,
            achieved,
        });
    }
    let mut is_changed = vec![false; spec.n_regions];
    let mut reflect_post = reflect_pre.clone();
    for &r in &changed {
        is_changed[r] = true;
        let shift = rng.random_range(1..COVER_LEVELS.len());
        let new_class = (classes[r] + shift) % COVER_LEVELS.len();
        reflect_post[r] = COVER_LEVELS[new_class] + rng.random_range(-0.03..0.03);
    }

    let noise = Normal::new(0.0, spec.noise_level.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let speckle = Gamma::new(spec.speckle_looks, 1.0 / spec.speckle_looks)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut pre = Vec::with_capacity(n_pixels * BAND_GAINS.len());
    let mut post = Vec::with_capacity(n_pixels);
    for &r in &regions {
        for gain in BAND_GAINS {
            let clean = (gain * reflect_pre[r]).clamp(0.0, 1.0).powf(1.0 / spec.gamma);
            let v = if spec.noise_level > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            };
            pre.push(255.0 * v.clamp(0.0, 1.0));
        }
        let backscatter = SAR_SCALE * (0.05 + 0.9 * reflect_post[r].powi(2));
        post.push(backscatter * speckle.sample(&mut rng));
    }

    Ok(SyntheticPair {
        pre: Raster::new(height, width, BAND_GAINS.len(), pre, Modality::Optical)?,
        post: Raster::new(height, width, 1, post, Modality::Sar)?,
        truth: ChangeMap::new(height, width, regions.iter().map(|&r| is_changed[r]).collect())?,
        regions,
    })
}
