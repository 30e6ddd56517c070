//! Local and nonlocal difference images.
//!
//! The local measure compares an object's edge-objective features across the
//! two images vertex by vertex. The nonlocal measure compares how an object
//! relates to its `K` most similar objects: the similarity pattern is found
//! in one image and re-evaluated in the other, in both directions.

use ndarray::Array2;
use rayon::prelude::*;

use super::{DifferenceImage, DifferenceKind};
use crate::error::{Error, Result};
use crate::graphs::StructuralGraph;
use crate::segment::SegmentationMap;
use crate::srgcae::{encode_all, ImageSide, SrGcaeModel};

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalConfig {
    pub k_similar: usize,
    pub phi2: f64,
}

impl Default for NonlocalConfig {
    fn default() -> Self {
        Self {
            k_similar: 50,
            phi2: 1.0,
        }
    }
}

impl NonlocalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_similar == 0 {
            return Err(Error::InvalidConfig("nonlocal.k_similar must be >= 1".into()));
        }
        if !(self.phi2 > 0.0) || !self.phi2.is_finite() {
            return Err(Error::InvalidConfig("nonlocal.phi2 must be > 0".into()));
        }
        Ok(())
    }
}

/// Mean over vertices of the channel-wise L₁ distance between two feature
/// matrices of the same object.
pub fn local_object_distance(f_x: &Array2<f64>, f_y: &Array2<f64>) -> Result<f64> {
    if f_x.dim() != f_y.dim() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", f_x.dim(), f_y.dim())));
    }
    let n = f_x.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = f_x
        .rows()
        .into_iter()
        .zip(f_y.rows())
        .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum();
    Ok(total / n as f64)
}

fn check_counts(seg: &SegmentationMap, nx: usize, ny: usize) -> Result<()> {
    if nx != seg.n_objects() || ny != seg.n_objects() {
        return Err(Error::ObjectCountMismatch(format!(
            "{nx} X graphs and {ny} Y graphs for {} objects",
            seg.n_objects()
        )));
    }
    Ok(())
}

/// Paints one value per object onto the image plane.
fn paint(seg: &SegmentationMap, per_object: &[f64], kind: DifferenceKind) -> Result<DifferenceImage> {
    let intensity = seg.labels().iter().map(|&l| per_object[l as usize]).collect();
    DifferenceImage::new(seg.height(), seg.width(), intensity, kind)
}

pub fn local_difference_from_features(
    features_x: &[Array2<f64>],
    features_y: &[Array2<f64>],
    seg: &SegmentationMap,
) -> Result<DifferenceImage> {
    check_counts(seg, features_x.len(), features_y.len())?;
    let d = features_x
        .iter()
        .zip(features_y)
        .map(|(fx, fy)| local_object_distance(fx, fy))
        .collect::<Result<Vec<_>>>()?;
    paint(seg, &d, DifferenceKind::Local)
}

/// Local difference image from an edge-objective model.
pub fn local_difference_image(
    edge_model: &SrGcaeModel,
    graphs_x: &[StructuralGraph],
    graphs_y: &[StructuralGraph],
    seg: &SegmentationMap,
) -> Result<DifferenceImage> {
    check_counts(seg, graphs_x.len(), graphs_y.len())?;
    let fx = encode_all(edge_model, graphs_x, ImageSide::X)?;
    let fy = encode_all(edge_model, graphs_y, ImageSide::Y)?;
    local_difference_from_features(&fx, &fy, seg)
}

/// Per-channel mean absolute feature value, a size-normalized L₁ norm.
pub fn object_signature(features: &Array2<f64>) -> Vec<f64> {
    let n = features.nrows().max(1) as f64;
    features
        .columns()
        .into_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>() / n)
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` objects closest to object `i` by Euclidean signature distance,
/// nearest first, ties broken by lower id. Object `i` itself is excluded.
pub fn knn_similar_objects(signatures: &[Vec<f64>], i: usize, k: usize) -> Result<Vec<usize>> {
    let n = signatures.len();
    if i >= n {
        return Err(Error::BadObjectId { id: i, n_objects: n });
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n_objects: n });
    }
    let mut candidates: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| (squared_distance(&signatures[i], &signatures[j]), j))
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k, by_distance);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_distance);
    Ok(candidates.into_iter().map(|(_, j)| j).collect())
}

/// `(1/K) Σ_k Σ_c |exp(−φ₂|s_i − s_k|) − exp(−φ₂|o_i − o_k|)|`, where `s` are
/// signatures in the image the neighbors were found in and `o` those of the
/// other image.
pub fn nonlocal_directed_distance(
    sig_src: &[Vec<f64>],
    sig_other: &[Vec<f64>],
    i: usize,
    neighbors: &[usize],
    phi2: f64,
) -> Result<f64> {
    let n = sig_src.len().min(sig_other.len());
    if i >= n {
        return Err(Error::BadObjectId { id: i, n_objects: n });
    }
    if neighbors.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &k in neighbors {
        if k >= n {
            return Err(Error::BadNeighbor(k));
        }
        let (si, sk) = (&sig_src[i], &sig_src[k]);
        let (oi, ok) = (&sig_other[i], &sig_other[k]);
        if si.len() != oi.len() || sk.len() != si.len() || ok.len() != si.len() {
            return Err(Error::ShapeMismatch("signature widths differ".into()));
        }
        for c in 0..si.len() {
            let src = (-phi2 * (si[c] - sk[c]).abs()).exp();
            let other = (-phi2 * (oi[c] - ok[c]).abs()).exp();
            total += (src - other).abs();
        }
    }
    Ok(total / neighbors.len() as f64)
}

pub fn nonlocal_difference_from_features(
    features_x: &[Array2<f64>],
    features_y: &[Array2<f64>],
    seg: &SegmentationMap,
    cfg: &NonlocalConfig,
) -> Result<DifferenceImage> {
    cfg.validate()?;
    check_counts(seg, features_x.len(), features_y.len())?;
    let sig_x: Vec<Vec<f64>> = features_x.iter().map(object_signature).collect();
    let sig_y: Vec<Vec<f64>> = features_y.iter().map(object_signature).collect();
    let d = (0..seg.n_objects())
        .into_par_iter()
        .map(|i| {
            let nx = knn_similar_objects(&sig_x, i, cfg.k_similar)?;
            let ny = knn_similar_objects(&sig_y, i, cfg.k_similar)?;
            let x_to_y = nonlocal_directed_distance(&sig_x, &sig_y, i, &nx, cfg.phi2)?;
            let y_to_x = nonlocal_directed_distance(&sig_y, &sig_x, i, &ny, cfg.phi2)?;
            Ok(x_to_y + y_to_x)
        })
        .collect::<Result<Vec<f64>>>()?;
    paint(seg, &d, DifferenceKind::Nonlocal)
}

/// Nonlocal difference image from a vertex-objective model.
pub fn nonlocal_difference_image(
    vertex_model: &SrGcaeModel,
    graphs_x: &[StructuralGraph],
    graphs_y: &[StructuralGraph],
    seg: &SegmentationMap,
    cfg: &NonlocalConfig,
) -> Result<DifferenceImage> {
    check_counts(seg, graphs_x.len(), graphs_y.len())?;
    let fx = encode_all(vertex_model, graphs_x, ImageSide::X)?;
    let fy = encode_all(vertex_model, graphs_y, ImageSide::Y)?;
    nonlocal_difference_from_features(&fx, &fy, seg, cfg)
}
