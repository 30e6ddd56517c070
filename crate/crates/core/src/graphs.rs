//! Per-object structural graphs and the operators derived from them.
//!
//! Each object becomes a fully connected graph over its pixels with
//! Gaussian-kernel edge weights `A(m, n) = exp(−φ₁ · ‖v_m − v_n‖₂)`.
//! The kernel already puts ones on the diagonal, so the propagation operator
//! uses `Ã = A` directly rather than adding another self-loop.

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::segment::SegmentationMap;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub phi1: f64,
    pub max_vertices: usize,
    pub rng_seed: u64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            phi1: 1.0,
            max_vertices: 256,
            rng_seed: 0,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi1 > 0.0) || !self.phi1.is_finite() {
            return Err(Error::InvalidConfig("graph.phi1 must be > 0".into()));
        }
        if self.max_vertices < 2 {
            return Err(Error::InvalidConfig("graph.max_vertices must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralGraph {
    object_id: usize,
    vertex_features: Array2<f64>,
    adjacency: Array2<f64>,
    propagation: Array2<f64>,
    pixel_coords: Vec<(usize, usize)>,
    subsampled: bool,
}

impl StructuralGraph {
    /// Builds a graph from vertex features, computing the kernel adjacency.
    pub fn from_features(
        object_id: usize,
        vertex_features: Array2<f64>,
        pixel_coords: Vec<(usize, usize)>,
        phi1: f64,
        subsampled: bool,
    ) -> Self {
        assert_eq!(vertex_features.nrows(), pixel_coords.len());
        let adjacency = kernel_adjacency(&vertex_features, phi1);
        let propagation = normalized_adjacency(&adjacency);
        Self {
            object_id,
            vertex_features,
            adjacency,
            propagation,
            pixel_coords,
            subsampled,
        }
    }

    /// Builds a graph from an explicit symmetric adjacency matrix.
    pub fn with_adjacency(vertex_features: Array2<f64>, adjacency: Array2<f64>) -> Self {
        let n = vertex_features.nrows();
        assert_eq!(adjacency.dim(), (n, n));
        let propagation = normalized_adjacency(&adjacency);
        Self {
            object_id: 0,
            vertex_features,
            adjacency,
            propagation,
            pixel_coords: (0..n).map(|i| (0, i)).collect(),
            subsampled: false,
        }
    }

    pub fn object_id(&self) -> usize {
        self.object_id
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_features.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.vertex_features.ncols()
    }

    pub fn vertex_features(&self) -> &Array2<f64> {
        &self.vertex_features
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    /// Cached `D̃^{-1/2} Ã D̃^{-1/2}`.
    pub fn propagation(&self) -> &Array2<f64> {
        &self.propagation
    }

    pub fn pixel_coords(&self) -> &[(usize, usize)] {
        &self.pixel_coords
    }

    pub fn subsampled(&self) -> bool {
        self.subsampled
    }

    /// Reorders vertices so that new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n_vertices();
        assert_eq!(perm.len(), n);
        let features = self.vertex_features.select(ndarray::Axis(0), perm);
        let adjacency = Array2::from_shape_fn((n, n), |(i, j)| self.adjacency[[perm[i], perm[j]]]);
        let propagation = normalized_adjacency(&adjacency);
        Self {
            object_id: self.object_id,
            vertex_features: features,
            adjacency,
            propagation,
            pixel_coords: perm.iter().map(|&p| self.pixel_coords[p]).collect(),
            subsampled: self.subsampled,
        }
    }
}

fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn kernel_adjacency(features: &Array2<f64>, phi1: f64) -> Array2<f64> {
    let n = features.nrows();
    let mut a = Array2::<f64>::ones((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = (-phi1 * euclidean(features.row(i), features.row(j))).exp();
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    a
}

fn degrees(a: &Array2<f64>) -> Array1<f64> {
    a.rows().into_iter().map(|r| r.sum()).collect()
}

fn normalized_adjacency(a: &Array2<f64>) -> Array2<f64> {
    let d = degrees(a);
    let n = a.nrows();
    let mut p = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let dd = d[i] * d[j];
            let v = if dd > 0.0 { a[[i, j]] / dd.sqrt() } else { 0.0 };
            p[[i, j]] = v;
            p[[j, i]] = v;
        }
    }
    p
}

/// Builds the structural graph of object `id`.
pub fn build_structural_graph(
    img: &Raster,
    seg: &SegmentationMap,
    id: usize,
    cfg: &GraphConfig,
) -> Result<StructuralGraph> {
    cfg.validate()?;
    if img.height() != seg.height() || img.width() != seg.width() {
        return Err(Error::ShapeMismatch(format!(
            "raster {}x{} vs segmentation {}x{}",
            img.height(),
            img.width(),
            seg.height(),
            seg.width()
        )));
    }
    let pixels = seg.object_pixels(id)?;
    let (coords, subsampled) = if pixels.len() > cfg.max_vertices {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ id as u64);
        let mut picked = rand::seq::index::sample(&mut rng, pixels.len(), cfg.max_vertices).into_vec();
        picked.sort_unstable();
        (picked.into_iter().map(|i| pixels[i]).collect::<Vec<_>>(), true)
    } else {
        (pixels.to_vec(), false)
    };
    let c = img.channels();
    let mut features = Array2::<f64>::zeros((coords.len(), c));
    for (row, &(h, w)) in coords.iter().enumerate() {
        for (k, &v) in img.pixel(h, w).iter().enumerate() {
            features[[row, k]] = v;
        }
    }
    Ok(StructuralGraph::from_features(
        id, features, coords, cfg.phi1, subsampled,
    ))
}

/// Graphs for every object, in object-id order.
pub fn build_all_graphs(
    img: &Raster,
    seg: &SegmentationMap,
    cfg: &GraphConfig,
) -> Result<Vec<StructuralGraph>> {
    (0..seg.n_objects())
        .into_par_iter()
        .map(|id| build_structural_graph(img, seg, id, cfg))
        .collect()
}

/// `D̃^{-1/2} Ã D̃^{-1/2}` with `Ã = A`.
pub fn propagation_matrix(g: &StructuralGraph) -> Array2<f64> {
    normalized_adjacency(&g.adjacency)
}

/// Symmetric normalized Laplacian `I − D^{-1/2} A D^{-1/2}`.
pub fn laplacian(g: &StructuralGraph) -> Array2<f64> {
    let n = g.n_vertices();
    Array2::<f64>::eye(n) - normalized_adjacency(&g.adjacency)
}

/// Combinatorial Laplacian `D − A`.
pub fn combinatorial_laplacian(g: &StructuralGraph) -> Array2<f64> {
    let n = g.n_vertices();
    let mut l = -g.adjacency.clone();
    for i in 0..n {
        l[[i, i]] += g.adjacency.row(i).sum();
    }
    l
}
