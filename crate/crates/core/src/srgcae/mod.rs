//! Structural-relationship graph convolutional autoencoder.
//!
//! The encoder is a two-layer GCN (`C_h → 16 → 32`) shared by both images.
//! Each image enters through its own linear input projection to the common
//! width `C_h = max(C_X, C_Y)`; when both images come from the same sensor
//! the projection can be shared so identical inputs give identical features.
//!
//! Two heads are supported:
//!
//! * vertex decoder: one linear GC layer `32 → C_h` reconstructing the
//!   projected vertex features;
//! * edge decoder: `σ(F Fᵀ)` reconstructing the kernel adjacency.
//!
//! GC layers carry no bias. The hidden encoder layer uses ReLU, the output
//! encoder layer and the vertex decoder are linear.

mod adam;
mod checkpoint;
mod grad;
mod train;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::StructuralGraph;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC};
pub use grad::{gradients, Gradients};
pub use train::{train, TrainConfig, TrainReport};

/// Widths of the encoder's GC layers.
pub const ENCODER_WIDTHS: [usize; 2] = [16, 32];
/// Width of the learned representation `F^(L)`.
pub const FEATURE_WIDTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
            Activation::Sigmoid => sigmoid(x),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Linear),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcLayer {
    pub weight: Array2<f64>,
    pub activation: Activation,
}

impl GcLayer {
    /// `σ(P · F · W)`.
    pub fn forward(&self, propagation: &Array2<f64>, input: &Array2<f64>) -> Array2<f64> {
        let mut out = propagation.dot(input).dot(&self.weight);
        out.mapv_inplace(|v| self.activation.apply(v));
        out
    }
}

/// Reconstruction target of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Vertex,
    Edge,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Vertex => "vertex",
            Objective::Edge => "edge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vertex" => Some(Objective::Vertex),
            "edge" => Some(Objective::Edge),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    VertexDecoder(GcLayer),
    EdgeDecoder,
}

/// Which image of the pair a graph was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageSide {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrGcaeModel {
    pub(crate) input_proj_x: Array2<f64>,
    pub(crate) input_proj_y: Array2<f64>,
    pub(crate) shared_projection: bool,
    pub(crate) encoder: Vec<GcLayer>,
    pub(crate) head: Head,
    pub(crate) rng_seed: u64,
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound))
}

/// Glorot-uniform initialization with separate input projections.
pub fn init_model(c_x: usize, c_y: usize, objective: Objective, seed: u64) -> Result<SrGcaeModel> {
    SrGcaeModel::build(c_x, c_y, objective, seed, false)
}

/// Like [`init_model`] but both images share one input projection.
pub fn init_model_shared(channels: usize, objective: Objective, seed: u64) -> Result<SrGcaeModel> {
    SrGcaeModel::build(channels, channels, objective, seed, true)
}

impl SrGcaeModel {
    fn build(c_x: usize, c_y: usize, objective: Objective, seed: u64, shared: bool) -> Result<Self> {
        if c_x == 0 || c_y == 0 {
            return Err(Error::ShapeMismatch("channel counts must be >= 1".into()));
        }
        let c_h = c_x.max(c_y);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input_proj_x = glorot(&mut rng, c_x, c_h);
        let input_proj_y = glorot(&mut rng, c_y, c_h);
        let mut encoder = Vec::with_capacity(ENCODER_WIDTHS.len());
        let mut fan_in = c_h;
        for (i, &width) in ENCODER_WIDTHS.iter().enumerate() {
            let activation = if i + 1 == ENCODER_WIDTHS.len() {
                Activation::Linear
            } else {
                Activation::Relu
            };
            encoder.push(GcLayer {
                weight: glorot(&mut rng, fan_in, width),
                activation,
            });
            fan_in = width;
        }
        let head = match objective {
            Objective::Vertex => Head::VertexDecoder(GcLayer {
                weight: glorot(&mut rng, FEATURE_WIDTH, c_h),
                activation: Activation::Linear,
            }),
            Objective::Edge => Head::EdgeDecoder,
        };
        Ok(Self {
            input_proj_x,
            input_proj_y,
            shared_projection: shared,
            encoder,
            head,
            rng_seed: seed,
        })
    }

    pub fn objective(&self) -> Objective {
        match self.head {
            Head::VertexDecoder(_) => Objective::Vertex,
            Head::EdgeDecoder => Objective::Edge,
        }
    }

    pub fn hidden_width(&self) -> usize {
        self.input_proj_x.ncols()
    }

    pub fn channels(&self, side: ImageSide) -> usize {
        self.projection(side).nrows()
    }

    pub fn shared_projection(&self) -> bool {
        self.shared_projection
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn encoder(&self) -> &[GcLayer] {
        &self.encoder
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    /// Input projection applied to graphs of `side`.
    pub fn projection(&self, side: ImageSide) -> &Array2<f64> {
        match side {
            ImageSide::Y if !self.shared_projection => &self.input_proj_y,
            _ => &self.input_proj_x,
        }
    }

    pub fn input_proj_x(&self) -> &Array2<f64> {
        &self.input_proj_x
    }

    pub fn input_proj_y(&self) -> &Array2<f64> {
        &self.input_proj_y
    }

    /// Every trainable matrix in a fixed order: projections, encoder, decoder.
    pub fn parameters(&self) -> Vec<&Array2<f64>> {
        let mut out = vec![&self.input_proj_x, &self.input_proj_y];
        out.extend(self.encoder.iter().map(|l| &l.weight));
        if let Head::VertexDecoder(layer) = &self.head {
            out.push(&layer.weight);
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = vec![&mut self.input_proj_x, &mut self.input_proj_y];
        out.extend(self.encoder.iter_mut().map(|l| &mut l.weight));
        if let Head::VertexDecoder(layer) = &mut self.head {
            out.push(&mut layer.weight);
        }
        out
    }

    pub(crate) fn check_input(&self, g: &StructuralGraph, side: ImageSide) -> Result<()> {
        let expected = self.channels(side);
        if g.n_channels() != expected {
            return Err(Error::ShapeMismatch(format!(
                "graph has {} channels, projection for {side:?} expects {expected}",
                g.n_channels()
            )));
        }
        Ok(())
    }
}

/// Projected vertex features `𝒱 · P_side`, the vertex-objective target.
pub fn project_input(model: &SrGcaeModel, g: &StructuralGraph, side: ImageSide) -> Result<Array2<f64>> {
    model.check_input(g, side)?;
    Ok(g.vertex_features().dot(model.projection(side)))
}

/// Encoder output `F^(L)` (N × 32).
pub fn encode(model: &SrGcaeModel, g: &StructuralGraph, side: ImageSide) -> Result<Array2<f64>> {
    let mut f = project_input(model, g, side)?;
    for layer in &model.encoder {
        f = layer.forward(g.propagation(), &f);
    }
    Ok(f)
}

/// Encodes every graph of one image, preserving order.
pub fn encode_all(
    model: &SrGcaeModel,
    graphs: &[StructuralGraph],
    side: ImageSide,
) -> Result<Vec<Array2<f64>>> {
    graphs.par_iter().map(|g| encode(model, g, side)).collect()
}

/// Vertex reconstruction `P · F · W_dec`.
pub fn decode_vertex(model: &SrGcaeModel, features: &Array2<f64>, g: &StructuralGraph) -> Result<Array2<f64>> {
    let Head::VertexDecoder(layer) = &model.head else {
        return Err(Error::WrongHead);
    };
    if features.nrows() != g.n_vertices() || features.ncols() != layer.weight.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "features {:?} vs graph of {} vertices",
            features.dim(),
            g.n_vertices()
        )));
    }
    Ok(layer.forward(g.propagation(), features))
}

/// Edge reconstruction `σ(F Fᵀ)`.
pub fn decode_edge(features: &Array2<f64>) -> Array2<f64> {
    let mut gram = features.dot(&features.t());
    let n = gram.nrows();
    // The Gram product is not bitwise symmetric in general; mirror the upper
    // triangle so the reconstruction is.
    for i in 0..n {
        for j in i + 1..n {
            gram[[j, i]] = gram[[i, j]];
        }
    }
    gram.mapv_inplace(sigmoid);
    gram
}

fn mean_squared(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.dim(), b.dim())));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

/// Per-object vertex loss: mean squared error over all `N × C_h` entries.
pub fn loss_vertex(reconstruction: &Array2<f64>, target: &Array2<f64>) -> Result<f64> {
    mean_squared(reconstruction, target)
}

/// Per-object edge loss: mean squared error over all `N²` adjacency entries.
pub fn loss_edge(reconstruction: &Array2<f64>, adjacency: &Array2<f64>) -> Result<f64> {
    mean_squared(reconstruction, adjacency)
}

/// Vertex loss against a fixed target, the function whose gradient
/// [`gradients`] returns for the vertex objective.
pub fn vertex_loss_with_target(
    model: &SrGcaeModel,
    g: &StructuralGraph,
    side: ImageSide,
    target: &Array2<f64>,
) -> Result<f64> {
    let f = encode(model, g, side)?;
    loss_vertex(&decode_vertex(model, &f, g)?, target)
}

/// Loss of the model's active objective on one graph.
pub fn objective_loss(model: &SrGcaeModel, g: &StructuralGraph, side: ImageSide) -> Result<f64> {
    let f = encode(model, g, side)?;
    match model.objective() {
        Objective::Edge => loss_edge(&decode_edge(&f), g.adjacency()),
        Objective::Vertex => {
            let target = project_input(model, g, side)?;
            loss_vertex(&decode_vertex(model, &f, g)?, &target)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn same_seed_same_weights() {
        let a = init_model(3, 1, Objective::Vertex, 7).unwrap();
        let b = init_model(3, 1, Objective::Vertex, 7).unwrap();
        assert_eq!(a, b);
        let c = init_model(3, 1, Objective::Vertex, 8).unwrap();
        assert_ne!(a.parameters(), c.parameters());
    }

    #[test]
    fn glorot_bounds() {
        let m = init_model(4, 2, Objective::Vertex, 3).unwrap();
        for w in m.parameters() {
            let (fan_in, fan_out) = w.dim();
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn layer_shapes() {
        let m = init_model(3, 1, Objective::Vertex, 0).unwrap();
        let shapes: Vec<_> = m.parameters().iter().map(|w| w.dim()).collect();
        assert_eq!(shapes, vec![(3, 3), (1, 3), (3, 16), (16, 32), (32, 3)]);
        let e = init_model(2, 5, Objective::Edge, 0).unwrap();
        assert_eq!(e.parameters().len(), 4);
        assert_eq!(e.objective(), Objective::Edge);
    }

    #[test]
    fn single_vertex_pass_through() {
        let mut m = init_model(2, 2, Objective::Vertex, 1).unwrap();
        m.input_proj_x.mapv_inplace(f64::abs);
        let identity_like = |r, c| Array2::from_shape_fn((r, c), |(i, j)| (i == j) as u8 as f64);
        m.encoder[0].weight = identity_like(2, 16);
        m.encoder[1].weight = identity_like(16, 32);
        let g = StructuralGraph::with_adjacency(array![[0.25, 0.75]], array![[1.0]]);
        let f = encode(&m, &g, ImageSide::X).unwrap();
        let proj = project_input(&m, &g, ImageSide::X).unwrap();
        assert_eq!(f.row(0).slice(ndarray::s![..2]), proj.row(0));
        assert!(f.iter().skip(2).all(|&v| v == 0.0));
    }

    #[test]
    fn decoder_edge_cases() {
        let m = init_model(1, 1, Objective::Vertex, 2).unwrap();
        let g = StructuralGraph::with_adjacency(Array2::zeros((3, 1)), Array2::ones((3, 3)));
        let zero = Array2::zeros((3, 32));
        assert!(decode_vertex(&m, &zero, &g).unwrap().iter().all(|&v| v == 0.0));

        let one = StructuralGraph::with_adjacency(Array2::zeros((1, 1)), array![[1.0]]);
        let f = Array2::from_shape_fn((1, 32), |(_, j)| j as f64 * 0.01);
        let Head::VertexDecoder(layer) = &m.head else { unreachable!() };
        assert_eq!(decode_vertex(&m, &f, &one).unwrap(), f.dot(&layer.weight));

        let e = init_model(1, 1, Objective::Edge, 2).unwrap();
        assert!(matches!(decode_vertex(&e, &zero, &g), Err(Error::WrongHead)));
    }

    #[test]
    fn edge_decoder_of_zero_is_half() {
        let a = decode_edge(&Array2::zeros((4, 32)));
        assert!(a.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn edge_decoder_orthogonal_rows() {
        let z: f64 = 2.5;
        let mut f = Array2::zeros((3, 32));
        for i in 0..3 {
            f[[i, i]] = z.sqrt();
        }
        let a = decode_edge(&f);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 / (1.0 + (-z).exp()) } else { 0.5 };
                assert!((a[[i, j]] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn losses() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(loss_vertex(&a, &a).unwrap(), 0.0);
        let shifted = &a + 0.3;
        assert!((loss_vertex(&shifted, &a).unwrap() - 0.09).abs() < 1e-15);
        assert!(matches!(
            loss_edge(&a, &Array2::zeros((3, 2))),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn wrong_channel_count() {
        let m = init_model(3, 1, Objective::Edge, 0).unwrap();
        let g = StructuralGraph::with_adjacency(Array2::zeros((2, 2)), Array2::ones((2, 2)));
        assert!(matches!(encode(&m, &g, ImageSide::X), Err(Error::ShapeMismatch(_))));
    }
}
