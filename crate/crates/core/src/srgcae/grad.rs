//! Reverse-mode gradients of the vertex and edge objectives.

use ndarray::{Array2, Zip};

use super::{project_input, sigmoid, Head, ImageSide, SrGcaeModel};
use crate::error::Result;
use crate::graphs::StructuralGraph;

/// Loss of one graph and the gradient of every model parameter.
///
/// Parameter order matches [`SrGcaeModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub proj_x: Array2<f64>,
    pub proj_y: Array2<f64>,
    pub encoder: Vec<Array2<f64>>,
    pub decoder: Option<Array2<f64>>,
}

impl Gradients {
    pub fn as_vec(&self) -> Vec<&Array2<f64>> {
        let mut out = vec![&self.proj_x, &self.proj_y];
        out.extend(self.encoder.iter());
        out.extend(self.decoder.iter());
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.as_vec()
            .into_iter()
            .flat_map(|m| m.iter())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// For the vertex objective the target `𝒱 · P_side` is treated as a constant
/// for the step: differentiating through it would let the projection shrink
/// toward zero, where the loss vanishes trivially.
pub fn gradients(model: &SrGcaeModel, g: &StructuralGraph, side: ImageSide) -> Result<Gradients> {
    let p = g.propagation();
    let f0 = project_input(model, g, side)?;

    // Forward pass, keeping every intermediate the backward pass needs.
    let mut inputs = Vec::with_capacity(model.encoder.len());
    let mut pre_acts = Vec::with_capacity(model.encoder.len());
    let mut h = f0.clone();
    for layer in &model.encoder {
        let q = p.dot(&h);
        let z = q.dot(&layer.weight);
        h = z.mapv(|v| layer.activation.apply(v));
        inputs.push(q);
        pre_acts.push(z);
    }
    let f = h;

    let (loss, mut d_h, decoder) = match &model.head {
        Head::EdgeDecoder => {
            let n = f.nrows();
            let mut s = f.dot(&f.t());
            for i in 0..n {
                for j in i + 1..n {
                    s[[j, i]] = s[[i, j]];
                }
            }
            let a_hat = s.mapv(sigmoid);
            let scale = 1.0 / (n * n) as f64;
            let mut loss = 0.0;
            let mut d_s = Array2::<f64>::zeros((n, n));
            Zip::from(&mut d_s)
                .and(&a_hat)
                .and(g.adjacency())
                .for_each(|ds, &ah, &a| {
                    let e = ah - a;
                    loss += e * e;
                    *ds = 2.0 * e * scale * ah * (1.0 - ah);
                });
            let d_sym = &d_s + &d_s.t();
            (loss * scale, d_sym.dot(&f), None)
        }
        Head::VertexDecoder(layer) => {
            let q = p.dot(&f);
            let r = q.dot(&layer.weight);
            let err = &r - &f0;
            let scale = 1.0 / err.len() as f64;
            let loss = err.iter().map(|e| e * e).sum::<f64>() * scale;
            let d_r = err.mapv(|e| 2.0 * e * scale);
            let d_w = q.t().dot(&d_r);
            let d_f = p.dot(&d_r.dot(&layer.weight.t()));
            (loss, d_f, Some(d_w))
        }
    };

    let mut encoder_grads = vec![Array2::zeros((0, 0)); model.encoder.len()];
    for (l, layer) in model.encoder.iter().enumerate().rev() {
        let z = &pre_acts[l];
        let d_z = match layer.activation {
            super::Activation::Linear => d_h,
            super::Activation::Relu => {
                let mut d = d_h;
                Zip::from(&mut d).and(z).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                d
            }
            super::Activation::Sigmoid => {
                let mut d = d_h;
                Zip::from(&mut d).and(z).for_each(|d, &z| {
                    let s = sigmoid(z);
                    *d *= s * (1.0 - s);
                });
                d
            }
        };
        encoder_grads[l] = inputs[l].t().dot(&d_z);
        d_h = p.dot(&d_z.dot(&layer.weight.t()));
    }
    let d_proj = g.vertex_features().t().dot(&d_h);

    let zeros_x = Array2::zeros(model.input_proj_x.dim());
    let zeros_y = Array2::zeros(model.input_proj_y.dim());
    let (proj_x, proj_y) = match side {
        ImageSide::Y if !model.shared_projection => (zeros_x, d_proj),
        _ => (d_proj, zeros_y),
    };
    Ok(Gradients {
        loss,
        proj_x,
        proj_y,
        encoder: encoder_grads,
        decoder,
    })
}
