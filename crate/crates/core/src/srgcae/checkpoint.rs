//! `MMRGCAE1` model checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic            8 bytes  "MMRGCAE1"
//! objective        u8       0 = vertex, 1 = edge
//! shared proj.     u8       0 / 1
//! rng seed         u64
//! matrix count     u32
//! per matrix       u32 rows, u32 cols, u8 activation code
//! payload          f64 weights, matrices in table order, row-major
//! ```
//!
//! Table order: input projection X, input projection Y, encoder layers,
//! then the vertex decoder when present.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{Activation, GcLayer, Head, Objective, SrGcaeModel};
use crate::error::{Error, Result};
use crate::formats::{f64s_from_le, push_f64s_le, Reader};

pub const MODEL_MAGIC: &[u8; 8] = b"MMRGCAE1";

pub fn encode_model(model: &SrGcaeModel) -> Vec<u8> {
    let mut table: Vec<(&Array2<f64>, Activation)> = vec![
        (&model.input_proj_x, Activation::Linear),
        (&model.input_proj_y, Activation::Linear),
    ];
    table.extend(model.encoder.iter().map(|l| (&l.weight, l.activation)));
    if let Head::VertexDecoder(l) = &model.head {
        table.push((&l.weight, l.activation));
    }

    let mut out = MODEL_MAGIC.to_vec();
    out.push(match model.objective() {
        Objective::Vertex => 0,
        Objective::Edge => 1,
    });
    out.push(model.shared_projection as u8);
    out.extend_from_slice(&model.rng_seed.to_le_bytes());
    out.extend_from_slice(&(table.len() as u32).to_le_bytes());
    for (w, act) in &table {
        out.extend_from_slice(&(w.nrows() as u32).to_le_bytes());
        out.extend_from_slice(&(w.ncols() as u32).to_le_bytes());
        out.push(act.code());
    }
    for (w, _) in &table {
        let flat: Vec<f64> = w.iter().copied().collect();
        push_f64s_le(&mut out, &flat);
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<SrGcaeModel> {
    let mut rd = Reader::new(bytes);
    if rd.take(8)? != MODEL_MAGIC {
        return Err(Error::UnsupportedFormat("missing MMRGCAE1 magic".into()));
    }
    let objective = match rd.u8()? {
        0 => Objective::Vertex,
        1 => Objective::Edge,
        c => return Err(Error::MalformedHeader(format!("unknown objective code {c}"))),
    };
    let shared = match rd.u8()? {
        0 => false,
        1 => true,
        c => return Err(Error::MalformedHeader(format!("bad shared flag {c}"))),
    };
    let seed = u64::from_le_bytes(rd.take(8)?.try_into().expect("8 bytes"));
    let count = rd.u32()? as usize;
    let expected = match objective {
        Objective::Vertex => 5,
        Objective::Edge => 4,
    };
    if count != expected {
        return Err(Error::MalformedHeader(format!(
            "{count} matrices, expected {expected}"
        )));
    }
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = rd.u32()? as usize;
        let cols = rd.u32()? as usize;
        let act = Activation::from_code(rd.u8()?)
            .ok_or_else(|| Error::MalformedHeader("unknown activation code".into()))?;
        shapes.push((rows, cols, act));
    }
    let declared: usize = shapes.iter().map(|(r, c, _)| r * c * 8).sum();
    let payload = rd.remaining();
    if payload.len() != declared {
        return Err(Error::DimensionMismatch {
            declared,
            actual: payload.len(),
        });
    }
    let values = f64s_from_le(payload);
    let mut offset = 0;
    let mut mats: Vec<(Array2<f64>, Activation)> = shapes
        .into_iter()
        .map(|(r, c, act)| {
            let m = Array2::from_shape_vec((r, c), values[offset..offset + r * c].to_vec())
                .expect("shape matches slice");
            offset += r * c;
            (m, act)
        })
        .collect();

    let head = match objective {
        Objective::Vertex => {
            let (weight, activation) = mats.pop().expect("decoder present");
            Head::VertexDecoder(GcLayer { weight, activation })
        }
        Objective::Edge => Head::EdgeDecoder,
    };
    let mut it = mats.into_iter();
    let (input_proj_x, _) = it.next().expect("projection x");
    let (input_proj_y, _) = it.next().expect("projection y");
    let encoder: Vec<GcLayer> = it
        .map(|(weight, activation)| GcLayer { weight, activation })
        .collect();

    let c_h = input_proj_x.ncols();
    let chain_ok = input_proj_y.ncols() == c_h
        && encoder[0].weight.nrows() == c_h
        && encoder[0].weight.ncols() == encoder[1].weight.nrows()
        && match &head {
            Head::VertexDecoder(l) => {
                l.weight.nrows() == encoder[1].weight.ncols() && l.weight.ncols() == c_h
            }
            Head::EdgeDecoder => true,
        };
    if !chain_ok {
        return Err(Error::MalformedHeader("inconsistent layer shapes".into()));
    }
    Ok(SrGcaeModel {
        input_proj_x,
        input_proj_y,
        shared_projection: shared,
        encoder,
        head,
        rng_seed: seed,
    })
}

pub fn save_model(model: &SrGcaeModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SrGcaeModel> {
    decode_model(&fs::read(path)?)
}
