//! Binary encodings: Netpbm P5, the `MMRASTR1` raster container and the
//! `MMRSEG1` label file.

use crate::error::{Error, Result};
use crate::raster::{Modality, Raster};

pub const MMR_MAGIC: &[u8; 8] = b"MMRASTR1";
pub const SEG_MAGIC: &[u8; 7] = b"MMRSEG1";

const MMR_HEADER_LEN: usize = 8 + 4 * 3 + 1;

/// Little-endian cursor over a byte buffer.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::MalformedHeader("unexpected end of file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

pub(crate) fn f64s_from_le(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect()
}

pub(crate) fn push_f64s_le(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_mmr(r: &Raster) -> Vec<u8> {
    let mut out = Vec::with_capacity(MMR_HEADER_LEN + r.data().len() * 8);
    out.extend_from_slice(MMR_MAGIC);
    out.extend_from_slice(&(r.height() as u32).to_le_bytes());
    out.extend_from_slice(&(r.width() as u32).to_le_bytes());
    out.extend_from_slice(&(r.channels() as u32).to_le_bytes());
    out.push(r.modality().code());
    push_f64s_le(&mut out, r.data());
    out
}

pub fn decode_mmr(bytes: &[u8]) -> Result<Raster> {
    let mut rd = Reader::new(bytes);
    if rd.take(8)? != MMR_MAGIC {
        return Err(Error::UnsupportedFormat("missing MMRASTR1 magic".into()));
    }
    let height = rd.u32()? as usize;
    let width = rd.u32()? as usize;
    let channels = rd.u32()? as usize;
    let code = rd.u8()?;
    let modality = Modality::from_code(code)
        .ok_or_else(|| Error::MalformedHeader(format!("unknown modality code {code}")))?;
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {height}x{width}x{channels}"
        )));
    }
    let payload = rd.remaining();
    let declared = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(channels))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    if payload.len() != declared {
        return Err(Error::DimensionMismatch {
            declared,
            actual: payload.len(),
        });
    }
    Raster::new(height, width, channels, f64s_from_le(payload), modality)
}

/// Encodes a binary (P5) PGM with maxval 255.
pub fn encode_pgm(height: usize, width: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes a binary (P5) PGM; returns `(height, width, samples)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::UnsupportedFormat("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        pos = skip_whitespace_and_comments(bytes, pos)?;
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedHeader("expected a decimal field".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("field {text} out of range")))?;
    }
    // Exactly one whitespace byte separates maxval from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader("missing whitespace after maxval".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval {maxval} (only 1..=255 supported)"
        )));
    }
    let payload = &bytes[pos..];
    let declared = width * height;
    if payload.len() != declared {
        return Err(Error::DimensionMismatch {
            declared,
            actual: payload.len(),
        });
    }
    if let Some(&v) = payload.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::MalformedHeader(format!(
            "sample {v} exceeds maxval {maxval}"
        )));
    }
    Ok((height, width, payload.to_vec()))
}

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> Result<usize> {
    let mut saw_space = false;
    loop {
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => {
                saw_space = true;
                pos += 1;
            }
            Some(b'#') => {
                while pos < bytes.len() && bytes[pos] != b'\n' && bytes[pos] != b'\r' {
                    pos += 1;
                }
            }
            Some(_) if saw_space => return Ok(pos),
            Some(_) => return Err(Error::MalformedHeader("expected whitespace".into())),
            None => return Err(Error::MalformedHeader("truncated header".into())),
        }
    }
}
