//! Helpers and independent reference implementations shared by the
//! integration tests. The oracles here are deliberately naive: they follow
//! the textbook definitions with no shared code paths into the library.

#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srgcae::change::{ChangeMap, DifferenceImage, DifferenceKind};
use srgcae::graphs::StructuralGraph;
use srgcae::pipeline::PipelineConfig;
use srgcae::srgcae::{gradients, ImageSide, Objective, SrGcaeModel};

pub const FIXTURE_CONFIG: &str = include_str!("../../configs/synthetic.conf");

pub fn fixture_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::parse(FIXTURE_CONFIG).expect("fixture config parses");
    cfg.seed = seed;
    cfg
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fully connected graph over `n` random vertices with `c` features.
pub fn random_graph(rng: &mut impl Rng, n: usize, c: usize, phi1: f64) -> StructuralGraph {
    let features = Array2::from_shape_fn((n, c), |_| rng.random_range(0.0..1.0));
    StructuralGraph::from_features(0, features, (0..n).map(|i| (0, i)).collect(), phi1, false)
}

// ---------------------------------------------------------------- gradients

/// Largest relative disagreement between analytic gradients and central
/// finite differences over every parameter entry.
///
/// The vertex objective is differentiated with its reconstruction target held
/// fixed at the value produced by the unperturbed model.
pub fn gradient_check(model: &SrGcaeModel, g: &StructuralGraph, side: ImageSide, step: f64) -> f64 {
    let analytic = gradients(model, g, side).expect("gradients");
    let analytic: Vec<Array2<f64>> = analytic.as_vec().into_iter().cloned().collect();
    let target = srgcae::srgcae::project_input(model, g, side).expect("projection");
    let loss = |m: &SrGcaeModel| match m.objective() {
        Objective::Edge => srgcae::srgcae::objective_loss(m, g, side).expect("loss"),
        Objective::Vertex => srgcae::srgcae::vertex_loss_with_target(m, g, side, &target).expect("loss"),
    };

    let mut worst = 0.0f64;
    for (p, grad) in analytic.iter().enumerate() {
        for idx in 0..grad.len() {
            let (r, c) = (idx / grad.ncols(), idx % grad.ncols());
            let eval = |delta: f64| {
                let mut m = model.clone();
                m.parameters_mut()[p][[r, c]] += delta;
                loss(&m)
            };
            let fd = (eval(step) - eval(-step)) / (2.0 * step);
            let a = grad[[r, c]];
            let scale = a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max((a - fd).abs() / scale);
        }
    }
    worst
}

// ------------------------------------------------------------------- adam

/// Scalar Adam with decoupled weight decay, one parameter at a time.
pub struct ScalarAdam {
    pub m: f64,
    pub v: f64,
    pub t: i32,
}

impl ScalarAdam {
    pub fn new() -> Self {
        Self { m: 0.0, v: 0.0, t: 0 }
    }

    pub fn step(&mut self, theta: f64, grad: f64, lr: f64, wd: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        self.t += 1;
        self.m = b1 * self.m + (1.0 - b1) * grad;
        self.v = b2 * self.v + (1.0 - b2) * grad * grad;
        let m_hat = self.m / (1.0 - b1.powi(self.t));
        let v_hat = self.v / (1.0 - b2.powi(self.t));
        let stepped = theta - lr * m_hat / (v_hat.sqrt() + eps);
        stepped - lr * wd * theta
    }
}

// ------------------------------------------------------------------- otsu

/// Exhaustive Otsu over `bins` bins of the min-max scaled intensities.
///
/// Returns the last bin of the lower class. For a split after bin `t`, the
/// between-class variance is `ω₀ω₁(μ₀ − μ₁)²`; scaled by `N⁴` this becomes
/// `(S·n₀ − N·s₀)² / (n₀·n₁)` in integers, compared by cross multiplication.
/// Ties go to the smallest `t`.
pub fn brute_force_otsu(values: &[f64], bins: usize) -> Option<usize> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return None;
    }
    let bin_of: Vec<u128> = values
        .iter()
        .map(|&v| {
            let b = ((v - lo) / (hi - lo) * bins as f64).floor() as usize;
            b.min(bins - 1) as u128
        })
        .collect();
    let n = values.len() as i128;
    let s_total: i128 = bin_of.iter().map(|&b| b as i128).sum();
    let mut best: Option<(usize, u128, u128)> = None;
    for t in 0..bins - 1 {
        let n0 = bin_of.iter().filter(|&&b| b <= t as u128).count() as i128;
        let s0: i128 = bin_of.iter().filter(|&&b| b <= t as u128).map(|&b| b as i128).sum();
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (s_total * n0 - n * s0).unsigned_abs();
        let num = d * d;
        let den = (n0 * n1) as u128;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

/// Random difference image of a random shape drawn from a mix of value
/// distributions, including heavily tied ones.
pub fn random_difference_image(rng: &mut impl Rng) -> DifferenceImage {
    let h = rng.random_range(1..=24);
    let w = rng.random_range(2..=24);
    let mode = rng.random_range(0..4);
    let values: Vec<f64> = (0..h * w)
        .map(|_| match mode {
            0 => rng.random_range(0.0..1.0),
            1 => {
                if rng.random_bool(0.3) {
                    rng.random_range(5.0..6.0)
                } else {
                    rng.random_range(0.0..2.0)
                }
            }
            2 => rng.random_range(0..6) as f64 * 0.25,
            _ => rng.random_range(-3.0f64..3.0).exp(),
        })
        .collect();
    DifferenceImage::new(h, w, values, DifferenceKind::Fused).expect("valid image")
}

// ------------------------------------------------------------- morphology

/// Dilation by a `side × side` square straight from the definition: a pixel
/// is set when any in-frame pixel of the centered window is set.
pub fn dilate_oracle(cm: &ChangeMap, side: usize) -> ChangeMap {
    window_oracle(cm, side, false)
}

/// Erosion: set when every pixel of the centered window is set, where
/// positions outside the frame count as unset.
pub fn erode_oracle(cm: &ChangeMap, side: usize) -> ChangeMap {
    window_oracle(cm, side, true)
}

fn window_oracle(cm: &ChangeMap, side: usize, all: bool) -> ChangeMap {
    let (h, w) = (cm.height() as i64, cm.width() as i64);
    let r = (side / 2) as i64;
    let mut out = Vec::with_capacity((h * w) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut any = false;
            let mut every = true;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (yy, xx) = (y + dy, x + dx);
                    let v = yy >= 0 && yy < h && xx >= 0 && xx < w && cm.get(yy as usize, xx as usize);
                    any |= v;
                    every &= v;
                }
            }
            out.push(if all { every } else { any });
        }
    }
    ChangeMap::new(cm.height(), cm.width(), out).expect("shape")
}

pub fn random_mask(rng: &mut impl Rng, h: usize, w: usize) -> ChangeMap {
    let density = rng.random_range(0.05..0.95);
    let mask = (0..h * w).map(|_| rng.random_bool(density)).collect();
    ChangeMap::new(h, w, mask).expect("shape")
}

/// Set pixels none of whose eight neighbors is set.
pub fn isolated_pixels(cm: &ChangeMap) -> Vec<(usize, usize)> {
    let (h, w) = (cm.height(), cm.width());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !cm.get(y, x) {
                continue;
            }
            let lonely = neighbors8(y, x, h, w).all(|(yy, xx)| !cm.get(yy, xx));
            if lonely {
                out.push((y, x));
            }
        }
    }
    out
}

/// Unset pixels away from the frame whose eight neighbors are all set.
pub fn interior_holes(cm: &ChangeMap) -> Vec<(usize, usize)> {
    let (h, w) = (cm.height(), cm.width());
    let mut out = Vec::new();
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            if !cm.get(y, x) && neighbors8(y, x, h, w).all(|(yy, xx)| cm.get(yy, xx)) {
                out.push((y, x));
            }
        }
    }
    out
}

fn neighbors8(y: usize, x: usize, h: usize, w: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1i64..=1)
        .flat_map(|dy| (-1i64..=1).map(move |dx| (dy, dx)))
        .filter(|&d| d != (0, 0))
        .map(move |(dy, dx)| (y as i64 + dy, x as i64 + dx))
        .filter(move |&(yy, xx)| yy >= 0 && xx >= 0 && yy < h as i64 && xx < w as i64)
        .map(|(yy, xx)| (yy as usize, xx as usize))
}

// ----------------------------------------------------------------- misc

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let (mut va, mut vb) = (0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}
