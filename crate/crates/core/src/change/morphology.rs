//! Binary morphology with square structuring elements.
//!
//! Pixels outside the frame count as unchanged (`false`) in both dilation
//! and erosion windows. Square windows are separable, so each operator runs
//! as a row pass followed by a column pass over running counts.

use super::ChangeMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelRole {
    Close,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MorphKernel {
    side: usize,
    role: KernelRole,
}

impl MorphKernel {
    pub fn new(side: usize, role: KernelRole) -> Result<Self> {
        if side == 0 || side.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "structuring element side must be odd and >= 1, got {side}"
            )));
        }
        Ok(Self { side, role })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn role(&self) -> KernelRole {
        self.role
    }

    pub fn radius(&self) -> usize {
        self.side / 2
    }
}

/// Sliding-window "any" (`want_all = false`) or "all" (`want_all = true`)
/// along one axis: `lines` lines of `count` samples, `stride` apart.
#[allow(clippy::too_many_arguments)]
fn window_pass(
    src: &[bool],
    dst: &mut [bool],
    lines: usize,
    count: usize,
    line_step: usize,
    stride: usize,
    radius: usize,
    want_all: bool,
) {
    let window = 2 * radius + 1;
    for line in 0..lines {
        let base = line * line_step;
        let at = |i: usize| src[base + i * stride];
        // Number of true samples among in-frame positions of the window
        // centered on `i`; out-of-frame positions are false.
        let mut trues = (0..radius.min(count)).filter(|&i| at(i)).count();
        for i in 0..count {
            let enter = i + radius;
            if enter < count && at(enter) {
                trues += 1;
            }
            if i > radius && at(i - radius - 1) {
                trues -= 1;
            }
            dst[base + i * stride] = if want_all { trues == window } else { trues > 0 };
        }
    }
}

fn apply(cm: &ChangeMap, radius: usize, want_all: bool) -> ChangeMap {
    if radius == 0 {
        return cm.clone();
    }
    let (h, w) = (cm.height(), cm.width());
    let mut rows = vec![false; h * w];
    window_pass(cm.mask(), &mut rows, h, w, w, 1, radius, want_all);
    let mut out = vec![false; h * w];
    window_pass(&rows, &mut out, w, h, 1, w, radius, want_all);
    ChangeMap::new(h, w, out).expect("shape preserved")
}

pub fn dilate(cm: &ChangeMap, kernel: &MorphKernel) -> ChangeMap {
    apply(cm, kernel.radius(), false)
}

pub fn erode(cm: &ChangeMap, kernel: &MorphKernel) -> ChangeMap {
    apply(cm, kernel.radius(), true)
}

/// Dilation followed by erosion; fills voids inside changed areas.
pub fn close(cm: &ChangeMap, kernel: &MorphKernel) -> ChangeMap {
    erode(&dilate(cm, kernel), kernel)
}

/// Erosion followed by dilation; removes isolated changed pixels.
pub fn open(cm: &ChangeMap, kernel: &MorphKernel) -> ChangeMap {
    dilate(&erode(cm, kernel), kernel)
}

/// Closing with `close_kernel`, then opening with `open_kernel`.
pub fn morph_refine(cm: &ChangeMap, close_kernel: &MorphKernel, open_kernel: &MorphKernel) -> ChangeMap {
    open(&close(cm, close_kernel), open_kernel)
}
