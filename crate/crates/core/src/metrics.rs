//! Accuracy assessment against a reference change map.

use std::fmt::Write as _;

use crate::change::{ChangeMap, DifferenceImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Change class is the positive class.
pub fn confusion(cm: &ChangeMap, reference: &ChangeMap) -> Result<ConfusionCounts> {
    if cm.height() != reference.height() || cm.width() != reference.width() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs reference {}x{}",
            cm.height(),
            cm.width(),
            reference.height(),
            reference.width()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &r) in cm.mask().iter().zip(reference.mask()) {
        match (p, r) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub oa: f64,
    pub f1: f64,
    pub kappa: f64,
}

/// Overall accuracy, F1 score and Cohen's kappa.
pub fn oa_f1_kappa(c: &ConfusionCounts) -> Result<Accuracy> {
    let n = c.total();
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let nf = n as f64;
    let oa = (c.tp + c.tn) as f64 / nf;

    let f1_den = 2 * c.tp + c.fp + c.fn_;
    let f1 = if f1_den == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / f1_den as f64
    };

    // Chance agreement from the marginals, accumulated exactly in integers.
    let pred_pos = (c.tp + c.fp) as u128;
    let ref_pos = (c.tp + c.fn_) as u128;
    let pred_neg = (c.fn_ + c.tn) as u128;
    let ref_neg = (c.fp + c.tn) as u128;
    let agree = pred_pos * ref_pos + pred_neg * ref_neg;
    let n2 = n as u128 * n as u128;
    let kappa = if agree == n2 {
        if c.fp + c.fn_ == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        let p_e = agree as f64 / n2 as f64;
        (oa - p_e) / (1.0 - p_e)
    };
    Ok(Accuracy { oa, f1, kappa })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(false-positive rate, true-positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (x, y) in &self.points {
            writeln!(out, "{x},{y}").expect("writing to a String");
        }
        out
    }
}

/// Sweeps every distinct intensity as a strict `>` threshold; equal
/// intensities enter the positive set together. AUC by the trapezoid rule.
pub fn roc_auc(di: &DifferenceImage, reference: &ChangeMap) -> Result<RocCurve> {
    if di.height() != reference.height() || di.width() != reference.width() {
        return Err(Error::ShapeMismatch("difference image vs reference".into()));
    }
    let positives = reference.count_changed() as u64;
    let negatives = reference.mask().len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClassReference);
    }
    let mut order: Vec<(f64, bool)> = di
        .intensity()
        .iter()
        .copied()
        .zip(reference.mask().iter().copied())
        .collect();
    order.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let value = order[i].0;
        while i < order.len() && order[i].0 == value {
            if order[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (x0, y0) = *points.last().expect("non-empty");
        let (x1, y1) = (fp as f64 / n, tp as f64 / p);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        points.push((x1, y1));
    }
    Ok(RocCurve { points, auc })
}

/// One row of the metrics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub dataset: String,
    pub accuracy: Accuracy,
    pub auc: f64,
    pub runtime_seconds: f64,
}

pub const METRICS_HEADER: &str = "dataset,oa,f1,kc,auc,runtime_seconds";

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.3}",
            self.dataset,
            self.accuracy.oa,
            self.accuracy.f1,
            self.accuracy.kappa,
            self.auc,
            self.runtime_seconds
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{METRICS_HEADER}\n{}\n", self.to_csv_line())
    }
}
