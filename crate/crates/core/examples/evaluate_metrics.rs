//! Accuracy of a change map and ROC of a difference image against a
//! reference map.
//!
//! ```text
//! cargo run --example evaluate_metrics
//! ```

use srgcae::change::{ChangeMap, DifferenceImage, DifferenceKind};
use srgcae::metrics::{confusion, oa_f1_kappa, roc_auc, MetricsRow};

fn main() -> srgcae::Result<()> {
    let reference = ChangeMap::new(2, 5, vec![true, true, false, false, false, true, false, false, false, false])?;
    let di = DifferenceImage::new(
        2,
        5,
        vec![0.9, 0.7, 0.75, 0.1, 0.2, 0.6, 0.3, 0.05, 0.2, 0.1],
        DifferenceKind::Fused,
    )?;
    let cm = ChangeMap::new(2, 5, di.intensity().iter().map(|&v| v > 0.5).collect())?;

    let counts = confusion(&cm, &reference)?;
    println!("TP {} FP {} TN {} FN {}", counts.tp, counts.fp, counts.tn, counts.fn_);
    let accuracy = oa_f1_kappa(&counts)?;
    let roc = roc_auc(&di, &reference)?;
    print!("{}", MetricsRow { dataset: "toy".into(), accuracy, auc: roc.auc, runtime_seconds: 0.0 }.to_csv());
    print!("{}", roc.to_csv());
    Ok(())
}
