use super::{DifferenceImage, DifferenceKind};
use crate::error::{Error, Result};

/// Population variance of all intensities.
///
/// Both passes (mean, then squared deviations) run over the values in sorted
/// order, so the result does not depend on pixel arrangement: any two images
/// holding the same multiset of intensities get bitwise-equal variances.
pub fn intensity_variance(di: &DifferenceImage) -> f64 {
    let mut sorted = di.intensity().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    sorted.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Variance-weighted average of two difference images.
///
/// The weights are normalized before mixing, so equal variances produce the
/// exact pixelwise mean and a zero-variance input contributes nothing.
pub fn adaptive_fuse(local: &DifferenceImage, nonlocal: &DifferenceImage) -> Result<DifferenceImage> {
    if local.height() != nonlocal.height() || local.width() != nonlocal.width() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            local.height(),
            local.width(),
            nonlocal.height(),
            nonlocal.width()
        )));
    }
    let (v_l, v_n) = (intensity_variance(local), intensity_variance(nonlocal));
    if v_l + v_n == 0.0 {
        return Err(Error::BothVariancesZero);
    }
    let w_l = v_l / (v_l + v_n);
    let w_n = 1.0 - w_l;
    let fused = local
        .intensity()
        .iter()
        .zip(nonlocal.intensity())
        .map(|(&a, &b)| w_l * a + w_n * b)
        .collect();
    DifferenceImage::new(local.height(), local.width(), fused, DifferenceKind::Fused)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn di(values: &[f64]) -> DifferenceImage {
        DifferenceImage::new(1, values.len(), values.to_vec(), DifferenceKind::Local).unwrap()
    }

    #[test]
    fn variance_cases() {
        assert_eq!(intensity_variance(&di(&[3.0; 5])), 0.0);
        assert_eq!(intensity_variance(&di(&[0.0, 2.0, 0.0, 2.0])), 1.0);
    }

    #[test]
    fn equal_variances_give_mean() {
        let a = di(&[0.0, 1.0, 0.0, 1.0]);
        let b = di(&[2.0, 3.0, 3.0, 2.0]);
        let f = adaptive_fuse(&a, &b).unwrap();
        assert_eq!(f.intensity(), &[1.0, 2.0, 1.5, 1.5]);
        assert_eq!(f.kind(), DifferenceKind::Fused);
    }

    #[test]
    fn constant_input_drops_out() {
        let a = di(&[0.1, 0.7, 0.3]);
        let b = di(&[5.0; 3]);
        assert_eq!(adaptive_fuse(&a, &b).unwrap().intensity(), a.intensity());
        assert!(matches!(
            adaptive_fuse(&b, &b),
            Err(Error::BothVariancesZero)
        ));
    }
}
