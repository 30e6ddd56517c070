//! Otsu thresholding of a noisy two-level difference image followed by
//! closing and opening.
//!
//! ```text
//! cargo run --example threshold_and_refine
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srgcae::change::{morph_refine, otsu_threshold, ChangeMap, DifferenceImage, DifferenceKind, KernelRole, MorphKernel};

fn render(cm: &ChangeMap) {
    for h in 0..cm.height() {
        let row: String = (0..cm.width()).map(|w| if cm.get(h, w) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() -> srgcae::Result<()> {
    let (h, w) = (16, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // A changed rectangle on a quiet background, with salt-and-pepper flips.
    let values = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            let inside = (4..12).contains(&r) && (8..24).contains(&c);
            let flip = rng.random_bool(0.06);
            let level = if inside != flip { 0.8 } else { 0.2 };
            level + rng.random_range(-0.1..0.1)
        })
        .collect();
    let di = DifferenceImage::new(h, w, values, DifferenceKind::Fused)?;

    let otsu = otsu_threshold(&di)?;
    println!("threshold {:.4} (bin {}), {} changed pixels", otsu.threshold, otsu.bin, otsu.change_map.count_changed());
    render(&otsu.change_map);

    let refined = morph_refine(
        &otsu.change_map,
        &MorphKernel::new(3, KernelRole::Close)?,
        &MorphKernel::new(3, KernelRole::Open)?,
    );
    println!("after closing and opening, {} changed pixels", refined.count_changed());
    render(&refined);
    Ok(())
}
