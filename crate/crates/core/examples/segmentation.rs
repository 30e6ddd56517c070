//! Co-segments a normalized image pair and reports object statistics and the
//! merge audit.
//!
//! ```text
//! cargo run --release --example segmentation [merge_threshold]
//! ```

use srgcae::pipeline::{generate_synthetic_pair, prepare_pair, SyntheticSpec};
use srgcae::raster::stack_channels;
use srgcae::segment::{fnea_segment_audited, SegmentationConfig};

fn main() -> srgcae::Result<()> {
    let threshold = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let pair = generate_synthetic_pair(&SyntheticSpec {
        height: 128,
        width: 128,
        n_regions: 50,
        ..Default::default()
    })?;
    let (x, y) = prepare_pair(pair.pre, pair.post, None, None)?;

    let cfg = SegmentationConfig {
        merge_threshold: threshold,
        ..Default::default()
    };
    let (seg, audit) = fnea_segment_audited(&stack_channels(&x, &y)?, &cfg)?;

    let mut sizes: Vec<usize> = seg.objects().map(<[_]>::len).collect();
    sizes.sort_unstable();
    println!("threshold {threshold}: {} objects over {} pixels", seg.n_objects(), seg.labels().len());
    println!(
        "object size min {} / median {} / max {}",
        sizes[0],
        sizes[sizes.len() / 2],
        sizes[sizes.len() - 1]
    );
    let max_cost = audit.accepted_costs.iter().cloned().fold(0.0, f64::max);
    println!(
        "{} passes, {} threshold merges (max cost {max_cost:.4}), {} size merges, connected: {}",
        audit.passes,
        audit.accepted_costs.len(),
        audit.size_merges,
        seg.is_connected()
    );
    Ok(())
}
