//! Trains both autoencoder objectives on the graphs of a small synthetic
//! scene and prints the loss curve.
//!
//! ```text
//! cargo run --release --example train_autoencoder [epochs]
//! ```

use srgcae::pipeline::{build_graph_pair, co_segment, generate_synthetic_pair, prepare_pair, train_for_pair, PipelineConfig, SyntheticSpec};
use srgcae::srgcae::{save_model, Objective};

fn main() -> srgcae::Result<()> {
    let mut cfg = PipelineConfig::parse(include_str!("../configs/synthetic.conf"))?;
    if let Some(epochs) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.train.epochs = epochs;
    }
    let pair = generate_synthetic_pair(&SyntheticSpec {
        height: 96,
        width: 96,
        n_regions: 40,
        ..Default::default()
    })?;
    let (x, y) = prepare_pair(pair.pre, pair.post, None, None)?;
    let seg = co_segment(&x, &y, &cfg.segmentation())?;
    let (gx, gy) = build_graph_pair(&x, &y, &seg, &cfg.graphs())?;
    println!("{} objects, {} epochs", seg.n_objects(), cfg.train.epochs);

    for (objective, seed) in [(Objective::Edge, cfg.edge_seed()), (Objective::Vertex, cfg.vertex_seed())] {
        let (model, report) = train_for_pair(&x, &y, &gx, &gy, objective, seed, &cfg.train)?;
        println!("{} objective:", objective.name());
        for (epoch, loss) in report.epoch_losses.iter().enumerate() {
            println!("  epoch {:>3}  mean loss {loss:.6e}", epoch + 1);
        }
        let path = std::env::temp_dir().join(format!("srgcae_{}.gcae", objective.name()));
        save_model(&model, &path)?;
        println!("  checkpoint: {}", path.display());
    }
    Ok(())
}
