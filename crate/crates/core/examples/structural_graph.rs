//! Builds the structural graph of one object and inspects its adjacency and
//! normalized propagation matrix.
//!
//! ```text
//! cargo run --example structural_graph
//! ```

use srgcae::graphs::{build_structural_graph, combinatorial_laplacian, GraphConfig};
use srgcae::raster::{Modality, Raster};
use srgcae::segment::SegmentationMap;

fn main() -> srgcae::Result<()> {
    // A 4 x 4 single-band image holding two flat objects side by side, with
    // a little texture in the left one.
    let values = vec![
        0.10, 0.12, 0.80, 0.80, //
        0.11, 0.30, 0.80, 0.80, //
        0.10, 0.12, 0.80, 0.80, //
        0.13, 0.10, 0.80, 0.80,
    ];
    let img = Raster::new(4, 4, 1, values, Modality::Generic)?;
    let labels = (0..16).map(|i| u32::from(i % 4 >= 2)).collect();
    let seg = SegmentationMap::from_labels(4, 4, labels)?;

    let cfg = GraphConfig {
        phi1: 10.0,
        ..Default::default()
    };
    let g = build_structural_graph(&img, &seg, 0, &cfg)?;
    println!("object 0: {} vertices at {:?}", g.n_vertices(), g.pixel_coords());
    println!("adjacency exp(-phi1 * |v_i - v_j|):\n{:.3}", g.adjacency());
    println!("propagation D^-1/2 A D^-1/2:\n{:.3}", g.propagation());

    let l = combinatorial_laplacian(&g);
    let worst = l.rows().into_iter().map(|r| r.sum().abs()).fold(0.0, f64::max);
    println!("largest |row sum| of D - A: {worst:.1e}");

    let flat = build_structural_graph(&img, &seg, 1, &cfg)?;
    println!(
        "object 1 is flat, so every edge weight is 1: {}",
        flat.adjacency().iter().all(|&a| a == 1.0)
    );
    Ok(())
}
