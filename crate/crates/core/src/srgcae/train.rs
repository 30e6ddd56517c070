use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, gradients, AdamState, ImageSide, SrGcaeModel};
use crate::error::{Error, Result};
use crate::graphs::StructuralGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 1e-4,
            weight_decay: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean per-graph loss of each epoch, measured before each graph's step.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn epochs(&self) -> usize {
        self.epoch_losses.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Trains `model` on the union of both images' graphs.
///
/// Each epoch visits every graph once in an order shuffled by a generator
/// seeded from the model seed, taking one Adam step per graph.
pub fn train(
    mut model: SrGcaeModel,
    graphs_x: &[StructuralGraph],
    graphs_y: &[StructuralGraph],
    cfg: &TrainConfig,
) -> Result<(SrGcaeModel, TrainReport)> {
    if graphs_x.is_empty() && graphs_y.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut batch: Vec<(ImageSide, usize)> = (0..graphs_x.len())
        .map(|i| (ImageSide::X, i))
        .chain((0..graphs_y.len()).map(|i| (ImageSide::Y, i)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(model.rng_seed.wrapping_add(0x5eed));
    let mut adam = AdamState::new(cfg.learning_rate, cfg.weight_decay);
    let mut report = TrainReport::default();

    for _ in 0..cfg.epochs {
        batch.shuffle(&mut rng);
        let mut total = 0.0;
        for &(side, i) in &batch {
            let g = match side {
                ImageSide::X => &graphs_x[i],
                ImageSide::Y => &graphs_y[i],
            };
            let grads = gradients(&model, g, side)?;
            total += grads.loss;
            adam_step(&mut adam, &mut model.parameters_mut(), &grads.as_vec())?;
        }
        report.epoch_losses.push(total / batch.len() as f64);
    }
    Ok((model, report))
}
