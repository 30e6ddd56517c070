//! Configuration, synthetic fixtures and end-to-end orchestration.

mod config;
mod run;
mod synth;

pub use config::PipelineConfig;
pub use run::{
    ablation, build_graph_pair, co_segment, evaluate, fuse_stage, init_for_pair, local_stage,
    nonlocal_stage, prepare_pair, refine_stage, run_on_rasters, run_pipeline, threshold_stage,
    train_for_pair, write_artifacts, Ablation, PipelineOutput, RunSummary, DETERMINISTIC_ARTIFACTS,
};
pub use synth::{generate_synthetic_pair, SyntheticPair, SyntheticSpec};
