//! Dataset ingestion and the file-producing pipelines.

mod config;
mod dataset;
pub mod pipeline;

pub use config::{ModelConfig, Overrides, RunConfig, SimulateConfig, OUTPUT_DIR_ENV};
pub use dataset::{
    export_edges, ingest, slotting_of, Dataset, DatasetSpec, DatasetStats, Slotting, TimeUnit,
    VertexMap,
};
