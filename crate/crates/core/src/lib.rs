pub mod catalog;
pub mod grammar;
pub mod ingest;
pub mod mapping;
pub mod matcher;
pub mod metrics;
pub mod miner;
pub mod sequence;
pub mod transform;
pub mod fixtures;
pub mod pipeline;
