pub mod cognitive_map;
pub mod geometry;
pub mod harness;
pub mod instruction;
pub mod llm_backend;
pub mod memory_stream;
pub mod metrics;
pub mod perception;
pub mod planner;
pub mod world;
