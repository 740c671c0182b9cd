//! Grid-game engine driven by VGDL descriptions, with a cloneable forward
//! model, the benchmark game corpus, observation rendering and planning agents.

pub mod agents;
pub mod engine;
pub mod games;
pub mod render;
pub mod vgdl;
