//! Agent crews that build a tabular credit classifier end to end and then
//! validate it, running on a hierarchical delegation runtime with a bounded
//! memory stream and a replayable chat-completion gateway.

pub mod eda;
pub mod gateway;
pub mod memory;
pub mod model_lab;
pub mod modeling;
pub mod mrm;
pub mod orchestration;
pub mod seed;
pub mod synth;
pub mod tabular;
