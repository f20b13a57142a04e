//! Executor, file formats and program files for `kgframe-core` frames.

pub use kgframe_core as core;

pub mod cli;
pub mod executor;
pub mod export;
pub mod program;
pub mod results;
