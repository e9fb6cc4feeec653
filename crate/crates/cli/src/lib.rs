//! Experiment orchestration for the missing-data explanation benchmark:
//! configuration, the sweep runner, the identity-check suite, SVG plot
//! renderers, and the bundled dataset generators.

pub mod check;
pub mod config;
pub mod datasets;
pub mod explain;
pub mod plots;
pub mod runner;
