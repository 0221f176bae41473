// Negated comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Deterministic simulator and autonomy stack for a tracked in-pipe gamma
//! assay crawler.

pub mod executive;
pub mod localization;
pub mod radiometry;
pub mod report;
pub mod rng;
pub mod safeguarding;
pub mod sensors;
pub mod sim;
pub mod vehicle;
pub mod world;
