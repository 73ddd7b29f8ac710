//! Aligns sets of identifier strings into paradigms (null-padded, column-aligned
//! string sets) by greedy hierarchical merging, and discovers paradigm
//! dependencies: rules stating that the character aligned at a given column
//! determines another attribute's value.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`charspace`] — the glyph alphabet, the metric distance table and
//!   glyph-set diameters.
//! * [`paradigm`] — the paradigm type, the optimal two-paradigm DP merge and
//!   compaction to star-free regex form.
//! * [`bounds`] — size-interval bookkeeping, critical-set identification and
//!   single-pivot-star refinement.
//! * [`engine`] — the merge schedulers (single, pairwise baseline, pruning)
//!   and the merge tree.
//! * [`discovery`] — dependency evaluation with the four quality measures.
//! * [`synth`] — deterministic synthetic corpus generation.
//! * [`cli`] — corpus loading, command implementations and serialization.

pub mod bounds;
pub mod charspace;
pub mod cli;
pub mod discovery;
pub mod engine;
pub mod paradigm;
pub mod synth;

mod error;

pub use error::Error;
