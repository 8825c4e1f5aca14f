//! Scene-graph generation toolkit.
//!
//! This crate implements the full pipeline of an interaction-aware,
//! open-vocabulary scene-graph generator at fixture scale, with exact
//! reference semantics and no learning-framework dependency:
//!
//! - **Target generation** — parse captions into relation triplets, build
//!   bidirectional grounding prompts (forward `"subject predicate object"`
//!   and reverse `"object counter-predicate subject"`), ground them through
//!   a pluggable [`target_gen::Grounder`], and combine the two directions
//!   into scored [`TripletCandidate`]s.
//! - **Query selection** — visual/text relevance scoring with a geometric
//!   object/relation blend, plus interaction-guided top-`K` selection that
//!   reserves `L` slots for interaction-matched queries.
//! - **Assignment** — exact Hungarian matching over a configurable
//!   class/L1/GIoU cost, used to align predictions with targets.
//! - **Losses and distillation** — sigmoid focal, BCE, L1+GIoU box
//!   regression, and relation-distillation objectives (visual and
//!   relational), all with closed-form gradients verified against central
//!   finite differences.
//! - **Evaluation** — recall@K / mean-recall@K over base/novel splits with
//!   a product-scored, IoU-gated triplet matcher.
//!
//! Everything is deterministic: the only randomness enters through
//! explicitly seeded generators, so every CLI report and test fixture is
//! byte-reproducible.

pub mod assignment;
pub mod descent;
pub mod distillation;
pub mod error;
pub mod fixture;
pub mod geometry;
pub mod gradcheck;
pub mod losses;
pub mod metrics;
pub mod query_selection;
pub mod scenario;
pub mod scene_model;
pub mod target_gen;
pub mod types;

mod vecmath;

pub use error::{Error, Result};
pub use types::{
    BoundingBox, Edge, EdgeSplit, EmbeddingMatrix, Node, SceneGraph, TripletCandidate, Vocabulary,
};
