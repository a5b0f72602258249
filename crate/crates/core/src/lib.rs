//! Machine-learned variable-ordering selection for cylindrical algebraic
//! decomposition.
//!
//! The crate covers the whole desk-scale pipeline: exact polynomial
//! systems ([`polysys`]), a projection-based cost oracle that labels each
//! system with its cheapest variable ordering ([`cadcost`]), feature
//! extraction and standardization ([`features`]), datasets with
//! group-aware splits ([`dataset`]), symmetry augmentation over variable
//! permutations ([`augment`]), five native classifiers ([`models`]) and an
//! experiment harness measuring cross-dataset generalization
//! ([`pipeline`]).

pub mod augment;
pub mod cadcost;
pub mod dataset;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod polysys;
pub mod seeding;
