//! Measurement core for cross-lingual stereotype leakage.
//!
//! Everything here is pure computation over in-memory data: registries of
//! languages, trait pairs and social groups; aggregation of human survey
//! ratings; conversion of model probe records into association scores; a
//! random-intercept linear mixed model; and the leakage regression built on
//! top of it. File formats, rendering and the command-line driver live in the
//! `stereoleak` crate.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod flow;
pub mod leakage;
pub mod linalg;
pub mod mixedfx;
pub mod profile;
pub mod registry;
pub mod scoring;
pub mod stats;
pub mod survey;

pub use error::{Error, Result};
pub use profile::{AssociationScore, CellKey, ProfileCell, ScoreScale, Source, StereotypeProfile};
pub use registry::{
    GroupCategory, GroupId, Language, PairId, Pole, Registry, SocialGroup, TraitDimension,
    TraitPair,
};
