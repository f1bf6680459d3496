//! Skipping simulation and skipping refinement for finite labeled
//! transition systems.

pub mod engine;
pub mod error;
pub mod exec;
pub mod lts;
pub mod matching;
pub mod models;
pub mod random;
pub mod refine;
pub mod relation;
pub mod selftest;
pub mod tv;
pub mod union;
pub mod wfsk;

pub use error::{Error, Result};
pub use exec::Exec;
pub use lts::{build_lts, reach, Label, Lts, ReachKind, StateId};
pub use relation::Relation;
