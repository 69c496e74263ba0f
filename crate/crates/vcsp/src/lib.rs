//! Structural analysis toolkit for general-valued constraint satisfaction.
//!
//! The crate provides exact rational arithmetic extended with infinity,
//! valued structures over finite universes, an exact-rational simplex solver,
//! fractional-homomorphism machinery (improvement, equivalence, valued cores),
//! treewidth-style width measures, level-k Sherali-Adams relaxations with
//! gap-instance gadgets, and a search procedure driven by the relaxation.

pub mod cores;
pub mod error;
pub mod extrat;
pub mod improvement;
pub mod limits;
pub mod lp;
pub mod mappings;
pub mod search;
pub mod sherali;
pub mod structures;
pub mod width;

pub use error::Error;
pub use extrat::ExtRat;
pub use limits::Limits;
