//! Identification analysis for statistical models.
//!
//! A [`universe::Universe`] pairs a set of states with an estimand mapping
//! and an observation mapping. The crate decides whether the estimand is
//! identified from the observation, computes identification regions by
//! enumeration or linear programming, and classifies assumptions as
//! refutable or not.

pub mod analysis;
pub mod case_studies;
pub mod dsl;
pub mod error;
pub mod lp;
pub mod region;
pub mod relation;
pub mod universe;
pub mod value;

pub use error::{Error, Result};
pub use region::{Interval, Region};
pub use relation::{induce, BinaryRelation, PropertyReport};
pub use universe::{Assumption, State, Universe};
pub use value::{Quantizer, Value};
