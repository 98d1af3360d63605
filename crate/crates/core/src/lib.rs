//! Model-based training of manual maintenance procedures.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the structural plant model and its pure state semantics.
//! * [`format`] parses and serializes plant models and lesson scripts.
//! * [`procedure`] folds lesson steps into machine states and validates
//!   ordering constraints.
//! * [`render`] emits DOT and SVG diagrams of a state with step highlights.
//! * [`protocol`] is the line-based session protocol and session state machine.
//! * [`eval`] scores recall trials and audits questionnaire statistics.
//!
//! All numeric types are generic over [`Scalar`]; the aliases below fix the
//! scalar to `f64` (the default) or to exact rationals.

pub mod eval;
pub mod format;
pub mod model;
pub mod procedure;
pub mod protocol;
pub mod render;
pub mod scalar;

pub use scalar::{Exact, Scalar};

/// Default floating-point scalar.
pub type Real = f64;

pub type Model = model::PlantModel<Real>;
pub type State = model::ModelState<Real>;
pub type Op = model::ModelOp<Real>;
pub type Lesson = procedure::Lesson<Real>;
pub type Step = procedure::Step<Real>;

pub type ExactModel = model::PlantModel<Exact>;
pub type ExactState = model::ModelState<Exact>;
pub type ExactLesson = procedure::Lesson<Exact>;
pub type ExactStats = eval::StatTriple<Exact>;
