//! Coherent theories: syntax, the chase, finite model families and the
//! checks relating a family to the definable subsets it realizes.

pub mod syntax;
pub mod models;
pub mod chase;
pub mod distill;
pub mod evaluation;
pub mod pipeline;
