//! Finite workbench for canonical extensions of lattices and coherent
//! hyperdoctrines, predicate categories, sites of types and the chase.

pub mod lattice;
pub mod canext;
pub mod fincat;
pub mod report;
pub mod hyperdoctrine;
pub mod predcat;
pub mod sites;
pub mod logic;
pub mod enumerate;
