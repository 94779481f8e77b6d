//! Extended SlicStan: a small probabilistic language with information-flow
//! level typing, program slicing ("shredding"), a conditional-independence
//! type system and compile-time elimination of discrete parameters.

pub mod analysis;
pub mod cli;
pub mod ast;
pub mod corpus;
pub mod dist;
pub mod elimgen;
pub mod flow;
pub mod interp;
pub mod lattice;
pub mod oracle;
pub mod parser;
pub mod pretty;
pub mod shred;
pub mod stan;
pub mod typing;
