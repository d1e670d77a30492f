//! Consistent query answering over inconsistent databases by reduction to
//! SAT and weighted partial MaxSAT.

pub mod bench;
pub mod datagen;
pub mod encoder;
pub mod engine;
pub mod formula;
pub mod instance;
pub mod loader;
pub mod oracle;
pub mod query;
pub mod schema;
pub mod solver;
pub mod value;
pub mod witness;
