//! Core of the GraphQL traffic harvester: schema model, query analysis,
//! oracle derivation and evaluation, coverage, the query store and the
//! suite model.

pub mod coverage;
pub mod exec;
pub mod fixtures;
pub mod lexer;
pub mod oracle;
pub mod query;
pub mod report;
pub mod schema;
pub mod store;
pub mod suite;
pub mod synth;
pub mod value;
