//! Developer expertise embeddings.
//!
//! Evidence about a developer (repository descriptions, issue text and the
//! libraries imported in their commits) is mined, cleaned into token
//! documents, embedded with paragraph vectors and fed to a role classifier.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod imports;
pub mod jsonl;
pub mod miner;
pub mod pipelines;
pub mod pv;
pub mod synthetic;
