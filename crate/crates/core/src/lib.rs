//! Exact type inference for XML update rewrite systems over unranked trees.

pub mod term;
pub mod word;
pub mod ha;
pub mod cfha;
pub mod rules;
pub mod closure;
pub mod policy;
pub mod workspace;
pub mod cli;
