//! Word-level machinery: automata and grammars whose letters are states.

pub mod cfg;
pub mod nfa;
pub mod regex;

use thiserror::Error;

pub use cfg::{bar_hillel_into, Cfg, Cnf, Sym};
pub use nfa::{Dfa, Graph, Letter, Nfa};
pub use regex::compile_regex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown letter \"{0}\"")]
    UnknownLetter(String),
    #[error("malformed regular expression: {0}")]
    Regex(String),
    #[error("malformed grammar: {0}")]
    Grammar(String),
}
