//! Concrete syntax: domain files, goals, controlled-vocabulary queries, and
//! answer rendering.

mod domain;
mod query;
mod render;
mod vocab;

pub use domain::{
    parse_action, parse_domain, parse_domain_with_learned, parse_goal, parse_learned, serialize_domain,
    serialize_learned,
};
pub use query::{parse_query, Query, QueryKind, GRAMMARS};
pub use render::{join_clauses, render, render_action, render_clauses, render_literal, Clause};
pub use vocab::{bare, VocabTable};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("sort error in {axiom}: {message}")]
    Sort { axiom: String, message: String },
    #[error("domain declares no sorts")]
    EmptySignature,
    #[error("unrecognized query: {0}")]
    UnrecognizedQuery(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("no template for {0}")]
    MissingTemplate(String),
}
