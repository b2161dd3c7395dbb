//! Surface syntax: programs (`.dyna`), analysis specifications (`.dtype`),
//! and printing back to text.

mod ast;
mod format;
mod lexer;
mod parser;

pub use ast::*;
pub use format::{
    constraint_text, format_card_decl, format_program, format_prop_rule, format_rule, format_type,
    format_type_with, term_text, Style,
};
pub use parser::{
    parse_analysis_spec, parse_program, parse_rule, parse_simple_type, parse_symexpr, parse_term,
};

/// A syntax error with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}
