//! Four-Dimensional Synchronous Grammar: lexer, parser, AST and canonical printer.

mod ast;
mod diagnostic;
mod lexer;
mod order;
mod parser;
mod printer;

pub use ast::{
    is_slot_key, ComponentBlock, Cyberstatement, IntegrationDirective, IntegrationOperator, OmegaViolation,
    BLEND_TOLERANCE,
};
pub use diagnostic::{Diagnostic, DiagnosticCode, Severity, Span};
pub use lexer::{lex, lex_range, Token, TokenKind};
pub use order::{DimensionOrder, OrderError};
pub use parser::{parse, parse_document, parse_with, ParsedStatement};
pub use printer::{dims_list, print_block, print_canonical, print_directive, print_omega};
