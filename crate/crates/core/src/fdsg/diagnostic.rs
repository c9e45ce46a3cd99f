use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Source location. `line`/`column` are 1-based and count characters;
/// `offset`/`len` are byte positions into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub length: usize,
    #[serde(skip)]
    pub offset: usize,
    #[serde(skip)]
    pub len: usize,
}

impl Span {
    pub fn at(source: &str, offset: usize, len: usize) -> Span {
        let offset = offset.min(source.len());
        let len = len.min(source.len() - offset);
        let before = &source[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        let column = source[line_start..offset].chars().count() + 1;
        let length = source[offset..offset + len].chars().count();
        Span {
            line,
            column,
            length,
            offset,
            len,
        }
    }

    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

/// Stable machine-readable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DiagnosticCode {
    LexError,
    UnexpectedToken,
    UnexpectedEnd,
    InvalidKey,
    InvalidValue,
    EmptyBlock,
    EmptyStatement,
    DuplicateDimensionBlock,
    DuplicateKey,
    DuplicateOmega,
    OmegaNotLast,
    DegenerateDirective,
    AbsentDimensionDirective,
    ContradictoryDirectives,
    CyclicPrecedence,
    InvalidBlend,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::LexError => "LexError",
            DiagnosticCode::UnexpectedToken => "UnexpectedToken",
            DiagnosticCode::UnexpectedEnd => "UnexpectedEnd",
            DiagnosticCode::InvalidKey => "InvalidKey",
            DiagnosticCode::InvalidValue => "InvalidValue",
            DiagnosticCode::EmptyBlock => "EmptyBlock",
            DiagnosticCode::EmptyStatement => "EmptyStatement",
            DiagnosticCode::DuplicateDimensionBlock => "DuplicateDimensionBlock",
            DiagnosticCode::DuplicateKey => "DuplicateKey",
            DiagnosticCode::DuplicateOmega => "DuplicateOmega",
            DiagnosticCode::OmegaNotLast => "OmegaNotLast",
            DiagnosticCode::DegenerateDirective => "DegenerateDirective",
            DiagnosticCode::AbsentDimensionDirective => "AbsentDimensionDirective",
            DiagnosticCode::ContradictoryDirectives => "ContradictoryDirectives",
            DiagnosticCode::CyclicPrecedence => "CyclicPrecedence",
            DiagnosticCode::InvalidBlend => "InvalidBlend",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    pub code: DiagnosticCode,
}

impl Diagnostic {
    pub fn error(code: DiagnosticCode, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            span,
            message: message.into(),
            code,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}[{}]: {}",
            self.span.line, self.span.column, self.code, self.message
        )
    }
}
