//! Recursive-descent parser with block-level error recovery.
//!
//! Grammar:
//!
//! ```text
//! stmt      := block+ omega?
//! block     := '[' DIM ':' pair (',' pair)* ']'
//! pair      := KEY '=' VALUE
//! omega     := '[' OMEGA ':' directive (',' directive)* ']'
//! directive := DIM '>' DIM | DIM '||' DIM | DIM '~' WEIGHT
//! ```

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use crate::cybersign::{Dimension, SemanticValue};
use crate::ids::IdGenerator;

use super::ast::{
    is_slot_key, ComponentBlock, Cyberstatement, IntegrationDirective, IntegrationOperator, OmegaViolation,
};
use super::diagnostic::{Diagnostic, DiagnosticCode, Span};
use super::lexer::{lex_range, Token, TokenKind};

thread_local! {
    static IDS: RefCell<IdGenerator> = RefCell::new(IdGenerator::from_entropy());
}

/// Parses one statement, assigning a fresh random statement id.
pub fn parse(source: &str) -> Result<Cyberstatement, Vec<Diagnostic>> {
    IDS.with(|ids| parse_with(source, &mut ids.borrow_mut()))
}

/// Parses one statement, drawing its id from `ids`.
pub fn parse_with(source: &str, ids: &mut IdGenerator) -> Result<Cyberstatement, Vec<Diagnostic>> {
    parse_range(source, 0, source.len(), ids)
}

/// A `.cyl` document: statements separated by blank lines.
#[derive(Debug)]
pub struct ParsedStatement {
    /// 1-based line on which the paragraph starts.
    pub line: usize,
    pub result: Result<Cyberstatement, Vec<Diagnostic>>,
}

/// Splits `source` into blank-line separated paragraphs and parses each.
/// Paragraphs holding only comments are skipped. Spans are file-relative.
pub fn parse_document(source: &str, ids: &mut IdGenerator) -> Vec<ParsedStatement> {
    let mut out = Vec::new();
    let mut para_start: Option<usize> = None;
    let mut offset = 0;
    let mut flush = |start: usize, end: usize, out: &mut Vec<ParsedStatement>| {
        let (tokens, _) = lex_range(source, start, end);
        let only_comments = tokens.is_empty()
            && source[start..end]
                .lines()
                .all(|l| l.trim().is_empty() || l.trim_start().starts_with('#'));
        if !only_comments {
            out.push(ParsedStatement {
                line: Span::at(source, start, 0).line,
                result: parse_range(source, start, end, ids),
            });
        }
    };
    for line in source.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(start) = para_start.take() {
                flush(start, offset, &mut out);
            }
        } else if para_start.is_none() {
            para_start = Some(offset);
        }
        offset += line.len();
    }
    if let Some(start) = para_start {
        flush(start, source.len(), &mut out);
    }
    out
}

fn parse_range(
    source: &str,
    start: usize,
    end: usize,
    ids: &mut IdGenerator,
) -> Result<Cyberstatement, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex_range(source, start, end);
    let mut parser = Parser {
        source,
        tokens: &tokens,
        pos: 0,
        start,
        end,
        diags: Vec::new(),
        blocks: BTreeMap::new(),
        omega: None,
    };
    parser.statement();
    diags.append(&mut parser.diags);
    if diags.iter().any(Diagnostic::is_error) {
        diags.sort_by_key(|d| d.span.offset);
        return Err(diags);
    }
    Ok(Cyberstatement {
        blocks: parser.blocks,
        omega: parser.omega.map(|(o, _)| o).unwrap_or_default(),
        statement_id: ids.next_id(),
    })
}

struct Parser<'s, 't> {
    source: &'s str,
    tokens: &'t [Token],
    pos: usize,
    start: usize,
    end: usize,
    diags: Vec<Diagnostic>,
    blocks: BTreeMap<Dimension, ComponentBlock>,
    omega: Option<(IntegrationOperator, Vec<(IntegrationDirective, Span)>)>,
}

struct Stop;

impl Parser<'_, '_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_span(&self) -> Span {
        let last = self.tokens.last().map_or(self.start, |t| t.span.offset);
        let len = self.tokens.last().map_or(self.end - self.start, |t| t.span.len);
        Span::at(self.source, last, len)
    }

    fn error(&mut self, code: DiagnosticCode, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn expect(&mut self, want: &TokenKind, what: &str) -> Result<Span, Stop> {
        match self.peek() {
            Some(t) if t.kind.name() == want.name() => {
                let span = t.span;
                self.pos += 1;
                Ok(span)
            }
            Some(t) => {
                let (span, found) = (t.span, t.kind.to_string());
                if t.kind != TokenKind::BadValue {
                    self.error(
                        DiagnosticCode::UnexpectedToken,
                        span,
                        format!("expected {what}, found {found}"),
                    );
                }
                Err(Stop)
            }
            None => {
                let span = self.eof_span();
                self.error(
                    DiagnosticCode::UnexpectedEnd,
                    span,
                    format!("expected {what}, found end of input"),
                );
                Err(Stop)
            }
        }
    }

    /// Skips to just past the next `]`, or up to the next `[`.
    fn recover(&mut self) {
        while let Some(t) = self.peek() {
            match t.kind {
                TokenKind::RBracket => {
                    self.pos += 1;
                    return;
                }
                TokenKind::LBracket => return,
                _ => self.pos += 1,
            }
        }
    }

    fn statement(&mut self) {
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::LBracket {
                let (span, found) = (t.span, t.kind.to_string());
                if t.kind != TokenKind::BadValue {
                    self.error(
                        DiagnosticCode::UnexpectedToken,
                        span,
                        format!("expected `[`, found {found}"),
                    );
                }
                self.pos += 1;
                while self.peek().is_some_and(|t| t.kind != TokenKind::LBracket) {
                    self.pos += 1;
                }
                continue;
            }
            let open = t.span;
            self.pos += 1;
            let header = self.peek().cloned();
            let result = match header.as_ref().map(|t| &t.kind) {
                Some(TokenKind::Omega) => {
                    self.pos += 1;
                    self.omega_block(open)
                }
                Some(TokenKind::Dim(d)) => {
                    let (d, span) = (*d, header.as_ref().unwrap().span);
                    self.pos += 1;
                    self.block(d, span)
                }
                Some(other) => {
                    let (span, found) = (header.as_ref().unwrap().span, other.to_string());
                    self.error(
                        DiagnosticCode::UnexpectedToken,
                        span,
                        format!("expected dimension P, S, T, C or `+O`, found {found}"),
                    );
                    Err(Stop)
                }
                None => {
                    self.error(DiagnosticCode::UnexpectedEnd, open, "unterminated block");
                    Err(Stop)
                }
            };
            if result.is_err() {
                self.recover();
            }
        }
        if self.blocks.is_empty() && self.diags.is_empty() {
            let span = Span::at(self.source, self.start, self.end - self.start);
            self.error(
                DiagnosticCode::EmptyStatement,
                span,
                "statement has no dimension blocks",
            );
        }
        self.check_omega();
    }

    fn block(&mut self, dim: Dimension, dim_span: Span) -> Result<(), Stop> {
        self.expect(&TokenKind::Colon, "`:`")?;
        if let Some((_, _)) = &self.omega {
            self.error(
                DiagnosticCode::OmegaNotLast,
                dim_span,
                "dimension block after the integration operator",
            );
        }
        let duplicate = self.blocks.contains_key(&dim);
        if duplicate {
            self.error(
                DiagnosticCode::DuplicateDimensionBlock,
                dim_span,
                format!("second {dim} block in one statement"),
            );
        }
        let mut slots: IndexMap<String, SemanticValue> = IndexMap::new();
        let mut broken = false;
        loop {
            match self.pair(&mut slots) {
                Ok(()) => {}
                Err(Stop) => {
                    broken = true;
                    // skip to the next separator inside this block
                    while let Some(t) = self.peek() {
                        match t.kind {
                            TokenKind::Comma | TokenKind::RBracket | TokenKind::LBracket => break,
                            _ => self.pos += 1,
                        }
                    }
                }
            }
            match self.peek().map(|t| t.kind.clone()) {
                Some(TokenKind::Comma) => {
                    self.pos += 1;
                }
                Some(TokenKind::RBracket) => {
                    self.pos += 1;
                    break;
                }
                _ => {
                    self.expect(&TokenKind::RBracket, "`,` or `]`")?;
                }
            }
        }
        if slots.is_empty() && !broken {
            self.error(
                DiagnosticCode::EmptyBlock,
                dim_span,
                format!("{dim} block has no slots"),
            );
        }
        if !duplicate {
            self.blocks.insert(dim, ComponentBlock { dimension: dim, slots });
        }
        Ok(())
    }

    fn pair(&mut self, slots: &mut IndexMap<String, SemanticValue>) -> Result<(), Stop> {
        let (key, key_span) = match self.peek() {
            Some(Token {
                kind: TokenKind::Key(k),
                span,
            }) => (k.clone(), *span),
            _ => {
                self.expect(&TokenKind::Key(String::new()), "slot key")?;
                unreachable!("expect fails on a non-key token");
            }
        };
        self.pos += 1;
        if !is_slot_key(&key) {
            self.error(
                DiagnosticCode::InvalidKey,
                key_span,
                format!("slot key `{key}` must match [a-z][a-z0-9-]*"),
            );
        }
        self.expect(&TokenKind::Eq, "`=`")?;
        let value = match self.bump().cloned() {
            Some(Token {
                kind: TokenKind::Value(v),
                ..
            }) => Some(v),
            Some(Token {
                kind: TokenKind::BadValue,
                ..
            }) => None,
            Some(t) => {
                self.pos -= 1;
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    t.span,
                    format!("expected value, found {}", t.kind),
                );
                return Err(Stop);
            }
            None => {
                let span = self.eof_span();
                self.error(
                    DiagnosticCode::UnexpectedEnd,
                    span,
                    "expected value, found end of input",
                );
                return Err(Stop);
            }
        };
        if slots.contains_key(&key) {
            self.error(
                DiagnosticCode::DuplicateKey,
                key_span,
                format!("duplicate slot key `{key}`"),
            );
        } else if let Some(v) = value {
            slots.insert(key, v);
        }
        Ok(())
    }

    fn omega_block(&mut self, open: Span) -> Result<(), Stop> {
        if self.omega.is_some() {
            self.error(
                DiagnosticCode::DuplicateOmega,
                open,
                "second integration operator block",
            );
        }
        self.expect(&TokenKind::Colon, "`:`")?;
        let mut directives: Vec<(IntegrationDirective, Span)> = Vec::new();
        loop {
            match self.directive() {
                Ok(d) => directives.push(d),
                Err(Stop) => {
                    while let Some(t) = self.peek() {
                        match t.kind {
                            TokenKind::Comma | TokenKind::RBracket | TokenKind::LBracket => break,
                            _ => self.pos += 1,
                        }
                    }
                }
            }
            match self.peek().map(|t| t.kind.clone()) {
                Some(TokenKind::Comma) => self.pos += 1,
                Some(TokenKind::RBracket) => {
                    self.pos += 1;
                    break;
                }
                _ => {
                    self.expect(&TokenKind::RBracket, "`,` or `]`")?;
                }
            }
        }
        if self.omega.is_none() {
            // merge every `X~w` into one blend at the first blend's position
            let mut merged: Vec<(IntegrationDirective, Span)> = Vec::new();
            let mut blend_at: Option<usize> = None;
            for (d, span) in directives.iter().cloned() {
                match (d, blend_at) {
                    (IntegrationDirective::Blend(w), Some(i)) => {
                        let IntegrationDirective::Blend(acc) = &mut merged[i].0 else {
                            unreachable!()
                        };
                        for (dim, x) in w {
                            if acc.insert(dim, x).is_some() {
                                self.error(
                                    DiagnosticCode::ContradictoryDirectives,
                                    span,
                                    format!("two blend weights for {dim}"),
                                );
                            }
                        }
                    }
                    (d @ IntegrationDirective::Blend(_), None) => {
                        blend_at = Some(merged.len());
                        merged.push((d, span));
                    }
                    (d, _) => merged.push((d, span)),
                }
            }
            let op = IntegrationOperator::new(merged.iter().map(|(d, _)| d.clone()).collect());
            self.omega = Some((op, merged));
        }
        Ok(())
    }

    fn dim(&mut self) -> Result<(Dimension, Span), Stop> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Dim(d),
                span,
            }) => {
                let r = (*d, *span);
                self.pos += 1;
                Ok(r)
            }
            _ => {
                self.expect(&TokenKind::Dim(Dimension::P), "dimension")?;
                unreachable!("expect fails on a non-dimension token");
            }
        }
    }

    fn directive(&mut self) -> Result<(IntegrationDirective, Span), Stop> {
        let (a, a_span) = self.dim()?;
        let op = self.bump().cloned();
        let directive = match op.as_ref().map(|t| &t.kind) {
            Some(TokenKind::Prec) => {
                let (b, _) = self.dim()?;
                IntegrationDirective::Precedence { higher: a, lower: b }
            }
            Some(TokenKind::Par) => {
                let (b, _) = self.dim()?;
                IntegrationDirective::Parallel(a, b)
            }
            Some(TokenKind::Tilde) => match self.bump().cloned() {
                Some(Token {
                    kind: TokenKind::Value(SemanticValue::Number(w) | SemanticValue::Probability(w)),
                    span,
                }) => {
                    if w < 0.0 {
                        self.error(DiagnosticCode::InvalidBlend, span, "blend weight must be non-negative");
                    }
                    IntegrationDirective::Blend([(a, w)].into_iter().collect())
                }
                Some(t) => {
                    if t.kind != TokenKind::BadValue {
                        self.error(
                            DiagnosticCode::InvalidBlend,
                            t.span,
                            format!("expected blend weight, found {}", t.kind),
                        );
                    }
                    return Err(Stop);
                }
                None => {
                    let span = self.eof_span();
                    self.error(DiagnosticCode::UnexpectedEnd, span, "expected blend weight");
                    return Err(Stop);
                }
            },
            Some(other) => {
                let found = other.to_string();
                self.pos -= 1;
                let span = op.unwrap().span;
                self.error(
                    DiagnosticCode::UnexpectedToken,
                    span,
                    format!("expected `>`, `||` or `~`, found {found}"),
                );
                return Err(Stop);
            }
            None => {
                let span = self.eof_span();
                self.error(DiagnosticCode::UnexpectedEnd, span, "expected directive operator");
                return Err(Stop);
            }
        };
        let end = self.tokens[self.pos - 1].span.end();
        Ok((directive, Span::at(self.source, a_span.offset, end - a_span.offset)))
    }

    fn check_omega(&mut self) {
        let Some((op, spans)) = self.omega.clone() else { return };
        if op.is_empty() || self.blocks.is_empty() {
            return;
        }
        let present: BTreeSet<Dimension> = self.blocks.keys().copied().collect();
        // report per-directive problems at the directive's own span
        for (d, span) in &spans {
            let single = IntegrationOperator::new(vec![d.clone()]);
            match single.validate(&present) {
                Err(OmegaViolation::Degenerate(x)) => self.error(
                    DiagnosticCode::DegenerateDirective,
                    *span,
                    format!("directive relates {x} to itself"),
                ),
                Err(OmegaViolation::AbsentDimension(x)) => self.error(
                    DiagnosticCode::AbsentDimensionDirective,
                    *span,
                    format!("directive names {x}, which has no block in this statement"),
                ),
                _ => {}
            }
        }
        if self.diags.iter().any(|d| {
            matches!(
                d.code,
                DiagnosticCode::DegenerateDirective | DiagnosticCode::AbsentDimensionDirective
            )
        }) {
            return;
        }
        let whole = Span::at(
            self.source,
            spans[0].1.offset,
            spans.last().unwrap().1.end() - spans[0].1.offset,
        );
        match op.validate(&present) {
            Ok(()) => {}
            Err(OmegaViolation::Contradictory(a, b)) => self.error(
                DiagnosticCode::ContradictoryDirectives,
                whole,
                format!("directives on {a} and {b} contradict each other"),
            ),
            Err(OmegaViolation::Cyclic(dims)) => {
                let names: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                self.error(
                    DiagnosticCode::CyclicPrecedence,
                    whole,
                    format!("precedence cycle through {}", names.join(", ")),
                )
            }
            Err(OmegaViolation::InvalidBlend(msg)) => self.error(DiagnosticCode::InvalidBlend, whole, msg),
            Err(OmegaViolation::Degenerate(_) | OmegaViolation::AbsentDimension(_)) => {}
        }
    }
}
