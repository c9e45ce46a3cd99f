//! Context-sensitive tokenizer for FDSG source.
//!
//! What a run of characters means depends on the previous token: after `[`
//! it is a dimension letter, after `=` a value, after `:`/`,` a slot key (or a
//! dimension inside the integration block). Unicode operators and their ASCII
//! aliases produce the same token kinds.

use std::fmt;

use crate::cybersign::{greek_name, unquote_text, Dimension, SemanticValue};

use super::diagnostic::{Diagnostic, DiagnosticCode, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    LBracket,
    RBracket,
    Colon,
    Comma,
    Eq,
    /// `+O` or `⊕Ω`
    Omega,
    /// `>` or `≻`
    Prec,
    /// `||`, `∥` or `‖`
    Par,
    /// `~`, introduces a blend weight
    Tilde,
    Dim(Dimension),
    Key(String),
    Value(SemanticValue),
    /// A value run that failed to parse; a diagnostic was already emitted.
    BadValue,
}

impl TokenKind {
    /// Kind name without payload, for comparing token shapes.
    pub fn name(&self) -> &'static str {
        match self {
            TokenKind::LBracket => "LBRACKET",
            TokenKind::RBracket => "RBRACKET",
            TokenKind::Colon => "COLON",
            TokenKind::Comma => "COMMA",
            TokenKind::Eq => "EQ",
            TokenKind::Omega => "OMEGA",
            TokenKind::Prec => "PREC",
            TokenKind::Par => "PAR",
            TokenKind::Tilde => "TILDE",
            TokenKind::Dim(_) => "DIM",
            TokenKind::Key(_) => "KEY",
            TokenKind::Value(SemanticValue::Identifier(_)) => "IDENT",
            TokenKind::Value(SemanticValue::Text(_)) => "TEXT",
            TokenKind::Value(SemanticValue::Number(_)) => "NUMBER",
            TokenKind::Value(SemanticValue::Quantity { .. }) => "QUANTITY",
            TokenKind::Value(SemanticValue::Probability(_)) => "PROBABILITY",
            TokenKind::Value(SemanticValue::Reference(_)) => "REFERENCE",
            TokenKind::BadValue => "BADVALUE",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Dim(d) => write!(f, "DIM({d})"),
            TokenKind::Key(k) => write!(f, "KEY({k})"),
            TokenKind::Value(v) => write!(f, "{}({v})", self.name()),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Tokenizes `source`; fails with every lexical diagnostic found.
pub fn lex(source: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let (tokens, diags) = lex_range(source, 0, source.len());
    if diags.is_empty() {
        Ok(tokens)
    } else {
        Err(diags)
    }
}

/// Tokenizes `source[start..end]`, reporting spans relative to the whole
/// source. Never stops early: unrecognized characters become diagnostics and
/// are skipped.
pub fn lex_range(source: &str, start: usize, end: usize) -> (Vec<Token>, Vec<Diagnostic>) {
    Lexer {
        source,
        pos: start,
        end,
        tokens: Vec::new(),
        diags: Vec::new(),
        in_omega: false,
    }
    .run()
}

struct Lexer<'a> {
    source: &'a str,
    pos: usize,
    end: usize,
    tokens: Vec<Token>,
    diags: Vec<Diagnostic>,
    in_omega: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Expect {
    Header,
    Key,
    Value,
    DirectiveDim,
    Weight,
    Punct,
}

fn is_run_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/' | '+') || greek_name(c).is_some()
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.source[self.pos..self.end]
    }

    fn span(&self, offset: usize, len: usize) -> Span {
        Span::at(self.source, offset, len)
    }

    fn push(&mut self, kind: TokenKind, offset: usize, len: usize) {
        match kind {
            TokenKind::Omega => self.in_omega = true,
            TokenKind::RBracket => self.in_omega = false,
            _ => {}
        }
        let span = self.span(offset, len);
        self.tokens.push(Token { kind, span });
    }

    fn expect(&self) -> Expect {
        match self.tokens.last().map(|t| &t.kind) {
            Some(TokenKind::LBracket) => Expect::Header,
            Some(TokenKind::Eq) => Expect::Value,
            Some(TokenKind::Tilde) => Expect::Weight,
            Some(TokenKind::Prec | TokenKind::Par) => Expect::DirectiveDim,
            Some(TokenKind::Colon | TokenKind::Comma) if self.in_omega => Expect::DirectiveDim,
            Some(TokenKind::Colon | TokenKind::Comma) => Expect::Key,
            _ => Expect::Punct,
        }
    }

    fn run(mut self) -> (Vec<Token>, Vec<Diagnostic>) {
        while self.pos < self.end {
            let rest = self.rest();
            let c = rest.chars().next().expect("non-empty");
            let start = self.pos;
            if c.is_whitespace() {
                self.pos += c.len_utf8();
                continue;
            }
            if c == '#' {
                self.pos += rest.find('\n').unwrap_or(rest.len());
                continue;
            }
            let fixed = [
                ("⊕Ω", TokenKind::Omega),
                ("+O", TokenKind::Omega),
                ("||", TokenKind::Par),
                ("∥", TokenKind::Par),
                ("‖", TokenKind::Par),
                ("≻", TokenKind::Prec),
                (">", TokenKind::Prec),
                ("~", TokenKind::Tilde),
                ("[", TokenKind::LBracket),
                ("]", TokenKind::RBracket),
                (":", TokenKind::Colon),
                (",", TokenKind::Comma),
                ("=", TokenKind::Eq),
            ];
            let expect = self.expect();
            // `+O` only means omega right after `[`; elsewhere `+` is a value char
            if let Some((text, kind)) = fixed
                .iter()
                .find(|(text, kind)| rest.starts_with(text) && (*kind != TokenKind::Omega || expect == Expect::Header))
            {
                self.pos += text.len();
                self.push(kind.clone(), start, text.len());
                continue;
            }
            if c == '"' && expect == Expect::Value {
                match unquote_text(rest) {
                    Ok((s, used)) => {
                        self.pos += used;
                        self.push(TokenKind::Value(SemanticValue::Text(s)), start, used);
                    }
                    Err(e) => {
                        let line_end = rest.find('\n').unwrap_or(rest.len());
                        self.diags.push(Diagnostic::error(
                            DiagnosticCode::LexError,
                            self.span(start, line_end),
                            e.to_string(),
                        ));
                        self.pos += line_end;
                        self.push(TokenKind::BadValue, start, line_end);
                    }
                }
                continue;
            }
            let word_like = matches!(expect, Expect::Header | Expect::Key | Expect::DirectiveDim);
            let accept: fn(char) -> bool = if word_like { is_word_char } else { is_run_char };
            if !accept(c) {
                self.diags.push(Diagnostic::error(
                    DiagnosticCode::LexError,
                    self.span(start, c.len_utf8()),
                    format!("unrecognized character `{c}`"),
                ));
                self.pos += c.len_utf8();
                continue;
            }
            let len = rest.find(|ch: char| !accept(ch)).unwrap_or(rest.len());
            let word = &rest[..len];
            self.pos += len;
            let kind = match expect {
                Expect::Header | Expect::DirectiveDim => match word.parse::<Dimension>() {
                    Ok(d) => TokenKind::Dim(d),
                    Err(_) => TokenKind::Key(word.to_string()),
                },
                Expect::Key => TokenKind::Key(word.to_string()),
                Expect::Value | Expect::Weight | Expect::Punct => match SemanticValue::parse(word) {
                    Ok(v) => TokenKind::Value(v),
                    Err(e) => {
                        self.diags.push(Diagnostic::error(
                            DiagnosticCode::InvalidValue,
                            self.span(start, len),
                            format!("invalid value `{word}`: {e}"),
                        ));
                        TokenKind::BadValue
                    }
                },
            };
            self.push(kind, start, len);
        }
        (self.tokens, self.diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        lex(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn simple_block() {
        assert_eq!(
            kinds("[P: sector=A7]"),
            vec![
                TokenKind::LBracket,
                TokenKind::Dim(Dimension::P),
                TokenKind::Colon,
                TokenKind::Key("sector".into()),
                TokenKind::Eq,
                TokenKind::Value(SemanticValue::Identifier("A7".into())),
                TokenKind::RBracket,
            ]
        );
    }

    #[test]
    fn unicode_and_ascii_operators_match() {
        assert_eq!(kinds("[⊕Ω: P≻S, T∥C]"), kinds("[+O: P>S, T||C]"));
        assert_eq!(kinds("[⊕Ω: T‖C]"), kinds("[+O: T||C]"));
        let names: Vec<_> = kinds("[+O: P>S, T||C, P~0.7]").iter().map(|k| k.name()).collect();
        assert_eq!(
            names,
            [
                "LBRACKET",
                "OMEGA",
                "COLON",
                "DIM",
                "PREC",
                "DIM",
                "COMMA",
                "DIM",
                "PAR",
                "DIM",
                "COMMA",
                "DIM",
                "TILDE",
                "PROBABILITY",
                "RBRACKET"
            ]
        );
    }

    #[test]
    fn invalid_character_reports_its_span() {
        let src = "[P: x=§]";
        let diags = lex(src).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::LexError);
        assert_eq!(&src[diags[0].span.offset..diags[0].span.end()], "§");
        assert_eq!((diags[0].span.line, diags[0].span.column), (1, 7));
    }

    #[test]
    fn comments_and_text() {
        let toks = kinds("# header\n[S: note=\"a, b]\"] # trailing");
        assert_eq!(toks[5], TokenKind::Value(SemanticValue::Text("a, b]".into())));
        assert_eq!(toks.len(), 7);
    }

    #[test]
    fn bad_values_keep_going() {
        let (toks, diags) = lex_range("[P: a=5km, b=1]", 0, 15);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::InvalidValue);
        assert!(toks.iter().any(|t| t.kind == TokenKind::BadValue));
        assert!(toks
            .iter()
            .any(|t| t.kind == TokenKind::Value(SemanticValue::Number(1.0))));
    }
}
