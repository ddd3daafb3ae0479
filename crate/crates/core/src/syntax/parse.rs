//! Hand-written parser for rules, facts and queries.
//!
//! ```text
//! rule  := ["[" id "]"] atoms "->" ["?" vars ":"] atoms "."
//! fact  := atom "."
//! query := "?(" [vars] ")" "<-" atoms "."
//! atom  := PRED "(" [terms] ")" | "true"
//! ```
//! `%` starts a comment running to the end of the line. Predicates start
//! with an uppercase letter; lowercase identifiers are variables in rules
//! and queries and constants in facts.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{Atom, Cq, Instance, ModelError, Predicate, Rule, RuleSet, Term, Ucq};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Option<PathBuf>,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(p) => write!(f, "{}:{}:{}", p.display(), self.line, self.column),
            None => write!(f, "{}:{}", self.line, self.column),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: predicate {name} used with arity {found}, earlier with arity {expected}")]
    ArityConflict {
        span: SourceSpan,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{span}: {source}")]
    Invalid {
        span: SourceSpan,
        #[source]
        source: ModelError,
    },
    #[error("{span}: facts must be ground, found variable-like identifier {name}")]
    NonGroundFact { span: SourceSpan, name: String },
}

impl ParseError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::ArityConflict { span, .. }
            | ParseError::Invalid { span, .. }
            | ParseError::NonGroundFact { span, .. } => span,
        }
    }

    /// Attaches a file name to the span.
    pub fn in_file(mut self, path: &Path) -> Self {
        let span = match &mut self {
            ParseError::Syntax { span, .. }
            | ParseError::ArityConflict { span, .. }
            | ParseError::Invalid { span, .. }
            | ParseError::NonGroundFact { span, .. } => span,
        };
        span.file = Some(path.to_path_buf());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Arrow,
    BackArrow,
    Question,
    Colon,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::Comma => "`,`",
            Tok::Dot => "`.`",
            Tok::Arrow => "`->`",
            Tok::BackArrow => "`<-`",
            Tok::Question => "`?`",
            Tok::Colon => "`:`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn span(line: usize, column: usize) -> SourceSpan {
    SourceSpan {
        file: None,
        line,
        column,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let here = span(line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '%' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let mut s = String::new();
            while chars
                .peek()
                .is_some_and(|&c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
            {
                s.push(bump(&mut chars));
            }
            out.push((Tok::Ident(s), here));
            continue;
        }
        bump(&mut chars);
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '?' => Tok::Question,
            ':' => Tok::Colon,
            '-' if chars.peek() == Some(&'>') => {
                bump(&mut chars);
                Tok::Arrow
            }
            '<' if chars.peek() == Some(&'-') => {
                bump(&mut chars);
                Tok::BackArrow
            }
            other => {
                return Err(ParseError::Syntax {
                    span: here,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, here));
    }
    out.push((Tok::Eof, span(line, col)));
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Rules,
    Facts,
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    mode: Mode,
    arities: HashMap<String, usize>,
}

impl Parser {
    fn new(text: &str, mode: Mode) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            mode,
            arities: HashMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> SourceSpan {
        self.toks[self.pos].1.clone()
    }

    fn next(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<SourceSpan, ParseError> {
        let (t, sp) = self.next();
        if t == want {
            Ok(sp)
        } else {
            Err(ParseError::Syntax {
                span: sp,
                message: format!("expected {want}, found {t}"),
            })
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn lower_ident(&mut self, what: &str) -> Result<(String, SourceSpan), ParseError> {
        let (t, sp) = self.next();
        match t {
            Tok::Ident(s) if s.starts_with(|c: char| c.is_ascii_lowercase()) => Ok((s, sp)),
            Tok::Ident(s) if self.mode == Mode::Facts => {
                Err(ParseError::NonGroundFact { span: sp, name: s })
            }
            other => Err(ParseError::Syntax {
                span: sp,
                message: format!("expected {what}, found {other}"),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let (name, _) = self.lower_ident("a term")?;
        Ok(match self.mode {
            Mode::Rules => Term::var(&name),
            Mode::Facts => Term::constant(&name),
        })
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let (t, sp) = self.next();
        let name = match t {
            Tok::Ident(s) if s == "true" => return Ok(Atom::top()),
            Tok::Ident(s) if s.starts_with(|c: char| c.is_ascii_uppercase()) => s,
            Tok::Ident(s) if self.mode == Mode::Facts && s.starts_with(|c: char| c.is_ascii_lowercase()) => {
                return Err(ParseError::Syntax {
                    span: sp,
                    message: format!("predicate names start with an uppercase letter, found `{s}`"),
                })
            }
            other => {
                return Err(ParseError::Syntax {
                    span: sp,
                    message: format!("expected an atom, found {other}"),
                })
            }
        };
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        match self.arities.get(&name) {
            Some(&a) if a != args.len() => {
                return Err(ParseError::ArityConflict {
                    span: sp,
                    name,
                    expected: a,
                    found: args.len(),
                })
            }
            _ => {
                self.arities.insert(name.clone(), args.len());
            }
        }
        Ok(Atom::new(Predicate::new(&name, args.len()), args))
    }

    fn atoms(&mut self) -> Result<Vec<Atom>, ParseError> {
        let mut out = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.next();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn var_list(&mut self, close: Tok) -> Result<Vec<Term>, ParseError> {
        let mut out = Vec::new();
        if *self.peek() == close {
            return Ok(out);
        }
        loop {
            let (name, _) = self.lower_ident("a variable")?;
            out.push(Term::var(&name));
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                return Ok(out);
            }
        }
    }

    fn rule(&mut self, index: usize) -> Result<Rule, ParseError> {
        let start = self.here();
        let mut id = format!("r{index}");
        if *self.peek() == Tok::LBrack {
            self.next();
            let (t, sp) = self.next();
            match t {
                Tok::Ident(s) => id = s,
                other => {
                    return Err(ParseError::Syntax {
                        span: sp,
                        message: format!("expected a rule label, found {other}"),
                    })
                }
            }
            self.expect(Tok::RBrack)?;
        }
        let body = self.atoms()?;
        self.expect(Tok::Arrow)?;
        let mut existentials = Vec::new();
        if *self.peek() == Tok::Question {
            self.next();
            existentials = self.var_list(Tok::Colon)?;
            self.expect(Tok::Colon)?;
        }
        let head = if *self.peek() == Tok::Dot {
            Vec::new()
        } else {
            self.atoms()?
        };
        self.expect(Tok::Dot)?;
        Rule::new(id, body, head, existentials).map_err(|source| ParseError::Invalid { span: start, source })
    }

    fn query(&mut self) -> Result<Cq, ParseError> {
        let start = self.here();
        self.expect(Tok::Question)?;
        self.expect(Tok::LParen)?;
        let answer = self.var_list(Tok::RParen)?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::BackArrow)?;
        let atoms = self.atoms()?;
        self.expect(Tok::Dot)?;
        Cq::new(atoms, answer).map_err(|source| ParseError::Invalid { span: start, source })
    }
}

/// Parses a rule file. Rules without a `[label]` get ids `r1, r2, …` by position.
pub fn parse_rules(text: &str) -> Result<RuleSet, ParseError> {
    let mut p = Parser::new(text, Mode::Rules)?;
    let mut rules = Vec::new();
    while !p.at_eof() {
        rules.push(p.rule(rules.len() + 1)?);
    }
    Ok(RuleSet::new(rules))
}

/// Parses ground facts; ⊤ is always present in the result.
pub fn parse_facts(text: &str) -> Result<Instance, ParseError> {
    let mut p = Parser::new(text, Mode::Facts)?;
    let mut inst = Instance::new();
    while !p.at_eof() {
        let a = p.atom()?;
        p.expect(Tok::Dot)?;
        inst.insert(a);
    }
    Ok(inst)
}

/// Parses exactly one query.
pub fn parse_query(text: &str) -> Result<Cq, ParseError> {
    let mut p = Parser::new(text, Mode::Rules)?;
    let q = p.query()?;
    if !p.at_eof() {
        return Err(ParseError::Syntax {
            span: p.here(),
            message: "trailing input after the query".into(),
        });
    }
    Ok(q)
}

/// Parses one or more queries of equal arity as a union. The union's answer
/// tuple is the first disjunct's.
pub fn parse_ucq(text: &str) -> Result<Ucq, ParseError> {
    let mut p = Parser::new(text, Mode::Rules)?;
    let start = p.here();
    let mut qs = vec![p.query()?];
    while !p.at_eof() {
        qs.push(p.query()?);
    }
    Ucq::new(qs[0].answer().to_vec(), qs).map_err(|source| ParseError::Invalid { span: start, source })
}
