//! The textual system-definition format.
//!
//! Line comments start with `#`. Declarations:
//!
//! ```text
//! alphabet NAME = { s1, s2, ... }
//! spec NAME : SRC -> DST { w1 -> w1', ... }
//! sms NAME over ALPH stationary { M = [[e, ...], ...] I = [[0|1, ...], ...] }
//! sms NAME over ALPH explicit { level 0 { M = ... I = ... } level 1 { ... } }
//! graph NAME over ALPH { v1 -a-> v2 ... }
//! psse NAME { from=..., to=..., C=..., D=..., kappa=..., kappa'=...,
//!             P[2l]=..., P[2l+1]=..., Q[2l]=..., Q[2l+1]=...,
//!             X[2l]=..., X[2l+1]=..., Y[2l]=..., Y[2l+1]=... }
//! chain NAME = step1 . step2 . ...
//! ```
//!
//! `SRC`, `DST`, and `ALPH` are dot-separated alphabet names, one per letter
//! of a symbol. Words are juxtaposed symbols; tuple letters are written
//! `(x,y)`. A matrix entry is `0`, a word, or a `+`-joined formal sum.
//! Explicit psse steps replace the `2l`/`2l+1` templates with plain indices
//! `P[0]=..., P[1]=..., ...`.

use std::collections::BTreeSet;
use std::fmt;

use subshift::lgs::{LabeledGraph, LgsEdge};
use subshift::sms::Sms;
use subshift::sse::{ParitySeq, PsseChain, PsseStep};
use subshift::symbolic::{
    Alphabet, BitMatrix, FormalSum, Specification, Sym, SymbolicMatrix, Word,
};

/// A parse error with its position.
#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

pub type ParseResult<T> = std::result::Result<T, ParseError>;

/// A named collection of declarations in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemFile {
    pub alphabets: Vec<(String, Alphabet)>,
    pub specs: Vec<(String, SpecDecl)>,
    pub systems: Vec<(String, SmsDecl)>,
    pub graphs: Vec<(String, GraphDecl)>,
    pub steps: Vec<(String, StepDecl)>,
    pub chains: Vec<(String, ChainDecl)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecDecl {
    pub src: Vec<String>,
    pub dst: Vec<String>,
    pub spec: Specification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmsDecl {
    pub alphabets: Vec<String>,
    pub sms: Sms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDecl {
    pub alphabets: Vec<String>,
    pub vertex_names: Vec<String>,
    pub graph: LabeledGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDecl {
    pub from: String,
    pub to: String,
    pub c: String,
    pub d: String,
    pub kappa: String,
    pub kappa1: String,
    pub step: PsseStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDecl {
    pub step_names: Vec<String>,
    pub chain: PsseChain,
}

impl SystemFile {
    pub fn alphabet(&self, name: &str) -> Option<&Alphabet> {
        self.alphabets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
    }

    pub fn spec(&self, name: &str) -> Option<&SpecDecl> {
        self.specs.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn system(&self, name: &str) -> Option<&SmsDecl> {
        self.systems.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn graph(&self, name: &str) -> Option<&GraphDecl> {
        self.graphs.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn step(&self, name: &str) -> Option<&StepDecl> {
        self.steps.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn chain(&self, name: &str) -> Option<&ChainDecl> {
        self.chains.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    fn all_names(&self) -> impl Iterator<Item = &String> {
        self.alphabets
            .iter()
            .map(|(n, _)| n)
            .chain(self.specs.iter().map(|(n, _)| n))
            .chain(self.systems.iter().map(|(n, _)| n))
            .chain(self.graphs.iter().map(|(n, _)| n))
            .chain(self.steps.iter().map(|(n, _)| n))
            .chain(self.chains.iter().map(|(n, _)| n))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(usize),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Equals,
    Comma,
    Colon,
    Plus,
    Dot,
    Arrow,
    Dash,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Equals => write!(f, "="),
            Tok::Comma => write!(f, ","),
            Tok::Colon => write!(f, ":"),
            Tok::Plus => write!(f, "+"),
            Tok::Dot => write!(f, "."),
            Tok::Arrow => write!(f, "->"),
            Tok::Dash => write!(f, "-"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> ParseResult<Vec<(Tok, usize, usize)>> {
    let mut lx = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(&c) = lx.chars.peek() {
        let (line, col) = (lx.line, lx.col);
        match c {
            ' ' | '\t' | '\r' => {
                lx.bump();
            }
            '\n' => {
                lx.bump();
                lx.line += 1;
                lx.col = 1;
            }
            '#' => {
                while let Some(&c) = lx.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    lx.bump();
                }
            }
            '{' => lx.push_simple(&mut out, Tok::LBrace),
            '}' => lx.push_simple(&mut out, Tok::RBrace),
            '(' => lx.push_simple(&mut out, Tok::LParen),
            ')' => lx.push_simple(&mut out, Tok::RParen),
            '[' => lx.push_simple(&mut out, Tok::LBracket),
            ']' => lx.push_simple(&mut out, Tok::RBracket),
            '=' => lx.push_simple(&mut out, Tok::Equals),
            ',' => lx.push_simple(&mut out, Tok::Comma),
            ':' => lx.push_simple(&mut out, Tok::Colon),
            '+' => lx.push_simple(&mut out, Tok::Plus),
            '.' => lx.push_simple(&mut out, Tok::Dot),
            '-' => {
                lx.bump();
                if lx.chars.peek() == Some(&'>') {
                    lx.bump();
                    out.push((Tok::Arrow, line, col));
                } else {
                    out.push((Tok::Dash, line, col));
                }
            }
            c if c.is_ascii_digit() => {
                let mut n = 0usize;
                while let Some(&c) = lx.chars.peek() {
                    if let Some(d) = c.to_digit(10) {
                        n = n * 10 + d as usize;
                        lx.bump();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Num(n), line, col));
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = lx.chars.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), line, col));
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unexpected character {other:?}"),
                });
            }
        }
    }
    Ok(out)
}

impl<'a> Lexer<'a> {
    fn bump(&mut self) {
        self.chars.next();
        self.col += 1;
    }

    fn push_simple(&mut self, out: &mut Vec<(Tok, usize, usize)>, tok: Tok) {
        out.push((tok, self.line, self.col));
        self.bump();
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    file: SystemFile,
}

impl Parser {
    fn error<T>(&self, message: &str) -> ParseResult<T> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or_else(|| self.toks.last().map(|(_, l, c)| (*l, *c)).unwrap_or((1, 1)));
        Err(ParseError {
            line,
            col,
            message: message.to_string(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> ParseResult<Tok> {
        match self.toks.get(self.pos) {
            Some((t, _, _)) => {
                let t = t.clone();
                self.pos += 1;
                Ok(t)
            }
            None => self.error("unexpected end of input"),
        }
    }

    fn expect(&mut self, tok: Tok) -> ParseResult<()> {
        let got = self.next()?;
        if got == tok {
            Ok(())
        } else {
            self.pos -= 1;
            self.error(&format!("expected {tok}, found {got}"))
        }
    }

    fn ident(&mut self) -> ParseResult<String> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                self.error(&format!("expected an identifier, found {other}"))
            }
        }
    }

    fn number(&mut self) -> ParseResult<usize> {
        match self.next()? {
            Tok::Num(n) => Ok(n),
            other => {
                self.pos -= 1;
                self.error(&format!("expected a number, found {other}"))
            }
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn check_fresh_name(&mut self, name: &str) -> ParseResult<()> {
        if self.file.all_names().any(|n| n == name) {
            self.pos -= 1;
            return self.error(&format!("duplicate name {name}"));
        }
        Ok(())
    }

    /// Dot-separated alphabet names, resolved.
    fn alphabet_expr(&mut self) -> ParseResult<Vec<String>> {
        let mut names = vec![self.ident()?];
        while self.eat(&Tok::Dot) {
            names.push(self.ident()?);
        }
        for n in &names {
            if self.file.alphabet(n).is_none() {
                self.pos -= 1;
                return self.error(&format!("unknown alphabet {n}"));
            }
        }
        Ok(names)
    }

    fn resolve_shape(&self, names: &[String]) -> Vec<Alphabet> {
        names
            .iter()
            .map(|n| self.file.alphabet(n).expect("checked").clone())
            .collect()
    }

    /// One word matching the positional shape exactly.
    fn word(&mut self, shape: &[Alphabet]) -> ParseResult<Word> {
        let mut letters: Vec<Sym> = Vec::new();
        while letters.len() < shape.len() {
            match self.peek() {
                Some(Tok::LParen) => {
                    self.next()?;
                    loop {
                        let s = self.ident()?;
                        let pos = letters.len();
                        if pos >= shape.len() || !shape[pos].symbols.iter().any(|x| x.as_str() == s)
                        {
                            self.pos -= 1;
                            return self
                                .error(&format!("symbol {s} does not fit letter position {pos}"));
                        }
                        letters.push(Sym::new(&s));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                }
                Some(Tok::Ident(_)) => {
                    let s = self.ident()?;
                    let mut rest = s.as_str();
                    while !rest.is_empty() {
                        let pos = letters.len();
                        if pos >= shape.len() {
                            self.pos -= 1;
                            return self.error(&format!("word {s} is too long for its shape"));
                        }
                        // greedy longest-symbol match at this position
                        let mut candidates: Vec<&Sym> = shape[pos].symbols.iter().collect();
                        candidates.sort_by_key(|c| std::cmp::Reverse(c.as_str().len()));
                        match candidates.iter().find(|c| rest.starts_with(c.as_str())) {
                            Some(c) => {
                                letters.push((*c).clone());
                                rest = &rest[c.as_str().len()..];
                            }
                            None => {
                                self.pos -= 1;
                                return self.error(&format!(
                                    "cannot match {rest} against alphabet {}",
                                    shape[pos].name
                                ));
                            }
                        }
                    }
                }
                _ => return self.error("expected a word"),
            }
        }
        Ok(Word::from_syms(letters))
    }

    /// A formal-sum entry: `0` or `+`-joined words.
    fn entry(&mut self, shape: &[Alphabet]) -> ParseResult<FormalSum> {
        if self.peek() == Some(&Tok::Num(0)) {
            self.next()?;
            return Ok(FormalSum::zero());
        }
        let mut terms = vec![self.word(shape)?];
        while self.eat(&Tok::Plus) {
            terms.push(self.word(shape)?);
        }
        Ok(FormalSum::from_words(terms))
    }

    fn symbolic_matrix(&mut self, shape: &[Alphabet]) -> ParseResult<SymbolicMatrix> {
        self.expect(Tok::LBracket)?;
        let mut rows: Vec<Vec<FormalSum>> = Vec::new();
        loop {
            self.expect(Tok::LBracket)?;
            let mut row = vec![self.entry(shape)?];
            while self.eat(&Tok::Comma) {
                row.push(self.entry(shape)?);
            }
            self.expect(Tok::RBracket)?;
            rows.push(row);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return self.error("ragged matrix rows");
        }
        let entries: Vec<FormalSum> = rows.into_iter().flatten().collect();
        SymbolicMatrix::new(entries.len() / cols, cols, shape.len(), entries)
            .map_err(|e| self.err_here(&e.to_string()))
    }

    fn bit_matrix(&mut self) -> ParseResult<BitMatrix> {
        self.expect(Tok::LBracket)?;
        let mut rows: Vec<Vec<u8>> = Vec::new();
        loop {
            self.expect(Tok::LBracket)?;
            let mut row = vec![self.number()? as u8];
            while self.eat(&Tok::Comma) {
                row.push(self.number()? as u8);
            }
            self.expect(Tok::RBracket)?;
            rows.push(row);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return self.error("ragged matrix rows");
        }
        let bits: Vec<u8> = rows.into_iter().flatten().collect();
        BitMatrix::new(bits.len() / cols, cols, bits).map_err(|e| self.err_here(&e.to_string()))
    }

    fn err_here(&self, message: &str) -> ParseError {
        let (line, col) = self
            .toks
            .get(self.pos.saturating_sub(1))
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1));
        ParseError {
            line,
            col,
            message: message.to_string(),
        }
    }

    fn parse_alphabet(&mut self) -> ParseResult<()> {
        let name = self.ident()?;
        self.check_fresh_name(&name)?;
        self.expect(Tok::Equals)?;
        self.expect(Tok::LBrace)?;
        let mut symbols = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            symbols.push(self.ident()?);
        }
        self.expect(Tok::RBrace)?;
        let refs: Vec<&str> = symbols.iter().map(|s| s.as_str()).collect();
        let alph = Alphabet::new(&name, &refs).map_err(|e| self.err_here(&e.to_string()))?;
        self.file.alphabets.push((name, alph));
        Ok(())
    }

    fn parse_spec(&mut self) -> ParseResult<()> {
        let name = self.ident()?;
        self.check_fresh_name(&name)?;
        self.expect(Tok::Colon)?;
        let src = self.alphabet_expr()?;
        self.expect(Tok::Arrow)?;
        let dst = self.alphabet_expr()?;
        let src_shape = self.resolve_shape(&src);
        let dst_shape = self.resolve_shape(&dst);
        self.expect(Tok::LBrace)?;
        let mut pairs = Vec::new();
        loop {
            let from = self.word(&src_shape)?;
            self.expect(Tok::Arrow)?;
            let to = self.word(&dst_shape)?;
            pairs.push((from, to));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        let spec = Specification::new(pairs).map_err(|e| self.err_here(&e.to_string()))?;
        self.file.specs.push((name, SpecDecl { src, dst, spec }));
        Ok(())
    }

    fn parse_sms(&mut self) -> ParseResult<()> {
        let name = self.ident()?;
        self.check_fresh_name(&name)?;
        let over = self.ident()?;
        if over != "over" {
            self.pos -= 1;
            return self.error("expected `over`");
        }
        let alphabets = self.alphabet_expr()?;
        let shape = self.resolve_shape(&alphabets);
        let mode = self.ident()?;
        let sms = match mode.as_str() {
            "stationary" => {
                self.expect(Tok::LBrace)?;
                let (m, i) = self.level_body(&shape)?;
                self.expect(Tok::RBrace)?;
                Sms::stationary(m, i).map_err(|e| self.err_here(&e.to_string()))?
            }
            "explicit" => {
                self.expect(Tok::LBrace)?;
                let mut pairs = Vec::new();
                while self.peek() != Some(&Tok::RBrace) {
                    let level_kw = self.ident()?;
                    if level_kw != "level" {
                        self.pos -= 1;
                        return self.error("expected `level`");
                    }
                    let idx = self.number()?;
                    if idx != pairs.len() {
                        self.pos -= 1;
                        return self.error(&format!(
                            "levels must be consecutive: expected {}, found {idx}",
                            pairs.len()
                        ));
                    }
                    self.expect(Tok::LBrace)?;
                    pairs.push(self.level_body(&shape)?);
                    self.expect(Tok::RBrace)?;
                }
                self.expect(Tok::RBrace)?;
                Sms::explicit(pairs).map_err(|e| self.err_here(&e.to_string()))?
            }
            other => {
                self.pos -= 1;
                return self.error(&format!(
                    "expected `stationary` or `explicit`, found {other}"
                ));
            }
        };
        self.file.systems.push((name, SmsDecl { alphabets, sms }));
        Ok(())
    }

    fn level_body(&mut self, shape: &[Alphabet]) -> ParseResult<(SymbolicMatrix, BitMatrix)> {
        let mut m = None;
        let mut i = None;
        for _ in 0..2 {
            let which = self.ident()?;
            self.expect(Tok::Equals)?;
            match which.as_str() {
                "M" => m = Some(self.symbolic_matrix(shape)?),
                "I" => i = Some(self.bit_matrix()?),
                other => {
                    self.pos -= 2;
                    return self.error(&format!("expected M or I, found {other}"));
                }
            }
        }
        match (m, i) {
            (Some(m), Some(i)) => Ok((m, i)),
            _ => self.error("a level needs both M and I"),
        }
    }

    fn parse_graph(&mut self) -> ParseResult<()> {
        let name = self.ident()?;
        self.check_fresh_name(&name)?;
        let over = self.ident()?;
        if over != "over" {
            self.pos -= 1;
            return self.error("expected `over`");
        }
        let alphabets = self.alphabet_expr()?;
        let shape = self.resolve_shape(&alphabets);
        self.expect(Tok::LBrace)?;
        let mut vertex_names: Vec<String> = Vec::new();
        let mut edges_raw: Vec<(String, Word, String)> = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            let src = self.ident()?;
            self.expect(Tok::Dash)?;
            let label = self.word(&shape)?;
            self.expect(Tok::Arrow)?;
            let dst = self.ident()?;
            for v in [&src, &dst] {
                if !vertex_names.contains(v) {
                    vertex_names.push(v.clone());
                }
            }
            edges_raw.push((src, label, dst));
        }
        self.expect(Tok::RBrace)?;
        let index = |v: &str| vertex_names.iter().position(|x| x == v).expect("recorded");
        let edges: Vec<LgsEdge> = edges_raw
            .into_iter()
            .map(|(s, label, d)| LgsEdge {
                src: index(&s),
                dst: index(&d),
                label,
            })
            .collect();
        let graph = LabeledGraph {
            vertices: vertex_names.len(),
            edges,
            symbol_len: shape.len(),
        };
        self.file.graphs.push((
            name,
            GraphDecl {
                alphabets,
                vertex_names,
                graph,
            },
        ));
        Ok(())
    }

    fn matrix_index(&mut self) -> ParseResult<MatrixIndex> {
        self.expect(Tok::LBracket)?;
        let idx = match self.next()? {
            Tok::Num(2) if self.peek() == Some(&Tok::Ident("l".into())) => {
                // `2l` or `2l+1`
                self.next()?;
                if self.eat(&Tok::Plus) {
                    let one = self.number()?;
                    if one != 1 {
                        self.pos -= 1;
                        return self.error("expected `2l+1`");
                    }
                    MatrixIndex::Odd
                } else {
                    MatrixIndex::Even
                }
            }
            Tok::Num(n) => MatrixIndex::At(n),
            other => {
                self.pos -= 1;
                return self.error(&format!("expected an index, found {other}"));
            }
        };
        self.expect(Tok::RBracket)?;
        Ok(idx)
    }

    fn parse_psse(&mut self) -> ParseResult<()> {
        let name = self.ident()?;
        self.check_fresh_name(&name)?;
        self.expect(Tok::LBrace)?;
        let mut from = None;
        let mut to = None;
        let mut c_name = None;
        let mut d_name = None;
        let mut kappa = None;
        let mut kappa1 = None;
        let mut p: Vec<(MatrixIndex, SymbolicMatrix)> = Vec::new();
        let mut q: Vec<(MatrixIndex, SymbolicMatrix)> = Vec::new();
        let mut x: Vec<(MatrixIndex, BitMatrix)> = Vec::new();
        let mut y: Vec<(MatrixIndex, BitMatrix)> = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            let field = self.ident()?;
            match field.as_str() {
                "from" => {
                    self.expect(Tok::Equals)?;
                    from = Some(self.ident()?);
                }
                "to" => {
                    self.expect(Tok::Equals)?;
                    to = Some(self.ident()?);
                }
                "C" => {
                    self.expect(Tok::Equals)?;
                    c_name = Some(self.ident()?);
                }
                "D" => {
                    self.expect(Tok::Equals)?;
                    d_name = Some(self.ident()?);
                }
                "kappa" => {
                    self.expect(Tok::Equals)?;
                    kappa = Some(self.ident()?);
                }
                "kappa'" => {
                    self.expect(Tok::Equals)?;
                    kappa1 = Some(self.ident()?);
                }
                "P" | "Q" => {
                    let idx = self.matrix_index()?;
                    self.expect(Tok::Equals)?;
                    let alph_name = if field == "P" { &c_name } else { &d_name };
                    let alph_name = alph_name.clone().ok_or_else(|| {
                        self.err_here("C and D must be declared before the matrices")
                    })?;
                    let shape = vec![self
                        .file
                        .alphabet(&alph_name)
                        .ok_or_else(|| self.err_here(&format!("unknown alphabet {alph_name}")))?
                        .clone()];
                    let m = self.symbolic_matrix(&shape)?;
                    if field == "P" {
                        p.push((idx, m));
                    } else {
                        q.push((idx, m));
                    }
                }
                "X" | "Y" => {
                    let idx = self.matrix_index()?;
                    self.expect(Tok::Equals)?;
                    let m = self.bit_matrix()?;
                    if field == "X" {
                        x.push((idx, m));
                    } else {
                        y.push((idx, m));
                    }
                }
                other => {
                    self.pos -= 1;
                    return self.error(&format!("unknown psse field {other}"));
                }
            }
            self.eat(&Tok::Comma);
        }
        self.expect(Tok::RBrace)?;
        let from_name = from.ok_or_else(|| self.err_here("psse needs from=..."))?;
        let to_name = to.ok_or_else(|| self.err_here("psse needs to=..."))?;
        let c_name = c_name.ok_or_else(|| self.err_here("psse needs C=..."))?;
        let d_name = d_name.ok_or_else(|| self.err_here("psse needs D=..."))?;
        let kappa_name = kappa.ok_or_else(|| self.err_here("psse needs kappa=..."))?;
        let kappa1_name = kappa1.ok_or_else(|| self.err_here("psse needs kappa'=..."))?;
        let from_sys = self
            .file
            .system(&from_name)
            .ok_or_else(|| self.err_here(&format!("unknown system {from_name}")))?
            .sms
            .clone();
        let to_sys = self
            .file
            .system(&to_name)
            .ok_or_else(|| self.err_here(&format!("unknown system {to_name}")))?
            .sms
            .clone();
        let c = self
            .file
            .alphabet(&c_name)
            .ok_or_else(|| self.err_here(&format!("unknown alphabet {c_name}")))?
            .clone();
        let d = self
            .file
            .alphabet(&d_name)
            .ok_or_else(|| self.err_here(&format!("unknown alphabet {d_name}")))?
            .clone();
        let kappa0 = self
            .file
            .spec(&kappa_name)
            .ok_or_else(|| self.err_here(&format!("unknown spec {kappa_name}")))?
            .spec
            .clone();
        let kappa1_spec = self
            .file
            .spec(&kappa1_name)
            .ok_or_else(|| self.err_here(&format!("unknown spec {kappa1_name}")))?
            .spec
            .clone();
        let step = PsseStep {
            from: from_sys,
            to: to_sys,
            c,
            d,
            kappa0,
            kappa1: kappa1_spec,
            p: assemble(p).map_err(|m| self.err_here(&m))?,
            q: assemble(q).map_err(|m| self.err_here(&m))?,
            x: assemble(x).map_err(|m| self.err_here(&m))?,
            y: assemble(y).map_err(|m| self.err_here(&m))?,
        };
        self.file.steps.push((
            name,
            StepDecl {
                from: from_name,
                to: to_name,
                c: c_name,
                d: d_name,
                kappa: kappa_name,
                kappa1: kappa1_name,
                step,
            },
        ));
        Ok(())
    }

    fn parse_chain(&mut self) -> ParseResult<()> {
        let name = self.ident()?;
        self.check_fresh_name(&name)?;
        self.expect(Tok::Equals)?;
        let mut step_names = vec![self.ident()?];
        while self.eat(&Tok::Dot) {
            step_names.push(self.ident()?);
        }
        let mut steps = Vec::new();
        for n in &step_names {
            let decl = self
                .file
                .step(n)
                .ok_or_else(|| self.err_here(&format!("unknown psse step {n}")))?;
            steps.push(decl.step.clone());
        }
        let chain = PsseChain::new(steps).map_err(|e| self.err_here(&e.to_string()))?;
        self.file
            .chains
            .push((name, ChainDecl { step_names, chain }));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum MatrixIndex {
    Even,
    Odd,
    At(usize),
}

fn assemble<T>(items: Vec<(MatrixIndex, T)>) -> std::result::Result<ParitySeq<T>, String> {
    let templated = items
        .iter()
        .any(|(i, _)| matches!(i, MatrixIndex::Even | MatrixIndex::Odd));
    let explicit = items.iter().any(|(i, _)| matches!(i, MatrixIndex::At(_)));
    if templated && explicit {
        return Err("cannot mix 2l templates with explicit indices".into());
    }
    if templated {
        let mut even = None;
        let mut odd = None;
        for (i, m) in items {
            match i {
                MatrixIndex::Even => even = Some(m),
                MatrixIndex::Odd => odd = Some(m),
                MatrixIndex::At(_) => unreachable!(),
            }
        }
        match (even, odd) {
            (Some(even), Some(odd)) => Ok(ParitySeq::Stationary { even, odd }),
            _ => Err("stationary matrices need both [2l] and [2l+1] templates".into()),
        }
    } else {
        let mut items = items;
        items.sort_by_key(|(i, _)| *i);
        for (pos, (i, _)) in items.iter().enumerate() {
            if *i != MatrixIndex::At(pos) {
                return Err(format!(
                    "matrix indices must be consecutive from 0, found {i:?}"
                ));
            }
        }
        if items.is_empty() {
            return Err("explicit matrices need at least index 0".into());
        }
        Ok(ParitySeq::Explicit(
            items.into_iter().map(|(_, m)| m).collect(),
        ))
    }
}

/// Parses a full system file.
pub fn parse_file(text: &str) -> ParseResult<SystemFile> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        file: SystemFile::default(),
    };
    while p.peek().is_some() {
        let kw = p.ident()?;
        match kw.as_str() {
            "alphabet" => p.parse_alphabet()?,
            "spec" => p.parse_spec()?,
            "sms" => p.parse_sms()?,
            "graph" => p.parse_graph()?,
            "psse" => p.parse_psse()?,
            "chain" => p.parse_chain()?,
            other => {
                p.pos -= 1;
                return p.error(&format!("unknown declaration {other}"));
            }
        }
    }
    Ok(p.file)
}

/// A word parsed cyclically against an alphabet shape of one symbol.
pub fn parse_word(text: &str, shape: &[Alphabet]) -> std::result::Result<Word, String> {
    let toks = lex(text).map_err(|e| e.to_string())?;
    let mut letters: Vec<Sym> = Vec::new();
    let mut pos = 0usize;
    let tok_at = |pos: usize| -> std::result::Result<&Tok, String> {
        toks.get(pos)
            .map(|(t, _, _)| t)
            .ok_or_else(|| "unexpected end of word".to_string())
    };
    while pos < toks.len() {
        match tok_at(pos)? {
            Tok::LParen => {
                pos += 1;
                loop {
                    let s = match tok_at(pos)? {
                        Tok::Ident(s) => s.clone(),
                        other => return Err(format!("expected a symbol, found {other}")),
                    };
                    pos += 1;
                    let slot = &shape[letters.len() % shape.len()];
                    if !slot.symbols.iter().any(|x| x.as_str() == s) {
                        return Err(format!("symbol {s} is not in alphabet {}", slot.name));
                    }
                    letters.push(Sym::new(&s));
                    if *tok_at(pos)? == Tok::Comma {
                        pos += 1;
                    } else {
                        break;
                    }
                }
                if *tok_at(pos)? != Tok::RParen {
                    return Err("expected )".into());
                }
                pos += 1;
            }
            Tok::Ident(s) => {
                let s = s.clone();
                let mut rest = s.as_str();
                while !rest.is_empty() {
                    let slot = &shape[letters.len() % shape.len()];
                    let mut candidates: Vec<&Sym> = slot.symbols.iter().collect();
                    candidates.sort_by_key(|c| std::cmp::Reverse(c.as_str().len()));
                    match candidates.iter().find(|c| rest.starts_with(c.as_str())) {
                        Some(c) => {
                            letters.push((*c).clone());
                            rest = &rest[c.as_str().len()..];
                        }
                        None => {
                            return Err(format!(
                                "cannot match {rest} against alphabet {}",
                                slot.name
                            ))
                        }
                    }
                }
                pos += 1;
            }
            other => return Err(format!("unexpected token {other} in word")),
        }
    }
    if letters.is_empty() || !letters.len().is_multiple_of(shape.len()) {
        return Err(format!(
            "word has {} letters, not a multiple of the symbol length {}",
            letters.len(),
            shape.len()
        ));
    }
    Ok(Word::from_syms(letters))
}

fn write_word(out: &mut String, w: &Word, symbol_len: usize) {
    if symbol_len <= 1 {
        out.push_str(&w.to_string());
        return;
    }
    out.push_str(&w.display_grouped(symbol_len));
}

fn write_sum(out: &mut String, sum: &FormalSum, symbol_len: usize) {
    if sum.is_zero() {
        out.push('0');
        return;
    }
    for (i, t) in sum.terms().iter().enumerate() {
        if i > 0 {
            out.push('+');
        }
        write_word(out, t, symbol_len);
    }
}

fn write_symbolic_matrix(out: &mut String, m: &SymbolicMatrix, symbol_len: usize) {
    out.push('[');
    for r in 0..m.rows() {
        if r > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for c in 0..m.cols() {
            if c > 0 {
                out.push_str(", ");
            }
            write_sum(out, m.get(r, c), symbol_len);
        }
        out.push(']');
    }
    out.push(']');
}

fn write_bit_matrix(out: &mut String, m: &BitMatrix) {
    out.push('[');
    for r in 0..m.rows() {
        if r > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for c in 0..m.cols() {
            if c > 0 {
                out.push_str(", ");
            }
            out.push_str(&m.get(r, c).to_string());
        }
        out.push(']');
    }
    out.push(']');
}

fn write_parity_sym(
    out: &mut String,
    name: &str,
    seq: &ParitySeq<SymbolicMatrix>,
    symbol_len: usize,
) {
    match seq {
        ParitySeq::Stationary { even, odd } => {
            out.push_str(&format!("  {name}[2l] = "));
            write_symbolic_matrix(out, even, symbol_len);
            out.push('\n');
            out.push_str(&format!("  {name}[2l+1] = "));
            write_symbolic_matrix(out, odd, symbol_len);
            out.push('\n');
        }
        ParitySeq::Explicit(v) => {
            for (j, m) in v.iter().enumerate() {
                out.push_str(&format!("  {name}[{j}] = "));
                write_symbolic_matrix(out, m, symbol_len);
                out.push('\n');
            }
        }
    }
}

fn write_parity_bit(out: &mut String, name: &str, seq: &ParitySeq<BitMatrix>) {
    match seq {
        ParitySeq::Stationary { even, odd } => {
            out.push_str(&format!("  {name}[2l] = "));
            write_bit_matrix(out, even);
            out.push('\n');
            out.push_str(&format!("  {name}[2l+1] = "));
            write_bit_matrix(out, odd);
            out.push('\n');
        }
        ParitySeq::Explicit(v) => {
            for (j, m) in v.iter().enumerate() {
                out.push_str(&format!("  {name}[{j}] = "));
                write_bit_matrix(out, m);
                out.push('\n');
            }
        }
    }
}

/// Renders a file back into the grammar; `parse_file` of the result equals
/// the input structurally.
pub fn serialize(file: &SystemFile) -> String {
    let mut out = String::new();
    for (name, alph) in &file.alphabets {
        out.push_str(&format!("alphabet {name} = {{ "));
        for (i, s) in alph.symbols.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(s.as_str());
        }
        out.push_str(" }\n");
    }
    for (name, decl) in &file.specs {
        out.push_str(&format!(
            "spec {name} : {} -> {} {{ ",
            decl.src.join("."),
            decl.dst.join(".")
        ));
        for (i, (from, to)) in decl.spec.pairs().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_word(&mut out, from, from.len());
            out.push_str(" -> ");
            write_word(&mut out, to, to.len());
        }
        out.push_str(" }\n");
    }
    for (name, decl) in &file.systems {
        let symbol_len = decl.alphabets.len();
        out.push_str(&format!("sms {name} over {} ", decl.alphabets.join(".")));
        match decl.sms.edge_levels() {
            None => {
                out.push_str("stationary {\n  M = ");
                write_symbolic_matrix(&mut out, decl.sms.matrix(0).expect("level 0"), symbol_len);
                out.push_str("\n  I = ");
                write_bit_matrix(&mut out, decl.sms.bit(0).expect("level 0"));
                out.push_str("\n}\n");
            }
            Some(levels) => {
                out.push_str("explicit {\n");
                for l in 0..levels {
                    out.push_str(&format!("  level {l} {{\n    M = "));
                    write_symbolic_matrix(
                        &mut out,
                        decl.sms.matrix(l).expect("stored level"),
                        symbol_len,
                    );
                    out.push_str("\n    I = ");
                    write_bit_matrix(&mut out, decl.sms.bit(l).expect("stored level"));
                    out.push_str("\n  }\n");
                }
                out.push_str("}\n");
            }
        }
    }
    for (name, decl) in &file.graphs {
        out.push_str(&format!(
            "graph {name} over {} {{\n",
            decl.alphabets.join(".")
        ));
        for e in &decl.graph.edges {
            let mut label = String::new();
            write_word(&mut label, &e.label, decl.alphabets.len());
            out.push_str(&format!(
                "  {} -{label}-> {}\n",
                decl.vertex_names[e.src], decl.vertex_names[e.dst]
            ));
        }
        out.push_str("}\n");
    }
    for (name, decl) in &file.steps {
        out.push_str(&format!(
            "psse {name} {{\n  from = {}, to = {}, C = {}, D = {}, kappa = {}, kappa' = {}\n",
            decl.from, decl.to, decl.c, decl.d, decl.kappa, decl.kappa1
        ));
        write_parity_sym(&mut out, "P", &decl.step.p, 1);
        write_parity_sym(&mut out, "Q", &decl.step.q, 1);
        write_parity_bit(&mut out, "X", &decl.step.x);
        write_parity_bit(&mut out, "Y", &decl.step.y);
        out.push_str("}\n");
    }
    for (name, decl) in &file.chains {
        out.push_str(&format!("chain {name} = {}\n", decl.step_names.join(" . ")));
    }
    out
}

/// The realized symbols of a word as a displayable string, grouped by the
/// symbol length.
pub fn display_word(w: &Word, symbol_len: usize) -> String {
    if symbol_len <= 1 {
        w.to_string()
    } else {
        w.display_grouped(symbol_len)
    }
}

/// Renders a system as a deterministic report block.
pub fn render_system(sms: &Sms) -> String {
    let mut out = String::new();
    let symbol_len = sms.symbol_len();
    match sms.edge_levels() {
        None => {
            out.push_str("mode stationary\n");
            out.push_str(&format!("symbol-len {symbol_len}\n"));
            out.push_str("M = ");
            write_symbolic_matrix(&mut out, sms.matrix(0).expect("level 0"), symbol_len);
            out.push_str("\nI = ");
            write_bit_matrix(&mut out, sms.bit(0).expect("level 0"));
            out.push('\n');
        }
        Some(levels) => {
            out.push_str(&format!("mode explicit {levels}\n"));
            out.push_str(&format!("symbol-len {symbol_len}\n"));
            for l in 0..levels {
                out.push_str(&format!("level {l}\nM = "));
                write_symbolic_matrix(&mut out, sms.matrix(l).expect("stored"), symbol_len);
                out.push_str("\nI = ");
                write_bit_matrix(&mut out, sms.bit(l).expect("stored"));
                out.push('\n');
            }
        }
    }
    out
}

/// Renders a specification table on one line.
pub fn render_spec(spec: &Specification) -> String {
    let mut out = String::from("{ ");
    for (i, (from, to)) in spec.pairs().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_word(&mut out, from, from.len());
        out.push_str(" -> ");
        write_word(&mut out, to, to.len());
    }
    out.push_str(" }");
    out
}

/// Sorted realized symbols of a system, for reports.
pub fn realized_symbols(sms: &Sms) -> BTreeSet<Sym> {
    sms.symbols()
}
