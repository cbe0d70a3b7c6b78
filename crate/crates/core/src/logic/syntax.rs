//! Concrete syntax for coherent theories (`.chr` files).
//!
//! ```text
//! theory   := item*
//! item     := "sort" IDENT ("," IDENT)* ";"
//!           | "rel" IDENT [":" IDENT ("," IDENT)*] ";"
//!           | "func" IDENT ":" [IDENT ("," IDENT)*] "->" IDENT ";"
//!           | sequent ";"
//! sequent  := [context "|"] formula "|-" formula
//! context  := binder ("," binder)*          binder := IDENT [":" IDENT]
//! formula  := disj
//! disj     := conj ("or" conj)*
//! conj     := unit ("and" unit)*
//! unit     := "true" | "false" | "(" formula ")"
//!           | "exists" binder ("," binder)* "." formula
//!           | term "=" term | IDENT ["(" term ("," term)* ")"]
//! term     := IDENT ["(" term ("," term)* ")"]
//! ```
//!
//! `and` binds tighter than `or`, both associate to the left, and the body
//! of `exists` extends as far right as possible, so
//! `exists y. P(y) or Q(y)` is `exists y. (P(y) or Q(y))`. `#` starts a
//! comment. A missing context is the free variables in order of first use.
//! Sorts left off binders are inferred from argument positions; with a single
//! declared sort they default to it.

use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Byte range in the source. Equality ignores spans so that parsed and
/// reprinted trees compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}
impl Eq for Span {}

impl Span {
    fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end }
    }
}

pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Parse { msg: String, span: Span, line: usize, col: usize },
    #[error("{line}:{col}: sort error: {msg}")]
    Sort { msg: String, span: Span, line: usize, col: usize },
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Parse { span, .. } | SyntaxError::Sort { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String, Span),
    App(String, Vec<Term>, Span),
}

impl Term {
    pub fn span(&self) -> Span {
        match self {
            Term::Var(_, s) | Term::App(_, _, s) => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binder {
    pub name: String,
    pub sort: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True(Span),
    False(Span),
    Eq(Term, Term, Span),
    Atom(String, Vec<Term>, Span),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(Vec<Binder>, Box<Formula>, Span),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentAst {
    pub ctx: Option<Vec<Binder>>,
    pub lhs: Formula,
    pub rhs: Formula,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Sort(Vec<String>, Span),
    Rel { name: String, args: Vec<String>, span: Span },
    Func { name: String, args: Vec<String>, ret: String, span: Span },
    Axiom(SequentAst),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TheoryAst {
    pub items: Vec<Item>,
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Semi,
    Bar,
    Turnstile,
    Equals,
    Dot,
    Arrow,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Bar => "`|`".into(),
        Tok::Turnstile => "`|-`".into(),
        Tok::Equals => "`=`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::Eof => "end of input".into(),
    }
}

const KEYWORDS: [&str; 8] = ["true", "false", "and", "or", "exists", "sort", "rel", "func"];

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, SyntaxError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b':' => Tok::Colon,
            b';' => Tok::Semi,
            b'=' => Tok::Equals,
            b'.' => Tok::Dot,
            b'|' if b.get(i + 1) == Some(&b'-') => {
                i += 1;
                Tok::Turnstile
            }
            b'|' => Tok::Bar,
            b'-' if b.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < b.len() && (b[i + 1].is_ascii_alphanumeric() || b[i + 1] == b'_' || b[i + 1] == b'\'') {
                    i += 1;
                }
                Tok::Ident(src[start..=i].to_string())
            }
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(parse_err(src, format!("unexpected character {ch:?}"), Span { start, end: i + ch.len_utf8() }));
            }
        };
        i += 1;
        out.push((tok, Span { start, end: i }));
    }
    out.push((Tok::Eof, Span { start: b.len(), end: b.len() }));
    Ok(out)
}

fn parse_err(src: &str, msg: String, span: Span) -> SyntaxError {
    let (line, col) = line_col(src, span.start);
    SyntaxError::Parse { msg, span, line, col }
}

fn sort_err(src: &str, msg: String, span: Span) -> SyntaxError {
    let (line, col) = line_col(src, span.start);
    SyntaxError::Sort { msg, span, line, col }
}

// ---------------------------------------------------------------- parser

struct Parser<'s> {
    src: &'s str,
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }
    fn span(&self) -> Span {
        self.toks[self.pos].1
    }
    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].1
    }
    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }
    fn fail<T>(&self, what: &str) -> PResult<T> {
        Err(parse_err(self.src, format!("expected {what}, found {}", describe(self.peek())), self.span()))
    }
    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            self.fail(&describe(&t))
        }
    }
    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            _ => self.fail("an identifier"),
        }
    }

    fn theory(&mut self) -> PResult<TheoryAst> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            items.push(self.item()?);
        }
        Ok(TheoryAst { items })
    }

    fn sort_list(&mut self) -> PResult<Vec<String>> {
        let mut v = vec![self.ident()?.0];
        while *self.peek() == Tok::Comma {
            self.bump();
            v.push(self.ident()?.0);
        }
        Ok(v)
    }

    fn item(&mut self) -> PResult<Item> {
        let start = self.span();
        if self.is_kw("sort") {
            self.bump();
            let names = self.sort_list()?;
            let end = self.expect(Tok::Semi)?;
            return Ok(Item::Sort(names, start.to(end)));
        }
        if self.is_kw("rel") {
            self.bump();
            let name = self.ident()?.0;
            let mut args = Vec::new();
            if *self.peek() == Tok::Colon {
                self.bump();
                args = self.sort_list()?;
            }
            let end = self.expect(Tok::Semi)?;
            return Ok(Item::Rel { name, args, span: start.to(end) });
        }
        if self.is_kw("func") {
            self.bump();
            let name = self.ident()?.0;
            self.expect(Tok::Colon)?;
            let args = if *self.peek() == Tok::Arrow { Vec::new() } else { self.sort_list()? };
            self.expect(Tok::Arrow)?;
            let ret = self.ident()?.0;
            let end = self.expect(Tok::Semi)?;
            return Ok(Item::Func { name, args, ret, span: start.to(end) });
        }
        let s = self.sequent()?;
        self.expect(Tok::Semi)?;
        Ok(Item::Axiom(s))
    }

    fn binder(&mut self) -> PResult<Binder> {
        let (name, sp) = self.ident()?;
        if *self.peek() == Tok::Colon {
            self.bump();
            let (sort, ssp) = self.ident()?;
            return Ok(Binder { name, sort: Some(sort), span: sp.to(ssp) });
        }
        Ok(Binder { name, sort: None, span: sp })
    }

    fn starts_context(&self) -> bool {
        match self.peek() {
            Tok::Bar => true,
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                matches!(self.peek_at(1), Tok::Colon | Tok::Comma | Tok::Bar)
            }
            _ => false,
        }
    }

    fn sequent(&mut self) -> PResult<SequentAst> {
        let start = self.span();
        let ctx = if self.starts_context() {
            let mut bs = Vec::new();
            if *self.peek() != Tok::Bar {
                bs.push(self.binder()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    bs.push(self.binder()?);
                }
            }
            self.expect(Tok::Bar)?;
            Some(bs)
        } else {
            None
        };
        let lhs = self.formula()?;
        self.expect(Tok::Turnstile)?;
        let rhs = self.formula()?;
        Ok(SequentAst { ctx, lhs, rhs, span: start.to(self.prev_span()) })
    }

    fn formula(&mut self) -> PResult<Formula> {
        let mut f = self.conj()?;
        while self.is_kw("or") {
            self.bump();
            let g = self.conj()?;
            f = Formula::Or(Box::new(f), Box::new(g));
        }
        Ok(f)
    }

    fn conj(&mut self) -> PResult<Formula> {
        let mut f = self.unit()?;
        while self.is_kw("and") {
            self.bump();
            let g = self.unit()?;
            f = Formula::And(Box::new(f), Box::new(g));
        }
        Ok(f)
    }

    fn unit(&mut self) -> PResult<Formula> {
        let start = self.span();
        if self.is_kw("true") {
            return Ok(Formula::True(self.bump().1));
        }
        if self.is_kw("false") {
            return Ok(Formula::False(self.bump().1));
        }
        if self.is_kw("exists") {
            self.bump();
            let mut bs = vec![self.binder()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                bs.push(self.binder()?);
            }
            self.expect(Tok::Dot)?;
            let body = self.formula()?;
            return Ok(Formula::Exists(bs, Box::new(body), start.to(self.prev_span())));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        let t = self.term()?;
        if *self.peek() == Tok::Equals {
            self.bump();
            let u = self.term()?;
            let sp = t.span().to(u.span());
            return Ok(Formula::Eq(t, u, sp));
        }
        Ok(match t {
            Term::Var(name, sp) => Formula::Atom(name, Vec::new(), sp),
            Term::App(name, args, sp) => Formula::Atom(name, args, sp),
        })
    }

    fn term(&mut self) -> PResult<Term> {
        let (name, sp) = match self.ident() {
            Ok(x) => x,
            Err(_) => return self.fail("a formula or term"),
        };
        if *self.peek() != Tok::LParen {
            return Ok(Term::Var(name, sp));
        }
        self.bump();
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        let end = self.expect(Tok::RParen)?;
        Ok(Term::App(name, args, sp.to(end)))
    }
}

pub fn parse_ast(src: &str) -> Result<TheoryAst, SyntaxError> {
    let toks = lex(src)?;
    Parser { src, toks, pos: 0 }.theory()
}

/// A lone formula, for tests and the CLI.
pub fn parse_formula(src: &str) -> Result<Formula, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.fail("end of input");
    }
    Ok(f)
}

// ---------------------------------------------------------------- printer

fn print_term(t: &Term, out: &mut String) {
    match t {
        Term::Var(x, _) => out.push_str(x),
        Term::App(f, args, _) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_term(a, out);
            }
            out.push(')');
        }
    }
}

fn print_binders(bs: &[Binder], out: &mut String) {
    for (i, b) in bs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&b.name);
        if let Some(s) = &b.sort {
            out.push(':');
            out.push_str(s);
        }
    }
}

// Levels: 0 anywhere, 1 operand of `or`, 2 operand of `and`. `exists` is
// wrapped whenever it is an operand.
fn print_formula_at(f: &Formula, level: u8, right: bool, out: &mut String) {
    match f {
        Formula::True(_) => out.push_str("true"),
        Formula::False(_) => out.push_str("false"),
        Formula::Eq(a, b, _) => {
            print_term(a, out);
            out.push_str(" = ");
            print_term(b, out);
        }
        Formula::Atom(r, args, _) => {
            out.push_str(r);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_term(a, out);
                }
                out.push(')');
            }
        }
        Formula::Or(a, b) => {
            let wrap = level == 2 || (level == 1 && right);
            if wrap {
                out.push('(');
            }
            print_formula_at(a, 1, false, out);
            out.push_str(" or ");
            print_formula_at(b, 1, true, out);
            if wrap {
                out.push(')');
            }
        }
        Formula::And(a, b) => {
            let wrap = level == 2 && right;
            if wrap {
                out.push('(');
            }
            print_formula_at(a, 2, false, out);
            out.push_str(" and ");
            print_formula_at(b, 2, true, out);
            if wrap {
                out.push(')');
            }
        }
        Formula::Exists(bs, body, _) => {
            if level > 0 {
                out.push('(');
            }
            out.push_str("exists ");
            print_binders(bs, out);
            out.push_str(". ");
            print_formula_at(body, 0, false, out);
            if level > 0 {
                out.push(')');
            }
        }
    }
}

pub fn print_formula(f: &Formula) -> String {
    let mut s = String::new();
    print_formula_at(f, 0, false, &mut s);
    s
}

/// Every connective parenthesized; used by golden files to pin precedence.
pub fn print_formula_full(f: &Formula) -> String {
    let mut out = String::new();
    fn go(f: &Formula, out: &mut String) {
        match f {
            Formula::And(a, b) | Formula::Or(a, b) => {
                out.push('(');
                go(a, out);
                out.push_str(if matches!(f, Formula::And(..)) { " and " } else { " or " });
                go(b, out);
                out.push(')');
            }
            Formula::Exists(bs, body, _) => {
                out.push_str("(exists ");
                print_binders(bs, out);
                out.push_str(". ");
                go(body, out);
                out.push(')');
            }
            _ => print_formula_at(f, 0, false, out),
        }
    }
    go(f, &mut out);
    out
}

pub fn print_sequent(s: &SequentAst) -> String {
    let mut out = String::new();
    if let Some(bs) = &s.ctx {
        print_binders(bs, &mut out);
        out.push_str(if bs.is_empty() { "| " } else { " | " });
    }
    print_formula_at(&s.lhs, 0, false, &mut out);
    out.push_str(" |- ");
    print_formula_at(&s.rhs, 0, false, &mut out);
    out
}

pub fn print_theory(t: &TheoryAst) -> String {
    let mut out = String::new();
    for it in &t.items {
        match it {
            Item::Sort(names, _) => out.push_str(&format!("sort {};\n", names.join(", "))),
            Item::Rel { name, args, .. } if args.is_empty() => out.push_str(&format!("rel {name};\n")),
            Item::Rel { name, args, .. } => out.push_str(&format!("rel {name} : {};\n", args.join(", "))),
            Item::Func { name, args, ret, .. } if args.is_empty() => out.push_str(&format!("func {name} : -> {ret};\n")),
            Item::Func { name, args, ret, .. } => out.push_str(&format!("func {name} : {} -> {ret};\n", args.join(", "))),
            Item::Axiom(s) => {
                out.push_str(&print_sequent(s));
                out.push_str(";\n");
            }
        }
    }
    out
}

// ---------------------------------------------------------------- elaboration

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub sorts: Vec<String>,
    /// name, argument sorts, result sort
    pub funcs: Vec<(String, Vec<usize>, usize)>,
    /// name, argument sorts
    pub rels: Vec<(String, Vec<usize>)>,
}

impl Signature {
    pub fn sort(&self, name: &str) -> Option<usize> {
        self.sorts.iter().position(|s| s == name)
    }
    pub fn func(&self, name: &str) -> Option<usize> {
        self.funcs.iter().position(|f| f.0 == name)
    }
    pub fn rel(&self, name: &str) -> Option<usize> {
        self.rels.iter().position(|r| r.0 == name)
    }
}

/// Terms over numbered variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tm {
    Var(usize),
    App(usize, Vec<Tm>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fm {
    True,
    False,
    Eq(Tm, Tm),
    Rel(usize, Vec<Tm>),
    And(Box<Fm>, Box<Fm>),
    Or(Box<Fm>, Box<Fm>),
    Exists(Vec<usize>, Box<Fm>),
}

/// A sequent with every variable numbered: the context is `0..ctx`, bound
/// variables follow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequent {
    pub ctx: usize,
    pub var_names: Vec<String>,
    pub var_sorts: Vec<usize>,
    pub lhs: Fm,
    pub rhs: Fm,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub sig: Signature,
    pub axioms: Vec<Sequent>,
    pub ast: TheoryAst,
}

struct Elab<'a> {
    src: &'a str,
    sig: &'a Signature,
    names: Vec<String>,
    sorts: Vec<Option<usize>>,
    spans: Vec<Span>,
    scope: Vec<(String, usize)>,
    implicit: bool,
    free: Vec<usize>,
    pending_eq: Vec<(usize, usize, Span)>,
}

impl<'a> Elab<'a> {
    fn bind(&mut self, b: &Binder) -> Result<usize, SyntaxError> {
        let sort = match &b.sort {
            Some(s) => Some(self.sig.sort(s).ok_or_else(|| sort_err(self.src, format!("unknown sort {s}"), b.span))?),
            None => None,
        };
        self.names.push(b.name.clone());
        self.sorts.push(sort);
        self.spans.push(b.span);
        self.scope.push((b.name.clone(), self.names.len() - 1));
        Ok(self.names.len() - 1)
    }

    fn lookup(&mut self, x: &str, sp: Span) -> Result<usize, SyntaxError> {
        if let Some(&(_, v)) = self.scope.iter().rev().find(|(n, _)| n == x) {
            return Ok(v);
        }
        if !self.implicit {
            return Err(sort_err(self.src, format!("unsorted variable {x}: not in the context"), sp));
        }
        // implicit contexts collect free variables at the front
        let b = Binder { name: x.to_string(), sort: None, span: sp };
        let v = self.bind(&b)?;
        let entry = self.scope.pop().unwrap();
        self.scope.insert(0, entry);
        self.free.push(v);
        Ok(v)
    }

    fn constrain(&mut self, v: usize, s: usize, sp: Span) -> Result<(), SyntaxError> {
        match self.sorts[v] {
            None => {
                self.sorts[v] = Some(s);
                Ok(())
            }
            Some(t) if t == s => Ok(()),
            Some(t) => Err(sort_err(
                self.src,
                format!("{} has sort {} but is used at sort {}", self.names[v], self.sig.sorts[t], self.sig.sorts[s]),
                sp,
            )),
        }
    }

    /// Returns the term and its sort if already known.
    fn term(&mut self, t: &Term, want: Option<usize>) -> Result<(Tm, Option<usize>), SyntaxError> {
        match t {
            Term::Var(x, sp) => {
                if let Some(c) = self.sig.func(x).filter(|&f| self.sig.funcs[f].1.is_empty()) {
                    let s = self.sig.funcs[c].2;
                    if let Some(w) = want.filter(|&w| w != s) {
                        return Err(sort_err(self.src, format!("constant {x} has sort {}, expected {}", self.sig.sorts[s], self.sig.sorts[w]), *sp));
                    }
                    return Ok((Tm::App(c, Vec::new()), Some(s)));
                }
                let v = self.lookup(x, *sp)?;
                if let Some(w) = want {
                    self.constrain(v, w, *sp)?;
                }
                Ok((Tm::Var(v), self.sorts[v]))
            }
            Term::App(f, args, sp) => {
                let fi = self.sig.func(f).ok_or_else(|| sort_err(self.src, format!("unknown function {f}"), *sp))?;
                let (_, ref dom, cod) = self.sig.funcs[fi];
                if dom.len() != args.len() {
                    return Err(sort_err(self.src, format!("{f} takes {} arguments, given {}", dom.len(), args.len()), *sp));
                }
                if let Some(w) = want.filter(|&w| w != cod) {
                    return Err(sort_err(self.src, format!("{f} returns {}, expected {}", self.sig.sorts[cod], self.sig.sorts[w]), *sp));
                }
                let dom = dom.clone();
                let mut out = Vec::new();
                for (a, s) in args.iter().zip(dom) {
                    out.push(self.term(a, Some(s))?.0);
                }
                Ok((Tm::App(fi, out), Some(cod)))
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> Result<Fm, SyntaxError> {
        Ok(match f {
            Formula::True(_) => Fm::True,
            Formula::False(_) => Fm::False,
            Formula::Eq(a, b, sp) => {
                let (ta, sa) = self.term(a, None)?;
                let (tb, sb) = self.term(b, sa)?;
                match (sa, sb, &ta, &tb) {
                    (None, Some(s), Tm::Var(v), _) => self.constrain(*v, s, *sp)?,
                    (None, None, Tm::Var(v), Tm::Var(w)) => self.pending_eq.push((*v, *w, *sp)),
                    _ => {}
                }
                Fm::Eq(ta, tb)
            }
            Formula::Atom(r, args, sp) => {
                let ri = self.sig.rel(r).ok_or_else(|| sort_err(self.src, format!("unknown relation {r}"), *sp))?;
                let dom = self.sig.rels[ri].1.clone();
                if dom.len() != args.len() {
                    return Err(sort_err(self.src, format!("{r} takes {} arguments, given {}", dom.len(), args.len()), *sp));
                }
                let mut out = Vec::new();
                for (a, s) in args.iter().zip(dom) {
                    out.push(self.term(a, Some(s))?.0);
                }
                Fm::Rel(ri, out)
            }
            Formula::And(a, b) => Fm::And(Box::new(self.formula(a)?), Box::new(self.formula(b)?)),
            Formula::Or(a, b) => Fm::Or(Box::new(self.formula(a)?), Box::new(self.formula(b)?)),
            Formula::Exists(bs, body, _) => {
                let mut vs = Vec::new();
                for b in bs {
                    vs.push(self.bind(b)?);
                }
                let body = self.formula(body)?;
                self.scope.retain(|(_, v)| !vs.contains(v));
                Fm::Exists(vs, Box::new(body))
            }
        })
    }
}

fn remap_tm(t: &Tm, m: &[usize]) -> Tm {
    match t {
        Tm::Var(v) => Tm::Var(m[*v]),
        Tm::App(f, args) => Tm::App(*f, args.iter().map(|a| remap_tm(a, m)).collect()),
    }
}

fn remap(f: &Fm, m: &[usize]) -> Fm {
    match f {
        Fm::True => Fm::True,
        Fm::False => Fm::False,
        Fm::Eq(a, b) => Fm::Eq(remap_tm(a, m), remap_tm(b, m)),
        Fm::Rel(r, args) => Fm::Rel(*r, args.iter().map(|a| remap_tm(a, m)).collect()),
        Fm::And(a, b) => Fm::And(Box::new(remap(a, m)), Box::new(remap(b, m))),
        Fm::Or(a, b) => Fm::Or(Box::new(remap(a, m)), Box::new(remap(b, m))),
        Fm::Exists(vs, body) => Fm::Exists(vs.iter().map(|&v| m[v]).collect(), Box::new(remap(body, m))),
    }
}

fn signature(src: &str, ast: &TheoryAst) -> Result<Signature, SyntaxError> {
    let mut sig = Signature::default();
    let mut seen: HashMap<String, Span> = HashMap::new();
    let mut fresh = |name: &str, sp: Span| -> Result<(), SyntaxError> {
        if seen.insert(name.to_string(), sp).is_some() {
            return Err(sort_err(src, format!("{name} declared twice"), sp));
        }
        Ok(())
    };
    let sorts_of = |sig: &Signature, names: &[String], sp: Span| -> Result<Vec<usize>, SyntaxError> {
        names.iter().map(|n| sig.sort(n).ok_or_else(|| sort_err(src, format!("unknown sort {n}"), sp))).collect()
    };
    for it in &ast.items {
        match it {
            Item::Sort(names, sp) => {
                for n in names {
                    fresh(n, *sp)?;
                    sig.sorts.push(n.clone());
                }
            }
            Item::Rel { name, args, span } => {
                fresh(name, *span)?;
                let a = sorts_of(&sig, args, *span)?;
                sig.rels.push((name.clone(), a));
            }
            Item::Func { name, args, ret, span } => {
                fresh(name, *span)?;
                let a = sorts_of(&sig, args, *span)?;
                let r = sorts_of(&sig, std::slice::from_ref(ret), *span)?[0];
                sig.funcs.push((name.clone(), a, r));
            }
            Item::Axiom(_) => {}
        }
    }
    Ok(sig)
}

fn elaborate(src: &str, sig: &Signature, s: &SequentAst) -> Result<Sequent, SyntaxError> {
    let mut e = Elab {
        src,
        sig,
        names: Vec::new(),
        sorts: Vec::new(),
        spans: Vec::new(),
        scope: Vec::new(),
        implicit: s.ctx.is_none(),
        free: Vec::new(),
        pending_eq: Vec::new(),
    };
    let mut ctx = Vec::new();
    if let Some(bs) = &s.ctx {
        for b in bs {
            if ctx.iter().any(|&v: &usize| e.names[v] == b.name) {
                return Err(sort_err(src, format!("{} bound twice in the context", b.name), b.span));
            }
            ctx.push(e.bind(b)?);
        }
    }
    let lhs = e.formula(&s.lhs)?;
    let rhs = e.formula(&s.rhs)?;
    if s.ctx.is_none() {
        ctx = e.free.clone();
    }
    let mut changed = true;
    while changed {
        changed = false;
        for &(v, w, sp) in &e.pending_eq.clone() {
            match (e.sorts[v], e.sorts[w]) {
                (Some(a), None) => {
                    e.sorts[w] = Some(a);
                    changed = true;
                }
                (None, Some(b)) => {
                    e.sorts[v] = Some(b);
                    changed = true;
                }
                (Some(a), Some(b)) if a != b => {
                    return Err(sort_err(src, format!("{} and {} have different sorts", e.names[v], e.names[w]), sp));
                }
                _ => {}
            }
        }
    }
    let mut var_sorts = Vec::new();
    for v in 0..e.names.len() {
        match e.sorts[v] {
            Some(x) => var_sorts.push(x),
            None if sig.sorts.len() == 1 => var_sorts.push(0),
            None => return Err(sort_err(src, format!("unsorted variable {}", e.names[v]), e.spans[v])),
        }
    }
    // context variables first
    let mut order = ctx.clone();
    order.extend((0..e.names.len()).filter(|v| !ctx.contains(v)));
    let mut m = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        m[old] = new;
    }
    Ok(Sequent {
        ctx: ctx.len(),
        var_names: order.iter().map(|&v| e.names[v].clone()).collect(),
        var_sorts: order.iter().map(|&v| var_sorts[v]).collect(),
        lhs: remap(&lhs, &m),
        rhs: remap(&rhs, &m),
        span: s.span,
    })
}

pub fn parse_theory(src: &str) -> Result<Theory, SyntaxError> {
    let ast = parse_ast(src)?;
    let sig = signature(src, &ast)?;
    let mut axioms = Vec::new();
    for it in &ast.items {
        if let Item::Axiom(s) = it {
            axioms.push(elaborate(src, &sig, s)?);
        }
    }
    Ok(Theory { sig, axioms, ast })
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_theory(&self.ast))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_sequent_parses() {
        let th = parse_theory("sort V; rel R : V, V; true |- exists y. R(x,y);").unwrap();
        let s = &th.axioms[0];
        assert_eq!(s.ctx, 1);
        assert_eq!(s.var_names, vec!["x", "y"]);
        assert_eq!(s.rhs, Fm::Exists(vec![1], Box::new(Fm::Rel(0, vec![Tm::Var(0), Tm::Var(1)]))));
    }

    #[test]
    fn unsorted_variable_is_reported_with_span() {
        let src = "sort A, B;\nrel R : A, B;\nx:A | true |- R(x, y);";
        match parse_theory(src) {
            Err(SyntaxError::Sort { span, line, col, msg }) => {
                assert_eq!(&src[span.start..span.end], "y");
                assert_eq!((line, col), (3, 20));
                assert!(msg.contains("unsorted variable y"));
            }
            other => panic!("{other:?}"),
        }
        let src = "sort A, B;\nrel P;\nx | P |- x = x;";
        let e = parse_theory(src).unwrap_err();
        assert_eq!(&src[e.span().start..e.span().end], "x");
    }

    #[test]
    fn sorts_are_inferred_and_checked() {
        let th = parse_theory("sort A, B; rel R : A, B; R(x, y) and x = z |- exists w. R(z, w);").unwrap();
        assert_eq!(th.axioms[0].var_sorts, vec![0, 1, 0, 1]);
        let e = parse_theory("sort A, B; rel R : A, B; R(x, y) |- x = y;").unwrap_err();
        assert!(matches!(e, SyntaxError::Sort { .. }), "{e}");
        let e = parse_theory("sort A; func f : A -> A; rel P : A; P(f(x, x)) |- true;").unwrap_err();
        assert!(e.to_string().contains("takes 1 arguments"));
    }

    #[test]
    fn precedence() {
        let f = parse_formula("exists y. P(y) or Q(y) and R(y)").unwrap();
        assert_eq!(print_formula_full(&f), "(exists y. (P(y) or (Q(y) and R(y))))");
        let f = parse_formula("P(x) and exists y. Q(y) or R(x)").unwrap();
        assert_eq!(print_formula_full(&f), "(P(x) and (exists y. (Q(y) or R(x))))");
        let f = parse_formula("a or b or c and d").unwrap();
        assert_eq!(print_formula_full(&f), "((a or b) or (c and d))");
    }

    #[test]
    fn printer_round_trips() {
        let cases = [
            "a or (b or c)",
            "(a or b) and c",
            "a and (b and c)",
            "(exists x. P(x)) and Q",
            "exists x, y:A. x = f(y) or R(x, g(y, x))",
            "a or (exists y. b) or c",
        ];
        for c in cases {
            let f = parse_formula(c).unwrap();
            let printed = print_formula(&f);
            assert_eq!(parse_formula(&printed).unwrap(), f, "{c} printed as {printed}");
        }
    }

    #[test]
    fn syntax_errors_carry_location() {
        let e = parse_theory("sort V;\nrel R : V V;").unwrap_err();
        match e {
            SyntaxError::Parse { line, col, .. } => assert_eq!((line, col), (2, 11)),
            other => panic!("{other:?}"),
        }
        assert!(parse_theory("sort V; true |- ;").is_err());
        assert!(parse_theory("sort V; true |- P(x) $").is_err());
    }

    #[test]
    fn duplicate_and_unknown_symbols() {
        assert!(parse_theory("sort V, V;").is_err());
        assert!(parse_theory("sort V; rel R : W;").is_err());
        assert!(parse_theory("sort V; true |- Q(x);").is_err());
    }

    #[test]
    fn constants_are_nullary_functions() {
        let th = parse_theory("sort V; func c : -> V; rel P : V; true |- P(c);").unwrap();
        assert_eq!(th.axioms[0].rhs, Fm::Rel(0, vec![Tm::App(0, vec![])]));
        assert_eq!(th.axioms[0].ctx, 0);
    }
}
