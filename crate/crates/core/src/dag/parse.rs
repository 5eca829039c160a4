//! Parser for the problem-definition text format.
//!
//! ```text
//! var x in [-3, 3]
//! var y in [-3, 3]
//! ann net = mlp("peaks.json", x, y)
//! obj: net - x^2
//! con c1: x + y <= 0
//! con c2: x*y - 1 == 0
//! ```
//!
//! Statements end at a newline or `;`. Newlines inside parentheses or
//! brackets do not end a statement. `#` starts a comment.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::arith::UnaryOp;
use crate::interval::{Interval, IntervalBox};

use super::mlp::{self, load_ann_weights};
use super::{Constraint, Dag, DagNode, NodeId, Problem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Assign,
    Le,
    Ge,
    EqEq,
    End,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Str(s) => write!(f, "string \"{s}\""),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBrack => f.write_str("'['"),
            Tok::RBrack => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Colon => f.write_str("':'"),
            Tok::Assign => f.write_str("'='"),
            Tok::Le => f.write_str("'<='"),
            Tok::Ge => f.write_str("'>='"),
            Tok::EqEq => f.write_str("'=='"),
            Tok::End => f.write_str("end of statement"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err<T>(line: usize, col: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, message: message.into() })
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0i32;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok| out.push(Token { tok, line: tl, col: tc });
        match c {
            '\n' => {
                if depth == 0 {
                    push(Tok::End);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            ';' => push(Tok::End),
            '+' => push(Tok::Plus),
            '-' | '\u{2212}' => push(Tok::Minus),
            '*' => push(Tok::Star),
            '/' => push(Tok::Slash),
            '^' => push(Tok::Caret),
            '(' | '[' => {
                depth += 1;
                push(if c == '(' { Tok::LParen } else { Tok::LBrack });
            }
            ')' | ']' => {
                depth -= 1;
                push(if c == ')' { Tok::RParen } else { Tok::RBrack });
            }
            ',' => push(Tok::Comma),
            ':' => push(Tok::Colon),
            '<' | '>' | '=' => {
                let next = chars.get(i + 1).copied();
                let tok = match (c, next) {
                    ('<', Some('=')) => Tok::Le,
                    ('>', Some('=')) => Tok::Ge,
                    ('=', Some('=')) => Tok::EqEq,
                    ('=', _) => Tok::Assign,
                    _ => return err(tl, tc, format!("unexpected character '{c}'")),
                };
                if tok != Tok::Assign {
                    i += 1;
                    col += 1;
                }
                push(tok);
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    return err(tl, tc, "unterminated string");
                }
                push(Tok::Str(chars[start..j].iter().collect()));
                col += j + 1 - i;
                i = j + 1;
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[start..j].iter().collect();
                let v: f64 = s.parse().map_err(|_| ParseError { line: tl, col: tc, message: format!("malformed number '{s}'") })?;
                push(Tok::Num(v));
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                push(Tok::Ident(chars[start..j].iter().collect()));
                col += j - i;
                i = j;
                continue;
            }
            _ => return err(tl, tc, format!("unexpected character '{c}'")),
        }
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

enum Symbol {
    Var(NodeId),
    Ann(NodeId),
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    dag: Dag,
    symbols: HashMap<String, Symbol>,
    names: Vec<String>,
    bounds: Vec<Interval>,
    objective: Option<NodeId>,
    ineq: Vec<Constraint>,
    eq: Vec<Constraint>,
    base: Option<&'a Path>,
}

/// Parses a problem; `ann` weight paths resolve against the working directory.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    parse_with(text, None, Dag::new())
}

/// Parses a problem whose `ann` weight paths resolve against `base`.
pub fn parse_problem_in(text: &str, base: &Path) -> Result<Problem, ParseError> {
    parse_with(text, Some(base), Dag::new())
}

/// Parses without common-subexpression sharing.
pub fn parse_problem_unshared(text: &str) -> Result<Problem, ParseError> {
    parse_with(text, None, Dag::without_sharing())
}

fn parse_with(text: &str, base: Option<&Path>, dag: Dag) -> Result<Problem, ParseError> {
    let toks = lex(text)?;
    let p = Parser {
        toks,
        pos: 0,
        dag,
        symbols: HashMap::new(),
        names: Vec::new(),
        bounds: Vec::new(),
        objective: None,
        ineq: Vec::new(),
        eq: Vec::new(),
        base,
    };
    p.problem()
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            err(t.line, t.col, format!("expected {what}, found {}", t.tok))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => err(t.line, t.col, format!("expected {what}, found {other}")),
        }
    }

    fn problem(mut self) -> Result<Problem, ParseError> {
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::End => {
                    self.next();
                    continue;
                }
                Tok::Ident(kw) => match kw.as_str() {
                    "var" => self.var_stmt()?,
                    "obj" => self.obj_stmt()?,
                    "con" => self.con_stmt()?,
                    "ann" => self.ann_stmt()?,
                    _ => return err(t.line, t.col, format!("unknown statement '{kw}'")),
                },
                other => return err(t.line, t.col, format!("expected a statement, found {other}")),
            }
            let t = self.next();
            if !matches!(t.tok, Tok::End | Tok::Eof) {
                return err(t.line, t.col, format!("expected end of statement, found {}", t.tok));
            }
        }
        let end = self.peek().clone();
        let Some(objective) = self.objective else {
            return err(end.line, end.col, "empty objective: no 'obj:' statement");
        };
        if self.names.is_empty() {
            return err(end.line, end.col, "no variables declared");
        }
        let domain = IntervalBox::new(self.bounds).expect("non-empty");
        Problem::new(self.names, domain, self.dag, objective, self.ineq, self.eq)
            .map_err(|e| ParseError { line: end.line, col: end.col, message: e.to_string() })
    }

    fn var_stmt(&mut self) -> Result<(), ParseError> {
        self.next();
        let (name, at) = self.ident("variable name")?;
        if self.symbols.contains_key(&name) {
            return err(at.line, at.col, format!("duplicate identifier '{name}'"));
        }
        let t = self.peek().clone();
        if t.tok != Tok::Ident("in".into()) {
            return err(t.line, t.col, format!("variable '{name}' without bounds"));
        }
        self.next();
        self.expect(Tok::LBrack, "'['")?;
        let lo = self.signed_number()?;
        self.expect(Tok::Comma, "','")?;
        let hi = self.signed_number()?;
        self.expect(Tok::RBrack, "']'")?;
        let iv = Interval::new(lo, hi).map_err(|_| ParseError {
            line: at.line,
            col: at.col,
            message: format!("invalid bounds [{lo}, {hi}] for variable '{name}'"),
        })?;
        let id = self.dag.var(self.names.len());
        self.symbols.insert(name.clone(), Symbol::Var(id));
        self.names.push(name);
        self.bounds.push(iv);
        Ok(())
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let mut sign = 1.0;
        loop {
            match self.peek().tok {
                Tok::Minus => sign = -sign,
                Tok::Plus => {}
                _ => break,
            }
            self.next();
        }
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(sign * v),
            Tok::Ident(ref s) if s == "inf" => Ok(sign * f64::INFINITY),
            other => err(t.line, t.col, format!("expected a number, found {other}")),
        }
    }

    fn obj_stmt(&mut self) -> Result<(), ParseError> {
        let kw = self.next();
        if self.objective.is_some() {
            return err(kw.line, kw.col, "more than one objective");
        }
        self.expect(Tok::Colon, "':'")?;
        if matches!(self.peek().tok, Tok::End | Tok::Eof) {
            let t = self.peek();
            return err(t.line, t.col, "empty objective");
        }
        self.objective = Some(self.expr()?);
        Ok(())
    }

    fn con_stmt(&mut self) -> Result<(), ParseError> {
        self.next();
        let (name, _) = self.ident("constraint name")?;
        self.expect(Tok::Colon, "':'")?;
        let lhs = self.expr()?;
        let rel = self.next();
        let rhs = self.expr()?;
        let is_zero = |dag: &Dag, id: NodeId| matches!(dag.node(id), DagNode::Const(c) if c == 0.0);
        let diff = |p: &mut Self, a: NodeId, b: NodeId| if is_zero(&p.dag, b) { a } else { p.dag.sub(a, b) };
        match rel.tok {
            Tok::Le => {
                let root = diff(self, lhs, rhs);
                self.ineq.push(Constraint { name, root });
            }
            Tok::Ge => {
                let root = diff(self, rhs, lhs);
                self.ineq.push(Constraint { name, root });
            }
            Tok::EqEq => {
                let root = diff(self, lhs, rhs);
                self.eq.push(Constraint { name, root });
            }
            other => return err(rel.line, rel.col, format!("expected '<=', '>=' or '==', found {other}")),
        }
        Ok(())
    }

    fn ann_stmt(&mut self) -> Result<(), ParseError> {
        self.next();
        let (name, at) = self.ident("network name")?;
        if self.symbols.contains_key(&name) {
            return err(at.line, at.col, format!("duplicate identifier '{name}'"));
        }
        self.expect(Tok::Assign, "'='")?;
        let (func, ft) = self.ident("'mlp'")?;
        if func != "mlp" {
            return err(ft.line, ft.col, format!("expected 'mlp', found '{func}'"));
        }
        self.expect(Tok::LParen, "'('")?;
        let pt = self.next();
        let Tok::Str(path) = pt.tok else {
            return err(pt.line, pt.col, format!("expected weights file path, found {}", pt.tok));
        };
        let mut inputs = Vec::new();
        while self.peek().tok == Tok::Comma {
            self.next();
            inputs.push(self.expr()?);
        }
        self.expect(Tok::RParen, "')'")?;
        let full: PathBuf = match self.base {
            Some(base) => base.join(&path),
            None => PathBuf::from(&path),
        };
        let fail = |e: mlp::MlpError| ParseError { line: pt.line, col: pt.col, message: e.to_string() };
        let layers = load_ann_weights(&full).map_err(fail)?;
        let outs = mlp::build_mlp(&mut self.dag, &layers, &inputs).map_err(fail)?;
        if outs.len() != 1 {
            return err(pt.line, pt.col, format!("network '{name}' has {} outputs; only scalar networks are supported", outs.len()));
        }
        self.symbols.insert(name, Symbol::Ann(outs[0]));
        Ok(())
    }

    fn expr(&mut self) -> Result<NodeId, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    let r = self.term()?;
                    acc = self.dag.add(acc, r);
                }
                Tok::Minus => {
                    self.next();
                    let r = self.term()?;
                    acc = self.dag.sub(acc, r);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NodeId, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    let r = self.unary()?;
                    acc = self.dag.mul(acc, r);
                }
                Tok::Slash => {
                    self.next();
                    let r = self.unary()?;
                    acc = self.dag.div(acc, r);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<NodeId, ParseError> {
        match self.peek().tok {
            Tok::Minus => {
                self.next();
                let literal = matches!(self.peek().tok, Tok::Num(_));
                let a = self.unary()?;
                // A negated bare literal is itself a literal.
                Ok(match self.dag.node(a) {
                    DagNode::Const(c) if literal => self.dag.constant(-c),
                    _ => self.dag.unary(UnaryOp::Neg, a),
                })
            }
            Tok::Plus => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<NodeId, ParseError> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let exp = self.unary()?;
        if let DagNode::Const(k) = self.dag.node(exp) {
            if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 {
                return Ok(self.dag.unary(UnaryOp::Powi(k as i32), base));
            }
        }
        // b^e = exp(e * log(b))
        let lb = self.dag.unary(UnaryOp::Log, base);
        let prod = self.dag.mul(exp, lb);
        Ok(self.dag.unary(UnaryOp::Exp, prod))
    }

    fn atom(&mut self) -> Result<NodeId, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(self.dag.constant(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                if self.peek().tok == Tok::LParen {
                    let Some(op) = UnaryOp::from_name(name) else {
                        return err(t.line, t.col, format!("unknown function '{name}'"));
                    };
                    self.next();
                    let a = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(self.dag.unary(op, a));
                }
                match self.symbols.get(name) {
                    Some(Symbol::Var(id)) | Some(Symbol::Ann(id)) => Ok(*id),
                    None => err(t.line, t.col, format!("unknown identifier {name}")),
                }
            }
            other => err(t.line, t.col, format!("expected an expression, found {other}")),
        }
    }
}
