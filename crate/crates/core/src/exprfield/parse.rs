#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use super::{Func, Node, VarScheme};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    Cmp(&'static str),
    And,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(src: &str) -> Result<Lexer> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut toks = Vec::new();
    while i < b.len() {
        let ch = b[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || (ch == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) {
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start + 1,
                message: alloc::format!("malformed number `{text}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Syntax { offset: start + 1, message: "number out of range".into() });
            }
            toks.push((Tok::Num(v), start));
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let two = if i + 1 < b.len() { &src[i..i + 2] } else { "" };
        match two {
            "&&" => {
                toks.push((Tok::And, start));
                i += 2;
                continue;
            }
            "<=" | ">=" => {
                toks.push((Tok::Cmp(if two == "<=" { "<=" } else { ">=" }), start));
                i += 2;
                continue;
            }
            _ => {}
        }
        match ch {
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                toks.push((Tok::Op(ch as char), start));
                i += 1;
            }
            b'<' => {
                toks.push((Tok::Cmp("<"), start));
                i += 1;
            }
            b'>' => {
                toks.push((Tok::Cmp(">"), start));
                i += 1;
            }
            _ => {
                let c = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax { offset: start + 1, message: alloc::format!("unexpected character `{c}`") });
            }
        }
    }
    toks.push((Tok::End, src.len()));
    Ok(Lexer { toks })
}

pub(super) struct Parser<'s> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    scheme: &'s VarScheme,
}

impl<'s> Parser<'s> {
    pub(super) fn new(src: &str, scheme: &'s VarScheme) -> Result<Self> {
        Ok(Parser { toks: lex(src)?.toks, pos: 0, scheme })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1 + 1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> Error {
        let message = match self.peek() {
            Tok::End => "unexpected end of input".into(),
            Tok::Num(v) => alloc::format!("unexpected number {v}"),
            Tok::Ident(s) => alloc::format!("unexpected identifier `{s}`"),
            Tok::Op(c) => alloc::format!("unexpected `{c}`"),
            Tok::Cmp(c) => alloc::format!("unexpected `{c}`"),
            Tok::And => "unexpected `&&`".into(),
        };
        Error::Syntax { offset: self.offset(), message }
    }

    pub(super) fn finish(&mut self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    pub(super) fn at_end(&self) -> bool {
        *self.peek() == Tok::End
    }

    pub(super) fn comparison(&mut self) -> Result<&'static str> {
        match self.peek().clone() {
            Tok::Cmp(c) => {
                self.bump();
                Ok(c)
            }
            _ => Err(self.unexpected()),
        }
    }

    pub(super) fn eat_and(&mut self) -> bool {
        if *self.peek() == Tok::And {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(super) fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Op('-') => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Op('/') => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let mut sign = 1i64;
        match self.peek() {
            Tok::Op('-') => {
                sign = -1;
                self.bump();
            }
            Tok::Op('+') => {
                self.bump();
            }
            _ => {}
        }
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= 1024.0 => {
                self.bump();
                Ok(Node::Pow(Box::new(base), (sign * v as i64) as i32))
            }
            Tok::Num(_) => Err(Error::Syntax { offset: at, message: "exponent must be an integer".into() }),
            _ => Err(self.unexpected()),
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(_) | Tok::Op('(') | Tok::Ident(_) => {}
            _ => return Err(self.unexpected()),
        }
        match self.bump() {
            Tok::Num(v) => Ok(Node::Const(C64::new(v, 0.0))),
            Tok::Op('(') => {
                let e = self.expr()?;
                if *self.peek() != Tok::Op(')') {
                    return Err(self.unexpected());
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::Op('(') {
                        return Err(self.unexpected());
                    }
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::Op(')') {
                        args.push(self.expr()?);
                        while *self.peek() == Tok::Op(',') {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    if *self.peek() != Tok::Op(')') {
                        return Err(self.unexpected());
                    }
                    self.bump();
                    if args.len() != 1 {
                        return Err(Error::Arity { name, expected: 1, got: args.len() });
                    }
                    return Ok(Node::Call(f, Box::new(args.pop().unwrap())));
                }
                if name == "i" {
                    return Ok(Node::Const(C64::new(0.0, 1.0)));
                }
                self.scheme.resolve(&name).ok_or(Error::UnknownIdentifier { name, offset: at })
            }
            _ => Err(self.unexpected()),
        }
    }
}
