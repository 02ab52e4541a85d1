//! Recursive-descent parser for the expression grammar.

use std::sync::Arc;

use num::BigInt;

use super::ParseError;
use crate::expr::{
    apply_function_checked, total_derivative, Atom, DiffExpr, FuncAtom, FunctionDef, Jet,
    MultiIndex, Q,
};
use crate::problem::Variables;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str, line0: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, line0, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Num(text.parse().expect("digits")),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                if chars[i] == '_' && chars.get(i + 1) == Some(&'{') {
                    while i < chars.len() && chars[i] != '}' {
                        i += 1;
                    }
                    if i == chars.len() {
                        return Err(ParseError::Syntax {
                            line: tl,
                            col: tc,
                            msg: "unterminated subscript".into(),
                        });
                    }
                }
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(text),
                line: tl,
                col: tc,
            });
            continue;
        }
        if "+-*/^(),".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                line: tl,
                col: tc,
            });
            i += 1;
            col += 1;
            continue;
        }
        return Err(ParseError::Syntax {
            line: tl,
            col: tc,
            msg: format!("unexpected character `{c}`"),
        });
    }
    Ok(out)
}

/// Names visible to the expression parser.
#[derive(Clone, Debug)]
pub struct Scope<'a> {
    pub vars: &'a Variables,
    pub functions: &'a [Arc<FunctionDef>],
    /// Parameter names of a function rule template being parsed.
    pub params: Vec<String>,
    /// Name of the function whose rules are being parsed; calls to it with
    /// its own parameters become self references.
    pub defining: Option<String>,
    pub allow_lambda: bool,
    pub allow_coefficients: bool,
}

impl<'a> Scope<'a> {
    pub fn new(vars: &'a Variables, functions: &'a [Arc<FunctionDef>]) -> Self {
        Self {
            vars,
            functions,
            params: Vec::new(),
            defining: None,
            allow_lambda: true,
            allow_coefficients: true,
        }
    }

    pub fn template(
        vars: &'a Variables,
        functions: &'a [Arc<FunctionDef>],
        params: &[String],
        defining: Option<&str>,
    ) -> Self {
        Self {
            vars,
            functions,
            params: params.to_vec(),
            defining: defining.map(str::to_string),
            allow_lambda: false,
            allow_coefficients: false,
        }
    }

    fn function(&self, name: &str) -> Option<&Arc<FunctionDef>> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Splits a subscript into independent variable indices, longest names first.
pub fn parse_subscript(vars: &Variables, sub: &str) -> Option<Vec<usize>> {
    if sub.is_empty() {
        return Some(Vec::new());
    }
    let mut order: Vec<(usize, &String)> = vars.independents.iter().enumerate().collect();
    order.sort_by_key(|b| std::cmp::Reverse(b.1.len()));
    for (i, name) in order {
        if let Some(rest) = sub.strip_prefix(name.as_str()) {
            if let Some(mut tail) = parse_subscript(vars, rest) {
                tail.insert(0, i);
                return Some(tail);
            }
        }
    }
    None
}

struct Parser<'s, 'a> {
    toks: Vec<Token>,
    pos: usize,
    scope: &'s Scope<'a>,
    end: (usize, usize),
}

impl<'s, 'a> Parser<'s, 'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<DiffExpr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<DiffExpr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let rhs = self.unary()?;
                acc = acc.checked_div(&rhs)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<DiffExpr, ParseError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<DiffExpr, ParseError> {
        let base = self.base()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let paren = self.eat('(');
        let negative = self.eat('-');
        let n = match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                n
            }
            _ => return self.err("expected an integer exponent"),
        };
        if paren {
            self.expect(')')?;
        }
        let n: i32 = match i32::try_from(n) {
            Ok(n) => n,
            Err(_) => return self.err("exponent out of range"),
        };
        Ok(base.pow(if negative { -n } else { n })?)
    }

    fn args(&mut self) -> Result<Vec<DiffExpr>, ParseError> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        while self.eat(',') {
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn base(&mut self) -> Result<DiffExpr, ParseError> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(DiffExpr::constant(Q::from_integer(n)))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.identifier(&name, at)
            }
            Some(t) => self.err(format!("unexpected `{}`", tok_text(&t))),
            None => self.err("unexpected end of expression"),
        }
    }

    fn undeclared<T>(&self, name: &str, at: (usize, usize)) -> Result<T, ParseError> {
        Err(ParseError::Undeclared {
            name: name.to_string(),
            line: at.0,
            col: at.1,
        })
    }

    fn identifier(&mut self, name: &str, at: (usize, usize)) -> Result<DiffExpr, ParseError> {
        let scope = self.scope;
        let vars = scope.vars;
        let calls = self.peek() == Some(&Tok::Sym('('));
        if name == "diff" && calls {
            self.expect('(')?;
            let mut e = self.expr()?;
            while self.eat(',') {
                let (l, c) = self.here();
                let var = match self.peek().cloned() {
                    Some(Tok::Ident(v)) => v,
                    _ => return self.err("expected an independent variable"),
                };
                self.pos += 1;
                let Some(i) = vars.independents.iter().position(|x| *x == var) else {
                    return self.undeclared(&var, (l, c));
                };
                e = total_derivative(&e, i);
            }
            self.expect(')')?;
            return Ok(e);
        }
        if let Some(digits) = name.strip_prefix("_c") {
            if let (true, Ok(k)) = (scope.allow_coefficients, digits.parse::<usize>()) {
                return Ok(DiffExpr::coeff(k));
            }
        }
        if name == "lambda" && scope.allow_lambda {
            return Ok(DiffExpr::lambda());
        }
        let (head, sub) = match name.find('_') {
            Some(p) if p > 0 => {
                let s = &name[p + 1..];
                let s = s
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .unwrap_or(s);
                (&name[..p], Some(s))
            }
            _ => (name, None),
        };
        if calls {
            if scope.defining.as_deref() == Some(head) && sub.is_none() {
                let args = self.args()?;
                let slots: Vec<DiffExpr> = (0..scope.params.len())
                    .map(|k| DiffExpr::atom(Atom::Slot(k)))
                    .collect();
                if args == slots {
                    return Ok(DiffExpr::atom(Atom::SelfCall));
                }
                return self.err("a function may only refer to itself at its own parameters");
            }
            let Some(def) = scope.function(head).cloned() else {
                return self.undeclared(head, at);
            };
            let args = self.args()?;
            let Some(sub) = sub else {
                return Ok(apply_function_checked(&def, args)?);
            };
            if !def.is_arbitrary() {
                return Err(ParseError::Syntax {
                    line: at.0,
                    col: at.1,
                    msg: format!("only arbitrary functions carry derivative marks, `{head}` is defined by rules"),
                });
            }
            let plain = apply_function_checked(&def, args)?;
            let (Some((m, _)), 1) = (plain.as_single_term(), plain.num_terms()) else {
                return self.err("malformed function application");
            };
            let Some((Atom::Func(f), 1)) = m.factors().next().cloned() else {
                return self.err("malformed function application");
            };
            let mut deriv = vec![0u32; def.arity()];
            for ch in sub.chars() {
                match ch.to_digit(10) {
                    Some(d) if d >= 1 && (d as usize) <= def.arity() => deriv[d as usize - 1] += 1,
                    _ => {
                        return Err(ParseError::Syntax {
                            line: at.0,
                            col: at.1,
                            msg: format!("invalid derivative mark `{ch}` for `{head}`"),
                        })
                    }
                }
            }
            return Ok(DiffExpr::atom(Atom::Func(FuncAtom {
                def: f.def,
                args: f.args,
                deriv,
            })));
        }
        if let Some(k) = scope.params.iter().position(|p| p == name) {
            return Ok(DiffExpr::atom(Atom::Slot(k)));
        }
        if let Some(i) = vars.independents.iter().position(|x| x == name) {
            return Ok(DiffExpr::indep(i));
        }
        if let Some(d) = vars.dependents.iter().position(|x| x == name) {
            return Ok(DiffExpr::jet(Jet::base(d)));
        }
        if let (Some(d), Some(sub)) = (vars.dependents.iter().position(|x| x == head), sub) {
            let Some(idx) = parse_subscript(vars, sub) else {
                return Err(ParseError::Syntax {
                    line: at.0,
                    col: at.1,
                    msg: format!("subscript `{sub}` is not a sequence of independent variables"),
                });
            };
            return Ok(DiffExpr::jet(Jet::new(d, MultiIndex::from_vars(&idx))));
        }
        self.undeclared(name, at)
    }
}

fn tok_text(t: &Tok) -> String {
    match t {
        Tok::Num(n) => n.to_string(),
        Tok::Ident(s) => s.clone(),
        Tok::Sym(c) => c.to_string(),
    }
}

/// Parses one expression; `line` numbers error positions.
pub fn parse_expression_at(
    src: &str,
    scope: &Scope<'_>,
    line: usize,
) -> Result<DiffExpr, ParseError> {
    let toks = lex(src, line)?;
    let end = toks
        .last()
        .map(|t| (t.line, t.col + 1))
        .unwrap_or((line, 1));
    let mut p = Parser {
        toks,
        pos: 0,
        scope,
        end,
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.err(format!("unexpected `{}`", tok_text(&p.toks[p.pos].tok)));
    }
    Ok(e)
}

pub fn parse_expression(src: &str, scope: &Scope<'_>) -> Result<DiffExpr, ParseError> {
    parse_expression_at(src, scope, 1)
}
