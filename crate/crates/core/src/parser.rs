//! Concrete syntax.
//!
//! A program is a sequence of declarations and statements. Declarations
//! (`[data|model|genquant] type name [= E | ~ d(args)];`) may appear anywhere
//! at the top level; they are collected into the typing environment in
//! order, and an initialiser stays behind as an ordinary statement. A
//! missing level is an inference placeholder.

use std::fmt;

use crate::ast::{BaseType, Expr, Gamma, LValue, Program, Stmt};
use crate::lattice::{Lattice, Level};

/// A parse error with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for Diagnostic {}

const KEYWORDS: &[&str] = &[
    "data", "model", "genquant", "real", "int", "for", "in", "if", "else", "skip", "factor",
    "target", "elim", "gen",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Real(r) => write!(f, "`{r}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "==", ";", ",", "(", ")", "[", "]", "{", "}", "=", "~", "+", "-", "*", "/", "<", ">", "|", ":",
];

fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(word),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if real {
                Tok::Real(text.parse().map_err(|_| Diagnostic {
                    line: start_line,
                    column: start_col,
                    message: format!("malformed number `{text}`"),
                })?)
            } else {
                Tok::Int(text.parse().map_err(|_| Diagnostic {
                    line: start_line,
                    column: start_col,
                    message: format!("integer `{text}` out of range"),
                })?)
            };
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: start_line,
                    col: start_col,
                });
            }
            None => {
                return Err(Diagnostic {
                    line,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Decl {
    names: Vec<(String, usize, usize)>,
    ty: BaseType,
    level: Option<Level>,
    init: Option<Stmt>,
}

enum Item {
    Decl(Decl),
    Stmt(Stmt),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Positions of `gen` blocks that omitted their support bound.
    gen_sites: Vec<(String, usize, usize)>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            gen_sites: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next_is_sym(&self, s: &str) -> bool {
        matches!(self.toks.get(self.pos + 1), Some(Token { tok: Tok::Sym(t), .. }) if *t == s)
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, column) = self.here();
        Err(Diagnostic {
            line,
            column,
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{k}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => self.err(format!("`{s}` is a keyword")),
            t => self.err(format!("expected a name, found {t}")),
        }
    }

    fn positive_int(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Int(n) if n >= 1 && n <= u32::MAX as i64 => {
                self.bump();
                Ok(n as u32)
            }
            t => self.err(format!("expected a positive integer, found {t}")),
        }
    }

    /// Statement terminator: `;`, or nothing right before `closer`.
    fn end_stmt(&mut self, closer: Option<&str>) -> PResult<()> {
        if self.eat_sym(";") {
            return Ok(());
        }
        if let Some(c) = closer {
            if self.is_sym(c) {
                return Ok(());
            }
        }
        self.err(format!("expected `;`, found {}", self.peek()))
    }

    fn starts_decl(&self) -> bool {
        match self.peek() {
            Tok::Ident(k) if k == "data" || k == "model" || k == "genquant" => true,
            Tok::Ident(k) if k == "real" => true,
            Tok::Ident(k) if k == "int" => true,
            _ => false,
        }
    }

    fn base_type(&mut self) -> PResult<BaseType> {
        let mut t = if self.is_kw("real") {
            self.bump();
            BaseType::Real
        } else if self.is_kw("int") {
            self.bump();
            if self.eat_sym("<") {
                let n = self.positive_int()?;
                self.expect_sym(">")?;
                BaseType::BoundedInt(n)
            } else {
                BaseType::Int
            }
        } else {
            return self.err(format!("expected a type, found {}", self.peek()));
        };
        let mut dims = Vec::new();
        while self.eat_sym("[") {
            if self.eat_sym("]") {
                dims.push(None);
            } else {
                let n = self.positive_int()? as usize;
                self.expect_sym("]")?;
                dims.push(Some(n));
            }
        }
        for d in dims.into_iter().rev() {
            t = BaseType::Array(Box::new(t), d);
        }
        Ok(t)
    }

    fn decl(&mut self) -> PResult<Decl> {
        let level = match self.peek() {
            Tok::Ident(k) => Level::parse(k),
            _ => None,
        };
        if level.is_some() {
            self.bump();
        }
        let ty = self.base_type()?;
        let (line, col) = self.here();
        let name = self.ident()?;
        let mut names = vec![(name.clone(), line, col)];
        let mut init = None;
        if self.eat_sym("=") {
            let e = self.expr()?;
            init = Some(Stmt::assign(&name, e));
        } else if self.eat_sym("~") {
            let (d, args) = self.dist()?;
            init = Some(Stmt::Sample(LValue::var(&name), d, args));
        } else {
            while self.eat_sym(",") {
                let (line, col) = self.here();
                names.push((self.ident()?, line, col));
            }
        }
        self.end_stmt(None)?;
        Ok(Decl {
            names,
            ty,
            level,
            init,
        })
    }

    fn dist(&mut self) -> PResult<(String, Vec<Expr>)> {
        let d = self.ident()?;
        self.expect_sym("(")?;
        let args = self.args(")")?;
        Ok((d, args))
    }

    fn args(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    /// Statements up to (not including) `closer`.
    fn stmts_until(&mut self, closer: &str) -> PResult<Stmt> {
        let mut out = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if self.is_sym(closer) {
                return Ok(Stmt::seq(out));
            }
            if matches!(self.peek(), Tok::Eof) {
                return self.err(format!("expected `{closer}`, found end of input"));
            }
            if self.starts_decl() {
                return self.err("declarations are only allowed at the top level");
            }
            out.push(self.stmt(Some(closer))?);
        }
    }

    fn block(&mut self) -> PResult<Stmt> {
        self.expect_sym("{")?;
        let s = self.stmts_until("}")?;
        self.expect_sym("}")?;
        Ok(s)
    }

    fn body(&mut self, closer: Option<&str>) -> PResult<Stmt> {
        if self.is_sym("{") {
            let s = self.block()?;
            Ok(s)
        } else {
            self.stmt(closer)
        }
    }

    fn bounded_binder(&mut self, need_k: bool) -> PResult<(String, u32)> {
        self.expect_kw("int")?;
        let k = if self.eat_sym("<") {
            let k = self.positive_int()?;
            self.expect_sym(">")?;
            k
        } else if need_k {
            return self.err("expected `<K>` support bound");
        } else {
            0
        };
        let name = self.ident()?;
        Ok((name, k))
    }

    fn stmt(&mut self, closer: Option<&str>) -> PResult<Stmt> {
        if self.is_sym("{") {
            return self.block();
        }
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            t => return self.err(format!("expected a statement, found {t}")),
        };
        match kw.as_str() {
            "skip" => {
                self.bump();
                self.end_stmt(closer)?;
                Ok(Stmt::Skip)
            }
            "factor" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                self.end_stmt(closer)?;
                Ok(Stmt::Factor(e))
            }
            "for" => {
                self.bump();
                self.expect_sym("(")?;
                let var = self.ident()?;
                self.expect_kw("in")?;
                let lo = self.expr()?;
                self.expect_sym(":")?;
                let hi = self.expr()?;
                self.expect_sym(")")?;
                let body = self.body(closer)?;
                Ok(Stmt::For {
                    var,
                    lo,
                    hi,
                    body: Box::new(body),
                })
            }
            "if" => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let then = self.body(closer)?;
                let els = if self.is_kw("else") {
                    self.bump();
                    self.body(closer)?
                } else {
                    Stmt::Skip
                };
                Ok(Stmt::If {
                    cond,
                    then: Box::new(then),
                    els: Box::new(els),
                })
            }
            "elim" => {
                self.bump();
                self.expect_sym("(")?;
                let (var, k) = self.bounded_binder(true)?;
                self.expect_sym(")")?;
                let body = self.block()?;
                Ok(Stmt::Elim {
                    var,
                    k,
                    body: Box::new(body),
                })
            }
            "gen" => {
                self.bump();
                self.expect_sym("(")?;
                let (line, col) = self.here();
                let (var, k) = self.bounded_binder(false)?;
                if k == 0 {
                    self.gen_sites.push((var.clone(), line, col));
                }
                self.expect_sym(")")?;
                let body = self.block()?;
                Ok(Stmt::Gen {
                    var,
                    k,
                    body: Box::new(body),
                })
            }
            _ => {
                let l = self.lvalue()?;
                if self.eat_sym("=") {
                    let e = self.expr()?;
                    self.end_stmt(closer)?;
                    Ok(Stmt::Assign(l, e))
                } else if self.eat_sym("~") {
                    let (d, args) = self.dist()?;
                    self.end_stmt(closer)?;
                    Ok(Stmt::Sample(l, d, args))
                } else {
                    self.err(format!("expected `=` or `~`, found {}", self.peek()))
                }
            }
        }
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let name = self.ident()?;
        let mut indices = Vec::new();
        while self.eat_sym("[") {
            indices.extend(self.args("]")?);
        }
        Ok(LValue { name, indices })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.additive()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("<") => "<",
                Tok::Sym(">") => ">",
                Tok::Sym("==") => "==",
                _ => return Ok(e),
            };
            self.bump();
            let r = self.additive()?;
            e = Expr::binop(op, e, r);
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut e = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => "+",
                Tok::Sym("-") => "-",
                _ => return Ok(e),
            };
            self.bump();
            let r = self.multiplicative()?;
            e = Expr::binop(op, e, r);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => "*",
                Tok::Sym("/") => "/",
                _ => return Ok(e),
            };
            self.bump();
            let r = self.unary()?;
            e = Expr::binop(op, e, r);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(match e {
                Expr::Int(i) => Expr::Int(-i),
                Expr::Real(r) => Expr::Real(-r),
                e => Expr::call("neg", vec![e]),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat_sym("[") {
            for i in self.args("]")? {
                e = Expr::index(e, i);
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Expr::Real(r))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.bump();
                if self.eat_sym("]") {
                    return Ok(Expr::ArrayLit(Vec::new()));
                }
                let first = self.expr()?;
                if self.eat_sym("|") {
                    let binder = self.ident()?;
                    self.expect_kw("in")?;
                    let lo = self.expr()?;
                    self.expect_sym(":")?;
                    let hi = self.expr()?;
                    self.expect_sym("]")?;
                    return Ok(Expr::comprehension(first, &binder, lo, hi));
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym("]")?;
                Ok(Expr::ArrayLit(items))
            }
            Tok::Ident(k) if k == "target" => {
                self.bump();
                self.expect_sym("(")?;
                let s = self.stmts_until(")")?;
                self.expect_sym(")")?;
                Ok(Expr::target(s))
            }
            // `phi` is contextual so it stays usable as a variable name.
            Tok::Ident(k) if k == "phi" && self.next_is_sym("(") => {
                self.bump();
                self.expect_sym("(")?;
                let mut binders = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        binders.push(self.bounded_binder(true)?);
                        if self.eat_sym(")") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                }
                let body = self.block()?;
                Ok(Expr::Phi {
                    binders,
                    body: Box::new(body),
                })
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat_sym("(") {
                    let args = self.args(")")?;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            t => self.err(format!("expected an expression, found {t}")),
        }
    }

    fn item(&mut self) -> PResult<Item> {
        if self.starts_decl() {
            Ok(Item::Decl(self.decl()?))
        } else {
            Ok(Item::Stmt(self.stmt(None)?))
        }
    }

    /// Skips to just past the next top-level `;` or `}`.
    fn recover(&mut self) {
        let mut depth = 0i32;
        loop {
            match self.bump() {
                Tok::Eof => return,
                Tok::Sym("{") | Tok::Sym("(") | Tok::Sym("[") => depth += 1,
                Tok::Sym("}") | Tok::Sym(")") | Tok::Sym("]") => {
                    depth -= 1;
                    if depth <= 0 && matches!(self.toks[self.pos - 1].tok, Tok::Sym("}")) {
                        return;
                    }
                }
                Tok::Sym(";") if depth <= 0 => return,
                _ => {}
            }
        }
    }
}

/// Parses a whole program.
pub fn parse(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let mut p = Parser::new(src).map_err(|d| vec![d])?;
    let mut gamma = Gamma::new();
    let mut body = Vec::new();
    let mut diags = Vec::new();
    loop {
        while p.eat_sym(";") {}
        if matches!(p.peek(), Tok::Eof) {
            break;
        }
        match p.item() {
            Ok(Item::Decl(d)) => {
                for (name, line, column) in &d.names {
                    if gamma.contains(name) {
                        diags.push(Diagnostic {
                            line: *line,
                            column: *column,
                            message: format!("duplicate declaration of `{name}`"),
                        });
                    } else {
                        gamma.insert(name, d.ty.clone(), d.level);
                    }
                }
                if let Some(s) = d.init {
                    body.push(s);
                }
            }
            Ok(Item::Stmt(s)) => body.push(s),
            Err(d) => {
                diags.push(d);
                p.recover();
            }
        }
    }
    let mut body = Stmt::seq(body);
    for (var, line, column) in std::mem::take(&mut p.gen_sites) {
        match gamma.ty(&var).and_then(|t| t.support()) {
            Some(_) => {}
            None => diags.push(Diagnostic {
                line,
                column,
                message: format!("`gen` variable `{var}` needs a declared int<K> type"),
            }),
        }
    }
    fill_gen_bounds(&mut body, &gamma);
    if diags.is_empty() {
        Ok(Program::new(gamma, body))
    } else {
        Err(diags)
    }
}

fn fill_gen_bounds(s: &mut Stmt, gamma: &Gamma<Level>) {
    match s {
        Stmt::Gen { var, k, body } => {
            if *k == 0 {
                *k = gamma.ty(var).and_then(|t| t.support()).unwrap_or(0);
            }
            fill_gen_bounds(body, gamma);
        }
        Stmt::Seq(a, b) => {
            fill_gen_bounds(a, gamma);
            fill_gen_bounds(b, gamma);
        }
        Stmt::For { body, .. } | Stmt::Elim { body, .. } => fill_gen_bounds(body, gamma),
        Stmt::If { then, els, .. } => {
            fill_gen_bounds(then, gamma);
            fill_gen_bounds(els, gamma);
        }
        _ => {}
    }
}

/// Parses a statement sequence without declarations.
pub fn parse_stmt(src: &str) -> Result<Stmt, Diagnostic> {
    let mut p = Parser::new(src)?;
    let s = p.stmts_until_eof()?;
    if let Some((var, line, column)) = p.gen_sites.first() {
        return Err(Diagnostic {
            line: *line,
            column: *column,
            message: format!("`gen` variable `{var}` needs an explicit support bound here"),
        });
    }
    Ok(s)
}

/// Parses a single expression.
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.err(format!("unexpected {} after expression", p.peek()));
    }
    Ok(e)
}

impl Parser {
    fn stmts_until_eof(&mut self) -> PResult<Stmt> {
        let mut out = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if matches!(self.peek(), Tok::Eof) {
                return Ok(Stmt::seq(out));
            }
            out.push(self.stmt(None)?);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declarations_are_hoisted() {
        let p = parse("data real x ~ normal(mu, 1); real mu;").unwrap();
        assert_eq!(p.gamma.level("x"), Some(Level::Data));
        assert!(p.gamma.get("mu").unwrap().level.is_none());
        assert_eq!(
            p.body,
            Stmt::sample("x", "normal", vec![Expr::var("mu"), Expr::Int(1)])
        );
    }

    #[test]
    fn empty_program() {
        let p = parse("skip;").unwrap();
        assert!(p.gamma.is_empty());
        assert_eq!(p.body, Stmt::Skip);
    }

    #[test]
    fn bounded_int_declaration() {
        let p = parse("int<2> z1 ~ bern(theta0);").unwrap();
        assert_eq!(p.gamma.ty("z1"), Some(&BaseType::BoundedInt(2)));
        assert_eq!(p.body, Stmt::sample("z1", "bern", vec![Expr::var("theta0")]));
    }

    #[test]
    fn multi_index_desugars_to_nested_index() {
        let e = parse_expr("f[a, b]").unwrap();
        assert_eq!(e, parse_expr("f[a][b]").unwrap());
    }

    #[test]
    fn diagnostics_have_positions() {
        let err = parse("real x;\nx = ;").unwrap_err();
        assert_eq!(err[0].line, 2);
        assert_eq!(err[0].column, 5);
        let err = parse("real x;\nreal x;").unwrap_err();
        assert_eq!((err[0].line, err[0].column), (2, 6));
    }

    #[test]
    fn target_body_may_omit_last_semicolon() {
        let e = parse_expr("target(x ~ normal(0, 1); y = 2 * x; z ~ normal(y, 1))").unwrap();
        match e {
            Expr::Target(s) => assert_eq!(s.items().len(), 3),
            _ => panic!("expected target"),
        }
    }

    #[test]
    fn gen_bound_comes_from_declaration() {
        let p = parse("int<3> z; gen(int z) { z ~ categorical([1, 2, 3]); }").unwrap();
        assert!(matches!(p.body, Stmt::Gen { k: 3, .. }));
    }
}
