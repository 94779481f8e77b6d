//! Abstract syntax: base types, expressions, statements, typing environments
//! and programs.
//!
//! The derived forms `elim`, `phi` and `gen` are kept as first-class nodes so
//! transformed programs print the way they were built; [`crate::elimgen`]
//! defines their meaning by desugaring.

use indexmap::IndexMap;
use std::fmt;

use crate::lattice::{Lattice, Level};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseType {
    Real,
    Int,
    /// Integer with support `1..=n`.
    BoundedInt(u32),
    /// Array of the element type with an optional static size.
    Array(Box<BaseType>, Option<usize>),
}

impl BaseType {
    pub fn array(elem: BaseType, size: usize) -> BaseType {
        BaseType::Array(Box::new(elem), Some(size))
    }

    /// Support bound of an `int<K>` scalar.
    pub fn support(&self) -> Option<u32> {
        match self {
            BaseType::BoundedInt(k) => Some(*k),
            _ => None,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, BaseType::Array(..))
    }

    /// Scalar type at the bottom of nested arrays.
    pub fn scalar(&self) -> &BaseType {
        match self {
            BaseType::Array(e, _) => e.scalar(),
            t => t,
        }
    }

    /// True when the scalar part is real (a continuous quantity).
    pub fn is_continuous(&self) -> bool {
        matches!(self.scalar(), BaseType::Real)
    }

    /// Array sizes from the outside in.
    pub fn dims(&self) -> Vec<Option<usize>> {
        let mut out = Vec::new();
        let mut t = self;
        while let BaseType::Array(e, n) = t {
            out.push(*n);
            t = e;
        }
        out
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseType::Real => f.write_str("real"),
            BaseType::Int => f.write_str("int"),
            BaseType::BoundedInt(n) => write!(f, "int<{n}>"),
            BaseType::Array(..) => {
                write!(f, "{}", self.scalar())?;
                for d in self.dims() {
                    match d {
                        Some(n) => write!(f, "[{n}]")?,
                        None => f.write_str("[]")?,
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(String),
    Real(f64),
    Int(i64),
    ArrayLit(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    /// Built-in call; arithmetic and comparison operators use their symbol
    /// as the name (`+`, `-`, `*`, `/`, `<`, `>`, `==`) and `neg` is unary
    /// minus.
    Call(String, Vec<Expr>),
    Comprehension {
        body: Box<Expr>,
        binder: String,
        lo: Box<Expr>,
        hi: Box<Expr>,
    },
    Target(Box<Stmt>),
    /// `phi(int<K1> z1, ..., int<Kn> zn) { S }`: the table of `target(S)`
    /// over all binder values, indexed `f[z1]...[zn]`.
    Phi {
        binders: Vec<(String, u32)>,
        body: Box<Stmt>,
    },
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.to_string(), args)
    }

    pub fn index(base: Expr, idx: Expr) -> Expr {
        Expr::Index(Box::new(base), Box::new(idx))
    }

    /// `base[i1]...[in]`.
    pub fn index_all(base: Expr, idx: impl IntoIterator<Item = Expr>) -> Expr {
        idx.into_iter().fold(base, Expr::index)
    }

    pub fn binop(op: &str, a: Expr, b: Expr) -> Expr {
        Expr::Call(op.to_string(), vec![a, b])
    }

    pub fn target(s: Stmt) -> Expr {
        Expr::Target(Box::new(s))
    }

    pub fn comprehension(body: Expr, binder: &str, lo: Expr, hi: Expr) -> Expr {
        Expr::Comprehension {
            body: Box::new(body),
            binder: binder.to_string(),
            lo: Box::new(lo),
            hi: Box::new(hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LValue {
    pub name: String,
    pub indices: Vec<Expr>,
}

impl LValue {
    pub fn var(name: &str) -> LValue {
        LValue {
            name: name.to_string(),
            indices: Vec::new(),
        }
    }

    pub fn indexed(name: &str, indices: Vec<Expr>) -> LValue {
        LValue {
            name: name.to_string(),
            indices,
        }
    }

    /// The l-value read as an expression.
    pub fn to_expr(&self) -> Expr {
        Expr::index_all(Expr::Var(self.name.clone()), self.indices.iter().cloned())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Assign(LValue, Expr),
    Seq(Box<Stmt>, Box<Stmt>),
    For {
        var: String,
        lo: Expr,
        hi: Expr,
        body: Box<Stmt>,
    },
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Box<Stmt>,
    },
    Skip,
    Factor(Expr),
    Sample(LValue, String, Vec<Expr>),
    /// `elim(int<K> z) { S }`: multiplies the weight by the sum of `target(S)`
    /// over `z in 1:K`.
    Elim {
        var: String,
        k: u32,
        body: Box<Stmt>,
    },
    /// `gen(int<K> z) { S }`: draws `z` from the normalised table of
    /// `target(S)` over `z in 1:K`.
    Gen {
        var: String,
        k: u32,
        body: Box<Stmt>,
    },
}

impl Stmt {
    pub fn assign(name: &str, e: Expr) -> Stmt {
        Stmt::Assign(LValue::var(name), e)
    }

    pub fn sample(name: &str, dist: &str, args: Vec<Expr>) -> Stmt {
        Stmt::Sample(LValue::var(name), dist.to_string(), args)
    }

    /// Right-nested sequence of the given statements with `skip` dropped.
    /// Nested sequences inside the list are flattened first.
    pub fn seq<I: IntoIterator<Item = Stmt>>(stmts: I) -> Stmt {
        let mut flat = Vec::new();
        for s in stmts {
            s.flatten_into(&mut flat);
        }
        let mut iter = flat.into_iter().rev();
        let Some(last) = iter.next() else {
            return Stmt::Skip;
        };
        iter.fold(last, |acc, s| Stmt::Seq(Box::new(s), Box::new(acc)))
    }

    fn flatten_into(self, out: &mut Vec<Stmt>) {
        match self {
            Stmt::Seq(a, b) => {
                a.flatten_into(out);
                b.flatten_into(out);
            }
            Stmt::Skip => {}
            s => out.push(s),
        }
    }

    /// Top-level statements of a sequence, `skip` dropped.
    pub fn items(&self) -> Vec<&Stmt> {
        fn go<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
            match s {
                Stmt::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Stmt::Skip => {}
                s => out.push(s),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, Stmt::Skip)
    }

    /// Canonical form: every sequence right-nested with `skip` units
    /// removed, recursively through blocks and nested target expressions.
    pub fn normalize(&self) -> Stmt {
        match self {
            Stmt::Seq(..) => Stmt::seq(self.items().into_iter().map(|s| s.normalize())),
            Stmt::Assign(l, e) => Stmt::Assign(normalize_lvalue(l), normalize_expr(e)),
            Stmt::For { var, lo, hi, body } => Stmt::For {
                var: var.clone(),
                lo: normalize_expr(lo),
                hi: normalize_expr(hi),
                body: Box::new(body.normalize()),
            },
            Stmt::If { cond, then, els } => Stmt::If {
                cond: normalize_expr(cond),
                then: Box::new(then.normalize()),
                els: Box::new(els.normalize()),
            },
            Stmt::Skip => Stmt::Skip,
            Stmt::Factor(e) => Stmt::Factor(normalize_expr(e)),
            Stmt::Sample(l, d, args) => Stmt::Sample(
                normalize_lvalue(l),
                d.clone(),
                args.iter().map(normalize_expr).collect(),
            ),
            Stmt::Elim { var, k, body } => Stmt::Elim {
                var: var.clone(),
                k: *k,
                body: Box::new(body.normalize()),
            },
            Stmt::Gen { var, k, body } => Stmt::Gen {
                var: var.clone(),
                k: *k,
                body: Box::new(body.normalize()),
            },
        }
    }
}

fn normalize_lvalue(l: &LValue) -> LValue {
    LValue {
        name: l.name.clone(),
        indices: l.indices.iter().map(normalize_expr).collect(),
    }
}

fn normalize_expr(e: &Expr) -> Expr {
    match e {
        Expr::Var(_) | Expr::Real(_) | Expr::Int(_) => e.clone(),
        Expr::ArrayLit(es) => Expr::ArrayLit(es.iter().map(normalize_expr).collect()),
        Expr::Index(a, b) => Expr::index(normalize_expr(a), normalize_expr(b)),
        Expr::Call(f, args) => Expr::Call(f.clone(), args.iter().map(normalize_expr).collect()),
        Expr::Comprehension { body, binder, lo, hi } => Expr::Comprehension {
            body: Box::new(normalize_expr(body)),
            binder: binder.clone(),
            lo: Box::new(normalize_expr(lo)),
            hi: Box::new(normalize_expr(hi)),
        },
        Expr::Target(s) => Expr::Target(Box::new(s.normalize())),
        Expr::Phi { binders, body } => Expr::Phi {
            binders: binders.clone(),
            body: Box::new(body.normalize()),
        },
    }
}

/// One entry of a typing environment. `level: None` is an inference
/// placeholder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry<L> {
    pub ty: BaseType,
    pub level: Option<L>,
}

/// Ordered typing environment; iteration follows declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gamma<L> {
    entries: IndexMap<String, Entry<L>>,
}

impl<L> Default for Gamma<L> {
    fn default() -> Self {
        Gamma {
            entries: IndexMap::new(),
        }
    }
}

impl<L: Lattice> Gamma<L> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces an entry, keeping the original position on replace.
    pub fn insert(&mut self, name: &str, ty: BaseType, level: Option<L>) {
        self.entries.insert(name.to_string(), Entry { ty, level });
    }

    pub fn get(&self, name: &str) -> Option<&Entry<L>> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn ty(&self, name: &str) -> Option<&BaseType> {
        self.entries.get(name).map(|e| &e.ty)
    }

    /// Concrete level of a variable, `None` if unbound or a placeholder.
    pub fn level(&self, name: &str) -> Option<L> {
        self.entries.get(name).and_then(|e| e.level)
    }

    pub fn set_level(&mut self, name: &str, level: Option<L>) {
        if let Some(e) = self.entries.get_mut(name) {
            e.level = level;
        }
    }

    pub fn remove(&mut self, name: &str) -> Option<Entry<L>> {
        self.entries.shift_remove(name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.get_index_of(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Entry<L>)> {
        self.entries.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn is_concrete(&self) -> bool {
        self.entries.values().all(|e| e.level.is_some())
    }

    pub fn placeholders(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, e)| e.level.is_none())
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Names whose concrete level is exactly `level`.
    pub fn at_level(&self, level: L) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, e)| e.level == Some(level))
            .map(|(n, _)| n.clone())
            .collect()
    }
}

/// A program is its typing environment paired with a statement.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub gamma: Gamma<Level>,
    pub body: Stmt,
}

impl Program {
    pub fn new(gamma: Gamma<Level>, body: Stmt) -> Program {
        Program { gamma, body }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seq_is_right_nested_without_skips() {
        let a = Stmt::assign("a", Expr::Int(1));
        let b = Stmt::assign("b", Expr::Int(2));
        let s = Stmt::seq([
            Stmt::Skip,
            Stmt::Seq(Box::new(a.clone()), Box::new(Stmt::Skip)),
            b.clone(),
        ]);
        assert_eq!(s, Stmt::Seq(Box::new(a), Box::new(b)));
        assert_eq!(Stmt::seq([Stmt::Skip, Stmt::Skip]), Stmt::Skip);
    }

    #[test]
    fn base_type_display() {
        let t = BaseType::array(BaseType::array(BaseType::Real, 3), 2);
        assert_eq!(t.to_string(), "real[2][3]");
        assert_eq!(BaseType::BoundedInt(4).to_string(), "int<4>");
        assert_eq!(t.dims(), vec![Some(2), Some(3)]);
    }
}
