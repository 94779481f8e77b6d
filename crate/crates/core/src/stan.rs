//! Stan code generation.
//!
//! The program is shredded by level. The data slice becomes
//! `transformed data`, the store part of the model slice becomes
//! `transformed parameters`, its density part becomes `model`, and the
//! generated-quantities slice becomes `generated quantities` with every
//! `~` turned into a draw. The derived forms `phi`, `elim` and `gen` are
//! lowered to loops over log-scale accumulators.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::analysis;
use crate::ast::{BaseType, Expr, LValue, Program, Stmt};
use crate::elimgen::store_of;
use crate::lattice::Level;
use crate::shred::{shred, ShredError};
use crate::typing::base::infer_levels;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum StanError {
    #[error("the program does not type: {0}")]
    Untyped(String),
    #[error(transparent)]
    Shred(#[from] ShredError),
    #[error("`{0}` is a discrete model parameter; eliminate it first")]
    DiscreteParameter(String),
    #[error("`{0}` is reassigned after a density read it")]
    AssignAfterUse(String),
    #[error("`{0}` has an array type without a static size")]
    UnsizedArray(String),
    #[error("unsupported in Stan output: {0}")]
    Unsupported(String),
}

type R<T> = Result<T, StanError>;

/// Translates a program to Stan. Programs with placeholder levels are
/// inferred first.
pub fn emit_stan(p: &Program) -> R<String> {
    let gamma = if p.gamma.is_concrete() {
        p.gamma.clone()
    } else {
        let rep = infer_levels(p);
        if !rep.ok {
            let msg = rep.violations.first().map(|v| v.to_string()).unwrap_or_default();
            return Err(StanError::Untyped(msg));
        }
        rep.resolved
    };
    let sh = shred(&gamma, &p.body)?;
    let (s_d, s_m, s_q) = (sh.get(Level::Data), sh.get(Level::Model), sh.get(Level::GenQuant));
    let assigned = analysis::assigned_anywhere(&p.body);

    let mut data = Vec::new();
    let mut tdata = Vec::new();
    let mut params = Vec::new();
    let mut tparams = Vec::new();
    let mut gq = Vec::new();
    for (n, e) in gamma.iter() {
        let slot = match (e.level.expect("concrete"), assigned.contains(n)) {
            (Level::Data, false) => &mut data,
            (Level::Data, true) => &mut tdata,
            (Level::Model, false) => {
                if !e.ty.is_continuous() {
                    return Err(StanError::DiscreteParameter(n.clone()));
                }
                &mut params
            }
            (Level::Model, true) => &mut tparams,
            (Level::GenQuant, _) => &mut gq,
        };
        slot.push(n.clone());
    }

    check_no_reassignment(s_m)?;
    let model_part = densities_of(s_m);
    let store_part = store_of(s_m);
    let bounded = unit_interval_params(&model_part);

    let mut em = Emitter::new(&gamma);
    let mut out = String::new();
    out.push_str(&em.plain_block("data", &data, &BTreeSet::new())?);
    if !tdata.is_empty() || !s_d.is_skip() {
        out.push_str(&em.block("transformed data", &tdata, s_d, Mode::Store)?);
    }
    out.push_str(&em.plain_block("parameters", &params, &bounded)?);
    if !tparams.is_empty() || !store_part.is_skip() {
        out.push_str(&em.block("transformed parameters", &tparams, &store_part, Mode::Store)?);
    }
    out.push_str(&em.block("model", &[], &model_part, Mode::Model)?);
    out.push_str(&em.block("generated quantities", &gq, s_q, Mode::Generate)?);
    Ok(out)
}

/// Collapses whitespace for comparing generated code with a reference:
/// runs become one space and whitespace next to punctuation goes.
pub fn normalize_whitespace(s: &str) -> String {
    let words: Vec<&str> = s.split_whitespace().collect();
    let mut out = String::new();
    for w in words {
        let joins = |c: Option<char>| c.is_some_and(|c| !(c.is_alphanumeric() || c == '_'));
        if !out.is_empty() && !joins(out.chars().last()) && !joins(w.chars().next()) {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// The density statements of a slice: assignments dropped, loops and
/// conditionals kept where anything remains.
fn densities_of(s: &Stmt) -> Stmt {
    match s {
        Stmt::Assign(..) | Stmt::Skip => Stmt::Skip,
        Stmt::Factor(_) | Stmt::Sample(..) | Stmt::Elim { .. } | Stmt::Gen { .. } => s.clone(),
        Stmt::Seq(a, b) => Stmt::seq([densities_of(a), densities_of(b)]),
        Stmt::For { var, lo, hi, body } => match densities_of(body) {
            Stmt::Skip => Stmt::Skip,
            b => Stmt::For {
                var: var.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
                body: Box::new(b),
            },
        },
        Stmt::If { cond, then, els } => {
            let (t, e) = (densities_of(then), densities_of(els));
            if t.is_skip() && e.is_skip() {
                Stmt::Skip
            } else {
                Stmt::If {
                    cond: cond.clone(),
                    then: Box::new(t),
                    els: Box::new(e),
                }
            }
        }
    }
}

/// Hoisting assignments into `transformed parameters` is sound only when
/// no variable is written after a density statement has read it. Loop
/// bodies are walked twice to catch writes that feed the next iteration.
fn check_no_reassignment(s: &Stmt) -> R<()> {
    fn go(s: &Stmt, read: &mut BTreeSet<String>) -> R<()> {
        match s {
            Stmt::Assign(l, _) => {
                if read.contains(&l.name) {
                    return Err(StanError::AssignAfterUse(l.name.clone()));
                }
            }
            Stmt::Factor(_) | Stmt::Sample(..) | Stmt::Elim { .. } | Stmt::Gen { .. } => {
                read.extend(analysis::free_vars(s));
            }
            Stmt::Seq(a, b) => {
                go(a, read)?;
                go(b, read)?;
            }
            Stmt::For { body, .. } => {
                go(body, read)?;
                go(body, read)?;
            }
            Stmt::If { then, els, .. } => {
                let mut r2 = read.clone();
                go(then, read)?;
                go(els, &mut r2)?;
                read.extend(r2);
            }
            Stmt::Skip => {}
        }
        Ok(())
    }
    go(s, &mut BTreeSet::new())
}

/// Parameters given a beta prior, declared on the unit interval so the
/// sampler stays in the support.
fn unit_interval_params(s: &Stmt) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn go(s: &Stmt, out: &mut BTreeSet<String>) {
        match s {
            Stmt::Sample(l, d, _) if d == "beta" => {
                out.insert(l.name.clone());
            }
            Stmt::Seq(a, b) => {
                go(a, out);
                go(b, out);
            }
            Stmt::For { body, .. } => go(body, out),
            Stmt::If { then, els, .. } => {
                go(then, out);
                go(els, out);
            }
            _ => {}
        }
    }
    go(s, &mut out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Assignments only.
    Store,
    /// `~` keeps its Stan meaning and factors add to `target`.
    Model,
    /// `~` becomes a draw.
    Generate,
}

struct Emitter<'a> {
    gamma: &'a crate::ast::Gamma<Level>,
    used: BTreeSet<String>,
    /// Globals renamed away from Stan keywords and library names.
    globals: Env,
}

/// Names Stan reserves or defines as nullary and common functions.
const RESERVED: &[&str] = &[
    "array", "auto", "bernoulli", "beta", "break", "categorical", "continue", "data", "e", "else", "exp",
    "for", "functions", "gamma", "if", "in", "int", "inv", "log", "log10", "log2", "logit", "lower",
    "matrix", "max", "mean", "min", "model", "multiplier", "normal", "offset", "parameters", "pi",
    "print", "profile", "quantities", "real", "reject", "return", "sd", "sqrt2", "step", "sum",
    "target", "tuple", "upper", "variance", "vector", "void", "while",
];

const INDENT: &str = "  ";

impl<'a> Emitter<'a> {
    fn new(gamma: &'a crate::ast::Gamma<Level>) -> Self {
        Emitter {
            gamma,
            used: gamma.names().cloned().collect(),
            globals: gamma
                .names()
                .filter(|n| RESERVED.contains(&n.as_str()))
                .map(|n| (n.clone(), format!("{n}_")))
                .collect(),
        }
        .reserve_renames()
    }

    fn reserve_renames(mut self) -> Self {
        self.used.extend(self.globals.values().cloned());
        self
    }

    fn global(&self, name: &str) -> String {
        self.globals.get(name).cloned().unwrap_or_else(|| name.to_string())
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut i = 1;
        loop {
            let n = format!("{base}_{i}");
            if self.used.insert(n.clone()) {
                return n;
            }
            i += 1;
        }
    }

    fn local_name(&mut self, x: &str) -> String {
        let n = format!("{x}_loc");
        if self.used.insert(n.clone()) {
            n
        } else {
            self.fresh(&n)
        }
    }

    fn ty(&self, name: &str) -> R<&BaseType> {
        self.gamma
            .ty(name)
            .ok_or_else(|| StanError::Unsupported(format!("undeclared `{name}`")))
    }

    /// Declaration text without the trailing `;`. Locals cannot carry
    /// constraints.
    fn decl(&self, name: &str, ty: &BaseType, local: bool, unit: bool) -> R<String> {
        let scalar = match ty.scalar() {
            BaseType::Real if unit && !local => "real<lower=0, upper=1>".to_string(),
            BaseType::Real => "real".to_string(),
            BaseType::BoundedInt(k) if !local => format!("int<lower=1, upper={k}>"),
            _ => "int".to_string(),
        };
        let dims = ty.dims();
        if dims.is_empty() {
            return Ok(format!("{scalar} {name}"));
        }
        let sizes = dims
            .iter()
            .map(|d| d.map(|n| n.to_string()).ok_or_else(|| StanError::UnsizedArray(name.to_string())))
            .collect::<R<Vec<_>>>()?;
        Ok(format!("array[{}] {scalar} {name}", sizes.join(", ")))
    }

    fn plain_block(&self, title: &str, vars: &[String], unit: &BTreeSet<String>) -> R<String> {
        let mut out = format!("{title} {{\n");
        for v in vars {
            out.push_str(&format!("{INDENT}{};\n", self.decl(&self.global(v), self.ty(v)?, false, unit.contains(v))?));
        }
        out.push_str("}\n");
        Ok(out)
    }

    /// A block declaring `vars` and running `body`. A variable whose first
    /// mention is a plain top-level write is declared at that write.
    fn block(&mut self, title: &str, vars: &[String], body: &Stmt, mode: Mode) -> R<String> {
        let items = body.items();
        let mut inline = BTreeSet::new();
        let mut seen = BTreeSet::new();
        // Only a leading run of writes is inlined, so every declaration
        // still precedes the first statement.
        for s in &items {
            match plain_write(s, mode) {
                Some(x) if vars.contains(&x.to_string()) && !seen.contains(x) && !analysis::free_vars_expr(&rhs(s)).contains(x) => {
                    inline.insert(x.to_string());
                }
                _ => break,
            }
            seen.extend(analysis::free_vars(s));
        }
        let mut out = format!("{title} {{\n");
        for v in vars.iter().filter(|v| !inline.contains(*v)) {
            out.push_str(&format!("{INDENT}{};\n", self.decl(&self.global(v), self.ty(v)?, false, false)?));
        }
        let env = self.globals.clone();
        for s in items {
            match plain_write(s, mode).filter(|x| inline.remove(*x)) {
                Some(x) => {
                    let g = self.global(x);
                    let d = self.decl(&g, self.ty(x)?, false, false)?;
                    let line = self.top_stmt(s, 1, mode, &env)?;
                    out.push_str(&format!("{INDENT}{d}{}", &line.trim_start()[g.len()..]));
                }
                None => out.push_str(&self.top_stmt(s, 1, mode, &env)?),
            }
        }
        out.push_str("}\n");
        Ok(out)
    }

    /// A statement outside any accumulator.
    fn top_stmt(&mut self, s: &Stmt, depth: usize, mode: Mode, env: &Env) -> R<String> {
        let p = INDENT.repeat(depth);
        Ok(match s {
            Stmt::Skip => String::new(),
            Stmt::Seq(..) => {
                let mut out = String::new();
                for i in s.items() {
                    out.push_str(&self.top_stmt(i, depth, mode, env)?);
                }
                out
            }
            Stmt::Assign(l, Expr::Phi { binders, body }) => self.phi(l, binders, body, depth, env)?,
            Stmt::Assign(l, e) => format!("{p}{} = {};\n", self.lvalue(l, env)?, self.expr(e, env)?),
            Stmt::For { var, lo, hi, body } => {
                let mut inner = env.clone();
                let v = self.local_name(var);
                inner.insert(var.clone(), v.clone());
                format!(
                    "{p}for ({v} in {}:{}) {{\n{}{p}}}\n",
                    self.expr(lo, env)?,
                    self.expr(hi, env)?,
                    self.top_stmt(body, depth + 1, mode, &inner)?
                )
            }
            Stmt::If { cond, then, els } => {
                let mut t = format!(
                    "{p}if ({}) {{\n{}{p}}}",
                    self.expr(cond, env)?,
                    self.top_stmt(then, depth + 1, mode, env)?
                );
                if !els.is_skip() {
                    t.push_str(&format!(" else {{\n{}{p}}}", self.top_stmt(els, depth + 1, mode, env)?));
                }
                t.push('\n');
                t
            }
            Stmt::Factor(e) => match mode {
                Mode::Model => format!("{p}target += log({});\n", self.expr(e, env)?),
                _ => return Err(StanError::Unsupported("`factor` outside the model block".into())),
            },
            Stmt::Sample(l, d, args) => match mode {
                Mode::Model if is_bern(d) => format!("{p}target += {};\n", self.log_density(l, d, args, env)?),
                Mode::Model => format!("{p}{} ~ {};\n", self.lvalue(l, env)?, self.dist_call(d, args, env)?),
                Mode::Generate => format!("{p}{} = {};\n", self.lvalue(l, env)?, self.draw(d, args, env)?),
                Mode::Store => return Err(StanError::Unsupported("`~` in a store-only block".into())),
            },
            Stmt::Elim { var, k, body } => {
                if mode != Mode::Model {
                    return Err(StanError::Unsupported("`elim` outside the model block".into()));
                }
                self.elim(var, *k, body, "target", depth, env)?
            }
            Stmt::Gen { var, k, body } => {
                if mode != Mode::Generate {
                    return Err(StanError::Unsupported("`gen` outside generated quantities".into()));
                }
                self.gen(var, *k, body, depth, env)?
            }
        })
    }

    /// `f = phi(z1, ..., zn) { S }`: one accumulator per cell.
    fn phi(&mut self, f: &LValue, binders: &[(String, u32)], body: &Stmt, depth: usize, env: &Env) -> R<String> {
        let mut inner = env.clone();
        let mut idx = Vec::new();
        let mut heads = Vec::new();
        for (z, k) in binders {
            let v = self.local_name(z);
            inner.insert(z.clone(), v.clone());
            heads.push(format!("for ({v} in 1:{k}) {{"));
            idx.push(v);
        }
        let acc = self.fresh("acc");
        let target = match (self.lvalue(f, env)?, idx.is_empty()) {
            (t, true) => t,
            (t, false) if f.indices.is_empty() => format!("{t}[{}]", idx.join(", ")),
            (t, false) => format!("{}, {}]", t.trim_end_matches(']'), idx.join(", ")),
        };
        let mut out = String::new();
        let mut d = depth;
        for h in &heads {
            out.push_str(&format!("{}{h}\n", INDENT.repeat(d)));
            d += 1;
        }
        let p = INDENT.repeat(d);
        if heads.is_empty() {
            out.push_str(&format!("{}{{\n", INDENT.repeat(depth)));
            d += 1;
        }
        let p2 = INDENT.repeat(d);
        out.push_str(&format!("{p2}real {acc} = 0;\n"));
        out.push_str(&self.scoped_body(body, &acc, "", d, &inner)?);
        out.push_str(&format!("{p2}{target} = exp({acc});\n"));
        if heads.is_empty() {
            out.push_str(&format!("{p}}}\n"));
        }
        for i in (0..heads.len()).rev() {
            out.push_str(&format!("{}}}\n", INDENT.repeat(depth + i)));
        }
        Ok(out)
    }

    /// `elim(z) { S }` adding `log_sum_exp` of the per-value accumulators
    /// to `into`.
    fn elim(&mut self, z: &str, k: u32, body: &Stmt, into: &str, depth: usize, env: &Env) -> R<String> {
        let (open, table, close) = self.table(z, k, body, depth, env)?;
        let p1 = INDENT.repeat(depth + 1);
        Ok(format!("{open}{p1}{into} += log_sum_exp({table});\n{close}"))
    }

    /// `gen(z) { S }`: draws `z` from the softmax of the accumulators.
    fn gen(&mut self, z: &str, k: u32, body: &Stmt, depth: usize, env: &Env) -> R<String> {
        let (open, table, close) = self.table(z, k, body, depth, env)?;
        let p1 = INDENT.repeat(depth + 1);
        let zt = env.get(z).cloned().unwrap_or_else(|| z.to_string());
        Ok(format!("{open}{p1}{zt} = categorical_rng(softmax({table}));\n{close}"))
    }

    /// Opens a scope holding `vector[k] table` filled with the log weight
    /// of `body` at each value of `z`.
    fn table(&mut self, z: &str, k: u32, body: &Stmt, depth: usize, env: &Env) -> R<(String, String, String)> {
        let p = INDENT.repeat(depth);
        let p1 = INDENT.repeat(depth + 1);
        let p2 = INDENT.repeat(depth + 2);
        let table = self.fresh("acc");
        let zl = self.local_name(z);
        let mut inner = env.clone();
        inner.insert(z.to_string(), zl.clone());
        let cell = format!("{table}[{zl}]");
        let mut open = format!("{p}{{\n{p1}vector[{k}] {table};\n{p1}for ({zl} in 1:{k}) {{\n");
        let init = format!("{p2}{cell} = 0;\n");
        open.push_str(&self.scoped_body(body, &cell, &init, depth + 2, &inner)?);
        open.push_str(&format!("{p1}}}\n"));
        Ok((open, table, format!("{p}}}\n")))
    }

    /// Declares locals for everything `body` assigns, runs `init`, then
    /// lowers the body.
    fn scoped_body(&mut self, body: &Stmt, acc: &str, init: &str, depth: usize, env: &Env) -> R<String> {
        let p = INDENT.repeat(depth);
        let mut inner = env.clone();
        let mut out = String::new();
        for x in analysis::assigned_anywhere(body) {
            if inner.contains_key(&x) {
                continue;
            }
            let l = self.local_name(&x);
            out.push_str(&format!("{p}{};\n", self.decl(&l, &self.ty(&x)?.clone(), true, false)?));
            inner.insert(x, l);
        }
        out.push_str(init);
        out.push_str(&self.acc_stmt(body, acc, depth, &inner)?);
        Ok(out)
    }

    /// A statement whose densities go to the log accumulator `acc`.
    fn acc_stmt(&mut self, s: &Stmt, acc: &str, depth: usize, env: &Env) -> R<String> {
        let p = INDENT.repeat(depth);
        Ok(match s {
            Stmt::Skip => String::new(),
            Stmt::Seq(..) => {
                let mut out = String::new();
                for i in s.items() {
                    out.push_str(&self.acc_stmt(i, acc, depth, env)?);
                }
                out
            }
            Stmt::Assign(l, Expr::Phi { binders, body }) => self.phi(l, binders, body, depth, env)?,
            Stmt::Assign(l, e) => format!("{p}{} = {};\n", self.lvalue(l, env)?, self.expr(e, env)?),
            Stmt::Factor(e) => format!("{p}{acc} += log({});\n", self.expr(e, env)?),
            Stmt::Sample(l, d, args) => format!("{p}{acc} += {};\n", self.log_density(l, d, args, env)?),
            Stmt::For { var, lo, hi, body } => {
                let mut inner = env.clone();
                let v = self.local_name(var);
                inner.insert(var.clone(), v.clone());
                format!(
                    "{p}for ({v} in {}:{}) {{\n{}{p}}}\n",
                    self.expr(lo, env)?,
                    self.expr(hi, env)?,
                    self.acc_stmt(body, acc, depth + 1, &inner)?
                )
            }
            Stmt::If { cond, then, els } => {
                let mut t = format!(
                    "{p}if ({}) {{\n{}{p}}}",
                    self.expr(cond, env)?,
                    self.acc_stmt(then, acc, depth + 1, env)?
                );
                if !els.is_skip() {
                    t.push_str(&format!(" else {{\n{}{p}}}", self.acc_stmt(els, acc, depth + 1, env)?));
                }
                t.push('\n');
                t
            }
            Stmt::Elim { var, k, body } => self.elim(var, *k, body, acc, depth, env)?,
            Stmt::Gen { var, k, body } => {
                // Inside a density a `gen` only adds the weight of its draw,
                // which the enclosing accumulator cannot express.
                let _ = (var, k, body);
                return Err(StanError::Unsupported("`gen` inside a factor body".into()));
            }
        })
    }

    fn log_density(&self, l: &LValue, d: &str, args: &[Expr], env: &Env) -> R<String> {
        let x = self.lvalue(l, env)?;
        let a = self.args(args, env)?;
        match d {
            "bern" | "bernoulli" => {
                if self.lvalue_is_array(l)? {
                    return Err(StanError::Unsupported(format!("`bernoulli` on the array `{}`", l.name)));
                }
                Ok(format!("bernoulli_lpmf({x} - 1 | {a})"))
            }
            "categorical" => Ok(format!("categorical_lpmf({x} | {})", simplex(&a))),
            _ => Ok(format!("{d}_lpdf({x} | {a})")),
        }
    }

    fn dist_call(&self, d: &str, args: &[Expr], env: &Env) -> R<String> {
        let a = self.args(args, env)?;
        Ok(match d {
            "categorical" => format!("categorical({})", simplex(&a)),
            _ => format!("{d}({a})"),
        })
    }

    fn draw(&self, d: &str, args: &[Expr], env: &Env) -> R<String> {
        let a = self.args(args, env)?;
        Ok(match d {
            "bern" | "bernoulli" => format!("bernoulli_rng({a}) + 1"),
            "categorical" => format!("categorical_rng({})", simplex(&a)),
            _ => format!("{d}_rng({a})"),
        })
    }

    fn lvalue_is_array(&self, l: &LValue) -> R<bool> {
        Ok(self.ty(&l.name)?.dims().len() > l.indices.len())
    }

    fn lvalue(&self, l: &LValue, env: &Env) -> R<String> {
        let name = env.get(&l.name).cloned().unwrap_or_else(|| l.name.clone());
        if l.indices.is_empty() {
            return Ok(name);
        }
        Ok(format!("{name}[{}]", self.args(&l.indices, env)?))
    }

    fn args(&self, args: &[Expr], env: &Env) -> R<String> {
        Ok(args
            .iter()
            .map(|a| self.expr(a, env))
            .collect::<R<Vec<_>>>()?
            .join(", "))
    }

    fn expr(&self, e: &Expr, env: &Env) -> R<String> {
        self.expr_at(e, 0, env)
    }

    fn expr_at(&self, e: &Expr, min: u8, env: &Env) -> R<String> {
        let (text, prec) = match e {
            Expr::Var(x) => (env.get(x).cloned().unwrap_or_else(|| x.clone()), ATOM),
            Expr::Int(i) => (i.to_string(), if *i < 0 { UNARY } else { ATOM }),
            Expr::Real(r) => (real(*r), if r.is_sign_negative() { UNARY } else { ATOM }),
            Expr::ArrayLit(es) => (format!("{{{}}}", self.args(es, env)?), ATOM),
            Expr::Index(..) => {
                let mut idx = Vec::new();
                let mut base = e;
                while let Expr::Index(b, i) = base {
                    idx.push(self.expr(i, env)?);
                    base = b;
                }
                idx.reverse();
                (format!("{}[{}]", self.expr_at(base, ATOM, env)?, idx.join(", ")), ATOM)
            }
            Expr::Call(op, args) if args.len() == 2 && binop_prec(op).is_some() => {
                let p = binop_prec(op).unwrap();
                // Division is real division; keep Stan from truncating.
                let lhs = match (&args[0], op.as_str()) {
                    (Expr::Int(i), "/") => real(*i as f64),
                    (a, _) => self.expr_at(a, p, env)?,
                };
                (format!("{lhs} {op} {}", self.expr_at(&args[1], p + 1, env)?), p)
            }
            Expr::Call(op, args) if op == "neg" && args.len() == 1 => {
                (format!("-{}", self.expr_at(&args[0], ATOM, env)?), UNARY)
            }
            Expr::Call(f, args) => (format!("{f}({})", self.args(args, env)?), ATOM),
            Expr::Comprehension { .. } | Expr::Target(_) | Expr::Phi { .. } => {
                return Err(StanError::Unsupported(format!(
                    "the expression `{}` outside a factor definition",
                    crate::pretty::expr(e)
                )))
            }
        };
        Ok(if prec < min { format!("({text})") } else { text })
    }
}

type Env = BTreeMap<String, String>;

const UNARY: u8 = 4;
const ATOM: u8 = 5;

fn binop_prec(op: &str) -> Option<u8> {
    match op {
        "<" | ">" | "==" => Some(1),
        "+" | "-" => Some(2),
        "*" | "/" => Some(3),
        _ => None,
    }
}

fn real(r: f64) -> String {
    let t = format!("{r:?}");
    if t.contains('.') || t.contains('e') {
        t
    } else {
        format!("{t}.0")
    }
}

fn simplex(w: &str) -> String {
    format!("to_vector({w}) / sum({w})")
}

fn is_bern(d: &str) -> bool {
    matches!(d, "bern" | "bernoulli")
}

/// The variable a top-level statement writes whole, if it is a plain
/// assignment (or a draw, in generated quantities).
fn plain_write(s: &Stmt, mode: Mode) -> Option<&str> {
    match s {
        Stmt::Assign(l, e) if l.indices.is_empty() && !matches!(e, Expr::Phi { .. }) => Some(&l.name),
        Stmt::Sample(l, _, _) if l.indices.is_empty() && mode == Mode::Generate => Some(&l.name),
        _ => None,
    }
}

fn rhs(s: &Stmt) -> Expr {
    match s {
        Stmt::Assign(_, e) => e.clone(),
        Stmt::Sample(_, _, args) => Expr::ArrayLit(args.clone()),
        _ => Expr::Int(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn stan(src: &str) -> String {
        emit_stan(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn whitespace_normalisation() {
        assert_eq!(normalize_whitespace("data {\n  real x;\n}"), "data{real x;}");
        assert_eq!(normalize_whitespace("a  ~ normal( mu , 1 )"), "a~normal(mu,1)");
    }

    #[test]
    fn blocks_follow_levels() {
        let s = stan("data real y; real m ~ beta(1, 1); y ~ normal(m, 1); genquant real q ~ normal(m, 1);");
        assert!(s.contains("real<lower=0, upper=1> m;"), "{s}");
        assert!(s.contains("y ~ normal(m, 1);"));
        assert!(s.contains("real q = normal_rng(m, 1);"));
    }

    #[test]
    fn bernoulli_is_shifted() {
        let s = stan("data int<2> b; real p ~ beta(1, 1); b ~ bern(p); genquant int<2> c ~ bern(p);");
        assert!(s.contains("target += bernoulli_lpmf(b - 1 | p);"), "{s}");
        assert!(s.contains("c = bernoulli_rng(p) + 1;"), "{s}");
    }

    #[test]
    fn discrete_parameters_are_refused() {
        let p = parse("model int<2> z ~ bern(0.5); data real y ~ normal(z, 1);").unwrap();
        assert_eq!(emit_stan(&p), Err(StanError::DiscreteParameter("z".into())));
    }

    #[test]
    fn elim_lowers_to_log_sum_exp() {
        let s = stan("data real y; model real m ~ normal(0, 1); elim(int<2> z) { y ~ normal(m * z, 1); }");
        assert!(s.contains("vector[2] acc_1;"), "{s}");
        assert!(s.contains("acc_1[z_loc] += normal_lpdf(y | m * z_loc, 1);"), "{s}");
        assert!(s.contains("target += log_sum_exp(acc_1);"), "{s}");
    }

    #[test]
    fn reassignment_after_use_is_refused() {
        let p = parse("data real y; real m ~ normal(0, 1); model real a = m; y ~ normal(a, 1); a = 2 * m; y ~ normal(a, 1);")
            .unwrap();
        assert_eq!(emit_stan(&p), Err(StanError::AssignAfterUse("a".into())));
    }

    #[test]
    fn reserved_names_are_renamed() {
        let s = stan("data real[2] pi; real m ~ normal(pi[2], 1); genquant real q = pi[1];");
        assert!(s.contains("array[2] real pi_;"), "{s}");
        assert!(s.contains("real q = pi_[1];"), "{s}");
    }
}
