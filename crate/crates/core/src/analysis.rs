//! Syntactic analysis sets: free variables, assigned variables `W`, read
//! variables `R` and sampled variables `W~`, plus their per-level versions.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{Expr, Gamma, LValue, Stmt};
use crate::flow::{self, FlowError};
use crate::lattice::Lattice;

pub type NameSet = BTreeSet<String>;

/// Free variables of an expression; comprehension and `phi` binders are
/// removed.
pub fn free_vars_expr(e: &Expr) -> NameSet {
    let mut out = NameSet::new();
    fv_expr(e, &mut out);
    out
}

/// Free variables of a statement; loop and derived-form binders are
/// removed.
pub fn free_vars(s: &Stmt) -> NameSet {
    let mut out = NameSet::new();
    fv_stmt(s, &mut out);
    out
}

fn fv_expr(e: &Expr, out: &mut NameSet) {
    match e {
        Expr::Var(x) => {
            out.insert(x.clone());
        }
        Expr::Real(_) | Expr::Int(_) => {}
        Expr::ArrayLit(es) | Expr::Call(_, es) => es.iter().for_each(|e| fv_expr(e, out)),
        Expr::Index(a, b) => {
            fv_expr(a, out);
            fv_expr(b, out);
        }
        Expr::Comprehension { body, binder, lo, hi } => {
            let mut inner = free_vars_expr(body);
            inner.remove(binder);
            out.extend(inner);
            fv_expr(lo, out);
            fv_expr(hi, out);
        }
        Expr::Target(s) => fv_stmt(s, out),
        Expr::Phi { binders, body } => {
            let mut inner = free_vars(body);
            for (b, _) in binders {
                inner.remove(b);
            }
            out.extend(inner);
        }
    }
}

fn fv_lvalue(l: &LValue, out: &mut NameSet) {
    out.insert(l.name.clone());
    l.indices.iter().for_each(|e| fv_expr(e, out));
}

fn fv_stmt(s: &Stmt, out: &mut NameSet) {
    match s {
        Stmt::Assign(l, e) => {
            fv_lvalue(l, out);
            fv_expr(e, out);
        }
        Stmt::Seq(a, b) => {
            fv_stmt(a, out);
            fv_stmt(b, out);
        }
        Stmt::For { var, lo, hi, body } => {
            let mut inner = free_vars(body);
            inner.remove(var);
            out.extend(inner);
            fv_expr(lo, out);
            fv_expr(hi, out);
        }
        Stmt::If { cond, then, els } => {
            fv_expr(cond, out);
            fv_stmt(then, out);
            fv_stmt(els, out);
        }
        Stmt::Skip => {}
        Stmt::Factor(e) => fv_expr(e, out),
        Stmt::Sample(l, _, args) => {
            fv_lvalue(l, out);
            args.iter().for_each(|e| fv_expr(e, out));
        }
        Stmt::Elim { var, body, .. } => {
            let mut inner = free_vars(body);
            inner.remove(var);
            out.extend(inner);
        }
        Stmt::Gen { var, body, .. } => {
            fv_stmt(body, out);
            out.insert(var.clone());
        }
    }
}

/// `W(S)`: variables assigned by `S` outside nested target expressions.
pub fn writes(s: &Stmt) -> NameSet {
    match s {
        Stmt::Assign(l, _) => NameSet::from([l.name.clone()]),
        Stmt::Seq(a, b) => &writes(a) | &writes(b),
        Stmt::For { var, body, .. } => {
            let mut w = writes(body);
            w.remove(var);
            w
        }
        Stmt::If { then, els, .. } => &writes(then) | &writes(els),
        Stmt::Skip | Stmt::Factor(_) | Stmt::Sample(..) | Stmt::Elim { .. } | Stmt::Gen { .. } => {
            NameSet::new()
        }
    }
}

/// `W~(S)`: variables on the left of a `~`, including those drawn by `gen`.
pub fn sampled(s: &Stmt) -> NameSet {
    match s {
        Stmt::Sample(l, _, _) => NameSet::from([l.name.clone()]),
        Stmt::Gen { var, .. } => NameSet::from([var.clone()]),
        Stmt::Seq(a, b) => &sampled(a) | &sampled(b),
        Stmt::For { var, body, .. } => {
            let mut w = sampled(body);
            w.remove(var);
            w
        }
        Stmt::If { then, els, .. } => &sampled(then) | &sampled(els),
        Stmt::Assign(..) | Stmt::Skip | Stmt::Factor(_) | Stmt::Elim { .. } => NameSet::new(),
    }
}

/// `R(S)`: variables read by `S`. An assignment reads its indices and its
/// right-hand side but not the assigned variable.
pub fn reads(s: &Stmt) -> NameSet {
    match s {
        Stmt::Assign(l, e) => {
            let mut r = free_vars_expr(e);
            l.indices.iter().for_each(|i| fv_expr(i, &mut r));
            r
        }
        Stmt::Seq(a, b) => &reads(a) | &reads(b),
        Stmt::For { var, lo, hi, body } => {
            let mut r = reads(body);
            r.remove(var);
            fv_expr(lo, &mut r);
            fv_expr(hi, &mut r);
            r
        }
        Stmt::If { cond, then, els } => {
            let mut r = &reads(then) | &reads(els);
            fv_expr(cond, &mut r);
            r
        }
        Stmt::Skip => NameSet::new(),
        Stmt::Factor(_) | Stmt::Sample(..) | Stmt::Elim { .. } | Stmt::Gen { .. } => free_vars(s),
    }
}

/// Variables assigned anywhere, nested target bodies included.
pub fn assigned_anywhere(s: &Stmt) -> NameSet {
    let mut out = NameSet::new();
    collect_assigned(s, &mut out);
    out
}

fn collect_assigned(s: &Stmt, out: &mut NameSet) {
    fn in_expr(e: &Expr, out: &mut NameSet) {
        match e {
            Expr::Target(s) | Expr::Phi { body: s, .. } => collect_assigned(s, out),
            Expr::ArrayLit(es) | Expr::Call(_, es) => es.iter().for_each(|e| in_expr(e, out)),
            Expr::Index(a, b) => {
                in_expr(a, out);
                in_expr(b, out);
            }
            Expr::Comprehension { body, lo, hi, .. } => {
                in_expr(body, out);
                in_expr(lo, out);
                in_expr(hi, out);
            }
            Expr::Var(_) | Expr::Real(_) | Expr::Int(_) => {}
        }
    }
    match s {
        Stmt::Assign(l, e) => {
            out.insert(l.name.clone());
            in_expr(e, out);
        }
        Stmt::Seq(a, b) => {
            collect_assigned(a, out);
            collect_assigned(b, out);
        }
        Stmt::For { body, .. } | Stmt::Elim { body, .. } | Stmt::Gen { body, .. } => {
            collect_assigned(body, out)
        }
        Stmt::If { cond, then, els } => {
            in_expr(cond, out);
            collect_assigned(then, out);
            collect_assigned(els, out);
        }
        Stmt::Factor(e) => in_expr(e, out),
        Stmt::Sample(_, _, args) => args.iter().for_each(|e| in_expr(e, out)),
        Stmt::Skip => {}
    }
}

/// Analysis sets of a statement together with their per-level versions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisSets<L: Lattice> {
    pub w: NameSet,
    pub r: NameSet,
    pub wtilde: NameSet,
    pub r_at: BTreeMap<L, NameSet>,
    pub w_at: BTreeMap<L, NameSet>,
    pub wtilde_at: BTreeMap<L, NameSet>,
}

impl<L: Lattice> AnalysisSets<L> {
    pub fn r_at(&self, l: L) -> &NameSet {
        &self.r_at[&l]
    }

    pub fn w_at(&self, l: L) -> &NameSet {
        &self.w_at[&l]
    }

    pub fn wtilde_at(&self, l: L) -> &NameSet {
        &self.wtilde_at[&l]
    }
}

/// Computes all analysis sets of `s` under a concrete environment.
///
/// Reads are attributed to the level of the statement that performs them:
/// the assigned variable's level for an assignment, and the join of all
/// free-variable levels for `factor` and `~`. Reads made by an `if` guard
/// or loop bounds are attributed to every statement they control.
pub fn analysis_sets<L: Lattice>(gamma: &Gamma<L>, s: &Stmt) -> Result<AnalysisSets<L>, FlowError> {
    let actions = flow::actions(gamma, s)?;
    let empty = || L::ALL.into_iter().map(|l| (l, NameSet::new())).collect::<BTreeMap<_, _>>();
    let (mut r_at, mut w_at, mut wtilde_at) = (empty(), empty(), empty());
    for a in &actions {
        let level = flow::join_of(gamma, &a.level_srcs).ok_or_else(|| FlowError::NoJoin {
            location: a.location.clone(),
        })?;
        r_at.get_mut(&level).unwrap().extend(a.reads.iter().cloned());
    }
    let w = writes(s);
    let wtilde = sampled(s);
    for x in &w {
        let l = level_of(gamma, x)?;
        w_at.get_mut(&l).unwrap().insert(x.clone());
    }
    for x in &wtilde {
        let l = level_of(gamma, x)?;
        wtilde_at.get_mut(&l).unwrap().insert(x.clone());
    }
    Ok(AnalysisSets {
        w,
        r: reads(s),
        wtilde,
        r_at,
        w_at,
        wtilde_at,
    })
}

fn level_of<L: Lattice>(gamma: &Gamma<L>, x: &str) -> Result<L, FlowError> {
    match gamma.get(x) {
        None => Err(FlowError::Unbound(x.to_string())),
        Some(e) => e.level.ok_or_else(|| FlowError::Placeholder(x.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::BaseType;
    use crate::lattice::Level;
    use crate::parser::{parse_expr, parse_stmt};

    #[test]
    fn skip_has_empty_sets() {
        let g: Gamma<Level> = Gamma::new();
        let a = analysis_sets(&g, &Stmt::Skip).unwrap();
        assert!(a.w.is_empty() && a.r.is_empty() && a.wtilde.is_empty());
        assert!(a.r_at.values().all(|s| s.is_empty()));
    }

    #[test]
    fn indexed_assignment_sets() {
        let s = parse_stmt("x[i] = y + 1;").unwrap();
        assert_eq!(writes(&s), NameSet::from(["x".into()]));
        assert_eq!(reads(&s), NameSet::from(["i".into(), "y".into()]));
        assert!(sampled(&s).is_empty());
    }

    #[test]
    fn sample_reads_at_join_level() {
        let mut g = Gamma::new();
        g.insert("z1", BaseType::BoundedInt(2), Some(Level::Model));
        g.insert("theta0", BaseType::Real, Some(Level::Model));
        let s = parse_stmt("z1 ~ bern(theta0);").unwrap();
        let a = analysis_sets(&g, &s).unwrap();
        assert_eq!(a.wtilde, NameSet::from(["z1".into()]));
        assert_eq!(a.r_at(Level::Model), &NameSet::from(["theta0".into(), "z1".into()]));
        assert!(a.r_at(Level::Data).is_empty());
    }

    #[test]
    fn free_variable_examples() {
        let e = parse_expr("target(x ~ normal(m, 1))").unwrap();
        assert_eq!(free_vars_expr(&e), NameSet::from(["m".into(), "x".into()]));
        let e = parse_expr("[x * i | i in 1:3]").unwrap();
        assert_eq!(free_vars_expr(&e), NameSet::from(["x".into()]));
        assert!(free_vars(&Stmt::Skip).is_empty());
    }
}
