//! Information-flow walk shared by both type systems and the shredder.
//!
//! The walk resolves every name to the set of global variables whose levels
//! determine it ("sources"), splits a statement into atomic actions
//! (assignments, factors, samples and the `elim`/`gen` derived forms) and
//! emits lattice-independent requirements that [`crate::typing`] turns
//! into level constraints.
//!
//! Two refinements make derived-form bodies typeable:
//! * loop, comprehension and derived-form binders take the level of their
//!   bounds, so `z in 1:K` binders sit at the bottom level;
//! * inside a `target` body, a global that is definitely assigned before
//!   any read is a local of that body. Its level is the join of everything
//!   assigned to it there, and it is neither read from nor written to the
//!   enclosing store.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ast::{BaseType, Expr, Gamma, LValue, Stmt};
use crate::lattice::Lattice;
use crate::pretty;

pub type Srcs = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("variable `{0}` has no concrete level")]
    Placeholder(String),
    #[error("no upper bound for the levels read at `{location}`")]
    NoJoin { location: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    Assign,
    Factor,
    Sample,
    Elim,
    Gen,
}

/// An atomic statement together with its flow facts.
#[derive(Clone, Debug)]
pub struct Action {
    pub kind: ActionKind,
    /// Global variable assigned.
    pub writes: Option<String>,
    /// Global variable sampled (the left of `~`, or the `gen` variable).
    pub samples: Option<String>,
    /// Global variables read, including those of enclosing guards.
    pub reads: Srcs,
    /// True when the action reads anything at all, binders and locals
    /// included.
    pub reads_any: bool,
    /// Variables whose join is the level the action runs at.
    pub level_srcs: Srcs,
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub rule: &'static str,
    pub location: String,
}

/// Lattice-independent typing requirement.
#[derive(Clone, Debug)]
pub enum Req {
    /// Every source flows into `to` (assignment, guarded writes).
    FlowsTo { srcs: Srcs, to: String },
    /// A density contribution reading `srcs`.
    Factor { srcs: Srcs },
    /// A `~` statement on `target` (a global) reading `srcs`.
    Sample { target: Option<String>, srcs: Srcs },
    /// The sources must have a join.
    Exists { srcs: Srcs },
    /// `var` must not lie strictly below the level of any source: a later
    /// write to `var` may not be hoisted above an earlier read.
    NotBelow { var: String, srcs: Srcs },
    /// `var` is sampled and then sampled or assigned again (or the other
    /// way round); only allowed at the model level.
    Generative { var: String },
    /// Unconditional failure (base types, scoping, unbound names).
    Fail { message: String },
}

/// Result of walking a statement at the top level.
#[derive(Clone, Debug, Default)]
pub struct Flow {
    pub actions: Vec<Action>,
    pub reqs: Vec<(Req, Origin)>,
}

/// Shape-free base types used for checking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ty {
    Real,
    Int,
    Array(Box<Ty>),
    Unknown,
}

impl Ty {
    pub fn of(t: &BaseType) -> Ty {
        match t {
            BaseType::Real => Ty::Real,
            BaseType::Int | BaseType::BoundedInt(_) => Ty::Int,
            BaseType::Array(e, _) => Ty::Array(Box::new(Ty::of(e))),
        }
    }

    fn is_num(&self) -> bool {
        matches!(self, Ty::Real | Ty::Int | Ty::Unknown)
    }

    /// Whether a value of type `from` may be stored in a slot of this type.
    fn accepts(&self, from: &Ty) -> bool {
        match (self, from) {
            (Ty::Unknown, _) | (_, Ty::Unknown) => true,
            (Ty::Real, Ty::Real | Ty::Int) => true,
            (Ty::Int, Ty::Int) => true,
            (Ty::Array(a), Ty::Array(b)) => a.accepts(b),
            _ => false,
        }
    }

    fn unify(a: &Ty, b: &Ty) -> Option<Ty> {
        match (a, b) {
            (Ty::Unknown, t) | (t, Ty::Unknown) => Some(t.clone()),
            (Ty::Int, Ty::Int) => Some(Ty::Int),
            (Ty::Real | Ty::Int, Ty::Real | Ty::Int) => Some(Ty::Real),
            (Ty::Array(x), Ty::Array(y)) => Ty::unify(x, y).map(|t| Ty::Array(Box::new(t))),
            _ => None,
        }
    }
}

/// Walks `s` under `gamma` and returns its top-level actions and all
/// requirements, nested target bodies included.
pub fn analyze<L: Lattice>(gamma: &Gamma<L>, s: &Stmt) -> Flow {
    let types = gamma.iter().map(|(n, e)| (n.clone(), e.ty.clone())).collect();
    let mut w = Walker {
        types: &types,
        reqs: Vec::new(),
        local_updates: None,
        in_target: 0,
    };
    let mut actions = Vec::new();
    w.stmt(s, &Env::default(), &Guard::default(), &mut actions);
    Flow {
        actions,
        reqs: w.reqs,
    }
}

/// Flow facts of an expression.
#[derive(Clone, Debug)]
pub struct ExprFlow {
    pub ty: Ty,
    /// Variables whose join is the level the expression reads.
    pub srcs: Srcs,
    /// Global variables read.
    pub reads: Srcs,
    /// Requirements of nested target bodies.
    pub reqs: Vec<(Req, Origin)>,
}

/// Walks an expression under `gamma`.
pub fn analyze_expr<L: Lattice>(gamma: &Gamma<L>, e: &Expr) -> ExprFlow {
    let types = gamma.iter().map(|(n, e)| (n.clone(), e.ty.clone())).collect();
    let mut w = Walker {
        types: &types,
        reqs: Vec::new(),
        local_updates: None,
        in_target: 0,
    };
    let info = w.expr(e, &Env::default(), &pretty::expr(e));
    ExprFlow {
        ty: info.ty,
        srcs: info.srcs,
        reads: info.reads,
        reqs: w.reqs,
    }
}

/// Top-level actions of `s`, failing on the first unbound variable.
pub fn actions<L: Lattice>(gamma: &Gamma<L>, s: &Stmt) -> Result<Vec<Action>, FlowError> {
    for x in crate::analysis::free_vars(s) {
        if !gamma.contains(&x) {
            return Err(FlowError::Unbound(x));
        }
    }
    Ok(analyze(gamma, s).actions)
}

/// Join of the levels of `srcs`; `None` if some variable is unbound or a
/// placeholder, or the join does not exist.
pub fn join_of<L: Lattice>(gamma: &Gamma<L>, srcs: &Srcs) -> Option<L> {
    let mut acc = L::bottom();
    for x in srcs {
        acc = acc.join(gamma.level(x)?)?;
    }
    Some(acc)
}

/// Enclosing guard context: sources and reads of the `if` guards and loop
/// bounds controlling a statement.
#[derive(Clone, Debug, Default)]
struct Guard {
    srcs: Srcs,
    reads: Srcs,
    any: bool,
}

#[derive(Clone, Debug)]
enum Bound {
    Binder(Srcs),
    Local(Srcs, Ty),
}

#[derive(Clone, Debug, Default)]
struct Env {
    bound: BTreeMap<String, Bound>,
}

#[derive(Clone, Debug)]
struct ExprInfo {
    ty: Ty,
    srcs: Srcs,
    reads: Srcs,
    any: bool,
}

impl ExprInfo {
    fn constant(ty: Ty) -> Self {
        ExprInfo {
            ty,
            srcs: Srcs::new(),
            reads: Srcs::new(),
            any: false,
        }
    }

    fn absorb(&mut self, other: ExprInfo) {
        self.srcs.extend(other.srcs);
        self.reads.extend(other.reads);
        self.any |= other.any;
    }
}

struct Walker<'a> {
    types: &'a BTreeMap<String, BaseType>,
    reqs: Vec<(Req, Origin)>,
    /// When set, assignments to locals record their sources here (used
    /// while computing local levels).
    local_updates: Option<BTreeMap<String, Srcs>>,
    /// Nesting depth of `target` bodies. Densities there only add weight,
    /// so their levels are bounded by the enclosing expression instead.
    in_target: usize,
}

impl<'a> Walker<'a> {
    fn req(&mut self, rule: &'static str, location: &str, r: Req) {
        self.reqs.push((
            r,
            Origin {
                rule,
                location: location.to_string(),
            },
        ));
    }

    fn fail(&mut self, rule: &'static str, location: &str, message: String) {
        self.req(rule, location, Req::Fail { message });
    }

    fn var(&mut self, x: &str, env: &Env, loc: &str) -> ExprInfo {
        match env.bound.get(x) {
            Some(Bound::Binder(srcs)) => ExprInfo {
                ty: Ty::Int,
                srcs: srcs.clone(),
                reads: Srcs::new(),
                any: true,
            },
            Some(Bound::Local(srcs, ty)) => ExprInfo {
                ty: ty.clone(),
                srcs: srcs.clone(),
                reads: Srcs::new(),
                any: true,
            },
            None => match self.types.get(x) {
                Some(t) => ExprInfo {
                    ty: Ty::of(t),
                    srcs: Srcs::from([x.to_string()]),
                    reads: Srcs::from([x.to_string()]),
                    any: true,
                },
                None => {
                    self.fail("UNBOUND", loc, format!("unbound variable `{x}`"));
                    ExprInfo {
                        ty: Ty::Unknown,
                        srcs: Srcs::new(),
                        reads: Srcs::new(),
                        any: true,
                    }
                }
            },
        }
    }

    fn expr(&mut self, e: &Expr, env: &Env, loc: &str) -> ExprInfo {
        match e {
            Expr::Var(x) => self.var(x, env, loc),
            Expr::Real(_) => ExprInfo::constant(Ty::Real),
            Expr::Int(_) => ExprInfo::constant(Ty::Int),
            Expr::ArrayLit(es) => {
                let mut info = ExprInfo::constant(Ty::Unknown);
                let mut elem = Ty::Unknown;
                for x in es {
                    let i = self.expr(x, env, loc);
                    match Ty::unify(&elem, &i.ty) {
                        Some(t) => elem = t,
                        None => self.fail("TYPE", loc, "array literal elements differ in type".into()),
                    }
                    info.absorb(i);
                }
                info.ty = Ty::Array(Box::new(elem));
                info
            }
            Expr::Index(a, b) => {
                let mut info = self.expr(a, env, loc);
                let idx = self.expr(b, env, loc);
                if !matches!(idx.ty, Ty::Int | Ty::Unknown) {
                    self.fail("TYPE", loc, "array index must be an integer".into());
                }
                info.ty = match info.ty {
                    Ty::Array(t) => *t,
                    Ty::Unknown => Ty::Unknown,
                    _ => {
                        self.fail("TYPE", loc, "indexing a non-array value".into());
                        Ty::Unknown
                    }
                };
                info.absorb(idx);
                info
            }
            Expr::Call(f, args) => {
                let infos: Vec<ExprInfo> = args.iter().map(|a| self.expr(a, env, loc)).collect();
                let tys: Vec<Ty> = infos.iter().map(|i| i.ty.clone()).collect();
                let ty = match builtin_type(f, &tys) {
                    Ok(t) => t,
                    Err(m) => {
                        self.fail("PRIMCALL", loc, m);
                        Ty::Unknown
                    }
                };
                let mut info = ExprInfo::constant(ty);
                infos.into_iter().for_each(|i| info.absorb(i));
                info
            }
            Expr::Comprehension { body, binder, lo, hi } => {
                if self.types.contains_key(binder) || env.bound.contains_key(binder) {
                    self.fail(
                        "COMPREHENSION",
                        loc,
                        format!("comprehension binder `{binder}` shadows a variable in scope"),
                    );
                }
                let mut info = self.expr(lo, env, loc);
                info.absorb(self.expr(hi, env, loc));
                self.check_int(&info.ty, loc, "comprehension bounds");
                let mut inner = env.clone();
                inner
                    .bound
                    .insert(binder.clone(), Bound::Binder(info.srcs.clone()));
                let b = self.expr(body, &inner, loc);
                let ty = Ty::Array(Box::new(b.ty.clone()));
                info.absorb(b);
                info.ty = ty;
                info
            }
            Expr::Target(s) => {
                let mut info = self.target(s, env);
                info.ty = Ty::Real;
                info
            }
            Expr::Phi { binders, body } => {
                let mut inner = env.clone();
                for (b, _) in binders {
                    inner.bound.insert(b.clone(), Bound::Binder(Srcs::new()));
                }
                let mut info = self.target(body, &inner);
                let mut ty = Ty::Real;
                for _ in binders {
                    ty = Ty::Array(Box::new(ty));
                }
                info.ty = ty;
                info
            }
        }
    }

    fn check_int(&mut self, t: &Ty, loc: &str, what: &str) {
        if !matches!(t, Ty::Int | Ty::Unknown) {
            self.fail("TYPE", loc, format!("{what} must be integers"));
        }
    }

    /// Level facts of `target(s)`: the join over the actions of `s` that
    /// read anything, and the global reads of `s`.
    fn target(&mut self, s: &Stmt, env: &Env) -> ExprInfo {
        let inner = self.target_env(s, env);
        let mut actions = Vec::new();
        self.in_target += 1;
        self.stmt(s, &inner, &Guard::default(), &mut actions);
        self.in_target -= 1;
        let mut info = ExprInfo::constant(Ty::Real);
        for a in actions {
            info.reads.extend(a.reads);
            if a.reads_any {
                info.srcs.extend(a.level_srcs);
                info.any = true;
            }
        }
        info
    }

    /// Environment of a target body with its locals bound at their
    /// fixpoint levels.
    fn target_env(&mut self, s: &Stmt, env: &Env) -> Env {
        let binders: Srcs = env
            .bound
            .iter()
            .filter(|(_, b)| matches!(b, Bound::Binder(_)))
            .map(|(n, _)| n.clone())
            .collect();
        let locals = local_candidates(s, &binders);
        let mut inner = env.clone();
        let locals: Vec<String> = locals
            .into_iter()
            .filter(|x| self.types.contains_key(x))
            .collect();
        if locals.is_empty() {
            return inner;
        }
        for x in &locals {
            let ty = Ty::of(&self.types[x]);
            inner.bound.insert(x.clone(), Bound::Local(Srcs::new(), ty));
        }
        loop {
            let mut scratch = Walker {
                types: self.types,
                reqs: Vec::new(),
                local_updates: Some(BTreeMap::new()),
                in_target: self.in_target + 1,
            };
            scratch.stmt(s, &inner, &Guard::default(), &mut Vec::new());
            let updates = scratch.local_updates.unwrap_or_default();
            let mut changed = false;
            for (x, srcs) in updates {
                if let Some(Bound::Local(cur, _)) = inner.bound.get_mut(&x) {
                    let before = cur.len();
                    cur.extend(srcs);
                    changed |= cur.len() != before;
                }
            }
            if !changed {
                return inner;
            }
        }
    }

    fn guard_of(&mut self, g: &Guard, extra: ExprInfo) -> Guard {
        let mut out = g.clone();
        out.srcs.extend(extra.srcs);
        out.reads.extend(extra.reads);
        out.any |= extra.any;
        out
    }

    fn stmt(&mut self, s: &Stmt, env: &Env, guard: &Guard, out: &mut Vec<Action>) {
        match s {
            Stmt::Skip => {}
            Stmt::Seq(a, b) => {
                let i0 = out.len();
                self.stmt(a, env, guard, out);
                let i1 = out.len();
                self.stmt(b, env, guard, out);
                let i2 = out.len();
                for i in i0..i1 {
                    for j in i1..i2 {
                        let (x, y) = (out[i].clone(), out[j].clone());
                        self.seq_pair(&x, &y, true);
                    }
                }
            }
            Stmt::If { cond, then, els } => {
                let loc = pretty::summary(s);
                let c = self.expr(cond, env, &loc);
                if !c.ty.is_num() {
                    self.fail("IF", &loc, "guard must be a number".into());
                }
                self.req("IF", &loc, Req::Exists { srcs: c.srcs.clone() });
                let body_writes = &crate::analysis::writes(then) | &crate::analysis::writes(els);
                self.stable_guard(&c.reads, &body_writes, env, &loc, "IF");
                let g = self.guard_of(guard, c);
                self.stmt(then, env, &g, out);
                self.stmt(els, env, &g, out);
            }
            Stmt::For { var, lo, hi, body } => {
                let loc = pretty::summary(s);
                if self.types.contains_key(var) || env.bound.contains_key(var) {
                    self.fail("FOR", &loc, format!("loop variable `{var}` shadows a variable in scope"));
                }
                let body_writes = crate::analysis::writes(body);
                if body_writes.contains(var) || assigns_name(body, var) {
                    self.fail("FOR", &loc, format!("loop variable `{var}` is assigned in the body"));
                }
                let mut b = self.expr(lo, env, &loc);
                b.absorb(self.expr(hi, env, &loc));
                self.check_int(&b.ty, &loc, "loop bounds");
                self.req("FOR", &loc, Req::Exists { srcs: b.srcs.clone() });
                self.stable_guard(&b.reads, &body_writes, env, &loc, "FOR");
                let mut inner = env.clone();
                inner.bound.insert(var.clone(), Bound::Binder(b.srcs.clone()));
                let g = self.guard_of(guard, b);
                let i0 = out.len();
                self.stmt(body, &inner, &g, out);
                let i1 = out.len();
                // One iteration's late writes must not be hoisted above the
                // next iteration's reads.
                for i in i0..i1 {
                    for j in i0..i1 {
                        let (x, y) = (out[i].clone(), out[j].clone());
                        self.seq_pair(&y, &x, false);
                    }
                }
            }
            Stmt::Assign(l, e) => {
                let loc = pretty::summary(s);
                let rhs = self.expr(e, env, &loc);
                let mut idx = ExprInfo::constant(Ty::Unknown);
                for i in &l.indices {
                    let ii = self.expr(i, env, &loc);
                    self.check_int(&ii.ty, &loc, "indices");
                    idx.absorb(ii);
                }
                let mut srcs = rhs.srcs.clone();
                srcs.extend(idx.srcs.iter().cloned());
                srcs.extend(guard.srcs.iter().cloned());
                let mut reads = rhs.reads.clone();
                reads.extend(idx.reads.iter().cloned());
                reads.extend(guard.reads.iter().cloned());
                let any = rhs.any || idx.any || guard.any;
                let slot_ty = self.lvalue_type(l, env, &loc);
                if !slot_ty.accepts(&rhs.ty) {
                    self.fail("ASSIGN", &loc, format!("cannot assign {:?} to {:?}", rhs.ty, slot_ty));
                }
                match env.bound.get(&l.name) {
                    Some(Bound::Local(own, _)) => {
                        if let Some(u) = self.local_updates.as_mut() {
                            u.entry(l.name.clone()).or_default().extend(srcs.iter().cloned());
                        }
                        out.push(Action {
                            kind: ActionKind::Assign,
                            writes: None,
                            samples: None,
                            reads,
                            reads_any: any,
                            level_srcs: own.clone(),
                            location: loc,
                        });
                    }
                    Some(Bound::Binder(_)) => {
                        self.fail("ASSIGN", &loc, format!("cannot assign to bound variable `{}`", l.name));
                    }
                    None => {
                        self.req(
                            "ASSIGN",
                            &loc,
                            Req::FlowsTo {
                                srcs: srcs.clone(),
                                to: l.name.clone(),
                            },
                        );
                        out.push(Action {
                            kind: ActionKind::Assign,
                            writes: Some(l.name.clone()),
                            samples: None,
                            reads,
                            reads_any: any,
                            level_srcs: Srcs::from([l.name.clone()]),
                            location: loc,
                        });
                    }
                }
            }
            Stmt::Factor(e) => {
                let loc = pretty::summary(s);
                let info = self.expr(e, env, &loc);
                if !info.ty.is_num() {
                    self.fail("FACTOR", &loc, "factor expects a number".into());
                }
                self.contribution(ActionKind::Factor, None, None, info, guard, loc, out);
            }
            Stmt::Elim { var, body, .. } => {
                let loc = pretty::summary(s);
                let mut inner = env.clone();
                inner.bound.insert(var.clone(), Bound::Binder(Srcs::new()));
                let info = self.target(body, &inner);
                self.contribution(ActionKind::Elim, None, None, info, guard, loc, out);
            }
            Stmt::Sample(l, d, args) => {
                let loc = pretty::summary(s);
                let lhs = self.expr(&l.to_expr(), env, &loc);
                let mut info = ExprInfo::constant(Ty::Unknown);
                let mut tys = Vec::new();
                for a in args {
                    let i = self.expr(a, env, &loc);
                    tys.push(i.ty.clone());
                    info.absorb(i);
                }
                if let Err(m) = dist_check(d, &lhs.ty, &tys) {
                    self.fail("SAMPLE", &loc, m);
                }
                let target = match env.bound.get(&l.name) {
                    None => Some(l.name.clone()),
                    Some(_) => None,
                };
                let own = lhs.srcs.clone();
                info.absorb(lhs);
                self.contribution(ActionKind::Sample, target, Some(own), info, guard, loc, out);
            }
            Stmt::Gen { var, body, .. } => {
                let loc = pretty::summary(s);
                let lhs = self.var(var, env, &loc);
                let mut inner = env.clone();
                inner.bound.insert(var.clone(), Bound::Binder(Srcs::new()));
                let mut info = self.target(body, &inner);
                let target = match env.bound.get(var) {
                    None => Some(var.clone()),
                    Some(_) => None,
                };
                let own = lhs.srcs.clone();
                info.absorb(lhs);
                self.contribution(ActionKind::Gen, target, Some(own), info, guard, loc, out);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn contribution(
        &mut self,
        kind: ActionKind,
        target: Option<String>,
        own: Option<Srcs>,
        info: ExprInfo,
        guard: &Guard,
        loc: String,
        out: &mut Vec<Action>,
    ) {
        let mut srcs = info.srcs;
        srcs.extend(guard.srcs.iter().cloned());
        let mut reads = info.reads;
        reads.extend(guard.reads.iter().cloned());
        let req = match kind {
            ActionKind::Factor | ActionKind::Elim => Req::Factor { srcs: srcs.clone() },
            _ => {
                let mut args = srcs.clone();
                if let Some(t) = &target {
                    args.remove(t);
                } else if let Some(o) = &own {
                    for x in o {
                        args.remove(x);
                    }
                }
                Req::Sample {
                    target: target.clone(),
                    srcs: args,
                }
            }
        };
        let rule = match kind {
            ActionKind::Factor | ActionKind::Elim => "FACTOR",
            _ => "SAMPLE",
        };
        if self.in_target == 0 {
            self.req(rule, &loc, req);
        }
        self.req(rule, &loc, Req::Exists { srcs: srcs.clone() });
        out.push(Action {
            kind,
            writes: None,
            samples: target,
            reads,
            reads_any: true,
            level_srcs: srcs,
            location: loc,
        });
    }

    /// Requirements for running `first` before `second`. `with_generative`
    /// is false for the loop-carried pairs.
    fn seq_pair(&mut self, first: &Action, second: &Action, with_generative: bool) {
        if let Some(u) = &second.writes {
            if first.reads.contains(u) {
                self.req(
                    "SEQ/shreddable",
                    &first.location,
                    Req::NotBelow {
                        var: u.clone(),
                        srcs: first.level_srcs.clone(),
                    },
                );
            }
        }
        if !with_generative {
            return;
        }
        let clash = match (&first.samples, &second.samples, &first.writes, &second.writes) {
            (Some(a), Some(b), _, _) if a == b => Some(a.clone()),
            (Some(a), _, _, Some(b)) if a == b => Some(a.clone()),
            (_, Some(b), Some(a), _) if a == b => Some(a.clone()),
            _ => None,
        };
        if let Some(v) = clash {
            self.req("SEQ/generative", &second.location, Req::Generative { var: v });
        }
    }

    /// A guard's variables may not be written under it, since shredding
    /// re-evaluates the guard once per slice.
    fn stable_guard(&mut self, reads: &Srcs, body_writes: &Srcs, env: &Env, loc: &str, rule: &'static str) {
        for x in reads.intersection(body_writes) {
            if !env.bound.contains_key(x) {
                self.fail(rule, loc, format!("guard variable `{x}` is assigned under the guard"));
            }
        }
    }

    fn lvalue_type(&mut self, l: &LValue, env: &Env, loc: &str) -> Ty {
        let mut t = match env.bound.get(&l.name) {
            Some(Bound::Local(_, t)) => t.clone(),
            Some(Bound::Binder(_)) => Ty::Int,
            None => match self.types.get(&l.name) {
                Some(b) => Ty::of(b),
                None => {
                    self.fail("UNBOUND", loc, format!("unbound variable `{}`", l.name));
                    Ty::Unknown
                }
            },
        };
        for _ in &l.indices {
            t = match t {
                Ty::Array(e) => *e,
                Ty::Unknown => Ty::Unknown,
                _ => {
                    self.fail("TYPE", loc, "indexing a non-array value".into());
                    Ty::Unknown
                }
            };
        }
        t
    }
}

fn assigns_name(s: &Stmt, x: &str) -> bool {
    match s {
        Stmt::Assign(l, _) => l.name == x,
        Stmt::Seq(a, b) => assigns_name(a, x) || assigns_name(b, x),
        Stmt::For { body, .. } => assigns_name(body, x),
        Stmt::If { then, els, .. } => assigns_name(then, x) || assigns_name(els, x),
        _ => false,
    }
}

/// Result type of a built-in call, or an error message.
pub fn builtin_type(f: &str, args: &[Ty]) -> Result<Ty, String> {
    let all_num = args.iter().all(|t| t.is_num());
    let all_int = args.iter().all(|t| matches!(t, Ty::Int));
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("`{f}` expects {n} argument(s), got {}", args.len()))
        }
    };
    match f {
        "+" | "-" | "*" => {
            arity(2)?;
            if !all_num {
                return Err(format!("`{f}` expects numbers"));
            }
            Ok(if all_int { Ty::Int } else { Ty::Real })
        }
        "/" => {
            arity(2)?;
            if !all_num {
                return Err("`/` expects numbers".into());
            }
            Ok(Ty::Real)
        }
        "<" | ">" | "==" => {
            arity(2)?;
            if !all_num {
                return Err(format!("`{f}` expects numbers"));
            }
            Ok(Ty::Int)
        }
        "neg" => {
            arity(1)?;
            if !all_num {
                return Err("negation expects a number".into());
            }
            Ok(args[0].clone())
        }
        "exp" | "log" => {
            arity(1)?;
            if !all_num {
                return Err(format!("`{f}` expects a number"));
            }
            Ok(Ty::Real)
        }
        "sum" => {
            arity(1)?;
            match &args[0] {
                Ty::Array(e) if e.is_num() => Ok(Ty::Real),
                Ty::Unknown => Ok(Ty::Real),
                _ => Err("`sum` expects an array of numbers".into()),
            }
        }
        "max" => match args {
            [Ty::Array(e)] if e.is_num() => Ok((**e).clone()),
            [_, _, ..] if all_num => Ok(if all_int { Ty::Int } else { Ty::Real }),
            _ => Err("`max` expects an array or at least two numbers".into()),
        },
        _ => Err(format!("unknown function `{f}`")),
    }
}

/// Checks a distribution name, its argument types and the sampled type.
pub fn dist_check(d: &str, lhs: &Ty, args: &[Ty]) -> Result<(), String> {
    let num = |t: &Ty| t.is_num();
    // Scalar distributions apply elementwise to an array on the left.
    let mut lhs = lhs;
    while let Ty::Array(e) = lhs {
        if d == "categorical" {
            break;
        }
        lhs = e;
    }
    let (ok_args, lhs_ok) = match d {
        "normal" | "beta" => (args.len() == 2 && args.iter().all(num), lhs.is_num()),
        "bern" | "bernoulli" => (args.len() == 1 && num(&args[0]), matches!(lhs, Ty::Int | Ty::Unknown)),
        "categorical" => (
            args.len() == 1 && matches!(&args[0], Ty::Array(e) if e.is_num()) || args.len() == 1 && args[0] == Ty::Unknown,
            matches!(lhs, Ty::Int | Ty::Unknown),
        ),
        _ => return Err(format!("unknown distribution `{d}`")),
    };
    if !ok_args {
        return Err(format!("bad arguments for `{d}`"));
    }
    if !lhs_ok {
        return Err(format!("`{d}` cannot generate a value of type {lhs:?}"));
    }
    Ok(())
}

/// Globals of a target body that are definitely assigned (as a whole)
/// before any read and never sampled there.
fn local_candidates(s: &Stmt, binders: &Srcs) -> Srcs {
    let mut st = DaState::default();
    let mut da = Srcs::new();
    da_stmt(s, binders, &mut da, &mut st);
    st.assigned
        .difference(&st.exposed)
        .filter(|x| !st.sampled.contains(*x) && !binders.contains(*x))
        .cloned()
        .collect()
}

#[derive(Default)]
struct DaState {
    exposed: Srcs,
    assigned: Srcs,
    sampled: Srcs,
}

/// Names read before being definitely assigned in `s`.
fn exposed_reads(s: &Stmt, bound: &Srcs) -> Srcs {
    let mut st = DaState::default();
    da_stmt(s, bound, &mut Srcs::new(), &mut st);
    st.exposed
}

fn da_read(x: &str, bound: &Srcs, da: &Srcs, st: &mut DaState) {
    if !bound.contains(x) && !da.contains(x) {
        st.exposed.insert(x.to_string());
    }
}

fn da_expr(e: &Expr, bound: &Srcs, da: &Srcs, st: &mut DaState) {
    match e {
        Expr::Var(x) => da_read(x, bound, da, st),
        Expr::Real(_) | Expr::Int(_) => {}
        Expr::ArrayLit(es) | Expr::Call(_, es) => es.iter().for_each(|e| da_expr(e, bound, da, st)),
        Expr::Index(a, b) => {
            da_expr(a, bound, da, st);
            da_expr(b, bound, da, st);
        }
        Expr::Comprehension { body, binder, lo, hi } => {
            da_expr(lo, bound, da, st);
            da_expr(hi, bound, da, st);
            let mut b = bound.clone();
            b.insert(binder.clone());
            da_expr(body, &b, da, st);
        }
        Expr::Target(s) => {
            for x in exposed_reads(s, bound) {
                da_read(&x, bound, da, st);
            }
        }
        Expr::Phi { binders, body } => {
            let mut b = bound.clone();
            b.extend(binders.iter().map(|(n, _)| n.clone()));
            for x in exposed_reads(body, &b) {
                da_read(&x, bound, da, st);
            }
        }
    }
}

fn da_stmt(s: &Stmt, bound: &Srcs, da: &mut Srcs, st: &mut DaState) {
    match s {
        Stmt::Assign(l, e) => {
            da_expr(e, bound, da, st);
            l.indices.iter().for_each(|i| da_expr(i, bound, da, st));
            if !bound.contains(&l.name) {
                st.assigned.insert(l.name.clone());
                if l.indices.is_empty() {
                    da.insert(l.name.clone());
                } else {
                    da_read(&l.name, bound, da, st);
                }
            }
        }
        Stmt::Seq(a, b) => {
            da_stmt(a, bound, da, st);
            da_stmt(b, bound, da, st);
        }
        Stmt::For { var, lo, hi, body } => {
            da_expr(lo, bound, da, st);
            da_expr(hi, bound, da, st);
            let mut b = bound.clone();
            b.insert(var.clone());
            let mut inner = da.clone();
            da_stmt(body, &b, &mut inner, st);
        }
        Stmt::If { cond, then, els } => {
            da_expr(cond, bound, da, st);
            let mut d1 = da.clone();
            let mut d2 = da.clone();
            da_stmt(then, bound, &mut d1, st);
            da_stmt(els, bound, &mut d2, st);
            *da = d1.intersection(&d2).cloned().collect();
        }
        Stmt::Skip => {}
        Stmt::Factor(e) => da_expr(e, bound, da, st),
        Stmt::Sample(l, _, args) => {
            da_expr(&l.to_expr(), bound, da, st);
            args.iter().for_each(|a| da_expr(a, bound, da, st));
            if !bound.contains(&l.name) {
                st.sampled.insert(l.name.clone());
            }
        }
        Stmt::Elim { var, body, .. } => {
            let mut b = bound.clone();
            b.insert(var.clone());
            for x in exposed_reads(body, &b) {
                da_read(&x, bound, da, st);
            }
        }
        Stmt::Gen { var, body, .. } => {
            da_read(var, bound, da, st);
            if !bound.contains(var) {
                st.sampled.insert(var.clone());
            }
            let mut b = bound.clone();
            b.insert(var.clone());
            for x in exposed_reads(body, &b) {
                da_read(&x, bound, da, st);
            }
        }
    }
}
