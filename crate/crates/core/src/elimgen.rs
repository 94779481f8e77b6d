//! Compile-time elimination of discrete parameters.
//!
//! One step removes a discrete model-level parameter `z`: the program is
//! shredded by level, the model slice is split by the CI system into the
//! part not involving `z` (`S1`), the part involving `z` and its
//! neighbours (`S2`) and the rest (`S3`), and the program is rebuilt as
//!
//! ```text
//! S_D; S1; f = phi(ne) { elim(z) S2 }; factor(f[ne]); S3; gen(z) S2; st(S2); S_Q
//! ```
//!
//! so that `z` becomes a generated quantity drawn from its exact
//! conditional.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::analysis;
use crate::ast::{BaseType, Expr, Gamma, LValue, Program, Stmt};
use crate::lattice::{CiLevel, Lattice, Level};
use crate::shred::{self, ShredError};
use crate::typing::{base, ci, Domains, Violation};

#[derive(Clone, Debug, Error)]
pub enum ElimError {
    #[error("`{0}` is not a discrete model-level parameter")]
    NotDiscreteParam(String),
    #[error("the program does not type: {}", first(.0))]
    IllTyped(Vec<Violation>),
    #[error("the conditional-independence split for `{z}` failed: {}", first(.violations))]
    NoSplit { z: String, violations: Vec<Violation> },
    #[error("the transformed program does not type: {}", first(.0))]
    Retype(Vec<Violation>),
    #[error("{0}")]
    Shred(#[from] ShredError),
    #[error("`{0}` has no support bound")]
    NoSupport(String),
}

fn first(v: &[Violation]) -> String {
    v.first()
        .map(|t| format!("{}: {}", t.rule, t.message))
        .unwrap_or_default()
}

/// The three derived forms.
#[derive(Clone, Debug, PartialEq)]
pub enum DerivedForm {
    Elim { var: String, k: u32, body: Stmt },
    Phi { binders: Vec<(String, u32)>, body: Stmt },
    Gen { var: String, k: u32, body: Stmt },
}

/// What a derived form expands to.
#[derive(Clone, Debug, PartialEq)]
pub enum Desugared {
    Stmt(Stmt),
    Expr(Expr),
}

fn table(body: Stmt, z: &str, k: u32) -> Expr {
    Expr::comprehension(Expr::target(body), z, Expr::Int(1), Expr::Int(k as i64))
}

/// Expansion into core syntax.
pub fn desugar(df: &DerivedForm) -> Desugared {
    match df {
        DerivedForm::Elim { var, k, body } => Desugared::Stmt(Stmt::Factor(Expr::call(
            "sum",
            vec![table(desugar_stmt(body), var, *k)],
        ))),
        DerivedForm::Phi { binders, body } => {
            let mut e = Expr::target(desugar_stmt(body));
            for (z, k) in binders.iter().rev() {
                e = Expr::comprehension(e, z, Expr::Int(1), Expr::Int(*k as i64));
            }
            Desugared::Expr(e)
        }
        DerivedForm::Gen { var, k, body } => Desugared::Stmt(Stmt::Sample(
            LValue::var(var),
            "categorical".into(),
            vec![table(desugar_stmt(body), var, *k)],
        )),
    }
}

/// Expands every derived form inside a statement.
pub fn desugar_stmt(s: &Stmt) -> Stmt {
    map_stmt(s, &|s| match s {
        Stmt::Elim { var, k, body } => match desugar(&DerivedForm::Elim {
            var: var.clone(),
            k: *k,
            body: (**body).clone(),
        }) {
            Desugared::Stmt(s) => Some(s),
            Desugared::Expr(_) => unreachable!(),
        },
        Stmt::Gen { var, k, body } => match desugar(&DerivedForm::Gen {
            var: var.clone(),
            k: *k,
            body: (**body).clone(),
        }) {
            Desugared::Stmt(s) => Some(s),
            Desugared::Expr(_) => unreachable!(),
        },
        _ => None,
    })
}

/// Expands every derived form inside an expression.
pub fn desugar_expr(e: &Expr) -> Expr {
    match e {
        Expr::Phi { binders, body } => match desugar(&DerivedForm::Phi {
            binders: binders.clone(),
            body: (**body).clone(),
        }) {
            Desugared::Expr(e) => e,
            Desugared::Stmt(_) => unreachable!(),
        },
        Expr::Var(_) | Expr::Real(_) | Expr::Int(_) => e.clone(),
        Expr::ArrayLit(es) => Expr::ArrayLit(es.iter().map(desugar_expr).collect()),
        Expr::Index(a, b) => Expr::index(desugar_expr(a), desugar_expr(b)),
        Expr::Call(f, args) => Expr::Call(f.clone(), args.iter().map(desugar_expr).collect()),
        Expr::Comprehension { body, binder, lo, hi } => {
            Expr::comprehension(desugar_expr(body), binder, desugar_expr(lo), desugar_expr(hi))
        }
        Expr::Target(s) => Expr::target(desugar_stmt(s)),
    }
}

/// Rebuilds a statement, desugaring expressions on the way. `f` sees each
/// original node first and, when it returns a replacement, is responsible
/// for the children of that node.
fn map_stmt(s: &Stmt, f: &dyn Fn(&Stmt) -> Option<Stmt>) -> Stmt {
    if let Some(r) = f(s) {
        return r;
    }
    match s {
        Stmt::Assign(l, e) => Stmt::Assign(
            LValue::indexed(&l.name, l.indices.iter().map(desugar_expr).collect()),
            desugar_expr(e),
        ),
        Stmt::Seq(a, b) => Stmt::Seq(Box::new(map_stmt(a, f)), Box::new(map_stmt(b, f))),
        Stmt::For { var, lo, hi, body } => Stmt::For {
            var: var.clone(),
            lo: desugar_expr(lo),
            hi: desugar_expr(hi),
            body: Box::new(map_stmt(body, f)),
        },
        Stmt::If { cond, then, els } => Stmt::If {
            cond: desugar_expr(cond),
            then: Box::new(map_stmt(then, f)),
            els: Box::new(map_stmt(els, f)),
        },
        Stmt::Skip => Stmt::Skip,
        Stmt::Factor(e) => Stmt::Factor(desugar_expr(e)),
        Stmt::Sample(l, d, args) => Stmt::Sample(
            LValue::indexed(&l.name, l.indices.iter().map(desugar_expr).collect()),
            d.clone(),
            args.iter().map(desugar_expr).collect(),
        ),
        Stmt::Elim { var, k, body } => Stmt::Elim {
            var: var.clone(),
            k: *k,
            body: Box::new(map_stmt(body, f)),
        },
        Stmt::Gen { var, k, body } => Stmt::Gen {
            var: var.clone(),
            k: *k,
            body: Box::new(map_stmt(body, f)),
        },
    }
}

/// `st(S)`: the same store effects with unit density. Density statements
/// become `skip`; sequences drop the resulting skips, and a loop or
/// conditional left with nothing to do disappears.
pub fn store_of(s: &Stmt) -> Stmt {
    match s {
        Stmt::Factor(_) | Stmt::Sample(..) | Stmt::Elim { .. } | Stmt::Gen { .. } | Stmt::Skip => Stmt::Skip,
        Stmt::Assign(..) => s.clone(),
        Stmt::Seq(a, b) => Stmt::seq([store_of(a), store_of(b)]),
        Stmt::For { var, lo, hi, body } => {
            let b = store_of(body);
            if b.is_skip() {
                Stmt::Skip
            } else {
                Stmt::For {
                    var: var.clone(),
                    lo: lo.clone(),
                    hi: hi.clone(),
                    body: Box::new(b),
                }
            }
        }
        Stmt::If { cond, then, els } => {
            let (t, e) = (store_of(then), store_of(els));
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

/// Discrete model-level parameters: `int<K>` scalars at `model` that the
/// program never assigns, in declaration order.
pub fn discrete_params(p: &Program) -> Vec<String> {
    let assigned = analysis::assigned_anywhere(&p.body);
    p.gamma
        .iter()
        .filter(|(n, e)| {
            e.level == Some(Level::Model) && matches!(e.ty, BaseType::BoundedInt(_)) && !assigned.contains(*n)
        })
        .map(|(n, _)| n.clone())
        .collect()
}

/// The partial CI environment for eliminating `z`, with the allowed
/// levels of its placeholders. Data and continuous model parameters are
/// `l1`, `z` is `l2`, the other discrete parameters may be `l1` or `l3`,
/// and model-level deterministic variables may take any level.
/// Generated quantities are left out.
pub fn gamma_to_z(p: &Program, z: &str) -> Result<(Gamma<CiLevel>, Domains<CiLevel>), ElimError> {
    let params = discrete_params(p);
    if !params.iter().any(|x| x == z) {
        return Err(ElimError::NotDiscreteParam(z.into()));
    }
    let assigned = analysis::assigned_anywhere(&p.body);
    let mut g = Gamma::new();
    let mut domains = Domains::new();
    for (n, e) in p.gamma.iter() {
        let level = e.level.ok_or_else(|| ElimError::IllTyped(Vec::new()))?;
        match level {
            Level::GenQuant => continue,
            Level::Data => g.insert(n, e.ty.clone(), Some(CiLevel::L1)),
            Level::Model if n == z => g.insert(n, e.ty.clone(), Some(CiLevel::L2)),
            Level::Model if params.contains(n) => {
                g.insert(n, e.ty.clone(), None);
                domains.insert(n.clone(), vec![CiLevel::L1, CiLevel::L3]);
            }
            Level::Model if !assigned.contains(n) => g.insert(n, e.ty.clone(), Some(CiLevel::L1)),
            Level::Model => g.insert(n, e.ty.clone(), None),
        }
    }
    Ok((g, domains))
}

/// Neighbours of `z`: the discrete parameters of the base environment that
/// the resolved CI environment puts at `l1`, sorted by name, with their
/// support bounds.
pub fn neighbours(base: &Program, gamma_ci: &Gamma<CiLevel>, z: &str) -> Vec<(String, u32)> {
    let mut out: Vec<(String, u32)> = discrete_params(base)
        .into_iter()
        .filter(|x| x != z && gamma_ci.level(x) == Some(CiLevel::L1))
        .filter_map(|x| {
            let k = base.gamma.ty(&x)?.support()?;
            Some((x, k))
        })
        .collect();
    out.sort();
    out
}

/// Intermediate results of one elimination step, for inspection.
#[derive(Clone, Debug)]
pub struct Step {
    pub z: String,
    pub factor: String,
    pub neighbours: Vec<(String, u32)>,
    /// `S_D`, `S_M`, `S_Q`.
    pub base_slices: [Stmt; 3],
    /// The resolved CI environment of the model slice.
    pub gamma_m: Gamma<CiLevel>,
    /// `S1`, `S2`, `S3`.
    pub ci_slices: [Stmt; 3],
    pub result: Program,
}

/// First `f<i>` not already used by the environment or the body.
fn fresh_factor(p: &Program) -> String {
    let used = analysis::free_vars(&p.body);
    (1..)
        .map(|i| format!("f{i}"))
        .find(|f| !p.gamma.contains(f) && !used.contains(f))
        .unwrap()
}

/// Makes every placeholder concrete with the cheapest base typing.
pub fn resolve(p: &Program) -> Result<Program, ElimError> {
    if p.gamma.is_concrete() {
        let r = base::check_stmt(&p.gamma, &p.body, Level::Data);
        return if r.ok {
            Ok(p.clone())
        } else {
            Err(ElimError::IllTyped(r.violations))
        };
    }
    let r = base::infer_levels(p);
    if !r.ok {
        return Err(ElimError::IllTyped(r.violations));
    }
    Ok(Program::new(r.resolved, p.body.clone()))
}

/// One elimination step with its intermediate results.
pub fn eliminate_step(p: &Program, z: &str) -> Result<Step, ElimError> {
    let p = resolve(p)?;
    let k = p
        .gamma
        .ty(z)
        .and_then(BaseType::support)
        .ok_or_else(|| ElimError::NotDiscreteParam(z.into()))?;
    let (gm, mut domains) = gamma_to_z(&p, z)?;
    let sh = shred::shred(&p.gamma, &p.body)?;
    let (sd, sm, sq) = (sh.get(Level::Data), sh.get(Level::Model), sh.get(Level::GenQuant));

    // Generated quantities only occur in the model slice as locals of
    // earlier factor bodies; they enter as unconstrained placeholders.
    let mut gm = gm;
    for x in analysis::free_vars(sm) {
        if !gm.contains(&x) {
            if let Some(t) = p.gamma.ty(&x) {
                gm.insert(&x, t.clone(), None);
                domains.insert(x.clone(), CiLevel::ALL.to_vec());
            }
        }
    }
    let r = ci::infer_ci_with(&gm, sm, &domains);
    if !r.ok {
        return Err(ElimError::NoSplit {
            z: z.into(),
            violations: r.violations,
        });
    }
    let gm = r.resolved;
    let ci_sh = shred::shred(&gm, sm)?;
    let (s1, s2, s3) = (ci_sh.get(CiLevel::L1), ci_sh.get(CiLevel::L2), ci_sh.get(CiLevel::L3));

    let ne = neighbours(&p, &gm, z);
    let f = fresh_factor(&p);
    let phi = Expr::Phi {
        binders: ne.clone(),
        body: Box::new(Stmt::Elim {
            var: z.into(),
            k,
            body: Box::new(s2.clone()),
        }),
    };
    let body = Stmt::seq([
        sd.clone(),
        s1.clone(),
        Stmt::assign(&f, phi),
        Stmt::Factor(Expr::index_all(Expr::var(&f), ne.iter().map(|(n, _)| Expr::var(n)))),
        s3.clone(),
        Stmt::Gen {
            var: z.into(),
            k,
            body: Box::new(s2.clone()),
        },
        store_of(s2),
        sq.clone(),
    ]);

    let mut gamma = p.gamma.clone();
    gamma.set_level(z, Some(Level::GenQuant));
    let fty = ne
        .iter()
        .rev()
        .fold(BaseType::Real, |t, (_, k)| BaseType::array(t, *k as usize));
    gamma.insert(&f, fty, None);
    for x in analysis::assigned_anywhere(&body) {
        if gamma.contains(&x) {
            gamma.set_level(&x, None);
        }
    }
    let q = Program::new(gamma, body);
    let r = base::infer_levels(&q);
    if !r.ok {
        return Err(ElimError::Retype(r.violations));
    }
    Ok(Step {
        z: z.into(),
        factor: f,
        neighbours: ne,
        base_slices: [sd.clone(), sm.clone(), sq.clone()],
        gamma_m: gm,
        ci_slices: [s1.clone(), s2.clone(), s3.clone()],
        result: Program::new(r.resolved, q.body),
    })
}

/// Eliminates the discrete parameter `z`.
pub fn eliminate(p: &Program, z: &str) -> Result<Program, ElimError> {
    Ok(eliminate_step(p, z)?.result)
}

/// Elimination order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ElimPlan {
    pub order: Vec<String>,
}

impl ElimPlan {
    pub fn new<S: Into<String>>(order: impl IntoIterator<Item = S>) -> Self {
        ElimPlan {
            order: order.into_iter().map(Into::into).collect(),
        }
    }

    /// Every discrete model-level parameter, in declaration order.
    pub fn default_for(p: &Program) -> Result<Self, ElimError> {
        Ok(ElimPlan {
            order: discrete_params(&resolve(p)?),
        })
    }

    /// The order must list distinct discrete model-level parameters.
    pub fn validate(&self, p: &Program) -> Result<(), ElimError> {
        let params = discrete_params(&resolve(p)?);
        let mut seen = BTreeSet::new();
        for z in &self.order {
            if !params.contains(z) || !seen.insert(z) {
                return Err(ElimError::NotDiscreteParam(z.clone()));
            }
        }
        Ok(())
    }
}

/// Eliminates the parameters of the plan one by one.
pub fn transform_all(p: &Program, plan: &ElimPlan) -> Result<Program, ElimError> {
    plan.validate(p)?;
    let mut cur = resolve(p)?;
    for z in &plan.order {
        cur = eliminate(&cur, z)?;
    }
    Ok(cur)
}

/// Intermediate programs of [`transform_all`], one per step.
pub fn transform_steps(p: &Program, plan: &ElimPlan) -> Result<Vec<Step>, ElimError> {
    plan.validate(p)?;
    let mut cur = resolve(p)?;
    let mut out = Vec::new();
    for z in &plan.order {
        let step = eliminate_step(&cur, z)?;
        cur = step.result.clone();
        out.push(step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{eval_stmt, State, Value};
    use crate::parser::{parse, parse_stmt};

    #[test]
    fn derived_forms_expand() {
        let body = parse_stmt("z ~ bern(0.3);").unwrap();
        let e = desugar(&DerivedForm::Elim {
            var: "z".into(),
            k: 2,
            body: body.clone(),
        });
        assert_eq!(
            e,
            Desugared::Stmt(parse_stmt("factor(sum([target(z ~ bern(0.3)) | z in 1:2]));").unwrap())
        );
        let p = desugar(&DerivedForm::Phi {
            binders: vec![],
            body: body.clone(),
        });
        assert_eq!(p, Desugared::Expr(Expr::target(body.clone())));
        let g = desugar(&DerivedForm::Gen {
            var: "z".into(),
            k: 2,
            body: body.clone(),
        });
        assert_eq!(
            g,
            Desugared::Stmt(parse_stmt("z ~ categorical([target(z ~ bern(0.3)) | z in 1:2]);").unwrap())
        );
    }

    #[test]
    fn store_of_drops_densities() {
        let s = parse_stmt("x = 1; y ~ normal(x, 1);").unwrap();
        assert_eq!(store_of(&s), parse_stmt("x = 1;").unwrap());
        assert_eq!(store_of(&Stmt::Skip), Stmt::Skip);
    }

    #[test]
    fn desugared_and_native_agree() {
        let s = parse_stmt(
            "f = phi(int<2> a) { elim(int<2> b) { a ~ bern(0.2); b ~ bern(0.7); factor(a + b); } }; \
             factor(f[a]); gen(int<2> b) { b ~ bern(0.7); factor(a * b); }",
        )
        .unwrap();
        let mut st = State::new();
        st.insert("a".into(), Value::Int(2));
        st.insert("b".into(), Value::Int(1));
        st.insert("f".into(), Value::Array(vec![Value::Real(0.0), Value::Real(0.0)]));
        let (s1, w1) = eval_stmt(&st, &s).unwrap();
        let (s2, w2) = eval_stmt(&st, &desugar_stmt(&s)).unwrap();
        assert!((w1 - w2).abs() < 1e-12);
        assert_eq!(s1, s2);
    }

    #[test]
    fn nothing_to_eliminate() {
        let p = parse("data real y; real mu ~ normal(0, 1); y ~ normal(mu, 1);").unwrap();
        let plan = ElimPlan::default_for(&p).unwrap();
        assert!(plan.order.is_empty());
        let q = transform_all(&p, &plan).unwrap();
        assert_eq!(q.body, p.body);
    }

    #[test]
    fn single_binary_parameter() {
        let p = parse("data real y; int<2> z ~ bern(0.3); y ~ normal(z, 1);").unwrap();
        let step = eliminate_step(&p, "z").unwrap();
        assert!(step.neighbours.is_empty());
        assert_eq!(step.result.gamma.level("z"), Some(Level::GenQuant));
        assert_eq!(step.result.gamma.ty("f1"), Some(&BaseType::Real));
    }
}
