//! The base system over `data <= model <= genquant`.

use thiserror::Error;

use super::{Builder, Domains, TypingReport};
use crate::analysis::{self, analysis_sets};
use crate::ast::{BaseType, Expr, Gamma, Program, Stmt};
use crate::flow::{self, Action, ActionKind, Origin, Req, Ty};
use crate::lattice::{Lattice, Level};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{rule}: {message}")]
    Rule { rule: String, message: String },
    #[error("expression reads level {found}, above {expected}")]
    TooHigh { found: Level, expected: Level },
}

/// Adds the constraints of the requirements.
fn add_reqs(b: &mut Builder<Level>, reqs: &[(Req, Origin)]) {
    for (r, o) in reqs {
        match r {
            Req::FlowsTo { srcs, to } => b.flows_to(srcs, to, o),
            Req::Factor { srcs } => {
                for s in srcs {
                    b.unary(s, |l| l <= Level::Model, o, format!("`{s}` is read by a density above model"));
                }
            }
            Req::Sample { target: Some(x), srcs } => {
                for s in srcs {
                    b.binary(
                        s,
                        x,
                        |l, t| l <= t.max(Level::Model),
                        o,
                        format!("`{s}` is read by a density of `{x}` above its level"),
                    );
                }
            }
            Req::Sample { target: None, srcs } => {
                for s in srcs {
                    b.unary(s, |l| l <= Level::Model, o, format!("`{s}` is read by a density above model"));
                }
            }
            Req::Exists { .. } => {}
            Req::NotBelow { var, srcs } => b.not_below(var, srcs, o),
            Req::Generative { var } => b.unary(
                var,
                |l| l != Level::GenQuant,
                o,
                format!("`{var}` is sampled and then sampled or assigned again as a generated quantity"),
            ),
            Req::Fail { message } => b.fail(o, message.clone()),
        }
    }
}

/// Constraints making the top-level actions run at `level` or above.
fn add_level(b: &mut Builder<Level>, actions: &[Action], level: Level) {
    for a in actions {
        let o = Origin {
            rule: "SSUB",
            location: a.location.clone(),
        };
        match a.kind {
            ActionKind::Assign => {
                if let Some(x) = &a.writes {
                    b.unary(x, |l| l >= level, &o, format!("`{x}` is below {level}"));
                }
            }
            ActionKind::Factor | ActionKind::Elim => {
                if Level::Model < level {
                    b.fail(&o, format!("a factor runs at model, below {level}"));
                }
            }
            ActionKind::Sample | ActionKind::Gen => match &a.samples {
                Some(x) => b.unary(x, |l| l.max(Level::Model) >= level, &o, format!("`~ {x}` is below {level}")),
                None if Level::Model < level => b.fail(&o, format!("a density runs at model, below {level}")),
                None => {}
            },
        }
    }
}

fn builder(gamma: &Gamma<Level>, s: &Stmt, level: Level, domains: &Domains<Level>) -> Builder<Level> {
    let f = flow::analyze(gamma, s);
    let mut b = Builder::new(gamma, domains);
    add_reqs(&mut b, &f.reqs);
    add_level(&mut b, &f.actions, level);
    b
}

fn base_type(t: &Ty) -> BaseType {
    match t {
        Ty::Real | Ty::Unknown => BaseType::Real,
        Ty::Int => BaseType::Int,
        Ty::Array(e) => BaseType::Array(Box::new(base_type(e)), None),
    }
}

/// Type and least level of an expression under a concrete environment.
/// Array sizes are not tracked, so array types come back unsized.
pub fn check_expr(gamma: &Gamma<Level>, e: &Expr) -> Result<(BaseType, Level), TypeError> {
    let f = flow::analyze_expr(gamma, e);
    let mut b = Builder::new(gamma, &Domains::new());
    add_reqs(&mut b, &f.reqs);
    let report = b.report(gamma);
    if let Some(v) = report.violations.first() {
        return Err(TypeError::Rule {
            rule: v.rule.clone(),
            message: v.message.clone(),
        });
    }
    let level = flow::join_of(gamma, &f.srcs).ok_or_else(|| TypeError::Rule {
        rule: "PRIMCALL".into(),
        message: "unbound or unresolved variable".into(),
    })?;
    Ok((base_type(&f.ty), level))
}

/// Checks that `e` has level at most `level`.
pub fn check_expr_at(gamma: &Gamma<Level>, e: &Expr, level: Level) -> Result<BaseType, TypeError> {
    let (t, found) = check_expr(gamma, e)?;
    if found <= level {
        Ok(t)
    } else {
        Err(TypeError::TooHigh { found, expected: level })
    }
}

/// Checks `s` at `level` under a concrete environment.
pub fn check_stmt(gamma: &Gamma<Level>, s: &Stmt, level: Level) -> TypingReport<Level> {
    builder(gamma, s, level, &Domains::new()).report(gamma)
}

/// Whether `s1; s2` may be split by level: nothing `s1` reads at some
/// level is written by `s2` at a strictly lower level.
pub fn shreddable<L: Lattice>(gamma: &Gamma<L>, s1: &Stmt, s2: &Stmt) -> bool {
    let (Ok(a), Ok(b)) = (analysis_sets(gamma, s1), analysis_sets(gamma, s2)) else {
        return false;
    };
    L::ALL.into_iter().all(|l1| {
        L::ALL
            .into_iter()
            .filter(|l2| l2.below(l1))
            .all(|l2| a.r_at(l1).is_disjoint(b.w_at(l2)))
    })
}

/// Whether `s1; s2` never samples a generated quantity twice, or samples
/// and assigns it. Data-level samples always contribute at `model`, so
/// only `genquant` is restricted.
pub fn generative(gamma: &Gamma<Level>, s1: &Stmt, s2: &Stmt) -> bool {
    let (Ok(a), Ok(b)) = (analysis_sets(gamma, s1), analysis_sets(gamma, s2)) else {
        return false;
    };
    [Level::GenQuant].into_iter().all(|l| {
        a.wtilde_at(l).is_disjoint(b.wtilde_at(l))
            && a.wtilde_at(l).is_disjoint(b.w_at(l))
            && a.w_at(l).is_disjoint(b.wtilde_at(l))
    })
}

/// Placeholder domains of the base inference: assigned variables may take
/// any level, the others (parameters and generated quantities) are model
/// or genquant.
pub fn default_domains(p: &Program) -> Domains<Level> {
    let assigned = analysis::assigned_anywhere(&p.body);
    p.gamma
        .placeholders()
        .into_iter()
        .map(|x| {
            let d = if assigned.contains(&x) {
                Level::ALL.to_vec()
            } else {
                vec![Level::Model, Level::GenQuant]
            };
            (x, d)
        })
        .collect()
}

/// Cheapest concrete environment typing the program at `data`.
pub fn infer_levels(p: &Program) -> TypingReport<Level> {
    builder(&p.gamma, &p.body, Level::Data, &default_domains(p)).report(&p.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_expr, parse_stmt};

    fn gamma(entries: &[(&str, BaseType, Level)]) -> Gamma<Level> {
        let mut g = Gamma::new();
        for (n, t, l) in entries {
            g.insert(n, t.clone(), Some(*l));
        }
        g
    }

    #[test]
    fn expression_levels() {
        let g = gamma(&[("mu", BaseType::Real, Level::Model), ("x", BaseType::Real, Level::Data)]);
        assert_eq!(check_expr(&g, &Expr::Real(3.0)).unwrap(), (BaseType::Real, Level::Data));
        assert_eq!(
            check_expr(&g, &parse_expr("mu + x").unwrap()).unwrap(),
            (BaseType::Real, Level::Model)
        );
        let g = gamma(&[("x", BaseType::Real, Level::Model)]);
        let t = parse_expr("target(x ~ normal(0, 1))").unwrap();
        assert_eq!(check_expr(&g, &t).unwrap().1, Level::Model);
        assert!(check_expr_at(&g, &t, Level::Data).is_err());
    }

    #[test]
    fn mutation_after_read_is_rejected() {
        let g = gamma(&[("sigma", BaseType::Real, Level::Data), ("mu", BaseType::Real, Level::Model)]);
        let s = parse_stmt("sigma = 1; mu ~ normal(0, sigma); sigma = 2;").unwrap();
        let r = check_stmt(&g, &s, Level::Data);
        assert!(!r.ok);
        assert!(r.violations.iter().any(|v| v.rule == "SEQ/shreddable"));
        let (a, b) = (parse_stmt("mu ~ normal(0, sigma);").unwrap(), parse_stmt("sigma = 2;").unwrap());
        assert!(!shreddable(&g, &a, &b));
        assert!(shreddable(&g, &a, &Stmt::Skip));
    }

    #[test]
    fn double_sample_outside_model_is_rejected() {
        let g = gamma(&[("y", BaseType::Real, Level::GenQuant)]);
        let s = parse_stmt("y ~ normal(0, 1); y ~ normal(0, 1); y = 5;").unwrap();
        let r = check_stmt(&g, &s, Level::Data);
        assert!(!r.ok);
        assert!(r.violations.iter().any(|v| v.rule == "SEQ/generative"));
        let (a, b) = (parse_stmt("y ~ normal(0, 1);").unwrap(), parse_stmt("y = 5;").unwrap());
        assert!(!generative(&g, &a, &b));
        let g = gamma(&[("y", BaseType::Real, Level::Model)]);
        assert!(generative(&g, &a, &a));
    }

    #[test]
    fn skip_types_everywhere() {
        for l in Level::ALL {
            assert!(check_stmt(&Gamma::new(), &Stmt::Skip, l).ok);
        }
    }

    #[test]
    fn independent_assignments_are_shreddable() {
        let g = gamma(&[("x", BaseType::Real, Level::Data), ("y", BaseType::Real, Level::Data)]);
        let (a, b) = (parse_stmt("y = x;").unwrap(), parse_stmt("x = 1;").unwrap());
        assert!(shreddable(&g, &a, &b));
    }

    #[test]
    fn pure_data_assignments_resolve_to_data() {
        let p = parse("data real a; real b = a * 2; real c = b + a;").unwrap();
        let r = infer_levels(&p);
        assert!(r.ok);
        assert_eq!(r.resolved.level("b"), Some(Level::Data));
        assert_eq!(r.resolved.level("c"), Some(Level::Data));
        assert_eq!(r.cost, 0);
    }
}
