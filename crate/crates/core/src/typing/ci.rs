//! The conditional-independence system over `l1 <= l2`, `l1 <= l3`.
//!
//! A program typed at `l1` factorises as a function of the `l1` and `l2`
//! variables times a function of the `l1` and `l3` variables, so its `l2`
//! parameters are independent of its `l3` parameters given the `l1` ones.

use std::collections::BTreeSet;

use super::{base, Builder, Domains, TypingReport, Violation};
use crate::analysis;
use crate::ast::{Gamma, Program, Stmt};
use crate::flow::{self, Action, ActionKind, Origin, Req, Srcs};
use crate::lattice::{CiLevel, Lattice, Level};

fn add_reqs(b: &mut Builder<CiLevel>, reqs: &[(Req, Origin)]) {
    for (r, o) in reqs {
        match r {
            Req::FlowsTo { srcs, to } => b.flows_to(srcs, to, o),
            Req::Factor { srcs } | Req::Exists { srcs } => b.compatible(srcs, o),
            Req::Sample { target, srcs } => {
                let mut all = srcs.clone();
                all.extend(target.iter().cloned());
                b.compatible(&all, o);
            }
            Req::NotBelow { var, srcs } => b.not_below(var, srcs, o),
            Req::Generative { .. } => {}
            Req::Fail { message } => b.fail(o, message.clone()),
        }
    }
}

fn add_level(b: &mut Builder<CiLevel>, actions: &[Action], level: CiLevel) {
    if level == CiLevel::L1 {
        return;
    }
    for a in actions {
        let o = Origin {
            rule: "SSUB2",
            location: a.location.clone(),
        };
        match a.kind {
            ActionKind::Assign => {
                if let Some(x) = &a.writes {
                    b.unary(x, |l| level.leq(l), &o, format!("`{x}` is below {level}"));
                }
            }
            ActionKind::Factor | ActionKind::Elim | ActionKind::Sample | ActionKind::Gen => {
                for s in a.level_srcs.iter().chain(a.samples.iter()) {
                    b.unary(
                        s,
                        |l| l.join(level).is_some(),
                        &o,
                        format!("`{s}` has no upper bound with {level}"),
                    );
                }
            }
        }
    }
}

fn builder(gamma: &Gamma<CiLevel>, s: &Stmt, level: CiLevel, domains: &Domains<CiLevel>) -> Builder<CiLevel> {
    let f = flow::analyze(gamma, s);
    let mut b = Builder::new(gamma, domains);
    add_reqs(&mut b, &f.reqs);
    add_level(&mut b, &f.actions, level);
    b
}

/// Checks `s` at `l1` under a concrete environment.
pub fn check_ci(gamma: &Gamma<CiLevel>, s: &Stmt) -> TypingReport<CiLevel> {
    check_ci_at(gamma, s, CiLevel::L1)
}

pub fn check_ci_at(gamma: &Gamma<CiLevel>, s: &Stmt, level: CiLevel) -> TypingReport<CiLevel> {
    builder(gamma, s, level, &Domains::new()).report(gamma)
}

/// Cheapest resolution of the placeholders (`l3` before `l1` before `l2`)
/// typing `s` at `l1`.
pub fn infer_ci(gamma: &Gamma<CiLevel>, s: &Stmt) -> TypingReport<CiLevel> {
    infer_ci_with(gamma, s, &Domains::new())
}

/// [`infer_ci`] with restricted placeholder domains.
pub fn infer_ci_with(gamma: &Gamma<CiLevel>, s: &Stmt, domains: &Domains<CiLevel>) -> TypingReport<CiLevel> {
    builder(gamma, s, CiLevel::L1, domains).report(gamma)
}

/// Solver problem behind [`infer_ci_with`], for optimality cross-checks.
pub fn ci_problem(gamma: &Gamma<CiLevel>, s: &Stmt, domains: &Domains<CiLevel>) -> super::solver::Problem {
    builder(gamma, s, CiLevel::L1, domains).problem
}

/// Claim `x2` independent of `x3` given `x1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CIPartition {
    pub x1: BTreeSet<String>,
    pub x2: BTreeSet<String>,
    pub x3: BTreeSet<String>,
}

impl CIPartition {
    pub fn new<'a>(
        x1: impl IntoIterator<Item = &'a str>,
        x2: impl IntoIterator<Item = &'a str>,
        x3: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let set = |xs: &mut dyn Iterator<Item = &'a str>| xs.map(String::from).collect();
        CIPartition {
            x1: set(&mut x1.into_iter()),
            x2: set(&mut x2.into_iter()),
            x3: set(&mut x3.into_iter()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CIQueryResult {
    pub derivable: bool,
    /// A concrete environment typing the program, when derivable.
    pub witness: Option<Gamma<CiLevel>>,
    /// Why not, otherwise.
    pub failure: Vec<Violation>,
}

/// Variables the program never assigns.
fn unassigned(p: &Program) -> Vec<String> {
    let w = analysis::assigned_anywhere(&p.body);
    p.gamma.names().filter(|n| !w.contains(*n)).cloned().collect()
}

fn ci_gamma(p: &Program) -> Gamma<CiLevel> {
    let mut g = Gamma::new();
    for (n, e) in p.gamma.iter() {
        g.insert(n, e.ty.clone(), None);
    }
    g
}

/// Whether the partition's independence is derivable: some labelling of
/// the assigned variables, with parameters labelled by the partition and
/// unmentioned parameters at `l1`, types the program at `l1`.
pub fn ci_query(p: &Program, partition: &CIPartition) -> CIQueryResult {
    let params: BTreeSet<String> = unassigned(p).into_iter().collect();
    let mut failure = Vec::new();
    for (set, name) in [(&partition.x1, "x1"), (&partition.x2, "x2"), (&partition.x3, "x3")] {
        for x in set {
            if !params.contains(x) {
                failure.push(Violation {
                    rule: "PARTITION".into(),
                    location: name.into(),
                    message: format!("`{x}` is not a parameter of the program"),
                });
            }
        }
    }
    if !partition.x1.is_disjoint(&partition.x2)
        || !partition.x1.is_disjoint(&partition.x3)
        || !partition.x2.is_disjoint(&partition.x3)
    {
        failure.push(Violation {
            rule: "PARTITION".into(),
            location: String::new(),
            message: "the three sets must be disjoint".into(),
        });
    }
    if !failure.is_empty() {
        return CIQueryResult {
            derivable: false,
            witness: None,
            failure,
        };
    }
    let mut g = ci_gamma(p);
    for x in &params {
        let l = if partition.x2.contains(x) {
            CiLevel::L2
        } else if partition.x3.contains(x) {
            CiLevel::L3
        } else {
            CiLevel::L1
        };
        g.set_level(x, Some(l));
    }
    let r = infer_ci(&g, &p.body);
    CIQueryResult {
        derivable: r.ok,
        witness: r.ok.then_some(r.resolved),
        failure: r.violations,
    }
}

/// Markov blanket of the parameter `z`: the cheapest `l1`-typing with `z`
/// the only `l2` parameter. Sampled variables other than `z` may be `l1`
/// (the blanket, `x1`) or `l3` (independent of `z` given the blanket,
/// `x3`). Assigned variables are reported with the side they land on.
/// Unsampled inputs, and continuous model parameters when `z` is
/// discrete, are conditioned on and left out.
pub fn markov_blanket(p: &Program, z: &str) -> Result<CIPartition, String> {
    let params = unassigned(p);
    let sampled = analysis::sampled(&p.body);
    if !params.iter().any(|x| x == z) || !sampled.contains(z) {
        return Err(format!("`{z}` is not a parameter of the program"));
    }
    let base = if p.gamma.is_concrete() {
        p.gamma.clone()
    } else {
        let r = base::infer_levels(p);
        if !r.ok {
            return Err("the program does not type under the base system".into());
        }
        r.resolved
    };
    let z_discrete = p.gamma.ty(z).is_some_and(|t| t.support().is_some());
    let mut g = ci_gamma(p);
    let mut candidates = Srcs::new();
    for x in &params {
        let continuous_param = base.level(x) == Some(Level::Model) && p.gamma.ty(x).is_some_and(|t| t.is_continuous());
        if x == z {
            g.set_level(x, Some(CiLevel::L2));
        } else if !sampled.contains(x) || (z_discrete && continuous_param) {
            g.set_level(x, Some(CiLevel::L1));
        } else {
            candidates.insert(x.clone());
        }
    }
    let domains: Domains<CiLevel> = candidates
        .iter()
        .map(|x| (x.clone(), vec![CiLevel::L1, CiLevel::L3]))
        .collect();
    let r = infer_ci_with(&g, &p.body, &domains);
    if !r.ok {
        return Err(format!(
            "no typing isolates `{z}`: {}",
            r.violations.first().map(|v| v.message.clone()).unwrap_or_default()
        ));
    }
    let mut out = CIPartition::default();
    out.x2.insert(z.to_string());
    let assigned = analysis::assigned_anywhere(&p.body);
    for x in candidates.iter().chain(assigned.iter()) {
        match r.resolved.level(x) {
            Some(CiLevel::L1) => out.x1.insert(x.clone()),
            Some(CiLevel::L2) => out.x2.insert(x.clone()),
            Some(CiLevel::L3) => out.x3.insert(x.clone()),
            None => false,
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_stmt};

    #[test]
    fn skip_types_under_any_environment() {
        let mut g = Gamma::new();
        g.insert("a", crate::ast::BaseType::Real, Some(CiLevel::L2));
        assert!(check_ci(&g, &Stmt::Skip).ok);
    }

    #[test]
    fn l2_and_l3_cannot_meet() {
        let mut g = Gamma::new();
        for (n, l) in [("x1", CiLevel::L2), ("x2", CiLevel::L3), ("x3", CiLevel::L1)] {
            g.insert(n, crate::ast::BaseType::Real, Some(l));
        }
        let r = check_ci(&g, &parse_stmt("x3 ~ normal(x1 + x2, 1);").unwrap());
        assert!(!r.ok);
        assert!(r.violations[0].message.contains("no upper bound"));
    }

    #[test]
    fn pinned_single_statement() {
        let mut g = Gamma::new();
        g.insert("z", crate::ast::BaseType::BoundedInt(2), Some(CiLevel::L2));
        g.insert("p", crate::ast::BaseType::Real, Some(CiLevel::L1));
        let r = infer_ci(&g, &parse_stmt("z ~ bern(p);").unwrap());
        assert!(r.ok && r.cost == 0);
    }

    #[test]
    fn empty_x3_is_always_derivable() {
        let p = parse("real a ~ normal(0, 1); real b ~ normal(a, 1);").unwrap();
        let q = ci_query(&p, &CIPartition::new(["a"], ["b"], []));
        assert!(q.derivable);
    }

    #[test]
    fn single_parameter_blanket_is_empty() {
        let p = parse("int<2> z ~ bern(0.3);").unwrap();
        let m = markov_blanket(&p, "z").unwrap();
        assert!(m.x1.is_empty() && m.x3.is_empty());
    }
}
