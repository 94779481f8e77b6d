//! Splitting a statement into three single-level slices.
//!
//! Under the base lattice the slices are the data preprocessing, the
//! model and the generated quantities; under the CI lattice they are the
//! `l1`, `l2` and `l3` parts. The same code serves both: only the level of
//! each atomic statement and of each guard is needed.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::analysis;
use crate::ast::{Expr, Gamma, Stmt};
use crate::flow::{self, Action, ActionKind, Srcs};
use crate::lattice::Lattice;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ShredError {
    #[error("no level for `{0}`")]
    NoLevel(String),
    #[error("{0}")]
    Flow(#[from] flow::FlowError),
    #[error("statement at {level} under a guard at {guard}: `{location}`")]
    Guard { level: String, guard: String, location: String },
}

/// The three slices, indexed by lattice position.
#[derive(Clone, Debug, PartialEq)]
pub struct Shredded<L: Lattice> {
    pub slices: [Stmt; 3],
    _l: std::marker::PhantomData<L>,
}

impl<L: Lattice> Shredded<L> {
    fn empty() -> Self {
        Shredded {
            slices: [Stmt::Skip, Stmt::Skip, Stmt::Skip],
            _l: std::marker::PhantomData,
        }
    }

    pub fn get(&self, l: L) -> &Stmt {
        &self.slices[l.index()]
    }

    /// The slices run one after the other.
    pub fn compose(&self) -> Stmt {
        Stmt::seq(self.slices.iter().cloned())
    }

    fn push(&mut self, l: L, s: Stmt) {
        let cur = std::mem::replace(&mut self.slices[l.index()], Stmt::Skip);
        self.slices[l.index()] = Stmt::seq([cur, s]);
    }
}

/// Level an atomic action runs at.
pub fn action_level<L: Lattice>(gamma: &Gamma<L>, a: &Action) -> Result<L, ShredError> {
    let join = flow::join_of(gamma, &a.level_srcs).ok_or_else(|| ShredError::NoLevel(a.location.clone()))?;
    match a.kind {
        ActionKind::Assign => Ok(join),
        _ => join
            .join(L::density_floor())
            .ok_or_else(|| ShredError::NoLevel(a.location.clone())),
    }
}

struct Shredder<'a, L: Lattice> {
    gamma: &'a Gamma<L>,
    actions: std::vec::IntoIter<Action>,
    /// Sources of the loop variables in scope.
    binders: BTreeMap<String, Srcs>,
}

impl<L: Lattice> Shredder<'_, L> {
    fn next_level(&mut self) -> Result<L, ShredError> {
        let a = self
            .actions
            .next()
            .ok_or_else(|| ShredError::NoLevel("statement".into()))?;
        action_level(self.gamma, &a)
    }

    fn guard_level(&self, es: &[&Expr]) -> Result<L, ShredError> {
        flow::join_of(self.gamma, &self.guard_srcs(es)).ok_or_else(|| ShredError::NoLevel("guard".into()))
    }

    fn guard_srcs(&self, es: &[&Expr]) -> Srcs {
        let mut srcs = Srcs::new();
        for e in es {
            for x in analysis::free_vars_expr(e) {
                match self.binders.get(&x) {
                    Some(s) => srcs.extend(s.iter().cloned()),
                    None if self.gamma.contains(&x) => {
                        srcs.insert(x);
                    }
                    None => {}
                }
            }
        }
        srcs
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Shredded<L>, ShredError> {
        let mut out = Shredded::empty();
        match s {
            Stmt::Skip => {}
            Stmt::Seq(a, b) => {
                let (x, y) = (self.stmt(a)?, self.stmt(b)?);
                for l in L::ALL {
                    out.push(l, x.get(l).clone());
                    out.push(l, y.get(l).clone());
                }
            }
            Stmt::Assign(..) | Stmt::Factor(_) | Stmt::Sample(..) | Stmt::Elim { .. } | Stmt::Gen { .. } => {
                let l = self.next_level()?;
                out.push(l, s.clone());
            }
            Stmt::If { cond, then, els } => {
                let g = self.guard_level(&[cond])?;
                let (t, e) = (self.stmt(then)?, self.stmt(els)?);
                let (t, e) = (merge_below(t, g, s)?, merge_below(e, g, s)?);
                for l in L::ALL {
                    let (a, b) = (t.get(l).clone(), e.get(l).clone());
                    if !(a.is_skip() && b.is_skip()) {
                        out.push(
                            l,
                            Stmt::If {
                                cond: cond.clone(),
                                then: Box::new(a),
                                els: Box::new(b),
                            },
                        );
                    }
                }
            }
            Stmt::For { var, lo, hi, body } => {
                let g = self.guard_level(&[lo, hi])?;
                let srcs = self.guard_srcs(&[lo, hi]);
                let saved = self.binders.insert(var.clone(), srcs);
                let inner = self.stmt(body);
                match saved {
                    Some(v) => self.binders.insert(var.clone(), v),
                    None => self.binders.remove(var),
                };
                let b = merge_below(inner?, g, s)?;
                for l in L::ALL {
                    let part = b.get(l);
                    if !part.is_skip() {
                        out.push(
                            l,
                            Stmt::For {
                                var: var.clone(),
                                lo: lo.clone(),
                                hi: hi.clone(),
                                body: Box::new(part.clone()),
                            },
                        );
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Moves every slice strictly below the guard level into the guard-level
/// slice, keeping lattice order. A nonempty slice incomparable with the
/// guard is an error.
fn merge_below<L: Lattice>(s: Shredded<L>, g: L, at: &Stmt) -> Result<Shredded<L>, ShredError> {
    let mut out = Shredded::empty();
    let mut merged = Vec::new();
    for l in L::ALL {
        let part = s.get(l).clone();
        if l.leq(g) {
            merged.push(part);
        } else if g.leq(l) {
            out.slices[l.index()] = part;
        } else if !part.is_skip() {
            return Err(ShredError::Guard {
                level: l.to_string(),
                guard: g.to_string(),
                location: crate::pretty::summary(at),
            });
        }
    }
    out.slices[g.index()] = Stmt::seq(merged);
    Ok(out)
}

/// Shreds `s` under a concrete environment. The input is expected to type
/// at the bottom level; ill-typed inputs fail when some statement or guard
/// has no level.
pub fn shred<L: Lattice>(gamma: &Gamma<L>, s: &Stmt) -> Result<Shredded<L>, ShredError> {
    if let Some(x) = gamma.placeholders().first() {
        return Err(flow::FlowError::Placeholder(x.clone()).into());
    }
    let actions = flow::actions(gamma, s)?;
    let mut sh = Shredder {
        gamma,
        actions: actions.into_iter(),
        binders: BTreeMap::new(),
    };
    sh.stmt(s)
}

/// Whether every write of `s` is to a variable at `level` and every
/// density contribution runs exactly at `level`.
pub fn is_single_level<L: Lattice>(gamma: &Gamma<L>, level: L, s: &Stmt) -> bool {
    let Ok(actions) = flow::actions(gamma, s) else {
        return false;
    };
    actions
        .iter()
        .all(|a| action_level(gamma, a).is_ok_and(|l| l == level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::BaseType;
    use crate::lattice::{CiLevel, Level};
    use crate::parser::parse_stmt;

    fn gamma(entries: &[(&str, Level)]) -> Gamma<Level> {
        let mut g = Gamma::new();
        for (n, l) in entries {
            g.insert(n, BaseType::Real, Some(*l));
        }
        g
    }

    #[test]
    fn skip_shreds_to_skips() {
        let r = shred(&Gamma::<Level>::new(), &Stmt::Skip).unwrap();
        assert!(r.slices.iter().all(Stmt::is_skip));
        for l in Level::ALL {
            assert!(is_single_level(&Gamma::new(), l, &Stmt::Skip));
        }
    }

    #[test]
    fn slices_follow_levels() {
        let g = gamma(&[("x", Level::Data), ("mu", Level::Model), ("y", Level::GenQuant)]);
        let s = parse_stmt("x = 2; mu ~ normal(x, 1); y ~ normal(mu, 1); factor(x);").unwrap();
        let r = shred(&g, &s).unwrap();
        assert_eq!(*r.get(Level::Data), parse_stmt("x = 2;").unwrap());
        assert_eq!(*r.get(Level::Model), parse_stmt("mu ~ normal(x, 1); factor(x);").unwrap());
        assert_eq!(*r.get(Level::GenQuant), parse_stmt("y ~ normal(mu, 1);").unwrap());
        for l in Level::ALL {
            assert!(is_single_level(&g, l, r.get(l)));
        }
    }

    #[test]
    fn mixed_writes_are_not_single_level() {
        let g = gamma(&[("x", Level::Data), ("y", Level::Model)]);
        let s = parse_stmt("x = 1; y ~ normal(x, 1);").unwrap();
        assert!(!is_single_level(&g, Level::Data, &s));
        assert!(!is_single_level(&g, Level::Model, &s));
    }

    #[test]
    fn guards_split_per_level() {
        let g = gamma(&[("c", Level::Data), ("x", Level::Data), ("mu", Level::Model)]);
        let s = parse_stmt("if (c > 0) { x = 1; mu ~ normal(x, 1); } else { x = 2; }").unwrap();
        let r = shred(&g, &s).unwrap();
        assert_eq!(*r.get(Level::Data), parse_stmt("if (c > 0) { x = 1; } else { x = 2; }").unwrap());
        assert_eq!(
            *r.get(Level::Model),
            parse_stmt("if (c > 0) { mu ~ normal(x, 1); } else { skip; }").unwrap()
        );
        let s = parse_stmt("for (i in 1:3) { x = i; mu ~ normal(x, 1); }").unwrap();
        let r = shred(&g, &s).unwrap();
        assert_eq!(*r.get(Level::Data), parse_stmt("for (i in 1:3) { x = i; }").unwrap());
    }

    #[test]
    fn ci_lattice_uses_the_join() {
        let mut g = Gamma::new();
        g.insert("a", BaseType::Real, Some(CiLevel::L1));
        g.insert("b", BaseType::Real, Some(CiLevel::L2));
        g.insert("c", BaseType::Real, Some(CiLevel::L3));
        let s = parse_stmt("a ~ normal(0, 1); b ~ normal(a, 1); c ~ normal(a, 1);").unwrap();
        let r = shred(&g, &s).unwrap();
        assert_eq!(*r.get(CiLevel::L1), parse_stmt("a ~ normal(0, 1);").unwrap());
        assert_eq!(*r.get(CiLevel::L2), parse_stmt("b ~ normal(a, 1);").unwrap());
        assert_eq!(*r.get(CiLevel::L3), parse_stmt("c ~ normal(a, 1);").unwrap());
    }
}
