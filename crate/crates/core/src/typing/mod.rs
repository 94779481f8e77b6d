//! Level typing for both systems.
//!
//! [`crate::flow`] produces lattice-independent requirements; [`base`] and
//! [`ci`] translate them into unary and binary level constraints over the
//! environment, and [`solver`] checks or optimises them. Checking a
//! concrete environment and inferring placeholders share one code path.

pub mod base;
pub mod ci;
pub mod solver;

use std::collections::BTreeMap;

use crate::ast::Gamma;
use crate::flow::{Origin, Srcs};
use crate::lattice::Lattice;
use solver::{mask, Con, Problem, Rel, Tag};

pub use solver::Tag as Violation;

/// Outcome of checking or inferring levels.
#[derive(Clone, Debug)]
pub struct TypingReport<L: Lattice> {
    pub ok: bool,
    /// The environment with every placeholder resolved (the input
    /// environment when inference fails).
    pub resolved: Gamma<L>,
    pub violations: Vec<Violation>,
    /// Sum of the costs of the inferred placeholders.
    pub cost: u32,
}

impl<L: Lattice> TypingReport<L> {
    /// `name: level` pairs of the resolved environment, comma separated.
    pub fn levels_line(&self, names: &[String]) -> String {
        names
            .iter()
            .filter_map(|n| self.resolved.level(n).map(|l| format!("{n}: {l}")))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Allowed values for placeholders, by name. Missing names get every
/// level.
pub type Domains<L> = BTreeMap<String, Vec<L>>;

/// Constraint problem over the entries of an environment.
pub(crate) struct Builder<L: Lattice> {
    pub problem: Problem,
    _l: std::marker::PhantomData<L>,
}

impl<L: Lattice> Builder<L> {
    /// One solver variable per entry, in environment order. Concrete
    /// entries are fixed; placeholders take their domain and are costed.
    pub fn new(gamma: &Gamma<L>, domains: &Domains<L>) -> Self {
        let costs = L::ALL.map(|l| l.cost());
        let preference = L::preference().map(|l| l.index());
        let mut problem = Problem::new(costs, preference);
        for (name, e) in gamma.iter() {
            match e.level {
                Some(l) => problem.add_var(name, mask([l.index()]), false),
                None => {
                    let d = domains
                        .get(name)
                        .map(|ls| mask(ls.iter().map(|l| l.index())))
                        .unwrap_or(solver::FULL);
                    problem.add_var(name, d, true)
                }
            };
        }
        Builder {
            problem,
            _l: std::marker::PhantomData,
        }
    }

    fn tag(origin: &Origin, message: String) -> Tag {
        Tag {
            rule: origin.rule.to_string(),
            location: origin.location.clone(),
            message,
        }
    }

    pub fn fail(&mut self, origin: &Origin, message: String) {
        self.problem.add(Con::Fail, Self::tag(origin, message));
    }

    pub fn unary(&mut self, x: &str, ok: impl Fn(L) -> bool, origin: &Origin, message: String) {
        if let Some(v) = self.problem.var(x) {
            let m = mask(L::ALL.into_iter().filter(|l| ok(*l)).map(|l| l.index()));
            self.problem.add(Con::Unary(v, m), Self::tag(origin, message));
        }
    }

    pub fn binary(&mut self, a: &str, b: &str, ok: impl Fn(L, L) -> bool, origin: &Origin, message: String) {
        let (Some(va), Some(vb)) = (self.problem.var(a), self.problem.var(b)) else {
            return;
        };
        let mut rel: Rel = [[false; 3]; 3];
        for x in L::ALL {
            for y in L::ALL {
                rel[x.index()][y.index()] = ok(x, y);
            }
        }
        self.problem.add(Con::Binary(va, vb, rel), Self::tag(origin, message));
    }

    /// `s <= to` for every source.
    pub fn flows_to(&mut self, srcs: &Srcs, to: &str, origin: &Origin) {
        for s in srcs {
            self.binary(s, to, |a, b| a.leq(b), origin, format!("`{s}` flows into `{to}`"));
        }
    }

    /// `var` is not strictly below any source.
    pub fn not_below(&mut self, var: &str, srcs: &Srcs, origin: &Origin) {
        for s in srcs {
            if s != var {
                self.binary(
                    var,
                    s,
                    |u, l| !u.below(l),
                    origin,
                    format!("`{var}` is written after a read at the level of `{s}`"),
                );
            }
        }
    }

    /// Every pair of the given names has a join.
    pub fn compatible(&mut self, names: &Srcs, origin: &Origin) {
        let v: Vec<&String> = names.iter().collect();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                self.binary(
                    v[i],
                    v[j],
                    |a, b| a.join(b).is_some(),
                    origin,
                    format!("no upper bound of the levels of `{}` and `{}`", v[i], v[j]),
                );
            }
        }
    }

    /// Solves, writing the result into a copy of `gamma`.
    pub fn report(self, gamma: &Gamma<L>) -> TypingReport<L> {
        match self.problem.solve() {
            Ok(sol) => {
                let mut resolved = gamma.clone();
                for (name, v) in self.problem.names.iter().zip(&sol.values) {
                    resolved.set_level(name, Some(L::from_index(*v)));
                }
                TypingReport {
                    ok: true,
                    resolved,
                    violations: Vec::new(),
                    cost: sol.cost,
                }
            }
            Err(tags) => {
                let violations = if gamma.is_concrete() {
                    let values: Vec<usize> = self
                        .problem
                        .names
                        .iter()
                        .map(|n| gamma.level(n).unwrap().index())
                        .collect();
                    self.problem.violations(&values)
                } else {
                    self.problem.conflict(400).unwrap_or(tags)
                };
                TypingReport {
                    ok: false,
                    resolved: gamma.clone(),
                    violations,
                    cost: 0,
                }
            }
        }
    }
}
