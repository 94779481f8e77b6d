//! Helpers shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use slic::ast::{Gamma, Program};
use slic::corpus::Example;
use slic::interp::{self, State};
use slic::lattice::{CiLevel, Lattice, Level};
use slic::oracle::{random_store, random_value};
use slic::shred::shred;
use slic::typing::base::infer_levels;
use slic::typing::ci::{ci_query, markov_blanket};

/// The program with its levels inferred.
pub fn typed(e: &Example) -> Program {
    let r = infer_levels(&e.program);
    assert!(r.ok, "{} does not type: {:?}", e.name, r.violations);
    Program::new(r.resolved, e.program.body.clone())
}

/// A concrete environment of the CI lattice that types the program, taken
/// from the Markov blanket of its first sampled parameter, or every
/// parameter at `l1` when nothing is sampled.
pub fn ci_env(p: &Program) -> Option<Gamma<CiLevel>> {
    let sampled = slic::analysis::sampled(&p.body);
    let part = match p.gamma.names().find(|n| sampled.contains(*n)) {
        Some(z) => markov_blanket(p, z).ok()?,
        None => Default::default(),
    };
    let params: Vec<String> = p.gamma.names().cloned().collect();
    let mut part = part;
    let assigned = slic::analysis::assigned_anywhere(&p.body);
    for s in [&mut part.x1, &mut part.x2, &mut part.x3] {
        s.retain(|x| params.contains(x) && !assigned.contains(x));
    }
    ci_query(p, &part).witness
}

/// `s` with every variable that `keep` rejects redrawn.
pub fn perturb<L: Lattice>(gamma: &Gamma<L>, s: &State, keep: impl Fn(L) -> bool, rng: &mut impl Rng) -> State {
    let mut out = s.clone();
    for (n, e) in gamma.iter() {
        if let Some(l) = e.level {
            if !keep(l) && s.contains_key(n) {
                out.insert(n.clone(), random_value(&e.ty, rng));
            }
        }
    }
    out
}

/// Whether two states agree on every variable `keep` accepts.
pub fn agree<L: Lattice>(gamma: &Gamma<L>, a: &State, b: &State, keep: impl Fn(L) -> bool) -> bool {
    gamma.iter().all(|(n, e)| match e.level {
        Some(l) if keep(l) => match (a.get(n), b.get(n)) {
            (Some(x), Some(y)) => x.approx_eq(y, 0.0),
            (x, y) => x == y,
        },
        _ => true,
    })
}

/// Runs an l-equal pair of stores; `None` when either run fails.
pub fn noninterference_pair<L: Lattice>(
    p: &Program,
    gamma: &Gamma<L>,
    data: &State,
    level: L,
    rng: &mut impl Rng,
) -> Option<bool> {
    let s1 = interp::prepare_store(gamma, &p.body, &random_store(p, data, rng));
    let s2 = perturb(gamma, &s1, |l| l.leq(level), rng);
    let (o1, _) = interp::run(p, &s1).ok()?;
    let (o2, _) = interp::run(p, &s2).ok()?;
    Some(agree(gamma, &o1, &o2, |l| l.leq(level)))
}

/// Runs the program and the composition of its slices on one random store
/// and compares final states and weights.
pub fn shred_agrees(p: &Program, data: &State, tol: f64, rng: &mut impl Rng) -> Option<bool> {
    let sh = shred(&p.gamma, &p.body).expect("shreds");
    let q = Program::new(p.gamma.clone(), sh.compose());
    let store = random_store(p, data, rng);
    let (s1, w1) = interp::run(p, &store).ok()?;
    let (s2, w2) = interp::run(&q, &store).ok()?;
    let states = s1.len() == s2.len() && s1.iter().all(|(k, v)| s2.get(k).is_some_and(|u| v.approx_eq(u, tol)));
    Some(states && slic::oracle::rel_err(w1, w2) <= tol)
}

/// Slices all pass the single-level check at their own level.
pub fn slices_single_level(p: &Program) -> bool {
    let sh = shred(&p.gamma, &p.body).expect("shreds");
    Level::ALL.iter().all(|&l| slic::shred::is_single_level(&p.gamma, l, sh.get(l)))
}
