//! Brute-force ground truth.
//!
//! Every discrete parameter of a program is enumerated and the density is
//! evaluated at each assignment, with continuous values held fixed. The
//! resulting tables check elimination, conditional independence and the
//! factorisation of the generated-quantities slice.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis;
use crate::ast::{BaseType, Gamma, Program};
use crate::interp::{self, EvalCounters, EvalError, State, Value, Weight};
use crate::lattice::Lattice;
use crate::typing::ci::CIPartition;

/// Largest table enumerated by default.
pub const DEFAULT_CAP: usize = 1 << 20;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("the joint table has {size} cells, more than the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("`{0}` is neither in the context nor a bounded discrete scalar")]
    NotEnumerable(String),
    #[error("evaluation failed at {at}: {err}")]
    Eval { at: String, err: EvalError },
    #[error("tables disagree on `{0}`")]
    ShapeMismatch(String),
}

/// Unnormalised density over every assignment of the discrete axes.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    pub axes: Vec<(String, u32)>,
    /// Row-major, last axis fastest; values run over `1..=K`.
    pub entries: Vec<Weight>,
    pub context: State,
}

impl JointTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Assignment of cell `i`.
    pub fn assignment(&self, mut i: usize) -> Vec<u32> {
        let mut out = vec![0; self.axes.len()];
        for (slot, (_, k)) in out.iter_mut().zip(&self.axes).rev() {
            *slot = (i % *k as usize) as u32 + 1;
            i /= *k as usize;
        }
        out
    }

    pub fn index(&self, a: &[u32]) -> usize {
        a.iter()
            .zip(&self.axes)
            .fold(0, |acc, (v, (_, k))| acc * *k as usize + (*v as usize - 1))
    }

    pub fn get(&self, a: &[u32]) -> Weight {
        self.entries[self.index(a)]
    }

    pub fn total(&self) -> Weight {
        self.entries.iter().sum()
    }

    fn axis(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|(n, _)| n == name)
    }

    /// Sum over every axis not in `keep`, keeping the order of `keep`.
    pub fn marginal(&self, keep: &[&str]) -> JointTable {
        let pos: Vec<usize> = keep.iter().filter_map(|n| self.axis(n)).collect();
        let axes: Vec<(String, u32)> = pos.iter().map(|&i| self.axes[i].clone()).collect();
        let mut out = JointTable {
            entries: vec![0.0; axes.iter().map(|(_, k)| *k as usize).product()],
            axes,
            context: self.context.clone(),
        };
        for (i, w) in self.entries.iter().enumerate() {
            let a = self.assignment(i);
            let sub: Vec<u32> = pos.iter().map(|&p| a[p]).collect();
            let j = out.index(&sub);
            out.entries[j] += w;
        }
        out
    }

    /// Sums out one axis.
    pub fn sum_out(&self, name: &str) -> JointTable {
        let keep: Vec<&str> = self
            .axes
            .iter()
            .map(|(n, _)| n.as_str())
            .filter(|n| *n != name)
            .collect();
        self.marginal(&keep)
    }

    /// The table divided by its total; all-zero tables stay zero.
    pub fn normalised(&self) -> JointTable {
        let z = self.total();
        let mut out = self.clone();
        if z > 0.0 {
            out.entries.iter_mut().for_each(|w| *w /= z);
        }
        out
    }
}

/// Enumerated axes: unassigned bounded-int scalars missing from the
/// context, in declaration order. Every other free parameter must be in
/// the context.
pub fn enumeration_axes(p: &Program, context: &State) -> Result<Vec<(String, u32)>, OracleError> {
    let assigned = analysis::assigned_anywhere(&p.body);
    let mut axes = Vec::new();
    for (n, e) in p.gamma.iter() {
        if context.contains_key(n) || assigned.contains(n) {
            continue;
        }
        match e.ty {
            BaseType::BoundedInt(k) => axes.push((n.clone(), k)),
            _ => return Err(OracleError::NotEnumerable(n.clone())),
        }
    }
    Ok(axes)
}

fn describe(axes: &[(String, u32)], a: &[u32]) -> String {
    if axes.is_empty() {
        return "the context".into();
    }
    axes.iter()
        .zip(a)
        .map(|((n, _), v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn enumerate_joint(p: &Program, context: &State) -> Result<JointTable, OracleError> {
    enumerate_joint_capped(p, context, DEFAULT_CAP)
}

/// Density at `context` extended by every assignment of the axes.
pub fn enumerate_joint_capped(p: &Program, context: &State, cap: usize) -> Result<JointTable, OracleError> {
    let axes = enumeration_axes(p, context)?;
    let size = axes
        .iter()
        .try_fold(1usize, |acc, (_, k)| acc.checked_mul(*k as usize))
        .filter(|s| *s <= cap)
        .ok_or(OracleError::CapExceeded {
            size: axes.iter().map(|(_, k)| *k as usize).fold(1usize, usize::saturating_mul),
            cap,
        })?;
    let mut t = JointTable {
        axes,
        entries: Vec::with_capacity(size),
        context: context.clone(),
    };
    let mut store = context.clone();
    for i in 0..size {
        let a = t.assignment(i);
        for ((n, _), v) in t.axes.iter().zip(&a) {
            store.insert(n.clone(), Value::Int(*v as i64));
        }
        let (_, w) = interp::run(p, &store).map_err(|err| OracleError::Eval {
            at: describe(&t.axes, &a),
            err,
        })?;
        t.entries.push(w);
    }
    Ok(t)
}

/// Relative error with a floor on the denominator so that 0 vs 0 is 0.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreservationReport {
    pub max_rel_err: f64,
    pub num_points: usize,
    pub pass: bool,
    /// Axis values and trial number of the worst cell.
    pub worst_point: BTreeMap<String, i64>,
    pub tolerance: f64,
}

impl PreservationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: max relative error {:.3e} over {} points (tolerance {:.1e})",
            if self.pass { "pass" } else { "FAIL" },
            self.max_rel_err,
            self.num_points,
            self.tolerance
        )
    }
}

/// Knobs of the randomised checks.
#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            trials: 20,
            tolerance: 1e-8,
            seed: 0,
            cap: DEFAULT_CAP,
        }
    }
}

/// A random value of a type. Reals are uniform on (0.05, 0.95), which
/// keeps them inside the support of every built-in distribution; bounded
/// ints are uniform on their support and plain ints on 1..=3.
pub fn random_value(t: &BaseType, rng: &mut impl Rng) -> Value {
    match t {
        BaseType::Real => Value::Real(rng.gen_range(0.05..0.95)),
        BaseType::Int => Value::Int(rng.gen_range(1..=3)),
        BaseType::BoundedInt(k) => Value::Int(rng.gen_range(1..=*k as i64)),
        BaseType::Array(e, n) => Value::Array((0..n.unwrap_or(1)).map(|_| random_value(e, rng)).collect()),
    }
}

/// `data` plus a random value for every other unassigned variable that
/// `keep` selects.
pub fn random_context<L: Lattice>(
    gamma: &Gamma<L>,
    body: &crate::ast::Stmt,
    data: &State,
    keep: impl Fn(&str, &BaseType) -> bool,
    rng: &mut impl Rng,
) -> State {
    let assigned = analysis::assigned_anywhere(body);
    let mut s = data.clone();
    for (n, e) in gamma.iter() {
        if !s.contains_key(n) && !assigned.contains(n) && keep(n, &e.ty) {
            s.insert(n.clone(), random_value(&e.ty, rng));
        }
    }
    s
}

/// A conforming store for a whole program: `data`, then random values
/// for every parameter.
pub fn random_store(p: &Program, data: &State, rng: &mut impl Rng) -> State {
    random_context(&p.gamma, &p.body, data, |_, _| true, rng)
}

fn is_axis_type(t: &BaseType) -> bool {
    matches!(t, BaseType::BoundedInt(_))
}

/// Compares the joint tables of two programs over `trials` random
/// continuous contexts. Axes present in only one program are summed out
/// and variables assigned by only one (fresh factors) are ignored.
pub fn check_preservation(
    p1: &Program,
    p2: &Program,
    data: &State,
    cfg: &OracleConfig,
) -> Result<PreservationReport, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = PreservationReport {
        max_rel_err: 0.0,
        num_points: 0,
        pass: true,
        worst_point: BTreeMap::new(),
        tolerance: cfg.tolerance,
    };
    for trial in 0..cfg.trials {
        let mut ctx = random_context(&p1.gamma, &p1.body, data, |_, t| !is_axis_type(t), &mut rng);
        let extra = random_context(&p2.gamma, &p2.body, &ctx, |_, t| !is_axis_type(t), &mut rng);
        ctx.extend(extra);
        let ctx1 = restrict(&ctx, &p1.gamma);
        let ctx2 = restrict(&ctx, &p2.gamma);
        let t1 = enumerate_joint_capped(p1, &ctx1, cfg.cap)?;
        let t2 = enumerate_joint_capped(p2, &ctx2, cfg.cap)?;
        let common: Vec<&str> = t1
            .axes
            .iter()
            .filter(|a| t2.axes.iter().any(|b| b.0 == a.0))
            .map(|(n, _)| n.as_str())
            .collect();
        for n in &common {
            if t1.axes.iter().find(|a| a.0 == *n).map(|a| a.1) != t2.axes.iter().find(|a| a.0 == *n).map(|a| a.1) {
                return Err(OracleError::ShapeMismatch(n.to_string()));
            }
        }
        let (m1, m2) = (t1.marginal(&common), t2.marginal(&common));
        for i in 0..m1.len() {
            let e = rel_err(m1.entries[i], m2.entries[i]);
            report.num_points += 1;
            if e > report.max_rel_err || report.worst_point.is_empty() {
                report.max_rel_err = report.max_rel_err.max(e);
                let a = m1.assignment(i);
                report.worst_point = m1
                    .axes
                    .iter()
                    .zip(&a)
                    .map(|((n, _), v)| (n.clone(), *v as i64))
                    .collect();
                report.worst_point.insert("trial".into(), trial as i64);
            }
        }
    }
    report.pass = report.max_rel_err <= cfg.tolerance;
    Ok(report)
}

fn restrict<L: Lattice>(s: &State, gamma: &Gamma<L>) -> State {
    s.iter()
        .filter(|(k, _)| gamma.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

/// Outcome of a factorisation test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CiTableReport {
    pub holds: bool,
    /// The table sums to zero, so the claim holds vacuously.
    pub all_zero: bool,
    /// Largest `|p(x2, x3 | x1) - p(x2 | x1) p(x3 | x1)|`.
    pub max_abs_err: f64,
}

/// Tests `x2` independent of `x3` given `x1` on a table. Names in the
/// partition that are not axes are part of the fixed context; axes outside
/// the partition are summed out.
pub fn check_ci_table(t: &JointTable, partition: &CIPartition, tol: f64) -> CiTableReport {
    let pick = |set: &std::collections::BTreeSet<String>| -> Vec<&str> {
        t.axes
            .iter()
            .map(|(n, _)| n.as_str())
            .filter(|n| set.contains(*n))
            .collect()
    };
    let (x1, x2, x3) = (pick(&partition.x1), pick(&partition.x2), pick(&partition.x3));
    let all: Vec<&str> = x1.iter().chain(&x2).chain(&x3).copied().collect();
    let joint = t.marginal(&all).normalised();
    if joint.total() == 0.0 {
        return CiTableReport {
            holds: true,
            all_zero: true,
            max_abs_err: 0.0,
        };
    }
    let x12: Vec<&str> = x1.iter().chain(&x2).copied().collect();
    let x13: Vec<&str> = x1.iter().chain(&x3).copied().collect();
    let (m1, m12, m13) = (joint.marginal(&x1), joint.marginal(&x12), joint.marginal(&x13));
    let (n1, n2) = (x1.len(), x2.len());
    let mut max_abs_err: f64 = 0.0;
    for i in 0..joint.len() {
        let a = joint.assignment(i);
        let p1 = m1.get(&a[..n1]);
        if p1 <= 0.0 {
            continue;
        }
        let a13: Vec<u32> = a[..n1].iter().chain(&a[n1 + n2..]).copied().collect();
        let lhs = joint.entries[i] / p1;
        let rhs = (m12.get(&a[..n1 + n2]) / p1) * (m13.get(&a13) / p1);
        max_abs_err = max_abs_err.max((lhs - rhs).abs());
    }
    CiTableReport {
        holds: max_abs_err <= tol,
        all_zero: false,
        max_abs_err,
    }
}

/// Counters of one evaluation at `context`, with missing bounded ints set
/// to 1.
pub fn measure_cost(p: &Program, context: &State) -> Result<EvalCounters, OracleError> {
    let mut store = context.clone();
    for (n, _) in enumeration_axes(p, context)? {
        store.insert(n, Value::Int(1));
    }
    interp::density_counted(p, &store)
        .map(|(_, c)| c)
        .map_err(|err| OracleError::Eval {
            at: "the representative store".into(),
            err,
        })
}

/// Every way to split `names` into `(x1, x2, x3)`.
pub fn partitions(names: &[String]) -> Vec<CIPartition> {
    let n = names.len();
    let mut out = Vec::with_capacity(3usize.pow(n as u32));
    for mut code in 0..3usize.pow(n as u32) {
        let mut p = CIPartition::default();
        for x in names {
            match code % 3 {
                0 => p.x1.insert(x.clone()),
                1 => p.x2.insert(x.clone()),
                _ => p.x3.insert(x.clone()),
            };
            code /= 3;
        }
        out.push(p);
    }
    out
}

/// Seeded generator used by the randomised checks.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn bern_table() {
        let p = parse("model int<2> z ~ bern(0.3);").unwrap();
        let t = enumerate_joint(&p, &State::new()).unwrap();
        assert_eq!(t.axes, vec![("z".to_string(), 2)]);
        assert_eq!(t.entries, vec![0.7, 0.3]);
    }

    #[test]
    fn empty_program_has_one_cell() {
        let p = parse("skip;").unwrap();
        let t = enumerate_joint(&p, &State::new()).unwrap();
        assert_eq!(t.entries, vec![1.0]);
    }

    #[test]
    fn marginals_and_indexing() {
        let p = parse("int<2> a ~ bern(0.25); int<3> b ~ categorical([1, 2, 3]);").unwrap();
        let t = enumerate_joint(&p, &State::new()).unwrap();
        assert_eq!(t.len(), 6);
        for i in 0..t.len() {
            assert_eq!(t.index(&t.assignment(i)), i);
        }
        let m = t.sum_out("a");
        assert_eq!(m.axes, vec![("b".to_string(), 3)]);
        for (w, e) in m.entries.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((w - e).abs() < 1e-12);
        }
    }

    #[test]
    fn product_tables_are_independent() {
        let p = parse("int<2> a ~ bern(0.25); int<2> b ~ bern(0.6);").unwrap();
        let t = enumerate_joint(&p, &State::new()).unwrap();
        let r = check_ci_table(&t, &CIPartition::new([], ["a"], ["b"]), 1e-12);
        assert!(r.holds && !r.all_zero);
        let q = parse("int<2> a ~ bern(0.25); int<2> b ~ bern(a / 3.0);").unwrap();
        let t = enumerate_joint(&q, &State::new()).unwrap();
        assert!(!check_ci_table(&t, &CIPartition::new([], ["a"], ["b"]), 1e-9).holds);
    }

    #[test]
    fn preservation_is_reflexive() {
        let p = parse("real m ~ normal(0, 1); int<2> z ~ bern(m); data real y ~ normal(z, 1);").unwrap();
        let mut data = State::new();
        data.insert("y".into(), Value::Real(0.4));
        let r = check_preservation(&p, &p, &data, &OracleConfig::default()).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_rel_err, 0.0);
        assert_eq!(r.num_points, 40);
    }

    #[test]
    fn cap_is_enforced() {
        let p = parse("int<2> a ~ bern(0.5); int<2> b ~ bern(0.5);").unwrap();
        assert!(matches!(
            enumerate_joint_capped(&p, &State::new(), 3),
            Err(OracleError::CapExceeded { size: 4, cap: 3 })
        ));
    }

    #[test]
    fn partitions_cover_all_splits() {
        let ps = partitions(&["a".to_string(), "b".to_string()]);
        assert_eq!(ps.len(), 9);
        assert!(ps.contains(&CIPartition::new(["a"], [], ["b"])));
    }

    #[test]
    fn skip_costs_nothing() {
        let p = parse("skip;").unwrap();
        assert_eq!(measure_cost(&p, &State::new()).unwrap(), EvalCounters::default());
    }
}
