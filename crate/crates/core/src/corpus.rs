//! The bundled example programs and a generator of first-order HMMs of
//! any length.

use std::fmt::Write as _;

use crate::ast::Program;
use crate::elimgen::{transform_all, ElimPlan};
use crate::interp::{store_from_json, State, Value};
use crate::parser::parse;

/// `(name, source, fixture)`. Fixtures are `{"data": {...}}` objects.
const ENTRIES: &[(&str, &str, &str)] = &[
    ("fig1", include_str!("../corpus/fig1.slic"), include_str!("../corpus/fig1.json")),
    ("hmm_a", include_str!("../corpus/hmm_a.slic"), include_str!("../corpus/hmm_a.json")),
    ("cross", include_str!("../corpus/cross.slic"), include_str!("../corpus/cross.json")),
    (
        "cross_discrete",
        include_str!("../corpus/cross_discrete.slic"),
        include_str!("../corpus/cross_discrete.json"),
    ),
    ("hmm_d", include_str!("../corpus/hmm_d.slic"), include_str!("../corpus/hmm_d.json")),
    ("hmm_e", include_str!("../corpus/hmm_e.slic"), include_str!("../corpus/hmm_e.json")),
    ("hmm_f", include_str!("../corpus/hmm_f.slic"), include_str!("../corpus/hmm_f.json")),
    ("hmm_g", include_str!("../corpus/hmm_g.slic"), include_str!("../corpus/hmm_g.json")),
    ("sprinkler", include_str!("../corpus/sprinkler.slic"), include_str!("../corpus/sprinkler.json")),
    (
        "sprinkler_discrete",
        include_str!("../corpus/sprinkler_discrete.slic"),
        include_str!("../corpus/sprinkler_discrete.json"),
    ),
    ("soft_kmeans", include_str!("../corpus/soft_kmeans.slic"), include_str!("../corpus/soft_kmeans.json")),
    ("outliers", include_str!("../corpus/outliers.slic"), include_str!("../corpus/outliers.json")),
    ("causal", include_str!("../corpus/causal.slic"), include_str!("../corpus/causal.json")),
];

/// Reference outputs.
pub mod golden {
    pub const HMM_G_1: &str = include_str!("../corpus/golden/hmm_g_1.slic");
    pub const HMM_G_2: &str = include_str!("../corpus/golden/hmm_g_2.slic");
    pub const HMM_G_3: &str = include_str!("../corpus/golden/hmm_g_3.slic");
    /// Model slice and generated-quantities slice separated by a `---` line.
    pub const HMM_G_SHRED: &str = include_str!("../corpus/golden/hmm_g_shred.slic");
    /// The factor chain that opens the transformed sprinkler body.
    pub const SPRINKLER_FACTORS: &str = include_str!("../corpus/golden/sprinkler_factors.slic");
    pub const FIG1_STAN: &str = include_str!("../corpus/golden/fig1.stan");
}

/// A bundled program with its observed data.
#[derive(Clone, Debug)]
pub struct Example {
    pub name: &'static str,
    pub source: &'static str,
    pub program: Program,
    pub data: State,
}

pub fn names() -> impl Iterator<Item = &'static str> {
    ENTRIES.iter().map(|e| e.0)
}

/// Loads one bundled program.
///
/// # Panics
/// Panics if the bundled source or fixture is malformed.
pub fn load(name: &str) -> Option<Example> {
    let (name, source, fixture) = ENTRIES.iter().find(|e| e.0 == name)?;
    let program = parse(source).unwrap_or_else(|d| panic!("corpus `{name}`: {}", d[0]));
    Some(Example {
        name,
        source,
        program,
        data: fixture_data(fixture).unwrap_or_else(|e| panic!("corpus `{name}`: {e}")),
    })
}

pub fn all() -> Vec<Example> {
    names().filter_map(load).collect()
}

/// The `data` object of a fixture.
pub fn fixture_data(text: &str) -> Result<State, String> {
    let j: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    match j.get("data") {
        Some(d) => store_from_json(d),
        None => Ok(State::new()),
    }
}

/// Observations used by the generated chains.
pub fn hmm_observation(i: usize) -> f64 {
    ((i * 37) % 17) as f64 / 8.0 - 1.0
}

fn hmm_header(n: usize, out: &mut String) {
    out.push_str("data real[2] theta;\ndata real[2] phi;\n");
    for i in 1..=n {
        let _ = writeln!(out, "data real y{i};");
    }
}

/// A first-order HMM with `n` binary states and fixed parameters:
/// `z1 ~ bern(theta[1])`, `zi ~ bern(theta[z(i-1)])`,
/// `yi ~ normal(phi[zi], 1)`.
pub fn hmm_chain_source(n: usize) -> String {
    let mut s = String::new();
    hmm_header(n, &mut s);
    for i in 1..=n {
        let prev = if i == 1 { "1".to_string() } else { format!("z{}", i - 1) };
        let _ = writeln!(s, "int<2> z{i} ~ bernoulli(theta[{prev}]);");
        let _ = writeln!(s, "y{i} ~ normal(phi[z{i}], 1);");
    }
    s
}

/// The same chain marginalised in one nest of `elim` blocks, which
/// enumerates every joint assignment.
pub fn hmm_naive_source(n: usize) -> String {
    let mut s = String::new();
    hmm_header(n, &mut s);
    for i in 1..=n {
        let _ = writeln!(s, "{}elim(int<2> z{i}) {{", "    ".repeat(i - 1));
    }
    let pad = "    ".repeat(n);
    for i in 1..=n {
        let prev = if i == 1 { "1".to_string() } else { format!("z{}", i - 1) };
        let _ = writeln!(s, "{pad}z{i} ~ bernoulli(theta[{prev}]);");
        let _ = writeln!(s, "{pad}y{i} ~ normal(phi[z{i}], 1);");
    }
    for i in (0..n).rev() {
        let _ = writeln!(s, "{}}}", "    ".repeat(i));
    }
    s
}

/// Data for a chain of length `n`.
pub fn hmm_data(n: usize) -> State {
    let mut d = State::new();
    d.insert("theta".into(), Value::Array(vec![Value::Real(0.3), Value::Real(0.8)]));
    d.insert("phi".into(), Value::Array(vec![Value::Real(-0.5), Value::Real(1.2)]));
    for i in 1..=n {
        d.insert(format!("y{i}"), Value::Real(hmm_observation(i)));
    }
    d
}

pub fn hmm_chain(n: usize) -> Program {
    parse(&hmm_chain_source(n)).expect("generated chain parses")
}

pub fn hmm_naive(n: usize) -> Program {
    parse(&hmm_naive_source(n)).expect("generated chain parses")
}

/// The chain with every state eliminated in order `z1, ..., zn`.
pub fn hmm_transformed(n: usize) -> Program {
    let plan = ElimPlan::new((1..=n).map(|i| format!("z{i}")));
    transform_all(&hmm_chain(n), &plan).expect("the chain transforms")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_loads() {
        for name in names() {
            let e = load(name).unwrap();
            assert_eq!(e.name, name);
        }
        assert!(load("missing").is_none());
    }

    #[test]
    fn fixtures_carry_data() {
        let e = load("fig1").unwrap();
        assert_eq!(e.data.get("x"), Some(&Value::Real(0.7)));
    }

    #[test]
    fn generated_chains_parse() {
        for n in [1, 3] {
            assert_eq!(hmm_chain(n).gamma.len(), 2 + 2 * n);
            assert_eq!(hmm_naive(n).gamma.len(), 2 + n);
        }
        hmm_transformed(3);
    }
}
