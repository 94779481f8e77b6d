//! Every example runs and prints what it promises.

#[allow(dead_code)]
#[path = "../examples/parse_print.rs"]
mod parse_print;

#[allow(dead_code)]
#[path = "../examples/infer_levels.rs"]
mod infer_levels;

#[allow(dead_code)]
#[path = "../examples/shred_slices.rs"]
mod shred_slices;

#[allow(dead_code)]
#[path = "../examples/ci_query.rs"]
mod ci_query;

#[allow(dead_code)]
#[path = "../examples/markov_blanket.rs"]
mod markov_blanket;

#[allow(dead_code)]
#[path = "../examples/eliminate.rs"]
mod eliminate;

#[allow(dead_code)]
#[path = "../examples/evaluate.rs"]
mod evaluate;

#[allow(dead_code)]
#[path = "../examples/preservation.rs"]
mod preservation;

#[allow(dead_code)]
#[path = "../examples/emit_stan.rs"]
mod emit_stan;

#[allow(dead_code)]
#[path = "../examples/complexity.rs"]
mod complexity;

#[allow(dead_code)]
#[path = "../examples/cli.rs"]
mod cli;

#[test]
fn parse_print_round_trips() {
    assert!(parse_print::run_example().contains("bernoulli(theta[z1])"));
}

#[test]
fn infer_levels_reports_fig1() {
    assert_eq!(infer_levels::run_example(), "mu: model, x_pred: genquant");
}

#[test]
fn shred_slices_has_three_headers() {
    let s = shred_slices::run_example();
    for h in ["// data", "// model", "// genquant"] {
        assert!(s.contains(h));
    }
}

#[test]
fn ci_query_answers() {
    assert!(ci_query::run_example().contains("x1 | x3, x4, x5 | x2: false"));
}

#[test]
fn markov_blanket_of_z1() {
    assert_eq!(markov_blanket::run_example(), "blanket: y1, z2\nrest: y2, y3, z3\n");
}

#[test]
fn eliminate_builds_three_factors() {
    let s = eliminate::run_example();
    for f in ["f1 = phi(int<2> z2)", "f2 = phi(int<2> z3)", "f3 = phi()"] {
        assert!(s.contains(f), "{s}");
    }
}

#[test]
fn evaluate_counts_two_densities() {
    assert!(evaluate::run_example().ends_with("after 2 pdf evaluations\n"));
}

#[test]
fn preservation_passes() {
    assert!(preservation::run_example().starts_with("pass"));
}

#[test]
fn emit_stan_has_no_discrete_parameters() {
    let s = emit_stan::run_example();
    assert!(s.contains("z1 = categorical_rng(softmax("));
    assert!(!s.contains("parameters {\n  int"));
}

#[test]
fn complexity_table_has_four_rows() {
    assert_eq!(complexity::run_example().lines().count(), 5);
}

#[test]
fn cli_answers_derivable() {
    assert_eq!(cli::run_example(), "exit 0: derivable\n");
}
