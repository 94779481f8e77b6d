//! Compute the Markov blanket of one hidden state of an HMM.

use slic::corpus;
use slic::typing::ci::markov_blanket;

pub fn run_example() -> String {
    let p = corpus::load("hmm_d").unwrap().program;
    let b = markov_blanket(&p, "z1").expect("z1 is a parameter");
    let show = |s: &std::collections::BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
    format!("blanket: {}\nrest: {}\n", show(&b.x1), show(&b.x3))
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
