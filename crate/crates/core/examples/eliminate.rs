//! Eliminate the discrete states of an HMM one at a time.

use slic::elimgen::{transform_all, ElimPlan};
use slic::{corpus, pretty};

pub fn run_example() -> String {
    let p = corpus::load("hmm_g").unwrap().program;
    let t = transform_all(&p, &ElimPlan::new(["z1", "z2", "z3"])).expect("transforms");
    pretty::program(&t)
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
