//! Compile a program to Stan, eliminating its discrete states first.

use slic::elimgen::{transform_all, ElimPlan};
use slic::{corpus, stan};

pub fn run_example() -> String {
    let p = corpus::load("hmm_d").unwrap().program;
    let t = transform_all(&p, &ElimPlan::default_for(&p).unwrap()).unwrap();
    stan::emit_stan(&t).expect("emits")
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
