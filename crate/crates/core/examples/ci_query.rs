//! Ask the conditional-independence type system about a partition.

use slic::corpus;
use slic::typing::ci::{ci_query, CIPartition};

pub fn run_example() -> String {
    let cross = corpus::load("cross").unwrap().program;
    let yes = CIPartition::new(["x3"], ["x4"], ["x5"]);
    let no = CIPartition::new(["x3", "x4", "x5"], ["x1"], ["x2"]);
    let a = ci_query(&cross, &yes).derivable;
    let b = ci_query(&cross, &no).derivable;
    assert!(a && !b);
    format!("x4 | x3 | x5: {a}\nx1 | x3, x4, x5 | x2: {b}\n")
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
