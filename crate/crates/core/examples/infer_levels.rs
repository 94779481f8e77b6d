//! Infer the level of every undeclared variable.

use slic::corpus;
use slic::typing::base::infer_levels;

pub fn run_example() -> String {
    let p = corpus::load("fig1").unwrap().program;
    let r = infer_levels(&p);
    assert!(r.ok);
    r.levels_line(&p.gamma.placeholders())
}

#[allow(dead_code)]
fn main() {
    println!("{}", run_example());
}
