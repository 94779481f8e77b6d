//! Split a typed program into its data, model and generated-quantities
//! slices.

use slic::ast::Program;
use slic::lattice::{Lattice, Level};
use slic::typing::base::infer_levels;
use slic::{corpus, pretty, shred};

pub fn run_example() -> String {
    let p = corpus::load("hmm_a").unwrap().program;
    let gamma = infer_levels(&p).resolved;
    let p = Program::new(gamma, p.body);
    let sh = shred::shred(&p.gamma, &p.body).expect("shreds");
    let mut out = String::new();
    for l in Level::ALL {
        out.push_str(&format!("// {l}\n{}\n", pretty::stmt(sh.get(l))));
    }
    out
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
