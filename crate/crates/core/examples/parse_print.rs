//! Parse a program and print it back.

use slic::{corpus, parser, pretty};

pub fn run_example() -> String {
    let src = corpus::load("hmm_d").unwrap().source;
    let p = parser::parse(src).expect("parses");
    let text = pretty::program(&p);
    assert_eq!(parser::parse(&text).unwrap(), p);
    text
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
