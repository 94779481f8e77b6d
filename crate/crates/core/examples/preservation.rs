//! Check by enumeration that elimination leaves the density unchanged.

use slic::elimgen::{transform_all, ElimPlan};
use slic::oracle::{check_preservation, OracleConfig};
use slic::corpus;

pub fn run_example() -> String {
    let e = corpus::load("sprinkler").unwrap();
    let plan = ElimPlan::default_for(&e.program).unwrap();
    let t = transform_all(&e.program, &plan).unwrap();
    let r = check_preservation(&e.program, &t, &e.data, &OracleConfig::default()).unwrap();
    assert!(r.pass);
    r.summary()
}

#[allow(dead_code)]
fn main() {
    println!("{}", run_example());
}
