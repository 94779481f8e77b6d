//! Evaluate a density and count the work done.

use slic::corpus;
use slic::interp::{density_counted, prepare_store, Value};

pub fn run_example() -> String {
    let e = corpus::load("fig1").unwrap();
    let mut store = e.data.clone();
    store.insert("mu".into(), Value::Real(0.2));
    store.insert("x_pred".into(), Value::Real(-0.1));
    let store = prepare_store(&e.program.gamma, &e.program.body, &store);
    let (w, c) = density_counted(&e.program, &store).expect("evaluates");
    format!("density {w:.6} after {} pdf evaluations\n", c.pdf_evals)
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
