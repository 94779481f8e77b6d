//! Compare the work of brute-force and stepwise marginalisation of an HMM.

use slic::corpus;
use slic::oracle::measure_cost;

pub fn run_example() -> String {
    let mut out = String::from("N  transformed  naive\n");
    for n in [4, 6, 8, 10] {
        let data = corpus::hmm_data(n);
        let t = measure_cost(&corpus::hmm_transformed(n), &data).unwrap();
        let b = measure_cost(&corpus::hmm_naive(n), &data).unwrap();
        out.push_str(&format!("{n:<2} {:>12} {:>6}\n", t.pdf_evals, b.pdf_evals));
    }
    out
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
