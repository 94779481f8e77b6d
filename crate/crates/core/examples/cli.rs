//! Drive the command-line front end in-process.

use slic::cli;

pub fn run_example() -> String {
    let file = format!("{}/corpus/cross.slic", env!("CARGO_MANIFEST_DIR"));
    let argv: Vec<String> = ["slic-ci", "ci", &file, "--x1", "x3", "--x2", "x4", "--x3", "x5"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(&argv, &mut out, &mut err);
    format!("exit {code}: {}", String::from_utf8(out).unwrap())
}

#[allow(dead_code)]
fn main() {
    print!("{}", run_example());
}
