//! Command-line front end.
//!
//! Exit codes: 0 for success (a derivable query, a passing check), 1 for
//! a negative answer or a failure, 2 for a usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ast::Program;
use crate::elimgen::{transform_all, ElimPlan};
use crate::interp::{self, State};
use crate::lattice::{Lattice, Level};
use crate::oracle::{check_preservation, OracleConfig};
use crate::parser::parse;
use crate::shred::shred;
use crate::stan::emit_stan;
use crate::typing::base::infer_levels;
use crate::typing::ci::{ci_query, markov_blanket, CIPartition};
use crate::{corpus, pretty};

pub const SEED_VAR: &str = "SLIC_SEED";

#[derive(Debug, Parser)]
#[command(name = "slic-ci", version, about = "Level typing, slicing and discrete elimination for SlicStan programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: CliConfig,
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Clone)]
pub struct CliConfig {
    /// Seed for randomised checks; defaults to $SLIC_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative tolerance of numeric comparisons.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer levels and print the ones that were inferred.
    Check { file: PathBuf },
    /// Print the data, model and generated-quantities slices.
    Shred { file: PathBuf },
    /// Ask whether x2 is independent of x3 given x1.
    Ci {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "")]
        x1: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "")]
        x2: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "")]
        x3: Vec<String>,
    },
    /// Print the Markov blanket of a parameter.
    Blanket {
        file: PathBuf,
        #[arg(long)]
        var: String,
    },
    /// Eliminate discrete parameters and print the result.
    Transform {
        file: PathBuf,
        /// Elimination order; defaults to declaration order.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
    },
    /// Run a program on a store and print the final state and weight.
    Eval {
        file: PathBuf,
        /// Fixture with a `data` object; defaults to the program's sibling `.json`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// JSON object with values for the remaining inputs.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Also print evaluation counters.
        #[arg(long)]
        count: bool,
    },
    /// Compare the discrete joint densities of two programs.
    Preserve {
        file: PathBuf,
        #[arg(long)]
        against: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Print Stan code, eliminating discrete parameters first if asked.
    EmitStan {
        file: PathBuf,
        #[arg(long)]
        eliminate: bool,
    },
    /// List or print the bundled example programs.
    Corpus { name: Option<String> },
}

/// A failure with its exit code.
struct Fail(i32, String);

type R<T> = Result<T, Fail>;

fn fail<T>(msg: impl Into<String>) -> R<T> {
    Err(Fail(1, msg.into()))
}

/// Runs the command line `argv` (program name first).
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    if !(cli.config.tol > 0.0) {
        let _ = writeln!(err, "error: --tol must be positive");
        return 2;
    }
    let seed = match seed(&cli.config) {
        Ok(s) => s,
        Err(Fail(c, m)) => {
            let _ = writeln!(err, "error: {m}");
            return c;
        }
    };
    let mut text = String::new();
    let code = match dispatch(&cli, seed, &mut text) {
        Ok(c) => c,
        Err(Fail(c, m)) => {
            let _ = writeln!(err, "{m}");
            c
        }
    };
    match &cli.config.output {
        Some(path) if !text.is_empty() => {
            if let Err(e) = fs::write(path, &text) {
                let _ = writeln!(err, "{}: {e}", path.display());
                return 1;
            }
        }
        _ => {
            let _ = write!(out, "{text}");
        }
    }
    code
}

pub fn main_exit() -> i32 {
    let argv: Vec<String> = std::env::args().collect();
    run(&argv, &mut std::io::stdout(), &mut std::io::stderr())
}

fn seed(c: &CliConfig) -> R<u64> {
    if let Some(s) = c.seed {
        return Ok(s);
    }
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Fail(2, format!("{SEED_VAR}={v} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn read(path: &Path) -> R<String> {
    fs::read_to_string(path).map_err(|e| Fail(1, format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> R<Program> {
    let src = read(path)?;
    parse(&src).map_err(|ds| {
        let lines: Vec<String> = ds
            .iter()
            .map(|d| format!("{}:{}:{}: error: {}", path.display(), d.line, d.column, d.message))
            .collect();
        Fail(1, lines.join("\n"))
    })
}

/// The `data` object of `path`, or of the program's sibling `.json` when
/// no path is given and that file exists.
fn load_data(path: Option<&Path>, program: &Path) -> R<State> {
    let fixture = match path {
        Some(p) => p.to_path_buf(),
        None => {
            let sibling = program.with_extension("json");
            if !sibling.exists() {
                return Ok(State::new());
            }
            sibling
        }
    };
    corpus::fixture_data(&read(&fixture)?).map_err(|e| Fail(1, format!("{}: {e}", fixture.display())))
}

fn typed(path: &Path) -> R<Program> {
    let p = load(path)?;
    let r = infer_levels(&p);
    if !r.ok {
        let lines: Vec<String> = r
            .violations
            .iter()
            .map(|v| format!("{}: error: {v}", path.display()))
            .collect();
        return fail(lines.join("\n"));
    }
    Ok(Program::new(r.resolved, p.body))
}

fn names(p: &Program) -> Vec<String> {
    p.gamma.names().cloned().collect()
}

fn dispatch(cli: &Cli, seed: u64, out: &mut String) -> R<i32> {
    match &cli.command {
        Command::Check { file } => {
            // Report what inference decided; with nothing to infer, report
            // every declaration.
            let mut shown = load(file)?.gamma.placeholders();
            let p = typed(file)?;
            if shown.is_empty() {
                shown = names(&p);
            }
            let line = infer_levels(&p).levels_line(&shown);
            out.push_str(&line);
            out.push('\n');
            Ok(0)
        }
        Command::Shred { file } => {
            let p = typed(file)?;
            let sh = shred(&p.gamma, &p.body).map_err(|e| Fail(1, format!("{}: error: {e}", file.display())))?;
            for l in Level::ALL {
                out.push_str(&format!("// {l}\n"));
                let s = sh.get(l);
                if !s.is_skip() {
                    out.push_str(&pretty::stmt(s));
                    out.push('\n');
                }
            }
            Ok(0)
        }
        Command::Ci { file, x1, x2, x3 } => {
            let p = load(file)?;
            let set = |v: &[String]| v.iter().filter(|s| !s.is_empty()).cloned().collect();
            let part = CIPartition {
                x1: set(x1),
                x2: set(x2),
                x3: set(x3),
            };
            let r = ci_query(&p, &part);
            if r.derivable {
                out.push_str("derivable\n");
                Ok(0)
            } else {
                out.push_str("not derivable\n");
                if let Some(v) = r.failure.first() {
                    out.push_str(&format!("  {v}\n"));
                }
                Ok(1)
            }
        }
        Command::Blanket { file, var } => {
            let p = load(file)?;
            let b = markov_blanket(&p, var).map_err(|e| Fail(1, format!("{}: error: {e}", file.display())))?;
            for (name, set) in [("x1", &b.x1), ("x2", &b.x2), ("x3", &b.x3)] {
                let items: Vec<&str> = set.iter().map(String::as_str).collect();
                out.push_str(&format!("{name}: {}\n", items.join(", ")));
            }
            Ok(0)
        }
        Command::Transform { file, order } => {
            let p = load(file)?;
            let t = transform(&p, order.as_deref()).map_err(|m| Fail(1, format!("{}: error: {m}", file.display())))?;
            out.push_str(&pretty::program(&t));
            Ok(0)
        }
        Command::Eval { file, data, store, count } => {
            let p = load(file)?;
            let mut s = load_data(data.as_deref(), file)?;
            if let Some(path) = store {
                let j: serde_json::Value =
                    serde_json::from_str(&read(path)?).map_err(|e| Fail(1, format!("{}: {e}", path.display())))?;
                s.extend(interp::store_from_json(&j).map_err(|e| Fail(1, format!("{}: {e}", path.display())))?);
            }
            let store = interp::prepare_store(&p.gamma, &p.body, &s);
            let (w, counters) = interp::density_counted(&p, &store).map_err(|e| Fail(1, format!("error: {e}")))?;
            let (state, _) = interp::run(&p, &store).map_err(|e| Fail(1, format!("error: {e}")))?;
            let mut j = serde_json::json!({ "weight": w, "state": interp::store_to_json(&state) });
            if *count {
                j["counters"] = serde_json::json!({
                    "pdf_evals": counters.pdf_evals,
                    "factor_evals": counters.factor_evals,
                });
            }
            out.push_str(&serde_json::to_string_pretty(&j).expect("json"));
            out.push('\n');
            Ok(0)
        }
        Command::Preserve { file, against, data, trials } => {
            let p1 = load(file)?;
            let p2 = load(against)?;
            let data = load_data(data.as_deref(), file)?;
            let cfg = OracleConfig {
                trials: *trials,
                tolerance: cli.config.tol,
                seed,
                ..OracleConfig::default()
            };
            let r = check_preservation(&p1, &p2, &data, &cfg).map_err(|e| Fail(1, format!("error: {e}")))?;
            out.push_str(&r.to_json());
            out.push('\n');
            Ok(if r.pass { 0 } else { 1 })
        }
        Command::EmitStan { file, eliminate } => {
            let mut p = load(file)?;
            if *eliminate {
                p = transform(&p, None).map_err(|m| Fail(1, format!("{}: error: {m}", file.display())))?;
            }
            let s = emit_stan(&p).map_err(|e| Fail(1, format!("{}: error: {e}", file.display())))?;
            out.push_str(&s);
            Ok(0)
        }
        Command::Corpus { name } => match name {
            None => {
                for n in corpus::names() {
                    out.push_str(n);
                    out.push('\n');
                }
                Ok(0)
            }
            Some(n) => match corpus::load(n) {
                Some(e) => {
                    out.push_str(e.source);
                    Ok(0)
                }
                None => Err(Fail(2, format!("error: no bundled program named `{n}`"))),
            },
        },
    }
}

fn transform(p: &Program, order: Option<&[String]>) -> Result<Program, String> {
    let plan = match order {
        Some(o) => ElimPlan::new(o.iter().cloned()),
        None => ElimPlan::default_for(p).map_err(|e| e.to_string())?,
    };
    plan.validate(p).map_err(|e| e.to_string())?;
    transform_all(p, &plan).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_path(name: &str) -> String {
        format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["slic-ci".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn check_prints_levels() {
        let (code, out, _) = call(&["check", &corpus_path("fig1.slic")]);
        assert_eq!(code, 0);
        assert_eq!(out, "mu: model, x_pred: genquant\n");
    }

    #[test]
    fn ci_negative_exits_one() {
        let (code, out, _) = call(&["ci", &corpus_path("cross.slic"), "--x2", "x1", "--x3", "x2", "--x1", "x3,x4,x5"]);
        assert_eq!(code, 1);
        assert!(out.starts_with("not derivable"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["check"]).0, 2);
        assert_eq!(call(&["check", "x.slic", "--tol", "0"]).0, 2);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let dir = std::env::temp_dir().join(format!("slic-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let f = dir.join("bad.slic");
        fs::write(&f, "real x;\nx ~ ;\n").unwrap();
        let (code, _, err) = call(&["check", f.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.starts_with(&format!("{}:2:", f.display())), "{err}");
    }

    #[test]
    fn preservation_passes_against_itself() {
        let f = corpus_path("hmm_d.slic");
        let (code, out, _) = call(&["preserve", &f, "--against", &f, "--trials", "2"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("\"pass\": true"));
    }
}
