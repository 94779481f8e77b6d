//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slic::ast::{BaseType, Program, Stmt};
use slic::corpus::{self, golden};
use slic::elimgen::{gamma_to_z, resolve, transform_all, transform_steps, ElimPlan};
use slic::interp;
use slic::lattice::{CiLevel, Lattice, Level};
use slic::oracle::{
    check_ci_table, check_preservation, enumerate_joint, measure_cost, partitions, random_store, OracleConfig,
};
use slic::parser::parse_stmt;
use slic::shred::shred;
use slic::stan::{emit_stan, normalize_whitespace};
use slic::typing::ci::{ci_problem, ci_query, infer_ci_with, markov_blanket, CIPartition};
use slic::typing::Domains;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn body(src: &str) -> Stmt {
    parse_stmt(src).unwrap_or_else(|d| panic!("golden does not parse: {d}")).normalize()
}

fn under(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    check(t < limit, format!("{what} took {t:?}, over {limit:?}"))
}

/// 1. Golden transformations of Program G and the sprinkler network.
fn goldens() -> Outcome {
    let g = corpus::load("hmm_g").unwrap().program;
    let start = Instant::now();
    let steps = transform_steps(&g, &ElimPlan::new(["z1", "z2", "z3"])).map_err(|e| e.to_string())?;
    under(Duration::from_secs(1), start, "hmm_g")?;
    for (i, want) in [golden::HMM_G_1, golden::HMM_G_2, golden::HMM_G_3].iter().enumerate() {
        check(
            steps[i].result.body.normalize() == body(want),
            format!("step {} differs from G-{}", i + 1, i + 1),
        )?;
    }

    let typed = common::typed(&corpus::load("hmm_g").unwrap());
    let sh = shred(&typed.gamma, &typed.body).map_err(|e| e.to_string())?;
    let (sm, sq) = golden::HMM_G_SHRED.split_once("\n---\n").unwrap();
    check(sh.get(Level::Data).is_skip(), "hmm_g data slice is not empty")?;
    check(sh.get(Level::Model).normalize() == body(sm), "hmm_g model slice differs")?;
    check(sh.get(Level::GenQuant).normalize() == body(sq), "hmm_g generated slice differs")?;

    let s = corpus::load("sprinkler").unwrap().program;
    let start = Instant::now();
    let t = transform_all(&s, &ElimPlan::new(["cloudy", "sprinkler", "rain", "wet"])).map_err(|e| e.to_string())?;
    under(Duration::from_secs(1), start, "sprinkler")?;
    let want = body(golden::SPRINKLER_FACTORS);
    let want = want.items();
    let items = t.body.items();
    let at = items
        .iter()
        .position(|s| matches!(s, Stmt::Sample(l, _, _) if l.name == "p"))
        .ok_or("no prior on p")?;
    let got: Vec<Stmt> = items[at + 1..].iter().take(want.len()).map(|s| (*s).clone()).collect();
    check(
        got.iter().collect::<Vec<_>>() == want,
        "sprinkler factors differ from f1..f4",
    )?;
    Ok("G-1, G-2, G-3, the shredding of G and the sprinkler f1..f4 chain match".into())
}

/// 2. Elimination preserves the density.
fn preservation() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for name in ["hmm_d", "hmm_g", "sprinkler", "soft_kmeans", "outliers", "causal"] {
        let e = corpus::load(name).unwrap();
        let plan = ElimPlan::default_for(&e.program).map_err(|x| x.to_string())?;
        let t = transform_all(&e.program, &plan).map_err(|x| format!("{name}: {x}"))?;
        let r = check_preservation(&e.program, &t, &e.data, &OracleConfig::default()).map_err(|x| format!("{name}: {x}"))?;
        check(r.pass, format!("{name}: {}", r.summary()))?;
        check(r.num_points > 0, format!("{name}: nothing compared"))?;
        worst = worst.max(r.max_rel_err);
    }
    // Programs D, E and F marginalise the same chain.
    let d = corpus::load("hmm_d").unwrap();
    for other in ["hmm_e", "hmm_f"] {
        let o = corpus::load(other).unwrap().program;
        let r = check_preservation(&d.program, &o, &d.data, &OracleConfig::default()).map_err(|x| x.to_string())?;
        check(r.pass, format!("hmm_d vs {other}: {}", r.summary()))?;
        worst = worst.max(r.max_rel_err);
    }
    let f = corpus::load("hmm_f").unwrap().program;
    let e = corpus::load("hmm_e").unwrap().program;
    let r = check_preservation(&e, &f, &d.data, &OracleConfig::default()).map_err(|x| x.to_string())?;
    check(r.pass, format!("hmm_e vs hmm_f: {}", r.summary()))?;
    under(Duration::from_secs(30), start, "preservation")?;
    Ok(format!("6 programs plus D/E/F, 20 draws each, worst relative error {worst:.1e}"))
}

const ALL: &[&str] = &[
    "fig1", "hmm_a", "cross", "cross_discrete", "hmm_d", "hmm_e", "hmm_f", "hmm_g", "sprinkler",
    "sprinkler_discrete", "soft_kmeans", "outliers", "causal",
];

/// 3. Shredding keeps state and weight, and slices are single-level.
fn shredding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut runs = 0;
    for name in ALL {
        let e = corpus::load(name).unwrap();
        let p = common::typed(&e);
        check(common::slices_single_level(&p), format!("{name}: a slice mixes levels"))?;
        let mut ok = 0;
        for _ in 0..50 {
            match common::shred_agrees(&p, &e.data, 1e-12, &mut rng) {
                Some(true) => ok += 1,
                Some(false) => return Err(format!("{name}: slices disagree with the program")),
                None => {}
            }
        }
        check(ok > 0, format!("{name}: no store evaluated"))?;
        runs += ok;
    }
    Ok(format!("{} programs, {runs} agreeing runs, all slices single-level", ALL.len()))
}

/// 4. Every derivable independence holds in the enumerated table.
fn ci_soundness() -> Outcome {
    let mut derivable = 0;
    let mut total = 0;
    for name in ["cross_discrete", "sprinkler_discrete", "hmm_a"] {
        let e = corpus::load(name).unwrap();
        let t = enumerate_joint(&e.program, &e.data).map_err(|x| x.to_string())?;
        check(
            t.axes.len() <= 5 && t.axes.iter().all(|(_, k)| *k == 2),
            format!("{name} is not a small binary program"),
        )?;
        let names: Vec<String> = t.axes.iter().map(|(n, _)| n.clone()).collect();
        for part in partitions(&names) {
            total += 1;
            if ci_query(&e.program, &part).derivable {
                derivable += 1;
                let r = check_ci_table(&t, &part, 1e-9);
                check(
                    r.holds,
                    format!("{name}: derivable {:?} fails by {:.2e}", part, r.max_abs_err),
                )?;
            }
        }
    }
    let cross = corpus::load("cross").unwrap().program;
    let neg = CIPartition::new(["x3", "x4", "x5"], ["x1"], ["x2"]);
    check(!ci_query(&cross, &neg).derivable, "cross: x1, x2 given x3, x4, x5 is derivable")?;
    let cd = corpus::load("cross_discrete").unwrap();
    let t = enumerate_joint(&cd.program, &cd.data).map_err(|x| x.to_string())?;
    check(!check_ci_table(&t, &neg, 1e-9).holds, "cross_discrete: the negative case holds numerically")?;
    Ok(format!("{derivable} derivable of {total} partitions, no violations; cross negative case underivable"))
}

/// 5. Markov blanket of `z1` in Program D.
fn blanket() -> Outcome {
    let p = corpus::load("hmm_d").unwrap().program;
    let b = markov_blanket(&p, "z1")?;
    let want = CIPartition::new(["y1", "z2"], ["z1"], ["y2", "y3", "z3"]);
    check(b == want, format!("got {b:?}"))?;
    Ok("x1 = {y1, z2}, x2 = {z1}, x3 = {y2, y3, z3}".into())
}

/// 6. Elimination cost grows linearly in the chain length.
fn complexity() -> Outcome {
    let start = Instant::now();
    let ns = [4usize, 6, 8, 10];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut naive = Vec::new();
    for &n in &ns {
        let data = corpus::hmm_data(n);
        let t = measure_cost(&corpus::hmm_transformed(n), &data).map_err(|x| x.to_string())?;
        let b = measure_cost(&corpus::hmm_naive(n), &data).map_err(|x| x.to_string())?;
        xs.push(n as f64);
        ys.push(t.pdf_evals as f64);
        naive.push(b.pdf_evals);
        check(b.pdf_evals >= 1 << n, format!("naive N={n}: {} < 2^{n}", b.pdf_evals))?;
    }
    let r2 = r_squared(&xs, &ys);
    check(r2 >= 0.99, format!("linear fit R^2 = {r2:.4}"))?;
    let ratio = ys[3] / naive[3] as f64;
    check(ratio < 0.05, format!("N=10 ratio {ratio:.3}"))?;
    // The two forms compute the same marginal likelihood.
    let d = corpus::hmm_data(4);
    let r = check_preservation(&corpus::hmm_naive(4), &corpus::hmm_transformed(4), &d, &OracleConfig::default())
        .map_err(|x| x.to_string())?;
    check(r.pass, format!("naive vs transformed: {}", r.summary()))?;
    under(Duration::from_secs(10), start, "complexity")?;
    Ok(format!(
        "transformed {:?}, naive {:?}, R^2 {r2:.4}, N=10 ratio {:.2}%",
        ys.iter().map(|y| *y as u64).collect::<Vec<_>>(),
        naive,
        ratio * 100.0
    ))
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - (a * x + b)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// 7. Outputs at or below a level depend only on inputs at or below it.
fn noninterference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    for name in ALL {
        let e = corpus::load(name).unwrap();
        let p = common::typed(&e);
        let g = common::ci_env(&p).ok_or(format!("{name}: no CI environment"))?;
        for l in Level::ALL {
            for _ in 0..100 {
                match common::noninterference_pair(&p, &p.gamma, &e.data, l, &mut rng) {
                    Some(false) => return Err(format!("{name}: leak at {l}")),
                    Some(true) => pairs += 1,
                    None => {}
                }
            }
        }
        for l in CiLevel::ALL {
            for _ in 0..100 {
                match common::noninterference_pair(&p, &g, &e.data, l, &mut rng) {
                    Some(false) => return Err(format!("{name}: leak at {l}")),
                    Some(true) => pairs += 1,
                    None => {}
                }
            }
        }
    }
    let attempted = ALL.len() * 600;
    check(pairs * 2 > attempted, format!("only {pairs} of {attempted} pairs evaluated"))?;
    Ok(format!("{pairs} of {attempted} pairs evaluated, no leaks"))
}

/// 8. The generated-quantities slice is a normalised distribution over
/// what it samples.
fn factorisation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut programs = Vec::new();
    for name in ["hmm_a", "cross_discrete"] {
        programs.push((name.to_string(), corpus::load(name).unwrap()));
    }
    for name in ["hmm_d", "hmm_g", "sprinkler", "sprinkler_discrete", "soft_kmeans", "outliers", "causal"] {
        let e = corpus::load(name).unwrap();
        let plan = ElimPlan::default_for(&e.program).map_err(|x| x.to_string())?;
        let mut t = e.clone();
        t.program = transform_all(&e.program, &plan).map_err(|x| x.to_string())?;
        programs.push((format!("{name} transformed"), t));
    }
    let mut checked = 0;
    for (name, e) in &programs {
        let p = common::typed(e);
        let sh = shred(&p.gamma, &p.body).map_err(|x| x.to_string())?;
        let prefix = Program::new(p.gamma.clone(), Stmt::seq([sh.get(Level::Data).clone(), sh.get(Level::Model).clone()]));
        let q = Program::new(p.gamma.clone(), sh.get(Level::GenQuant).clone());
        let drawn = slic::analysis::sampled(sh.get(Level::GenQuant));
        check(
            drawn.iter().all(|x| matches!(p.gamma.ty(x), Some(BaseType::BoundedInt(_)))),
            format!("{name}: draws a non-discrete variable"),
        )?;
        for _ in 0..10 {
            let store = random_store(&p, &e.data, &mut rng);
            let Ok((mut ctx, _)) = interp::run(&prefix, &store) else { continue };
            for x in &drawn {
                ctx.remove(x);
            }
            let t = enumerate_joint(&q, &ctx).map_err(|x| format!("{name}: {x}"))?;
            let total = t.total();
            check((total - 1.0).abs() <= 1e-9, format!("{name}: generated slice sums to {total}"))?;
            checked += 1;
        }
    }
    check(checked > 0, "nothing checked")?;
    Ok(format!("{} programs, {checked} prefix contexts, every total within 1e-9 of 1", programs.len()))
}

/// 9. Stan output for the introductory example.
fn stan() -> Outcome {
    let p = corpus::load("fig1").unwrap().program;
    let got = emit_stan(&p).map_err(|x| x.to_string())?;
    check(
        normalize_whitespace(&got) == normalize_whitespace(golden::FIG1_STAN),
        format!("emitted:\n{got}"),
    )?;
    let g = corpus::load("hmm_g").unwrap().program;
    let t = transform_all(&g, &ElimPlan::new(["z1", "z2", "z3"])).map_err(|x| x.to_string())?;
    let s = emit_stan(&t).map_err(|x| x.to_string())?;
    let gq = &s[s.find("generated quantities").ok_or("no generated quantities")?..];
    let at = |z: &str| gq.find(&format!("{z} = categorical_rng(")).ok_or(format!("{z} is not drawn"));
    check(at("z3")? < at("z2")? && at("z2")? < at("z1")?, "G-3 draws are not in the order z3, z2, z1")?;
    Ok("fig1 matches after whitespace normalisation; G-3 draws z3, z2, z1".into())
}

/// 10. Inference of CI levels is optimal.
fn solver() -> Outcome {
    let mut compared = 0;
    let mut skipped = 0;
    let mut cmp = |what: &str, g: &slic::ast::Gamma<CiLevel>, s: &Stmt, d: &Domains<CiLevel>| -> Result<(), String> {
        if g.placeholders().len() > 12 {
            skipped += 1;
            return Ok(());
        }
        let fast = infer_ci_with(g, s, d);
        let slow = ci_problem(g, s, d).brute_force();
        match slow {
            Some(sol) => check(fast.ok && fast.cost == sol.cost, format!("{what}: {} vs {}", fast.cost, sol.cost))?,
            None => check(!fast.ok, format!("{what}: solved an infeasible problem"))?,
        }
        compared += 1;
        Ok(())
    };
    // Every elimination step of the corpus.
    for name in ["hmm_d", "hmm_g", "sprinkler", "sprinkler_discrete", "soft_kmeans", "outliers", "causal"] {
        let e = corpus::load(name).unwrap();
        let plan = ElimPlan::default_for(&e.program).map_err(|x| x.to_string())?;
        let mut cur = e.program.clone();
        for z in &plan.order {
            let p = resolve(&cur).map_err(|x| x.to_string())?;
            let (mut g, mut d) = gamma_to_z(&p, z).map_err(|x| x.to_string())?;
            let sh = shred(&p.gamma, &p.body).map_err(|x| x.to_string())?;
            let sm = sh.get(Level::Model);
            for x in slic::analysis::free_vars(sm) {
                if !g.contains(&x) {
                    if let Some(t) = p.gamma.ty(&x) {
                        g.insert(&x, t.clone(), None);
                        d.insert(x.clone(), CiLevel::ALL.to_vec());
                    }
                }
            }
            cmp(&format!("{name} eliminating {z}"), &g, sm, &d)?;
            cur = slic::elimgen::eliminate(&p, z).map_err(|x| x.to_string())?;
        }
    }
    // Every partition query of the small discrete programs.
    for name in ["cross", "cross_discrete", "sprinkler_discrete", "hmm_a", "hmm_d"] {
        let p = corpus::load(name).unwrap().program;
        let params: Vec<String> = {
            let w = slic::analysis::assigned_anywhere(&p.body);
            let s = slic::analysis::sampled(&p.body);
            p.gamma.names().filter(|n| !w.contains(*n) && s.contains(*n)).cloned().collect()
        };
        let assigned = slic::analysis::assigned_anywhere(&p.body);
        for part in partitions(&params) {
            let mut g = slic::ast::Gamma::new();
            for (n, e) in p.gamma.iter() {
                let l = if assigned.contains(n) {
                    None
                } else if part.x2.contains(n) {
                    Some(CiLevel::L2)
                } else if part.x3.contains(n) {
                    Some(CiLevel::L3)
                } else {
                    Some(CiLevel::L1)
                };
                g.insert(n, e.ty.clone(), l);
            }
            cmp(name, &g, &p.body, &Domains::new())?;
        }
    }
    check(compared > 0, "nothing compared")?;
    Ok(format!("{compared} problems match exhaustive search ({skipped} over 12 placeholders skipped)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("golden transformations", goldens),
        ("semantic preservation", preservation),
        ("shredding preservation", shredding),
        ("CI soundness", ci_soundness),
        ("Markov blanket", blanket),
        ("complexity trend", complexity),
        ("noninterference", noninterference),
        ("factorisation", factorisation),
        ("Stan emission", stan),
        ("solver optimality", solver),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {:>2} {name}: PASS ({secs:.2}s) {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.2}s) {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
