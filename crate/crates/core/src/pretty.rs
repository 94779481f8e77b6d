//! Pretty printer producing text that [`crate::parser::parse`] reads back to
//! the same program.

use crate::ast::{Entry, Expr, LValue, Program, Stmt};
use crate::lattice::{Lattice, Level};

const WIDTH: usize = 72;
const INDENT: &str = "    ";

/// Prints a whole program. Declarations keep their environment order; a
/// top-level assignment or `~` on a plain variable is folded into that
/// variable's declaration when the order allows it.
pub fn program(p: &Program) -> String {
    let decls: Vec<(&String, &Entry<Level>)> = p.gamma.iter().collect();
    let mut next = 0;
    let mut out = String::new();
    for s in p.body.items() {
        if let Some(x) = inline_target(s) {
            if let Some(pos) = p.gamma.position(x).filter(|&i| i >= next) {
                for (n, e) in &decls[next..pos] {
                    out.push_str(&decl(n, e));
                    out.push_str(";\n");
                }
                next = pos + 1;
                let head = decl(decls[pos].0, decls[pos].1);
                let text = stmt(s);
                // `x = E;` becomes `T x = E;`
                out.push_str(&head);
                out.push_str(&text[x.len()..]);
                out.push('\n');
                continue;
            }
        }
        out.push_str(&stmt(s));
        out.push('\n');
    }
    for (n, e) in &decls[next..] {
        out.push_str(&decl(n, e));
        out.push_str(";\n");
    }
    if out.is_empty() {
        out.push_str("skip;\n");
    }
    out
}

fn inline_target(s: &Stmt) -> Option<&str> {
    match s {
        Stmt::Assign(l, _) | Stmt::Sample(l, _, _) if l.indices.is_empty() => Some(&l.name),
        _ => None,
    }
}

fn decl(name: &str, e: &Entry<Level>) -> String {
    match e.level {
        Some(l) => format!("{} {} {name}", l.name(), e.ty),
        None => format!("{} {name}", e.ty),
    }
}

/// Prints a statement at indentation zero, one statement per line.
pub fn stmt(s: &Stmt) -> String {
    let mut out = String::new();
    stmt_lines(s, 0, &mut out);
    out.pop();
    out
}

/// Prints an expression.
pub fn expr(e: &Expr) -> String {
    expr_at(e, 0, 0)
}

/// One-line rendering of a statement for diagnostics, shortened to about
/// 72 characters.
pub fn summary(s: &Stmt) -> String {
    let text = stmt_inline(s);
    if text.chars().count() <= WIDTH {
        text
    } else {
        let cut: String = text.chars().take(WIDTH - 3).collect();
        format!("{cut}...")
    }
}

fn pad(indent: usize) -> String {
    INDENT.repeat(indent)
}

fn stmt_lines(s: &Stmt, indent: usize, out: &mut String) {
    let p = pad(indent);
    match s {
        Stmt::Seq(..) => {
            for item in s.items() {
                stmt_lines(item, indent, out);
            }
        }
        Stmt::Skip => {
            out.push_str(&p);
            out.push_str("skip;\n");
        }
        Stmt::Assign(l, e) => {
            out.push_str(&format!("{p}{} = {};\n", lvalue(l, indent), expr_at(e, 0, indent)));
        }
        Stmt::Factor(e) => {
            out.push_str(&format!("{p}factor({});\n", expr_at(e, 0, indent)));
        }
        Stmt::Sample(l, d, args) => {
            out.push_str(&format!(
                "{p}{} ~ {d}({});\n",
                lvalue(l, indent),
                list(args, indent)
            ));
        }
        Stmt::For { var, lo, hi, body } => {
            out.push_str(&format!(
                "{p}for ({var} in {}:{}) ",
                expr_at(lo, 0, indent),
                expr_at(hi, 0, indent)
            ));
            block(body, indent, out);
            out.push('\n');
        }
        Stmt::If { cond, then, els } => {
            out.push_str(&format!("{p}if ({}) ", expr_at(cond, 0, indent)));
            block(then, indent, out);
            if !els.is_skip() {
                out.push_str(" else ");
                block(els, indent, out);
            }
            out.push('\n');
        }
        Stmt::Elim { var, k, body } => {
            out.push_str(&format!("{p}elim(int<{k}> {var}) "));
            block(body, indent, out);
            out.push('\n');
        }
        Stmt::Gen { var, k, body } => {
            out.push_str(&format!("{p}gen(int<{k}> {var}) "));
            block(body, indent, out);
            out.push('\n');
        }
    }
}

/// `{ ... }` with the closing brace at `indent`, no trailing newline.
fn block(s: &Stmt, indent: usize, out: &mut String) {
    if s.is_skip() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    stmt_lines(s, indent + 1, out);
    out.push_str(&pad(indent));
    out.push('}');
}

fn stmt_inline(s: &Stmt) -> String {
    match s {
        Stmt::Seq(..) => s
            .items()
            .into_iter()
            .map(stmt_inline)
            .collect::<Vec<_>>()
            .join(" "),
        Stmt::Skip => "skip;".into(),
        Stmt::Assign(l, e) => format!("{} = {};", lvalue(l, 0), inline_expr(e)),
        Stmt::Factor(e) => format!("factor({});", inline_expr(e)),
        Stmt::Sample(l, d, args) => format!(
            "{} ~ {d}({});",
            lvalue(l, 0),
            args.iter().map(inline_expr).collect::<Vec<_>>().join(", ")
        ),
        Stmt::For { var, lo, hi, body } => format!(
            "for ({var} in {}:{}) {}",
            inline_expr(lo),
            inline_expr(hi),
            inline_block(body)
        ),
        Stmt::If { cond, then, els } => {
            let mut t = format!("if ({}) {}", inline_expr(cond), inline_block(then));
            if !els.is_skip() {
                t.push_str(" else ");
                t.push_str(&inline_block(els));
            }
            t
        }
        Stmt::Elim { var, k, body } => format!("elim(int<{k}> {var}) {}", inline_block(body)),
        Stmt::Gen { var, k, body } => format!("gen(int<{k}> {var}) {}", inline_block(body)),
    }
}

fn inline_block(s: &Stmt) -> String {
    if s.is_skip() {
        "{}".into()
    } else {
        format!("{{ {} }}", stmt_inline(s))
    }
}

fn inline_expr(e: &Expr) -> String {
    expr_at(e, 0, usize::MAX)
}

fn lvalue(l: &LValue, indent: usize) -> String {
    let mut t = l.name.clone();
    for i in &l.indices {
        t.push('[');
        t.push_str(&expr_at(i, 0, indent));
        t.push(']');
    }
    t
}

fn list(args: &[Expr], indent: usize) -> String {
    args.iter()
        .map(|a| expr_at(a, 0, indent))
        .collect::<Vec<_>>()
        .join(", ")
}

fn binop_prec(op: &str) -> Option<u8> {
    match op {
        "<" | ">" | "==" => Some(1),
        "+" | "-" => Some(2),
        "*" | "/" => Some(3),
        _ => None,
    }
}

const UNARY: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Call(op, args) if args.len() == 2 && binop_prec(op).is_some() => binop_prec(op).unwrap(),
        Expr::Call(op, args) if op == "neg" && args.len() == 1 => UNARY,
        Expr::Int(i) if *i < 0 => UNARY,
        Expr::Real(r) if r.is_sign_negative() => UNARY,
        _ => ATOM,
    }
}

/// Renders `e` in a context that needs precedence at least `min`.
/// `indent == usize::MAX` forces one-line output.
fn expr_at(e: &Expr, min: u8, indent: usize) -> String {
    let text = match e {
        Expr::Var(x) => x.clone(),
        Expr::Int(i) => i.to_string(),
        Expr::Real(r) => real(*r),
        Expr::ArrayLit(es) => format!("[{}]", list(es, indent)),
        Expr::Index(a, i) => format!("{}[{}]", expr_at(a, ATOM, indent), expr_at(i, 0, indent)),
        Expr::Call(op, args) if args.len() == 2 && binop_prec(op).is_some() => {
            let p = binop_prec(op).unwrap();
            format!(
                "{} {op} {}",
                expr_at(&args[0], p, indent),
                expr_at(&args[1], p + 1, indent)
            )
        }
        Expr::Call(op, args) if op == "neg" && args.len() == 1 => {
            // `-(3)` would fold back into a literal, so only non-literals
            // reach this arm in parsed programs.
            format!("-{}", expr_at(&args[0], ATOM, indent))
        }
        Expr::Call(f, args) => format!("{f}({})", list(args, indent)),
        Expr::Comprehension { body, binder, lo, hi } => format!(
            "[{} | {binder} in {}:{}]",
            expr_at(body, 0, indent),
            expr_at(lo, 0, indent),
            expr_at(hi, 0, indent)
        ),
        Expr::Target(s) => {
            let flat = format!("target({})", stmt_inline(s).trim_end_matches(';'));
            if indent == usize::MAX || flat.len() <= WIDTH / 2 || s.items().len() <= 1 && flat.len() <= WIDTH {
                flat
            } else {
                let mut t = String::from("target(\n");
                stmt_lines(s, indent + 1, &mut t);
                t.push_str(&pad(indent));
                t.push(')');
                t
            }
        }
        Expr::Phi { binders, body } => {
            let head = binders
                .iter()
                .map(|(z, k)| format!("int<{k}> {z}"))
                .collect::<Vec<_>>()
                .join(", ");
            if indent == usize::MAX {
                format!("phi({head}) {}", inline_block(body))
            } else {
                let mut t = format!("phi({head}) ");
                block(body, indent, &mut t);
                t
            }
        }
    };
    if prec(e) < min {
        format!("({text})")
    } else {
        text
    }
}

fn real(r: f64) -> String {
    let t = format!("{r:?}");
    if t.contains('.') || t.contains('e') || t.contains("inf") || t.contains("NaN") {
        t
    } else {
        format!("{t}.0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_expr};

    #[test]
    fn empty_program_prints_skip() {
        let p = Program::new(Default::default(), Stmt::Skip);
        assert_eq!(program(&p), "skip;\n");
    }

    #[test]
    fn precedence_is_preserved() {
        for src in ["(a + b) * c", "a - (b - c)", "a - b - c", "-(a + b)", "x * (-3)", "f[i][j + 1]"] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&expr(&e)).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn declarations_keep_order() {
        let src = "data real x ~ normal(mu, 1); real mu; genquant real q = 2 * x;";
        let p = parse(src).unwrap();
        assert_eq!(parse(&program(&p)).unwrap(), p);
    }

    #[test]
    fn summary_is_short() {
        let s = crate::parser::parse_stmt(&"x = 1; ".repeat(40)).unwrap();
        assert!(summary(&s).chars().count() <= WIDTH);
    }
}
