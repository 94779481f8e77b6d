//! Big-step interpreter: statements map a state to a new state and a weight.
//!
//! `~` never draws a value. It reads both sides and multiplies the weight
//! by the density, so a program's final weight is its unnormalised joint
//! density at the given store. Derived forms run as their desugarings.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value as Json;
use thiserror::Error;

use crate::analysis;
use crate::ast::{BaseType, Expr, Gamma, LValue, Program, Stmt};
use crate::dist;
use crate::lattice::Lattice;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Array(Vec<Value>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            Value::Int(i) => Some(*i as f64),
            Value::Array(_) => None,
        }
    }

    /// Scalars in row-major order.
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            Value::Array(vs) => vs.iter().flat_map(Value::flatten).collect(),
            v => v.as_f64().into_iter().collect(),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Zero value of a type; arrays without a static size are empty.
    pub fn zero(t: &BaseType) -> Value {
        match t {
            BaseType::Real => Value::Real(0.0),
            BaseType::Int => Value::Int(0),
            BaseType::BoundedInt(_) => Value::Int(1),
            BaseType::Array(e, n) => Value::Array(vec![Value::zero(e); n.unwrap_or(0)]),
        }
    }

    /// Numeric equality up to a relative tolerance, ints and reals mixed.
    pub fn approx_eq(&self, other: &Value, rel: f64) -> bool {
        match (self, other) {
            (Value::Array(a), Value::Array(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.approx_eq(y, rel))
            }
            (Value::Array(_), _) | (_, Value::Array(_)) => false,
            (a, b) => {
                let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                x == y || (x - y).abs() <= rel * x.abs().max(y.abs())
            }
        }
    }

    /// Whether the value fits a declared base type.
    pub fn conforms(&self, t: &BaseType) -> bool {
        match (self, t) {
            (Value::Real(_), BaseType::Real) => true,
            (Value::Int(_), BaseType::Real | BaseType::Int) => true,
            (Value::Int(i), BaseType::BoundedInt(k)) => *i >= 1 && *i <= *k as i64,
            (Value::Array(vs), BaseType::Array(e, n)) => {
                n.map_or(true, |n| n == vs.len()) && vs.iter().all(|v| v.conforms(e))
            }
            _ => false,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Real(r) => serde_json::Number::from_f64(*r).map_or(Json::Null, Json::Number),
            Value::Int(i) => Json::from(*i),
            Value::Array(vs) => Json::Array(vs.iter().map(Value::to_json).collect()),
        }
    }

    pub fn from_json(j: &Json) -> Result<Value, String> {
        match j {
            Json::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => Ok(Value::Int(i)),
                _ => Ok(Value::Real(n.as_f64().ok_or("number out of range")?)),
            },
            Json::Array(vs) => vs.iter().map(Value::from_json).collect::<Result<_, _>>().map(Value::Array),
            other => Err(format!("expected a number or array, found {other}")),
        }
    }

    /// Converts integers stored in real-typed slots to reals.
    pub fn coerce(self, t: &BaseType) -> Value {
        match (self, t) {
            (Value::Int(i), BaseType::Real) => Value::Real(i as f64),
            (Value::Array(vs), BaseType::Array(e, _)) => {
                Value::Array(vs.into_iter().map(|v| v.coerce(e)).collect())
            }
            (v, _) => v,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(r) => write!(f, "{r}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Array(vs) => {
                f.write_str("[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

pub type State = BTreeMap<String, Value>;

/// Nonnegative density accumulator.
pub type Weight = f64;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("index {index} out of range 1..{len}")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("type error: {0}")]
    Type(String),
    #[error("{0}")]
    Domain(String),
}

/// Work done during one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalCounters {
    /// Distribution density evaluations (`~` statements and `gen` draws).
    pub pdf_evals: u64,
    /// `factor` executions, including those of `elim`.
    pub factor_evals: u64,
}

/// Evaluator carrying the counters of one run.
#[derive(Default)]
pub struct Evaluator {
    pub counters: EvalCounters,
}

type R<T> = Result<T, EvalError>;

fn type_err<T>(msg: impl Into<String>) -> R<T> {
    Err(EvalError::Type(msg.into()))
}

impl Evaluator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn expr(&mut self, s: &State, e: &Expr) -> R<Value> {
        match e {
            Expr::Var(x) => s.get(x).cloned().ok_or_else(|| EvalError::Unbound(x.clone())),
            Expr::Real(r) => Ok(Value::Real(*r)),
            Expr::Int(i) => Ok(Value::Int(*i)),
            Expr::ArrayLit(es) => es.iter().map(|e| self.expr(s, e)).collect::<R<_>>().map(Value::Array),
            Expr::Index(a, i) => {
                let a = self.expr(s, a)?;
                let i = self.expr(s, i)?;
                index(&a, &i).cloned()
            }
            Expr::Call(f, args) => {
                let vs = args.iter().map(|a| self.expr(s, a)).collect::<R<Vec<_>>>()?;
                builtin(f, &vs)
            }
            Expr::Comprehension { body, binder, lo, hi } => {
                let (lo, hi) = (self.int(s, lo)?, self.int(s, hi)?);
                let mut st = s.clone();
                let mut out = Vec::new();
                for i in lo..=hi {
                    st.insert(binder.clone(), Value::Int(i));
                    out.push(self.expr(&st, body)?);
                }
                Ok(Value::Array(out))
            }
            Expr::Target(body) => {
                let (_, w) = self.stmt(s, body)?;
                Ok(Value::Real(w))
            }
            Expr::Phi { binders, body } => self.phi(s, binders, body),
        }
    }

    fn phi(&mut self, s: &State, binders: &[(String, u32)], body: &Stmt) -> R<Value> {
        match binders.split_first() {
            None => Ok(Value::Real(self.stmt(s, body)?.1)),
            Some(((z, k), rest)) => {
                let mut st = s.clone();
                let mut out = Vec::with_capacity(*k as usize);
                for i in 1..=*k as i64 {
                    st.insert(z.clone(), Value::Int(i));
                    out.push(self.phi(&st, rest, body)?);
                }
                Ok(Value::Array(out))
            }
        }
    }

    fn int(&mut self, s: &State, e: &Expr) -> R<i64> {
        match self.expr(s, e)? {
            Value::Int(i) => Ok(i),
            v => type_err(format!("expected an integer, got {v}")),
        }
    }

    fn num(&mut self, s: &State, e: &Expr) -> R<f64> {
        let v = self.expr(s, e)?;
        v.as_f64().ok_or_else(|| EvalError::Type(format!("expected a number, got {v}")))
    }

    /// Sum over `z in 1:k` of the weight of `body`, with `z` bound.
    fn table(&mut self, s: &State, z: &str, k: u32, body: &Stmt) -> R<Vec<f64>> {
        let mut st = s.clone();
        let mut out = Vec::with_capacity(k as usize);
        for i in 1..=k as i64 {
            st.insert(z.to_string(), Value::Int(i));
            out.push(self.stmt(&st, body)?.1);
        }
        Ok(out)
    }

    pub fn stmt(&mut self, s: &State, st: &Stmt) -> R<(State, Weight)> {
        let mut state = s.clone();
        let w = self.exec(&mut state, st)?;
        Ok((state, w))
    }

    /// Runs `st` on `s` in place and returns its weight.
    fn exec(&mut self, s: &mut State, st: &Stmt) -> R<Weight> {
        match st {
            Stmt::Skip => Ok(1.0),
            Stmt::Assign(l, e) => {
                let v = self.expr(s, e)?;
                let idx = l.indices.iter().map(|i| self.expr(s, i)).collect::<R<Vec<_>>>()?;
                if idx.is_empty() {
                    s.insert(l.name.clone(), v);
                } else {
                    let slot = s.get_mut(&l.name).ok_or_else(|| EvalError::Unbound(l.name.clone()))?;
                    update(slot, &idx, v)?;
                }
                Ok(1.0)
            }
            Stmt::Seq(a, b) => {
                let w1 = self.exec(s, a)?;
                let w2 = self.exec(s, b)?;
                Ok(w1 * w2)
            }
            Stmt::For { var, lo, hi, body } => {
                let (lo, hi) = (self.int(s, lo)?, self.int(s, hi)?);
                let saved = s.get(var).cloned();
                let mut w = 1.0;
                for i in lo..=hi {
                    s.insert(var.clone(), Value::Int(i));
                    w *= self.exec(s, body)?;
                }
                restore(s, var, saved);
                Ok(w)
            }
            Stmt::If { cond, then, els } => {
                let c = self.num(s, cond)?;
                if c != 0.0 {
                    self.exec(s, then)
                } else {
                    self.exec(s, els)
                }
            }
            Stmt::Factor(e) => {
                let v = self.num(s, e)?;
                self.counters.factor_evals += 1;
                if v < 0.0 || v.is_nan() {
                    return Err(EvalError::Domain(format!("factor of negative value {v}")));
                }
                Ok(v)
            }
            Stmt::Sample(l, d, args) => {
                let x = self.lvalue(s, l)?;
                if d != "categorical" && matches!(x, Value::Array(_)) {
                    // Elementwise over an array with shared arguments.
                    let vs = args.iter().map(|a| self.num(s, a)).collect::<R<Vec<_>>>()?;
                    let mut w = 1.0;
                    for xi in x.flatten() {
                        self.counters.pdf_evals += 1;
                        w *= dist::pdf(d, xi, &vs).map_err(EvalError::Domain)?;
                    }
                    return Ok(w);
                }
                let x = x
                    .as_f64()
                    .ok_or_else(|| EvalError::Type(format!("cannot sample an array with `{d}`")))?;
                let w = if d == "categorical" {
                    let [a] = args.as_slice() else {
                        return type_err("`categorical` takes one argument");
                    };
                    let ws = self.reals(s, a)?;
                    self.counters.pdf_evals += 1;
                    dist::categorical(x, &ws).map_err(EvalError::Domain)?
                } else {
                    let vs = args.iter().map(|a| self.num(s, a)).collect::<R<Vec<_>>>()?;
                    self.counters.pdf_evals += 1;
                    dist::pdf(d, x, &vs).map_err(EvalError::Domain)?
                };
                Ok(w)
            }
            Stmt::Elim { var, k, body } => {
                // factor(sum([target(S) | z in 1:K]))
                let total: f64 = self.table(s, var, *k, body)?.iter().sum();
                self.counters.factor_evals += 1;
                Ok(total)
            }
            Stmt::Gen { var, k, body } => {
                // z ~ categorical([target(S) | z in 1:K])
                let ws = self.table(s, var, *k, body)?;
                let x = s
                    .get(var)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| EvalError::Unbound(var.clone()))?;
                self.counters.pdf_evals += 1;
                dist::categorical(x, &ws).map_err(EvalError::Domain)
            }
        }
    }

    fn lvalue(&mut self, s: &State, l: &LValue) -> R<Value> {
        self.expr(s, &l.to_expr())
    }

    fn reals(&mut self, s: &State, e: &Expr) -> R<Vec<f64>> {
        match self.expr(s, e)? {
            Value::Array(vs) => vs
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| EvalError::Type("expected a real array".into())))
                .collect(),
            v => type_err(format!("expected an array, got {v}")),
        }
    }
}

fn restore(s: &mut State, var: &str, saved: Option<Value>) {
    match saved {
        Some(v) => {
            s.insert(var.to_string(), v);
        }
        None => {
            s.remove(var);
        }
    }
}

fn index<'a>(a: &'a Value, i: &Value) -> R<&'a Value> {
    let Value::Array(vs) = a else {
        return type_err(format!("cannot index the non-array {a}"));
    };
    let Some(i) = i.as_int() else {
        return type_err(format!("index {i} is not an integer"));
    };
    if i < 1 || i as usize > vs.len() {
        return Err(EvalError::IndexOutOfRange { index: i, len: vs.len() });
    }
    Ok(&vs[i as usize - 1])
}

fn update(slot: &mut Value, idx: &[Value], v: Value) -> R<()> {
    let Some((first, rest)) = idx.split_first() else {
        *slot = v;
        return Ok(());
    };
    let Value::Array(vs) = slot else {
        return type_err("indexed assignment into a non-array");
    };
    let Some(i) = first.as_int() else {
        return type_err(format!("index {first} is not an integer"));
    };
    if i < 1 || i as usize > vs.len() {
        return Err(EvalError::IndexOutOfRange { index: i, len: vs.len() });
    }
    update(&mut vs[i as usize - 1], rest, v)
}

fn builtin(f: &str, vs: &[Value]) -> R<Value> {
    let nums = || -> R<Vec<f64>> {
        vs.iter()
            .map(|v| v.as_f64().ok_or_else(|| EvalError::Type(format!("`{f}` expects numbers"))))
            .collect()
    };
    let ints: Option<Vec<i64>> = vs.iter().map(Value::as_int).collect();
    match (f, vs.len()) {
        ("+" | "-" | "*", 2) => {
            if let Some(i) = &ints {
                let (a, b) = (i[0], i[1]);
                let r = match f {
                    "+" => a.checked_add(b),
                    "-" => a.checked_sub(b),
                    _ => a.checked_mul(b),
                };
                return r.map(Value::Int).ok_or_else(|| EvalError::Domain("integer overflow".into()));
            }
            let n = nums()?;
            Ok(Value::Real(match f {
                "+" => n[0] + n[1],
                "-" => n[0] - n[1],
                _ => n[0] * n[1],
            }))
        }
        ("/", 2) => {
            let n = nums()?;
            Ok(Value::Real(n[0] / n[1]))
        }
        ("<" | ">" | "==", 2) => {
            let n = nums()?;
            let b = match f {
                "<" => n[0] < n[1],
                ">" => n[0] > n[1],
                _ => n[0] == n[1],
            };
            Ok(Value::Int(b as i64))
        }
        ("neg", 1) => match &vs[0] {
            Value::Int(i) => Ok(Value::Int(-i)),
            Value::Real(r) => Ok(Value::Real(-r)),
            _ => type_err("negation expects a number"),
        },
        ("exp", 1) => Ok(Value::Real(nums()?[0].exp())),
        ("log", 1) => Ok(Value::Real(nums()?[0].ln())),
        ("sum", 1) => match &vs[0] {
            Value::Array(xs) => {
                let mut t = 0.0;
                for x in xs {
                    t += x.as_f64().ok_or_else(|| EvalError::Type("`sum` expects numbers".into()))?;
                }
                Ok(Value::Real(t))
            }
            _ => type_err("`sum` expects an array"),
        },
        ("max", 1) => match &vs[0] {
            Value::Array(xs) if !xs.is_empty() => builtin("max", xs),
            _ => type_err("`max` expects a nonempty array"),
        },
        ("max", n) if n >= 2 => {
            if let Some(i) = ints {
                return Ok(Value::Int(*i.iter().max().unwrap()));
            }
            Ok(Value::Real(nums()?.into_iter().fold(f64::NEG_INFINITY, f64::max)))
        }
        _ => type_err(format!("unknown function `{f}` with {} argument(s)", vs.len())),
    }
}

/// Evaluates an expression.
pub fn eval_expr(s: &State, e: &Expr) -> Result<Value, EvalError> {
    Evaluator::new().expr(s, e)
}

/// Runs a statement, returning the final state and the weight.
pub fn eval_stmt(s: &State, st: &Stmt) -> Result<(State, Weight), EvalError> {
    Evaluator::new().stmt(s, st)
}

/// The store a program runs on: `store` with real-typed slots coerced and
/// every missing assigned variable set to its zero value.
pub fn prepare_store<L: Lattice>(gamma: &Gamma<L>, body: &Stmt, store: &State) -> State {
    let mut s = State::new();
    for (k, v) in store {
        let v = match gamma.ty(k) {
            Some(t) => v.clone().coerce(t),
            None => v.clone(),
        };
        s.insert(k.clone(), v);
    }
    for x in analysis::assigned_anywhere(body).iter() {
        if let Some(t) = gamma.ty(x) {
            s.entry(x.clone()).or_insert_with(|| Value::zero(t));
        }
    }
    s
}

/// Runs a program on a full store and returns the final state and weight.
pub fn run(p: &Program, store: &State) -> Result<(State, Weight), EvalError> {
    let s = prepare_store(&p.gamma, &p.body, store);
    eval_stmt(&s, &p.body)
}

/// Density of the program at the deterministic store `sigma` and the
/// parameter and data store `x`.
pub fn density(p: &Program, sigma: &State, x: &State) -> Result<Weight, EvalError> {
    let mut store = sigma.clone();
    store.extend(x.iter().map(|(k, v)| (k.clone(), v.clone())));
    Ok(run(p, &store)?.1)
}

/// [`density`] on a merged store, with counters.
pub fn density_counted(p: &Program, store: &State) -> Result<(Weight, EvalCounters), EvalError> {
    let s = prepare_store(&p.gamma, &p.body, store);
    let mut ev = Evaluator::new();
    let (_, w) = ev.stmt(&s, &p.body)?;
    Ok((w, ev.counters))
}

/// Reads a JSON object `{"name": value}` into a state.
pub fn store_from_json(j: &Json) -> Result<State, String> {
    let Json::Object(m) = j else {
        return Err("a store must be a JSON object".into());
    };
    m.iter()
        .map(|(k, v)| Value::from_json(v).map(|v| (k.clone(), v)).map_err(|e| format!("`{k}`: {e}")))
        .collect()
}

pub fn store_to_json(s: &State) -> Json {
    Json::Object(s.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}
