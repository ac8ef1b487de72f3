//! Solver models and evaluation of quantifier-free terms and formulas.

use std::collections::BTreeMap;
use std::fmt;

use super::sexpr::SExpr;
use crate::logic::{CmpOp, Formula, Sort, Term};

/// Finite table over `Int` with a default for unlisted indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArrayValue {
    pub default: i64,
    pub entries: BTreeMap<i64, i64>,
}

impl ArrayValue {
    pub fn constant(v: i64) -> Self {
        ArrayValue {
            default: v,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, i: i64) -> i64 {
        self.entries.get(&i).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, i: i64, v: i64) {
        if v == self.default {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, v);
        }
    }

    fn normalized(mut self) -> Self {
        let d = self.default;
        self.entries.retain(|_, v| *v != d);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Array(ArrayValue),
    /// Element of an uninterpreted sort, named as the solver printed it.
    Elem(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Elem(e) => f.write_str(e),
            Value::Array(a) => {
                f.write_str("[")?;
                for (k, v) in &a.entries {
                    write!(f, "{k}:{v}, ")?;
                }
                write!(f, "_:{}]", a.default)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("symbol '{0}' has no value in the model")]
    Unassigned(String),
    #[error("integer overflow while evaluating")]
    Overflow,
    #[error("cannot evaluate: {0}")]
    Unsupported(String),
    #[error("ill-sorted value in {0}")]
    Sort(String),
}

/// A function definition from the model: parameters and an S-expression body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub params: Vec<String>,
    pub body: SExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub defs: BTreeMap<String, Definition>,
}

type Env = BTreeMap<String, Value>;

impl Model {
    /// Reads `(define-fun ...)` entries, accepting both the bare list form and
    /// the older `(model ...)` wrapper. Universe declarations and cardinality
    /// constraints are skipped.
    pub fn from_sexpr(e: &SExpr) -> Result<Model, String> {
        let items = e.list().ok_or("model is not a list")?;
        let items = match items.first().and_then(SExpr::atom) {
            Some("model") => &items[1..],
            _ => items,
        };
        let mut m = Model::default();
        for it in items {
            match it.head() {
                Some("define-fun") => {
                    let v = it.list().unwrap();
                    if v.len() != 5 {
                        return Err(format!("malformed define-fun: {it}"));
                    }
                    let name = v[1].atom().ok_or("define-fun name")?.to_string();
                    let params = v[2]
                        .list()
                        .ok_or("define-fun params")?
                        .iter()
                        .map(|p| {
                            p.list()
                                .and_then(|l| l.first())
                                .and_then(SExpr::atom)
                                .map(str::to_string)
                                .ok_or_else(|| format!("bad parameter {p}"))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    m.defs.insert(
                        name,
                        Definition {
                            params,
                            body: v[4].clone(),
                        },
                    );
                }
                Some("declare-fun") | Some("declare-sort") | Some("forall") => {}
                _ => return Err(format!("unexpected model entry: {it}")),
            }
        }
        Ok(m)
    }

    pub fn set_constant(&mut self, name: &str, body: SExpr) {
        self.defs.insert(
            name.to_string(),
            Definition {
                params: Vec::new(),
                body,
            },
        );
    }

    /// Value of a 0-ary symbol, if defined.
    pub fn constant(&self, name: &str) -> Result<Value, EvalError> {
        self.call(name, Vec::new())
    }

    fn call(&self, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        let d = self
            .defs
            .get(name)
            .ok_or_else(|| EvalError::Unassigned(name.to_string()))?;
        if d.params.len() != args.len() {
            return Err(EvalError::Sort(format!("call of {name}")));
        }
        let env: Env = d.params.iter().cloned().zip(args).collect();
        self.eval_sexpr(&d.body, &env)
    }

    pub fn eval_term(&self, t: &Term) -> Result<Value, EvalError> {
        Ok(match t {
            Term::Var(n, _) => self.constant(n)?,
            Term::Int(n) => Value::Int(*n),
            Term::Add(a, b) => Value::Int(
                self.int(a)?
                    .checked_add(self.int(b)?)
                    .ok_or(EvalError::Overflow)?,
            ),
            Term::Sub(a, b) => Value::Int(
                self.int(a)?
                    .checked_sub(self.int(b)?)
                    .ok_or(EvalError::Overflow)?,
            ),
            Term::Mul(c, a) => Value::Int(c.checked_mul(self.int(a)?).ok_or(EvalError::Overflow)?),
            Term::App(f, args, _) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.call(f, vals)?
            }
            Term::Select(a, i) => {
                let arr = self.array(a)?;
                Value::Int(arr.get(self.int(i)?))
            }
            Term::Store(a, i, v) => {
                let mut arr = self.array(a)?;
                arr.set(self.int(i)?, self.int(v)?);
                Value::Array(arr)
            }
            Term::Ite(c, a, b) => {
                if self.eval_formula(c)? {
                    self.eval_term(a)?
                } else {
                    self.eval_term(b)?
                }
            }
        })
    }

    fn int(&self, t: &Term) -> Result<i64, EvalError> {
        match self.eval_term(t)? {
            Value::Int(n) => Ok(n),
            _ => Err(EvalError::Sort(t.to_string())),
        }
    }

    fn array(&self, t: &Term) -> Result<ArrayValue, EvalError> {
        match self.eval_term(t)? {
            Value::Array(a) => Ok(a),
            _ => Err(EvalError::Sort(t.to_string())),
        }
    }

    pub fn eval_formula(&self, f: &Formula) -> Result<bool, EvalError> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(op, a, b) => {
                let x = self.eval_term(a)?;
                let y = self.eval_term(b)?;
                match op {
                    CmpOp::Eq => values_equal(&x, &y),
                    CmpOp::Ne => !values_equal(&x, &y),
                    _ => {
                        let (Value::Int(x), Value::Int(y)) = (x, y) else {
                            return Err(EvalError::Sort(f.to_string()));
                        };
                        match op {
                            CmpOp::Lt => x < y,
                            CmpOp::Le => x <= y,
                            CmpOp::Gt => x > y,
                            CmpOp::Ge => x >= y,
                            CmpOp::Eq | CmpOp::Ne => unreachable!(),
                        }
                    }
                }
            }
            Formula::Pred(p, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                match self.call(p, vals)? {
                    Value::Bool(b) => b,
                    _ => return Err(EvalError::Sort(f.to_string())),
                }
            }
            Formula::Not(a) => !self.eval_formula(a)?,
            Formula::And(v) => {
                for g in v {
                    if !self.eval_formula(g)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(v) => {
                for g in v {
                    if self.eval_formula(g)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !self.eval_formula(a)? || self.eval_formula(b)?,
            Formula::Iff(a, b) => self.eval_formula(a)? == self.eval_formula(b)?,
            Formula::Forall(_) | Formula::Exists(_) => {
                return Err(EvalError::Unsupported("quantifier".into()))
            }
            Formula::Hole(h) => return Err(EvalError::Unsupported(format!("hole ?{h}"))),
        })
    }

    fn eval_sexpr(&self, e: &SExpr, env: &Env) -> Result<Value, EvalError> {
        // Function tables arrive as long `ite` chains; walk them without recursing.
        let mut e = e;
        while let Some([_, c, a, b]) = e.list().filter(|v| v.len() == 4 && v[0].atom() == Some("ite")).map(|v| [&v[0], &v[1], &v[2], &v[3]]) {
            e = match self.eval_sexpr(c, env)? {
                Value::Bool(true) => a,
                Value::Bool(false) => b,
                _ => return Err(EvalError::Sort(c.to_string())),
            };
        }
        match e {
            SExpr::Atom(a) => self.eval_atom(a, env),
            SExpr::List(v) if v.is_empty() => Err(EvalError::Unsupported("()".into())),
            SExpr::List(v) => {
                // ((as const (Array Int Int)) v)
                if let Some(h) = v[0].list() {
                    if h.first().and_then(SExpr::atom) == Some("as")
                        && h.get(1).and_then(SExpr::atom) == Some("const")
                    {
                        let d = self.eval_sexpr(&v[1], env)?;
                        return match d {
                            Value::Int(n) => Ok(Value::Array(ArrayValue::constant(n))),
                            _ => Err(EvalError::Unsupported(e.to_string())),
                        };
                    }
                }
                let head = v[0]
                    .atom()
                    .ok_or_else(|| EvalError::Unsupported(e.to_string()))?;
                let args = &v[1..];
                let ev = |x: &SExpr| self.eval_sexpr(x, env);
                let int = |x: &SExpr| match ev(x)? {
                    Value::Int(n) => Ok(n),
                    _ => Err(EvalError::Sort(x.to_string())),
                };
                let boolean = |x: &SExpr| match ev(x)? {
                    Value::Bool(b) => Ok(b),
                    _ => Err(EvalError::Sort(x.to_string())),
                };
                Ok(match head {
                    "-" if args.len() == 1 => {
                        Value::Int(int(&args[0])?.checked_neg().ok_or(EvalError::Overflow)?)
                    }
                    "-" => {
                        let mut acc = int(&args[0])?;
                        for a in &args[1..] {
                            acc = acc.checked_sub(int(a)?).ok_or(EvalError::Overflow)?;
                        }
                        Value::Int(acc)
                    }
                    "+" => {
                        let mut acc = 0i64;
                        for a in args {
                            acc = acc.checked_add(int(a)?).ok_or(EvalError::Overflow)?;
                        }
                        Value::Int(acc)
                    }
                    "*" => {
                        let mut acc = 1i64;
                        for a in args {
                            acc = acc.checked_mul(int(a)?).ok_or(EvalError::Overflow)?;
                        }
                        Value::Int(acc)
                    }
                    "div" | "mod" => {
                        let (x, y) = (int(&args[0])?, int(&args[1])?);
                        if y == 0 {
                            return Err(EvalError::Unsupported("division by zero".into()));
                        }
                        Value::Int(if head == "div" {
                            x.div_euclid(y)
                        } else {
                            x.rem_euclid(y)
                        })
                    }
                    "<" | "<=" | ">" | ">=" => {
                        let (x, y) = (int(&args[0])?, int(&args[1])?);
                        Value::Bool(match head {
                            "<" => x < y,
                            "<=" => x <= y,
                            ">" => x > y,
                            _ => x >= y,
                        })
                    }
                    "=" => {
                        let first = ev(&args[0])?;
                        let mut all = true;
                        for a in &args[1..] {
                            all &= values_equal(&first, &ev(a)?);
                        }
                        Value::Bool(all)
                    }
                    "distinct" => {
                        let vals = args.iter().map(ev).collect::<Result<Vec<_>, _>>()?;
                        let mut ok = true;
                        for i in 0..vals.len() {
                            for j in i + 1..vals.len() {
                                ok &= !values_equal(&vals[i], &vals[j]);
                            }
                        }
                        Value::Bool(ok)
                    }
                    "and" => {
                        for a in args {
                            if !boolean(a)? {
                                return Ok(Value::Bool(false));
                            }
                        }
                        Value::Bool(true)
                    }
                    "or" => {
                        for a in args {
                            if boolean(a)? {
                                return Ok(Value::Bool(true));
                            }
                        }
                        Value::Bool(false)
                    }
                    "not" => Value::Bool(!boolean(&args[0])?),
                    "=>" => Value::Bool(!boolean(&args[0])? || boolean(&args[1])?),
                    "ite" => {
                        if boolean(&args[0])? {
                            ev(&args[1])?
                        } else {
                            ev(&args[2])?
                        }
                    }
                    "let" => {
                        let binds = args[0]
                            .list()
                            .ok_or_else(|| EvalError::Unsupported(e.to_string()))?;
                        let mut inner = env.clone();
                        for b in binds {
                            let pair = b.list().filter(|p| p.len() == 2);
                            let Some([name, val]) = pair.map(|p| [&p[0], &p[1]]) else {
                                return Err(EvalError::Unsupported(b.to_string()));
                            };
                            let name = name
                                .atom()
                                .ok_or_else(|| EvalError::Unsupported(b.to_string()))?;
                            inner.insert(name.to_string(), ev(val)?);
                        }
                        self.eval_sexpr(&args[1], &inner)?
                    }
                    "select" => {
                        let arr = match ev(&args[0])? {
                            Value::Array(a) => a,
                            _ => return Err(EvalError::Sort(e.to_string())),
                        };
                        Value::Int(arr.get(int(&args[1])?))
                    }
                    "store" => {
                        let mut arr = match ev(&args[0])? {
                            Value::Array(a) => a,
                            _ => return Err(EvalError::Sort(e.to_string())),
                        };
                        arr.set(int(&args[1])?, int(&args[2])?);
                        Value::Array(arr)
                    }
                    "_" if args.len() == 2 && args[0].atom() == Some("as-array") => {
                        let f = args[1]
                            .atom()
                            .ok_or_else(|| EvalError::Unsupported(e.to_string()))?;
                        let d = self
                            .defs
                            .get(f)
                            .ok_or_else(|| EvalError::Unassigned(f.to_string()))?;
                        if d.params.len() != 1 {
                            return Err(EvalError::Unsupported(e.to_string()));
                        }
                        Value::Array(self.tabulate(&d.params[0], &d.body, env)?)
                    }
                    "lambda" => {
                        let params = args[0]
                            .list()
                            .ok_or_else(|| EvalError::Unsupported(e.to_string()))?;
                        let p = params
                            .first()
                            .and_then(SExpr::list)
                            .and_then(|l| l.first())
                            .and_then(SExpr::atom)
                            .filter(|_| params.len() == 1)
                            .ok_or_else(|| EvalError::Unsupported(e.to_string()))?;
                        Value::Array(self.tabulate(p, &args[1], env)?)
                    }
                    f => {
                        let vals = args.iter().map(ev).collect::<Result<Vec<_>, _>>()?;
                        self.call(f, vals)?
                    }
                })
            }
        }
    }

    fn eval_atom(&self, a: &str, env: &Env) -> Result<Value, EvalError> {
        if let Some(v) = env.get(a) {
            return Ok(v.clone());
        }
        match a {
            "true" => return Ok(Value::Bool(true)),
            "false" => return Ok(Value::Bool(false)),
            _ => {}
        }
        if let Ok(n) = a.parse::<i64>() {
            return Ok(Value::Int(n));
        }
        if self.defs.contains_key(a) {
            return self.constant(a);
        }
        if a.contains("!val!") {
            return Ok(Value::Elem(a.to_string()));
        }
        Err(EvalError::Unassigned(a.to_string()))
    }

    /// Converts a one-parameter function body to a table, provided it is an
    /// `ite` chain testing the parameter against constants.
    fn tabulate(&self, param: &str, body: &SExpr, env: &Env) -> Result<ArrayValue, EvalError> {
        let mut entries = Vec::new();
        let mut cur = body;
        loop {
            if !cur.mentions(param) {
                let d = match self.eval_sexpr(cur, env)? {
                    Value::Int(n) => n,
                    _ => return Err(EvalError::Sort(cur.to_string())),
                };
                let mut arr = ArrayValue::constant(d);
                for (k, v) in entries.into_iter().rev() {
                    arr.set(k, v);
                }
                return Ok(arr);
            }
            let parts = cur.list().filter(|v| v.len() == 4 && v[0].atom() == Some("ite"));
            let Some(parts) = parts else {
                return Err(EvalError::Unsupported(format!("array function body {body}")));
            };
            let key = parts[1]
                .list()
                .filter(|c| c.len() == 3 && c[0].atom() == Some("="))
                .and_then(|c| {
                    if c[1].atom() == Some(param) {
                        Some(&c[2])
                    } else if c[2].atom() == Some(param) {
                        Some(&c[1])
                    } else {
                        None
                    }
                })
                .ok_or_else(|| EvalError::Unsupported(format!("array function body {body}")))?;
            let k = match self.eval_sexpr(key, env)? {
                Value::Int(n) => n,
                _ => return Err(EvalError::Sort(key.to_string())),
            };
            let v = match self.eval_sexpr(&parts[2], env)? {
                Value::Int(n) => n,
                _ => return Err(EvalError::Sort(parts[2].to_string())),
            };
            entries.push((k, v));
            cur = &parts[3];
        }
    }

    /// Adds a default interpretation for every declared symbol the solver
    /// left out (it omits symbols that do not affect satisfiability).
    pub fn complete(&mut self, decls: &[Decl]) {
        for d in decls {
            if self.defs.contains_key(&d.name) {
                continue;
            }
            let body = match &d.ret {
                Sort::Int => SExpr::Atom("0".into()),
                Sort::Bool => SExpr::Atom("false".into()),
                Sort::Array => SExpr::List(vec![
                    SExpr::List(vec![
                        SExpr::Atom("as".into()),
                        SExpr::Atom("const".into()),
                        SExpr::Atom("(Array Int Int)".into()),
                    ]),
                    SExpr::Atom("0".into()),
                ]),
                Sort::Uninterpreted(u) => SExpr::Atom(format!("{u}!val!0")),
            };
            self.defs.insert(
                d.name.clone(),
                Definition {
                    params: (0..d.args.len()).map(|i| format!("x!{i}")).collect(),
                    body,
                },
            );
        }
    }
}

/// A symbol declaration derived from a query.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Decl {
    pub name: String,
    pub args: Vec<Sort>,
    pub ret: Sort,
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Array(x), Value::Array(y)) => x.clone().normalized() == y.clone().normalized(),
        _ => a == b,
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, d) in &self.defs {
            if d.params.is_empty() {
                match self.constant(name) {
                    Ok(v) => writeln!(f, "  {name} = {v}")?,
                    Err(_) => writeln!(f, "  {name} = {}", d.body)?,
                }
            } else {
                writeln!(f, "  {name}({}) = {}", d.params.join(", "), d.body)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::sexpr::parse_all;
    use super::*;

    fn model(text: &str) -> Model {
        Model::from_sexpr(&parse_all(text).unwrap()[0]).unwrap()
    }

    #[test]
    fn evaluates_constants_and_arithmetic() {
        let m = Model::default();
        let t = Term::add(Term::Int(1), Term::Int(2));
        assert_eq!(m.eval_term(&t).unwrap(), Value::Int(3));
        let a = Term::var("a", Sort::Array);
        let m = model("((define-fun a () (Array Int Int) ((as const (Array Int Int)) 7)))");
        let sel = Term::select(Term::store(a.clone(), Term::Int(0), Term::Int(5)), Term::Int(0));
        assert_eq!(m.eval_term(&sel).unwrap(), Value::Int(5));
        assert_eq!(
            m.eval_term(&Term::select(a, Term::Int(9))).unwrap(),
            Value::Int(7)
        );
    }

    #[test]
    fn contradiction_is_false() {
        let m = model("((define-fun p () Bool true))");
        let p = Formula::Pred("p".into(), vec![]);
        assert!(!m
            .eval_formula(&Formula::And(vec![p.clone(), Formula::not(p)]))
            .unwrap());
    }

    #[test]
    fn reads_z3_model_shapes() {
        let m = model(
            "(
              ;; universe for U:
              ;;   U!val!0
              (declare-fun U!val!0 () U)
              (forall ((x U)) (= x U!val!0))
              (define-fun x () Int (- 5))
              (define-fun e () U U!val!0)
              (define-fun a () (Array Int Int) (store ((as const (Array Int Int)) 7) 3 5))
              (define-fun b () (Array Int Int) (_ as-array k!0))
              (define-fun k!0 ((x!0 Int)) Int (ite (= x!0 2) 8 (ite (= 4 x!0) 1 6)))
              (define-fun f ((x!0 Int)) Int (ite (= x!0 2) 8 6))
              (define-fun g ((x!0 Int) (x!1 Int)) Int 4)
              (define-fun c () (Array Int Int) (lambda ((y Int)) (ite (= y 1) 2 0)))
              (define-fun h ((x!0 Int)) Int (let ((a!1 (+ x!0 1))) (* a!1 2)))
            )",
        );
        let get = |s: &str| m.constant(s).unwrap();
        assert_eq!(get("x"), Value::Int(-5));
        assert_eq!(get("e"), Value::Elem("U!val!0".into()));
        let Value::Array(a) = get("a") else { panic!() };
        assert_eq!((a.get(3), a.get(0)), (5, 7));
        let Value::Array(b) = get("b") else { panic!() };
        assert_eq!((b.get(2), b.get(4), b.get(0)), (8, 1, 6));
        let Value::Array(c) = get("c") else { panic!() };
        assert_eq!((c.get(1), c.get(5)), (2, 0));
        let app = |f: &str, args: Vec<Term>| m.eval_term(&Term::App(f.into(), args, Sort::Int)).unwrap();
        assert_eq!(app("f", vec![Term::Int(2)]), Value::Int(8));
        assert_eq!(app("g", vec![Term::Int(2), Term::Int(0)]), Value::Int(4));
        assert_eq!(app("h", vec![Term::Int(3)]), Value::Int(8));
    }

    #[test]
    fn array_equality_ignores_representation() {
        let m = model(
            "((define-fun a () (Array Int Int) (store ((as const (Array Int Int)) 0) 1 0))
              (define-fun b () (Array Int Int) ((as const (Array Int Int)) 0)))",
        );
        let eq = Formula::Cmp(CmpOp::Eq, Term::var("a", Sort::Array), Term::var("b", Sort::Array));
        assert!(m.eval_formula(&eq).unwrap());
    }

    #[test]
    fn unassigned_symbol_is_an_error() {
        let m = Model::default();
        assert!(matches!(
            m.eval_term(&Term::int_var("q")),
            Err(EvalError::Unassigned(_))
        ));
    }

    #[test]
    fn completion_fills_defaults() {
        let mut m = Model::default();
        m.complete(&[
            Decl { name: "n".into(), args: vec![], ret: Sort::Int },
            Decl { name: "arr".into(), args: vec![], ret: Sort::Array },
            Decl { name: "p".into(), args: vec![Sort::Int], ret: Sort::Bool },
        ]);
        assert_eq!(m.constant("n").unwrap(), Value::Int(0));
        assert_eq!(m.constant("arr").unwrap(), Value::Array(ArrayValue::constant(0)));
        assert!(!m
            .eval_formula(&Formula::Pred("p".into(), vec![Term::Int(1)]))
            .unwrap());
    }
}
