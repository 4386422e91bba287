//! Tree-walking evaluator and the built-in function library.

use std::f64::consts::PI;

use statrs::distribution::{
    Beta, Binomial, ChiSquared, Continuous, ContinuousCDF, Discrete, DiscreteCDF, Normal, StudentsT,
};
use statrs::function::gamma::ln_gamma;

use super::parser::integration_variable;
use super::quad::{adaptive_simpson, QuadError, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE};
use super::stats::{self, StatError};
use super::{parse_expr, Arg, BinaryOp, Env, Expr, ExprError, Sampler, UnaryOp, Value};
use crate::htmlgen::{self, ChartOptions, ChartSpec};
use crate::numfmt::{format_number, parse_number, round_half_away, signif};
use crate::table::{Column, ColumnData, DataTable};

/// Every function name the evaluator knows.
pub const BUILTINS: &[&str] = &[
    "abs", "as.character", "as.numeric", "binom.test", "c", "ceiling", "choose", "coef", "cor", "cos",
    "cumsum", "data.frame", "dbinom", "dnorm", "exp", "factorial", "fivenum", "floor", "format", "hist64",
    "ifelse", "integrate", "IQR", "length", "lm", "log", "log10", "max", "mean", "median", "min",
    "moodle.table", "nchar", "ncol", "nrow", "paste", "paste0", "pbinom", "pchisq", "pnorm", "prod", "pt",
    "qchisq", "qnorm", "qt", "quantile", "rbeta", "rbinom", "rchisq", "rep", "rev", "rexp", "rnorm", "round",
    "RtoHTML", "runif", "sample", "scatter64", "sd", "seq", "signif", "sin", "sort", "sprintf", "sqrt", "sum",
    "t.test", "table", "tan", "tolower", "toupper", "trunc", "unique", "var", "which", "which.max",
    "which.min",
];

/// Largest vector a single call may produce.
const MAX_LEN: usize = 10_000_000;

pub fn eval(expr: &Expr, env: &Env, sampler: &mut Sampler) -> Result<Value, ExprError> {
    let scope = Scope { env, local: None };
    Evaluator { sampler }.eval(expr, &scope)
}

pub fn eval_str(source: &str, env: &Env, sampler: &mut Sampler) -> Result<Value, ExprError> {
    eval(&parse_expr(source)?, env, sampler)
}

/// Names of called functions the library does not provide.
pub(crate) fn unknown_functions(expr: &Expr) -> Vec<String> {
    fn walk(e: &Expr, out: &mut Vec<String>) {
        match e {
            Expr::Call { func, args } => {
                if !BUILTINS.contains(&func.as_str()) && !out.contains(func) {
                    out.push(func.clone());
                }
                for a in args {
                    walk(&a.value, out);
                }
            }
            Expr::Unary(_, a) | Expr::Field(a, _) => walk(a, out),
            Expr::Binary(_, a, b) | Expr::Index(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            Expr::If { cond, then, otherwise } => {
                walk(cond, out);
                walk(then, out);
                if let Some(o) = otherwise {
                    walk(o, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(expr, &mut out);
    out
}

struct Scope<'a> {
    env: &'a Env,
    local: Option<(&'a str, f64)>,
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        if let Some((n, v)) = self.local {
            if n == name {
                return Some(Value::Number(v));
            }
        }
        self.env.get(name).cloned()
    }
}

struct Evaluator<'s> {
    sampler: &'s mut Sampler,
}

fn type_err(message: impl Into<String>) -> ExprError {
    ExprError::Type(message.into())
}

fn domain(func: &str, message: impl Into<String>) -> ExprError {
    ExprError::Domain { func: func.to_string(), message: message.into() }
}

fn stat_err(func: &str, e: StatError) -> ExprError {
    domain(func, e.to_string())
}

fn check_finite(context: &str, v: &Value) -> Result<(), ExprError> {
    let ok = match v {
        Value::Number(x) => x.is_finite(),
        Value::Numbers(xs) => xs.iter().all(|x| x.is_finite()),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(ExprError::NonFinite(context.to_string()))
    }
}

fn from_bools(v: Vec<bool>) -> Value {
    if v.len() == 1 {
        Value::Bool(v[0])
    } else {
        Value::Numbers(v.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
    }
}

fn recycle<T: Clone>(op: &str, a: &[T], b: &[T]) -> Result<Vec<(T, T)>, ExprError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let n = a.len().max(b.len());
    if n % a.len() != 0 || n % b.len() != 0 {
        return Err(type_err(format!(
            "`{op}`: lengths {} and {} do not recycle evenly",
            a.len(),
            b.len()
        )));
    }
    Ok((0..n).map(|i| (a[i % a.len()].clone(), b[i % b.len()].clone())).collect())
}

fn numbers_of(op: &str, v: &Value) -> Result<Vec<f64>, ExprError> {
    v.to_numbers().ok_or_else(|| type_err(format!("`{op}` needs numbers, got {}", v.type_name())))
}

fn texts_of(op: &str, v: &Value) -> Result<Vec<String>, ExprError> {
    v.to_texts().ok_or_else(|| type_err(format!("`{op}` cannot use a {}", v.type_name())))
}

fn truthy(v: &Value) -> Result<bool, ExprError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => match other.as_f64() {
            Some(x) => Ok(x != 0.0),
            None => Err(type_err(format!(
                "condition must be a single boolean, got {} of length {}",
                other.type_name(),
                other.len()
            ))),
        },
    }
}

fn truthy_each(op: &str, v: &Value) -> Result<Vec<bool>, ExprError> {
    Ok(numbers_of(op, v)?.into_iter().map(|x| x != 0.0).collect())
}

fn unary(op: UnaryOp, v: Value) -> Result<Value, ExprError> {
    match op {
        UnaryOp::Neg => Ok(Value::numbers(numbers_of("-", &v)?.into_iter().map(|x| -x).collect())),
        UnaryOp::Plus => Ok(Value::numbers(numbers_of("+", &v)?)),
        UnaryOp::Not => Ok(from_bools(truthy_each("!", &v)?.into_iter().map(|b| !b).collect())),
    }
}

fn binary(op: BinaryOp, a: Value, b: Value) -> Result<Value, ExprError> {
    use BinaryOp::*;
    let name = format!("{op:?}").to_lowercase();
    match op {
        Add | Sub | Mul | Div | Pow | Mod | IntDiv => {
            let pairs = recycle(&name, &numbers_of(&name, &a)?, &numbers_of(&name, &b)?)?;
            let out: Vec<f64> = pairs
                .into_iter()
                .map(|(x, y)| match op {
                    Add => x + y,
                    Sub => x - y,
                    Mul => x * y,
                    Div => x / y,
                    Pow => x.powf(y),
                    Mod => x - y * (x / y).floor(),
                    IntDiv => (x / y).floor(),
                    _ => unreachable!(),
                })
                .collect();
            let v = Value::numbers(out);
            check_finite(&name, &v)?;
            Ok(v)
        }
        Eq | Ne | Lt | Le | Gt | Ge => {
            let cmp = |o: std::cmp::Ordering| match op {
                Eq => o.is_eq(),
                Ne => !o.is_eq(),
                Lt => o.is_lt(),
                Le => o.is_le(),
                Gt => o.is_gt(),
                Ge => o.is_ge(),
                _ => unreachable!(),
            };
            let out: Vec<bool> = if a.is_text() || b.is_text() {
                recycle(&name, &texts_of(&name, &a)?, &texts_of(&name, &b)?)?
                    .into_iter()
                    .map(|(x, y)| cmp(x.cmp(&y)))
                    .collect()
            } else {
                recycle(&name, &numbers_of(&name, &a)?, &numbers_of(&name, &b)?)?
                    .into_iter()
                    .map(|(x, y)| cmp(x.total_cmp(&y)))
                    .collect()
            };
            Ok(from_bools(out))
        }
        And | Or => {
            let pairs = recycle(&name, &truthy_each(&name, &a)?, &truthy_each(&name, &b)?)?;
            Ok(from_bools(
                pairs.into_iter().map(|(x, y)| if op == And { x && y } else { x || y }).collect(),
            ))
        }
        In => {
            let out: Vec<bool> = if a.is_text() || b.is_text() {
                let hay = texts_of("%in%", &b)?;
                texts_of("%in%", &a)?.iter().map(|x| hay.contains(x)).collect()
            } else {
                let hay = numbers_of("%in%", &b)?;
                numbers_of("%in%", &a)?.iter().map(|x| hay.contains(x)).collect()
            };
            Ok(from_bools(out))
        }
        Range => {
            let from = a.as_f64().ok_or_else(|| type_err("`:` needs scalar bounds"))?;
            let to = b.as_f64().ok_or_else(|| type_err("`:` needs scalar bounds"))?;
            let n = (to - from).abs().floor() as usize + 1;
            if n > MAX_LEN {
                return Err(domain(":", format!("range of {n} elements is too long")));
            }
            let step = if to >= from { 1.0 } else { -1.0 };
            Ok(Value::numbers((0..n).map(|i| from + step * i as f64).collect()))
        }
        Tilde => Err(type_err("a `~` formula is only valid inside lm()")),
    }
}

fn resolve_indices(idx: &[f64], len: usize) -> Result<Vec<usize>, ExprError> {
    if idx.iter().any(|i| i.fract() != 0.0) {
        return Err(type_err("indices must be whole numbers"));
    }
    if idx.iter().all(|i| *i < 0.0) && !idx.is_empty() {
        let drop: Vec<usize> = idx.iter().map(|i| (-i) as usize).collect();
        return Ok((1..=len).filter(|i| !drop.contains(i)).map(|i| i - 1).collect());
    }
    idx.iter()
        .map(|i| {
            if *i >= 1.0 && (*i as usize) <= len {
                Ok(*i as usize - 1)
            } else {
                Err(type_err(format!("index {} out of range 1..{len}", format_number(*i))))
            }
        })
        .collect()
}

fn column_value(data: &ColumnData) -> Value {
    match data {
        ColumnData::Numeric(v) => Value::numbers(v.clone()),
        ColumnData::Text(v) => Value::texts(v.clone()),
    }
}

fn index(v: Value, i: Value) -> Result<Value, ExprError> {
    if let Value::Table(t) = &v {
        if let Some(name) = i.as_text() {
            return t
                .column(name)
                .map(|c| column_value(&c.data))
                .ok_or_else(|| type_err(format!("table has no column `{name}`")));
        }
        let pos = resolve_indices(&numbers_of("[", &i)?, t.ncols())?;
        if pos.len() != 1 {
            return Err(type_err("select one table column at a time"));
        }
        return Ok(column_value(&t.columns()[pos[0]].data));
    }
    let idx = numbers_of("[", &i)?;
    match v {
        Value::Number(_) | Value::Bool(_) | Value::Numbers(_) => {
            let xs = v.to_numbers().expect("numeric");
            let pos = resolve_indices(&idx, xs.len())?;
            Ok(Value::numbers(pos.into_iter().map(|p| xs[p]).collect()))
        }
        Value::Text(_) | Value::Texts(_) => {
            let xs = v.to_texts().expect("text");
            let pos = resolve_indices(&idx, xs.len())?;
            Ok(Value::texts(pos.into_iter().map(|p| xs[p].clone()).collect()))
        }
        other => Err(type_err(format!("cannot index a {}", other.type_name()))),
    }
}

fn field(v: Value, name: &str) -> Result<Value, ExprError> {
    match v {
        Value::Table(t) => t
            .column(name)
            .map(|c| column_value(&c.data))
            .ok_or_else(|| type_err(format!("table has no column `{name}`"))),
        Value::Test(r) => Ok(match name {
            "p.value" => Value::Number(r.p_value),
            "statistic" => Value::Number(r.statistic.1),
            "parameter" | "df" => match r.df {
                Some(df) => Value::Number(df),
                None => Value::Number(r.trials.unwrap_or(0) as f64),
            },
            "estimate" => Value::numbers(r.estimate_value()),
            "conf.int" => Value::Numbers(vec![r.conf_int.0, r.conf_int.1]),
            "null.value" => Value::Number(r.null_value.1),
            "method" => Value::Text(r.method.clone()),
            "coefficients" => Value::numbers(r.coefficients.iter().map(|c| c.estimate).collect()),
            "r.squared" => r.r_squared.map(Value::Number).ok_or_else(|| type_err("not a regression"))?,
            "sigma" => r.residual_se.map(Value::Number).ok_or_else(|| type_err("not a regression"))?,
            other => return Err(type_err(format!("test result has no field `{other}`"))),
        }),
        other => Err(type_err(format!("`$` needs a table or test result, got {}", other.type_name()))),
    }
}

/// An evaluated argument.
struct Actual {
    name: Option<String>,
    value: Value,
    label: String,
}

fn label_of(e: &Expr) -> String {
    match e {
        Expr::Ident(n) => n.clone(),
        _ => "x".to_string(),
    }
}

/// Arguments matched to a parameter list, R style: names first, then
/// positions fill the remaining slots in order.
struct Bound<'f> {
    func: &'f str,
    params: &'static [&'static str],
    slots: Vec<Option<Actual>>,
}

fn bind<'f>(func: &'f str, params: &'static [&'static str], actuals: Vec<Actual>) -> Result<Bound<'f>, ExprError> {
    let arity = |message: String| ExprError::Arity { func: func.to_string(), message };
    let mut slots: Vec<Option<Actual>> = params.iter().map(|_| None).collect();
    let mut positional = Vec::new();
    for a in actuals {
        match &a.name {
            Some(n) => {
                let i = params
                    .iter()
                    .position(|p| p == n)
                    .ok_or_else(|| arity(format!("unknown argument `{n}`")))?;
                if slots[i].is_some() {
                    return Err(arity(format!("argument `{n}` given twice")));
                }
                slots[i] = Some(a);
            }
            None => positional.push(a),
        }
    }
    for a in positional {
        let i = slots
            .iter()
            .position(Option::is_none)
            .ok_or_else(|| arity(format!("too many arguments (at most {})", params.len())))?;
        slots[i] = Some(a);
    }
    Ok(Bound { func, params, slots })
}

impl Bound<'_> {
    fn get(&self, i: usize) -> Option<&Value> {
        self.slots[i].as_ref().map(|a| &a.value)
    }

    fn req(&self, i: usize) -> Result<&Value, ExprError> {
        self.get(i).ok_or_else(|| ExprError::Arity {
            func: self.func.to_string(),
            message: format!("missing argument `{}`", self.params[i]),
        })
    }

    fn label(&self, i: usize) -> String {
        self.slots[i].as_ref().map(|a| a.label.clone()).unwrap_or_default()
    }

    fn num(&self, i: usize) -> Result<f64, ExprError> {
        let v = self.req(i)?;
        v.as_f64().ok_or_else(|| {
            domain(self.func, format!("`{}` must be a single number, got {}", self.params[i], v.type_name()))
        })
    }

    fn num_or(&self, i: usize, default: f64) -> Result<f64, ExprError> {
        if self.get(i).is_some() {
            self.num(i)
        } else {
            Ok(default)
        }
    }

    fn flag_or(&self, i: usize, default: bool) -> Result<bool, ExprError> {
        match self.get(i) {
            Some(v) => truthy(v),
            None => Ok(default),
        }
    }

    fn nums(&self, i: usize) -> Result<Vec<f64>, ExprError> {
        numbers_of(self.func, self.req(i)?)
    }

    /// Nonnegative whole number, e.g. a sample size.
    fn count(&self, i: usize) -> Result<usize, ExprError> {
        let x = self.num(i)?;
        if x < 0.0 || x.fract() != 0.0 || x > MAX_LEN as f64 {
            return Err(domain(self.func, format!("`{}` must be a whole number >= 0, got {}", self.params[i], format_number(x))));
        }
        Ok(x as usize)
    }
}

fn map_numbers(b: &Bound, f: impl Fn(f64) -> f64) -> Result<Value, ExprError> {
    Ok(Value::numbers(b.nums(0)?.into_iter().map(f).collect()))
}

fn map_texts(b: &Bound, f: impl Fn(&str) -> String) -> Result<Value, ExprError> {
    let t = texts_of(b.func, b.req(0)?)?;
    Ok(Value::texts(t.iter().map(|s| f(s)).collect()))
}

/// Concatenate like `c()`: any text makes the result text.
fn concat(values: &[Value]) -> Result<Value, ExprError> {
    if values.iter().any(Value::is_text) {
        let mut out = Vec::new();
        for v in values {
            out.extend(texts_of("c", v)?);
        }
        Ok(Value::texts(out))
    } else {
        let mut out = Vec::new();
        for v in values {
            out.extend(numbers_of("c", v)?);
        }
        Ok(Value::numbers(out))
    }
}

fn flat_numbers(func: &str, values: &[Value]) -> Result<Vec<f64>, ExprError> {
    let mut out = Vec::new();
    for v in values {
        out.extend(numbers_of(func, v)?);
    }
    Ok(out)
}

fn split_options(actuals: Vec<Actual>, options: &[&str]) -> (Vec<Actual>, Vec<Actual>) {
    actuals.into_iter().partition(|a| a.name.as_deref().is_none_or(|n| !options.contains(&n)))
}

fn paste(actuals: Vec<Actual>, default_sep: &str) -> Result<Value, ExprError> {
    let (parts, opts) = split_options(actuals, &["sep", "collapse"]);
    let mut sep = default_sep.to_string();
    let mut collapse = None;
    for o in &opts {
        let t = o.value.as_text().ok_or_else(|| domain("paste", "sep/collapse must be text"))?.to_string();
        if o.name.as_deref() == Some("sep") {
            sep = t;
        } else {
            collapse = Some(t);
        }
    }
    let cols: Vec<Vec<String>> =
        parts.iter().map(|a| texts_of("paste", &a.value)).collect::<Result<_, _>>()?;
    let cols: Vec<Vec<String>> = cols.into_iter().filter(|c| !c.is_empty()).collect();
    let n = cols.iter().map(Vec::len).max().unwrap_or(0);
    let rows: Vec<String> = (0..n)
        .map(|i| cols.iter().map(|c| c[i % c.len()].as_str()).collect::<Vec<_>>().join(&sep))
        .collect();
    Ok(match collapse {
        Some(c) => Value::Text(rows.join(&c)),
        None if rows.is_empty() => Value::Text(String::new()),
        None => Value::texts(rows),
    })
}

fn format_nsmall(x: f64, nsmall: usize) -> String {
    let s = format_number(x);
    let decimals = s.split_once('.').map_or(0, |(_, d)| d.len());
    if decimals >= nsmall {
        return s;
    }
    let mut out = s;
    if decimals == 0 {
        out.push('.');
    }
    out.extend(std::iter::repeat_n('0', nsmall - decimals));
    out
}

fn sprintf(actuals: Vec<Actual>) -> Result<Value, ExprError> {
    let mut it = actuals.into_iter();
    let fmt = it
        .next()
        .and_then(|a| a.value.as_text().map(str::to_string))
        .ok_or_else(|| domain("sprintf", "first argument must be a format string"))?;
    let args: Vec<Value> = it.map(|a| a.value).collect();
    let mut next = args.iter();
    let mut out = String::new();
    let chars: Vec<char> = fmt.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '%' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        i += 1;
        if chars.get(i) == Some(&'%') {
            out.push('%');
            i += 1;
            continue;
        }
        let mut left = false;
        let mut zero = false;
        let mut plus = false;
        while let Some(c) = chars.get(i) {
            match c {
                '-' => left = true,
                '0' => zero = true,
                '+' => plus = true,
                _ => break,
            }
            i += 1;
        }
        let mut width = 0usize;
        while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
            width = width * 10 + d as usize;
            i += 1;
        }
        let mut precision = None;
        if chars.get(i) == Some(&'.') {
            i += 1;
            let mut p = 0usize;
            while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
                p = p * 10 + d as usize;
                i += 1;
            }
            precision = Some(p);
        }
        let conv = *chars.get(i).ok_or_else(|| domain("sprintf", "format ends inside a conversion"))?;
        i += 1;
        let arg = next.next().ok_or_else(|| domain("sprintf", "too few arguments for format"))?;
        let numeric = || arg.as_f64().ok_or_else(|| domain("sprintf", format!("%{conv} needs a number")));
        let mut body = match conv {
            'd' | 'i' => {
                let x = numeric()?;
                if x.fract() != 0.0 {
                    return Err(domain("sprintf", format!("%{conv} needs a whole number, got {x}")));
                }
                format!("{}", x as i64)
            }
            'f' => format!("{:.*}", precision.unwrap_or(6), numeric()?),
            's' => arg.display(),
            other => return Err(domain("sprintf", format!("unsupported conversion %{other}"))),
        };
        if plus && conv != 's' && !body.starts_with('-') {
            body.insert(0, '+');
        }
        let len = body.chars().count();
        if len < width {
            let pad = width - len;
            if left {
                body.extend(std::iter::repeat_n(' ', pad));
            } else if zero && conv != 's' {
                let at = usize::from(body.starts_with(['-', '+']));
                body.insert_str(at, &"0".repeat(pad));
            } else {
                body.insert_str(0, &" ".repeat(pad));
            }
        }
        out.push_str(&body);
    }
    Ok(Value::Text(out))
}

fn level_check(func: &str, p: f64) -> Result<f64, ExprError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(domain(func, format!("probability {} outside [0, 1]", format_number(p))))
    }
}

fn positive(func: &str, what: &str, x: f64) -> Result<f64, ExprError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(domain(func, format!("{what} must be > 0, got {}", format_number(x))))
    }
}

fn whole(func: &str, what: &str, x: f64) -> Result<u64, ExprError> {
    if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as u64)
    } else {
        Err(domain(func, format!("{what} must be a whole number >= 0, got {}", format_number(x))))
    }
}

impl Evaluator<'_> {
    fn eval(&mut self, e: &Expr, scope: &Scope) -> Result<Value, ExprError> {
        match e {
            Expr::Number(x) => Ok(Value::Number(*x)),
            Expr::Text(t) => Ok(Value::Text(t.clone())),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Ident(name) => match scope.lookup(name) {
                Some(v) => Ok(v),
                None if name == "pi" => Ok(Value::Number(PI)),
                None => Err(ExprError::Unbound(name.clone())),
            },
            Expr::Unary(op, inner) => unary(*op, self.eval(inner, scope)?),
            Expr::Binary(op, a, b) => {
                let a = self.eval(a, scope)?;
                let b = self.eval(b, scope)?;
                binary(*op, a, b)
            }
            Expr::If { cond, then, otherwise } => {
                if truthy(&self.eval(cond, scope)?)? {
                    self.eval(then, scope)
                } else if let Some(o) = otherwise {
                    self.eval(o, scope)
                } else {
                    Err(type_err("`if` without `else` produced no value"))
                }
            }
            Expr::Call { func, args } => self.call(func, args, scope),
            Expr::Index(a, i) => {
                let a = self.eval(a, scope)?;
                let i = self.eval(i, scope)?;
                index(a, i)
            }
            Expr::Field(a, name) => field(self.eval(a, scope)?, name),
        }
    }

    fn call(&mut self, func: &str, args: &[Arg], scope: &Scope) -> Result<Value, ExprError> {
        match func {
            "integrate" => return self.integrate(args, scope),
            "lm" => return self.lm(args, scope),
            _ => {}
        }
        if !BUILTINS.contains(&func) {
            return Err(ExprError::UnknownFunction(func.to_string()));
        }
        let mut actuals = Vec::with_capacity(args.len());
        for a in args {
            actuals.push(Actual { name: a.name.clone(), value: self.eval(&a.value, scope)?, label: label_of(&a.value) });
        }
        let out = self.builtin(func, actuals)?;
        check_finite(func, &out)?;
        Ok(out)
    }

    fn integrate(&mut self, args: &[Arg], scope: &Scope) -> Result<Value, ExprError> {
        let var = integration_variable(args);
        let rest: Vec<&Arg> = args.iter().filter(|a| a.name.as_deref() != Some("var")).collect();
        let mut integrand = None;
        let mut bounds: Vec<Option<&Expr>> = vec![None, None];
        let mut positional = Vec::new();
        for a in rest {
            match a.name.as_deref() {
                Some("f") => integrand = Some(&a.value),
                Some("lower") => bounds[0] = Some(&a.value),
                Some("upper") => bounds[1] = Some(&a.value),
                Some(other) => {
                    return Err(ExprError::Arity { func: "integrate".into(), message: format!("unknown argument `{other}`") })
                }
                None => positional.push(&a.value),
            }
        }
        let mut positional = positional.into_iter();
        if integrand.is_none() {
            integrand = positional.next();
        }
        for slot in bounds.iter_mut() {
            if slot.is_none() {
                *slot = positional.next();
            }
        }
        if positional.next().is_some() {
            return Err(ExprError::Arity { func: "integrate".into(), message: "too many arguments".into() });
        }
        let missing = |what: &str| ExprError::Arity { func: "integrate".into(), message: format!("missing argument `{what}`") };
        let f = integrand.ok_or_else(|| missing("f"))?;
        let mut bound = |slot: Option<&Expr>, what: &str| -> Result<f64, ExprError> {
            let v = self.eval(slot.ok_or_else(|| missing(what))?, scope)?;
            v.as_f64().ok_or_else(|| domain("integrate", format!("`{what}` must be a single number")))
        };
        let lower = bound(bounds[0], "lower")?;
        let upper = bound(bounds[1], "upper")?;
        let result = adaptive_simpson(
            |x| {
                let inner = Scope { env: scope.env, local: Some((var.as_str(), x)) };
                let v = self.eval(f, &inner)?;
                v.as_f64().ok_or_else(|| type_err("integrand must evaluate to a single number"))
            },
            lower,
            upper,
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_DEPTH,
        );
        match result {
            Ok(v) => Ok(Value::Number(v)),
            Err(QuadError::Integrand(e)) => Err(e),
            Err(e) => Err(ExprError::Integrate(e.to_string())),
        }
    }

    fn lm(&mut self, args: &[Arg], scope: &Scope) -> Result<Value, ExprError> {
        let [Arg { value: Expr::Binary(BinaryOp::Tilde, lhs, rhs), .. }] = args else {
            return Err(ExprError::Arity { func: "lm".into(), message: "expected a single formula `y ~ x`".into() });
        };
        let y = numbers_of("lm", &self.eval(lhs, scope)?)?;
        let x = numbers_of("lm", &self.eval(rhs, scope)?)?;
        let (ly, lx) = (label_of(lhs), label_of(rhs));
        let mut r = stats::simple_regression(&x, &y, &format!("{ly} ~ {lx}")).map_err(|e| stat_err("lm", e))?;
        r.coefficients[1].name = lx.clone();
        r.estimate[1].0 = lx;
        Ok(Value::Test(Box::new(r)))
    }

    fn builtin(&mut self, func: &str, actuals: Vec<Actual>) -> Result<Value, ExprError> {
        let f = func;
        // Variadic functions first.
        match f {
            "c" => return concat(&actuals.into_iter().map(|a| a.value).collect::<Vec<_>>()),
            "sum" | "prod" | "max" | "min" => {
                let xs = flat_numbers(f, &actuals.into_iter().map(|a| a.value).collect::<Vec<_>>())?;
                return Ok(Value::Number(match f {
                    "sum" => xs.iter().sum(),
                    "prod" => xs.iter().product(),
                    _ if xs.is_empty() => return Err(domain(f, "no values")),
                    "max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    _ => xs.iter().copied().fold(f64::INFINITY, f64::min),
                }));
            }
            "paste" => return paste(actuals, " "),
            "paste0" => return paste(actuals, ""),
            "sprintf" => return sprintf(actuals),
            "data.frame" => {
                let n = actuals.iter().map(|a| a.value.len()).max().unwrap_or(0);
                let mut cols = Vec::new();
                for (i, a) in actuals.into_iter().enumerate() {
                    let name = a.name.clone().unwrap_or_else(|| if a.label == "x" && i > 0 { format!("V{}", i + 1) } else { a.label.clone() });
                    let data = a.value.to_column().ok_or_else(|| domain(f, "columns must be vectors"))?;
                    let len = data.len();
                    if len == 0 || n % len != 0 {
                        return Err(domain(f, format!("column `{name}` has {len} rows, expected {n}")));
                    }
                    let data = match data {
                        ColumnData::Numeric(v) => ColumnData::Numeric((0..n).map(|i| v[i % len]).collect()),
                        ColumnData::Text(v) => ColumnData::Text((0..n).map(|i| v[i % len].clone()).collect()),
                    };
                    cols.push(Column { name: Some(name), data });
                }
                return DataTable::new(cols).map(Value::Table).map_err(|e| domain(f, e.to_string()));
            }
            _ => {}
        }
        let params: &'static [&'static str] = match f {
            "abs" | "sqrt" | "exp" | "log10" | "floor" | "ceiling" | "trunc" | "sin" | "cos" | "tan" | "length"
            | "mean" | "median" | "sd" | "var" | "rev" | "unique" | "cumsum" | "fivenum" | "table" | "nchar"
            | "toupper" | "tolower" | "as.character" | "as.numeric" | "which" | "which.max" | "which.min"
            | "factorial" | "nrow" | "ncol" | "coef" | "RtoHTML" | "IQR" => &["x"],
            "log" => &["x", "base"],
            "round" => &["x", "digits"],
            "signif" => &["x", "digits"],
            "sort" => &["x", "decreasing"],
            "quantile" => &["x", "probs"],
            "cor" => &["x", "y"],
            "choose" => &["n", "k"],
            "seq" => &["from", "to", "by", "length.out"],
            "rep" => &["x", "times", "each"],
            "format" => &["x", "nsmall"],
            "ifelse" => &["test", "yes", "no"],
            "sample" => &["x", "size", "replace", "prob"],
            "runif" => &["n", "min", "max"],
            "rnorm" => &["n", "mean", "sd"],
            "rbinom" => &["n", "size", "prob"],
            "rchisq" => &["n", "df"],
            "rbeta" => &["n", "shape1", "shape2"],
            "rexp" => &["n", "rate"],
            "pnorm" => &["q", "mean", "sd", "lower.tail"],
            "qnorm" => &["p", "mean", "sd", "lower.tail"],
            "dnorm" => &["x", "mean", "sd"],
            "pt" => &["q", "df", "lower.tail"],
            "qt" => &["p", "df", "lower.tail"],
            "pchisq" => &["q", "df", "lower.tail"],
            "qchisq" => &["p", "df", "lower.tail"],
            "pbinom" => &["q", "size", "prob", "lower.tail"],
            "dbinom" => &["x", "size", "prob"],
            "t.test" => &["x", "y", "mu", "conf.level"],
            "binom.test" => &["x", "n", "p", "conf.level"],
            "moodle.table" => &["x", "ncol"],
            "hist64" => &["x", "binwidth", "width", "height"],
            "scatter64" => &["x", "y", "width", "height"],
            _ => return Err(ExprError::UnknownFunction(f.to_string())),
        };
        let b = bind(f, params, actuals)?;
        self.fixed(f, &b)
    }

    fn fixed(&mut self, f: &str, b: &Bound) -> Result<Value, ExprError> {
        let stat = |e| stat_err(f, e);
        Ok(match f {
            "abs" => map_numbers(b, f64::abs)?,
            "sqrt" => map_numbers(b, f64::sqrt)?,
            "exp" => map_numbers(b, f64::exp)?,
            "log10" => map_numbers(b, f64::log10)?,
            "floor" => map_numbers(b, f64::floor)?,
            "ceiling" => map_numbers(b, f64::ceil)?,
            "trunc" => map_numbers(b, f64::trunc)?,
            "sin" => map_numbers(b, f64::sin)?,
            "cos" => map_numbers(b, f64::cos)?,
            "tan" => map_numbers(b, f64::tan)?,
            "factorial" => map_numbers(b, |x| {
                if x >= 0.0 && x.fract() == 0.0 {
                    ln_gamma(x + 1.0).exp().round()
                } else {
                    f64::NAN
                }
            })?,
            "log" => {
                let base = b.num_or(1, std::f64::consts::E)?;
                map_numbers(b, |x| x.ln() / base.ln())?
            }
            "round" => {
                let d = b.num_or(1, 0.0)? as i32;
                map_numbers(b, |x| round_half_away(x, d))?
            }
            "signif" => {
                let d = b.num_or(1, 6.0)? as i32;
                map_numbers(b, |x| signif(x, d))?
            }
            "choose" => {
                let (n, k) = (b.num(0)?, b.num(1)?);
                if k < 0.0 || k > n || n.fract() != 0.0 || k.fract() != 0.0 {
                    Value::Number(0.0)
                } else {
                    Value::Number((ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)).exp().round())
                }
            }
            "length" => Value::Number(b.req(0)?.len() as f64),
            "nrow" | "ncol" => match b.req(0)? {
                Value::Table(t) => Value::Number(if f == "nrow" { t.nrows() } else { t.ncols() } as f64),
                other => return Err(domain(f, format!("needs a table, got {}", other.type_name()))),
            },
            "mean" => Value::Number(stats::mean(&b.nums(0)?).map_err(stat)?),
            "median" => Value::Number(stats::median(&b.nums(0)?).map_err(stat)?),
            "sd" => Value::Number(stats::sd(&b.nums(0)?).map_err(stat)?),
            "var" => Value::Number(stats::var(&b.nums(0)?).map_err(stat)?),
            "IQR" => {
                let x = b.nums(0)?;
                Value::Number(stats::quantile(&x, 0.75).map_err(stat)? - stats::quantile(&x, 0.25).map_err(stat)?)
            }
            "fivenum" => Value::Numbers(stats::fivenum(&b.nums(0)?).map_err(stat)?.to_vec()),
            "quantile" => {
                let x = b.nums(0)?;
                let probs = match b.get(1) {
                    Some(p) => numbers_of(f, p)?,
                    None => vec![0.0, 0.25, 0.5, 0.75, 1.0],
                };
                let q: Result<Vec<f64>, _> = probs.iter().map(|p| stats::quantile(&x, *p)).collect();
                Value::numbers(q.map_err(stat)?)
            }
            "cor" => Value::Number(stats::cor(&b.nums(0)?, &b.nums(1)?).map_err(stat)?),
            "cumsum" => {
                let mut acc = 0.0;
                Value::numbers(b.nums(0)?.into_iter().map(|x| {
                    acc += x;
                    acc
                }).collect())
            }
            "sort" => {
                let desc = b.flag_or(1, false)?;
                match b.req(0)? {
                    v if v.is_text() => {
                        let mut t = texts_of(f, v)?;
                        t.sort();
                        if desc {
                            t.reverse();
                        }
                        Value::texts(t)
                    }
                    v => {
                        let mut x = stats::sorted(&numbers_of(f, v)?);
                        if desc {
                            x.reverse();
                        }
                        Value::numbers(x)
                    }
                }
            }
            "rev" => match b.req(0)? {
                v if v.is_text() => Value::texts(texts_of(f, v)?.into_iter().rev().collect()),
                v => Value::numbers(numbers_of(f, v)?.into_iter().rev().collect()),
            },
            "unique" => match b.req(0)? {
                v if v.is_text() => {
                    let mut out: Vec<String> = Vec::new();
                    for t in texts_of(f, v)? {
                        if !out.contains(&t) {
                            out.push(t);
                        }
                    }
                    Value::texts(out)
                }
                v => {
                    let mut out: Vec<f64> = Vec::new();
                    for x in numbers_of(f, v)? {
                        if !out.contains(&x) {
                            out.push(x);
                        }
                    }
                    Value::numbers(out)
                }
            },
            "which" => Value::numbers(
                b.nums(0)?.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, _)| (i + 1) as f64).collect(),
            ),
            "which.max" | "which.min" => {
                let x = b.nums(0)?;
                let mut best: Option<usize> = None;
                for (i, v) in x.iter().enumerate() {
                    let better = match best {
                        None => true,
                        Some(j) if f == "which.max" => *v > x[j],
                        Some(j) => *v < x[j],
                    };
                    if better {
                        best = Some(i);
                    }
                }
                Value::Number(best.ok_or_else(|| domain(f, "empty vector"))? as f64 + 1.0)
            }
            "nchar" => Value::numbers(texts_of(f, b.req(0)?)?.iter().map(|t| t.chars().count() as f64).collect()),
            "toupper" => map_texts(b, str::to_uppercase)?,
            "tolower" => map_texts(b, str::to_lowercase)?,
            "as.character" => Value::texts(texts_of(f, b.req(0)?)?),
            "as.numeric" => match b.req(0)? {
                v if v.is_text() => {
                    let t = texts_of(f, v)?;
                    let parsed: Option<Vec<f64>> = t.iter().map(|s| parse_number(s)).collect();
                    Value::numbers(parsed.ok_or_else(|| domain(f, "text is not numeric"))?)
                }
                v => Value::numbers(numbers_of(f, v)?),
            },
            "format" => {
                let nsmall = b.num_or(1, 0.0)?.max(0.0) as usize;
                match b.req(0)? {
                    v if v.is_text() => Value::texts(texts_of(f, v)?),
                    v => Value::texts(numbers_of(f, v)?.into_iter().map(|x| format_nsmall(x, nsmall)).collect()),
                }
            }
            "ifelse" => {
                let test = truthy_each(f, b.req(0)?)?;
                let (yes, no) = (b.req(1)?, b.req(2)?);
                if yes.is_text() || no.is_text() {
                    let (y, n) = (texts_of(f, yes)?, texts_of(f, no)?);
                    if y.is_empty() || n.is_empty() {
                        return Err(domain(f, "empty branch"));
                    }
                    Value::texts(test.iter().enumerate().map(|(i, t)| if *t { y[i % y.len()].clone() } else { n[i % n.len()].clone() }).collect())
                } else {
                    let (y, n) = (numbers_of(f, yes)?, numbers_of(f, no)?);
                    if y.is_empty() || n.is_empty() {
                        return Err(domain(f, "empty branch"));
                    }
                    Value::numbers(test.iter().enumerate().map(|(i, t)| if *t { y[i % y.len()] } else { n[i % n.len()] }).collect())
                }
            }
            "seq" => self.seq(b)?,
            "rep" => {
                let times = b.get(1).map(|_| b.count(1)).transpose()?.unwrap_or(1);
                let each = b.get(2).map(|_| b.count(2)).transpose()?.unwrap_or(1);
                let v = b.req(0)?;
                if v.len().saturating_mul(times).saturating_mul(each) > MAX_LEN {
                    return Err(domain(f, "result too long"));
                }
                if v.is_text() {
                    let t = texts_of(f, v)?;
                    let once: Vec<String> = t.iter().flat_map(|s| std::iter::repeat_n(s.clone(), each)).collect();
                    Value::texts(once.iter().cloned().cycle().take(once.len() * times).collect())
                } else {
                    let x = numbers_of(f, v)?;
                    let once: Vec<f64> = x.iter().flat_map(|s| std::iter::repeat_n(*s, each)).collect();
                    Value::numbers(once.iter().copied().cycle().take(once.len() * times).collect())
                }
            }
            "table" => {
                let v = b.req(0)?;
                let (levels, counts) = if v.is_text() {
                    let t = texts_of(f, v)?;
                    let mut levels = t.clone();
                    levels.sort();
                    levels.dedup();
                    let counts = levels.iter().map(|l| t.iter().filter(|x| *x == l).count() as f64).collect::<Vec<_>>();
                    (ColumnData::Text(levels), counts)
                } else {
                    let x = numbers_of(f, v)?;
                    let mut levels = stats::sorted(&x);
                    levels.dedup();
                    let counts = levels.iter().map(|l| x.iter().filter(|v| *v == l).count() as f64).collect::<Vec<_>>();
                    (ColumnData::Numeric(levels), counts)
                };
                let t = DataTable::new(vec![
                    Column { name: Some("value".into()), data: levels },
                    Column::numeric(Some("count"), counts),
                ])
                .map_err(|e| domain(f, e.to_string()))?;
                Value::Table(t)
            }
            "sample" => self.sample(b)?,
            "runif" => {
                let n = b.count(0)?;
                let (lo, hi) = (b.num_or(1, 0.0)?, b.num_or(2, 1.0)?);
                if hi < lo {
                    return Err(domain(f, "max must be >= min"));
                }
                Value::numbers((0..n).map(|_| lo + (hi - lo) * self.sampler.uniform()).collect())
            }
            "rnorm" => {
                let n = b.count(0)?;
                let (m, s) = (b.num_or(1, 0.0)?, b.num_or(2, 1.0)?);
                if s < 0.0 {
                    return Err(domain(f, "sd must be >= 0"));
                }
                let std = Normal::standard();
                Value::numbers((0..n).map(|_| m + s * std.inverse_cdf(self.sampler.uniform_open())).collect())
            }
            "rbinom" => {
                let n = b.count(0)?;
                let size = whole(f, "size", b.num(1)?)?;
                let p = level_check(f, b.num(2)?)?;
                let dist = (p > 0.0 && p < 1.0).then(|| Binomial::new(p, size).expect("valid"));
                Value::numbers(
                    (0..n)
                        .map(|_| {
                            let u = self.sampler.uniform_open();
                            match &dist {
                                Some(d) => d.inverse_cdf(u) as f64,
                                None if p == 0.0 => 0.0,
                                None => size as f64,
                            }
                        })
                        .collect(),
                )
            }
            "rchisq" => {
                let n = b.count(0)?;
                let df = positive(f, "df", b.num(1)?)?;
                let d = ChiSquared::new(df).map_err(|e| domain(f, e.to_string()))?;
                Value::numbers((0..n).map(|_| d.inverse_cdf(self.sampler.uniform_open())).collect())
            }
            "rbeta" => {
                let n = b.count(0)?;
                let a = positive(f, "shape1", b.num(1)?)?;
                let c = positive(f, "shape2", b.num(2)?)?;
                let d = Beta::new(a, c).map_err(|e| domain(f, e.to_string()))?;
                Value::numbers((0..n).map(|_| d.inverse_cdf(self.sampler.uniform_open())).collect())
            }
            "rexp" => {
                let n = b.count(0)?;
                let rate = positive(f, "rate", b.num_or(1, 1.0)?)?;
                Value::numbers((0..n).map(|_| -(1.0 - self.sampler.uniform()).ln() / rate).collect())
            }
            "pnorm" | "qnorm" | "dnorm" => {
                let (m, s) = (b.num_or(1, 0.0)?, b.num_or(2, 1.0)?);
                let d = Normal::new(m, s).map_err(|e| domain(f, e.to_string()))?;
                let lower = if f == "dnorm" { true } else { b.flag_or(3, true)? };
                self.dist_map(f, b, |x| d.cdf(x), |p| d.inverse_cdf(p), |x| d.pdf(x), lower)?
            }
            "pt" | "qt" => {
                let df = positive(f, "df", b.num(1)?)?;
                let d = StudentsT::new(0.0, 1.0, df).map_err(|e| domain(f, e.to_string()))?;
                let lower = b.flag_or(2, true)?;
                self.dist_map(f, b, |x| d.cdf(x), |p| d.inverse_cdf(p), |x| d.pdf(x), lower)?
            }
            "pchisq" | "qchisq" => {
                let df = positive(f, "df", b.num(1)?)?;
                let d = ChiSquared::new(df).map_err(|e| domain(f, e.to_string()))?;
                let lower = b.flag_or(2, true)?;
                self.dist_map(f, b, |x| d.cdf(x), |p| d.inverse_cdf(p), |x| d.pdf(x), lower)?
            }
            "pbinom" | "dbinom" => {
                let size = whole(f, "size", b.num(1)?)?;
                let p = level_check(f, b.num(2)?)?;
                let d = Binomial::new(p, size).map_err(|e| domain(f, e.to_string()))?;
                let lower = if f == "dbinom" { true } else { b.flag_or(3, true)? };
                let xs = b.nums(0)?;
                Value::numbers(
                    xs.into_iter()
                        .map(|x| {
                            if f == "dbinom" {
                                if x < 0.0 || x.fract() != 0.0 { 0.0 } else { d.pmf(x as u64) }
                            } else {
                                let c = if x < 0.0 { 0.0 } else { d.cdf(x.floor() as u64) };
                                if lower { c } else { 1.0 - c }
                            }
                        })
                        .collect(),
                )
            }
            "t.test" => {
                let level = b.num_or(3, 0.95)?;
                let x = b.nums(0)?;
                let r = match b.get(1) {
                    Some(y) => {
                        let y = numbers_of(f, y)?;
                        stats::t_two_sample(&x, &y, level, &format!("{} and {}", b.label(0), b.label(1)))
                    }
                    None => stats::t_one_sample(&x, b.num_or(2, 0.0)?, level, &b.label(0)),
                };
                Value::Test(Box::new(r.map_err(stat)?))
            }
            "binom.test" => {
                let k = whole(f, "x", b.num(0)?)?;
                let n = whole(f, "n", b.num(1)?)?;
                let p = b.num_or(2, 0.5)?;
                let level = b.num_or(3, 0.95)?;
                let name = format!("{} and {}", b.label(0), b.label(1));
                Value::Test(Box::new(stats::binom_exact(k, n, p, level, Some(&name)).map_err(stat)?))
            }
            "coef" => match b.req(0)? {
                Value::Test(r) if !r.coefficients.is_empty() => {
                    Value::Numbers(r.coefficients.iter().map(|c| c.estimate).collect())
                }
                other => return Err(domain(f, format!("needs an lm() result, got {}", other.type_name()))),
            },
            "RtoHTML" => match b.req(0)? {
                Value::Test(r) => Value::Text(htmlgen::render_stat_block(r)),
                other => return Err(domain(f, format!("needs a test result, got {}", other.type_name()))),
            },
            "moodle.table" => {
                let ncol = b.get(1).map(|_| b.count(1)).transpose()?.unwrap_or(htmlgen::DEFAULT_NCOL);
                match b.req(0)? {
                    Value::Table(t) => Value::Text(htmlgen::render_data_table(t)),
                    v => {
                        let data = v.to_column().ok_or_else(|| domain(f, "needs a vector or table"))?;
                        Value::Text(htmlgen::render_vector_table(&data, ncol).map_err(|e| domain(f, e.to_string()))?)
                    }
                }
            }
            "hist64" | "scatter64" => {
                let width = b.get(2).map(|_| b.count(2)).transpose()?.unwrap_or(640) as u32;
                let height = b.get(3).map(|_| b.count(3)).transpose()?.unwrap_or(480) as u32;
                let options = ChartOptions { width_px: width, height_px: height };
                let spec = if f == "hist64" {
                    ChartSpec::Histogram { data: b.nums(0)?, binwidth: b.num(1)? }
                } else {
                    ChartSpec::Scatter { x: b.nums(0)?, y: b.nums(1)? }
                };
                let png = htmlgen::render_chart(&spec, &options).map_err(|e| domain(f, e.to_string()))?;
                Value::Text(htmlgen::embed_png(&png).map_err(|e| domain(f, e.to_string()))?)
            }
            other => return Err(ExprError::UnknownFunction(other.to_string())),
        })
    }

    fn dist_map(
        &self,
        f: &str,
        b: &Bound,
        cdf: impl Fn(f64) -> f64,
        quantile: impl Fn(f64) -> f64,
        pdf: impl Fn(f64) -> f64,
        lower: bool,
    ) -> Result<Value, ExprError> {
        let xs = b.nums(0)?;
        let kind = f.as_bytes()[0];
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            out.push(match kind {
                b'p' => {
                    let c = cdf(x);
                    if lower { c } else { 1.0 - c }
                }
                b'q' => {
                    let p = level_check(f, x)?;
                    quantile(if lower { p } else { 1.0 - p })
                }
                _ => pdf(x),
            });
        }
        Ok(Value::numbers(out))
    }

    fn seq(&self, b: &Bound) -> Result<Value, ExprError> {
        let f = "seq";
        let only_from = b.get(1).is_none() && b.get(2).is_none() && b.get(3).is_none();
        if only_from {
            let n = b.num_or(0, 1.0)?;
            return binary(BinaryOp::Range, Value::Number(1.0), Value::Number(n));
        }
        let from = b.num_or(0, 1.0)?;
        if let Some(len) = b.get(3) {
            let len = len.as_f64().filter(|l| *l >= 0.0 && l.fract() == 0.0).ok_or_else(|| domain(f, "length.out must be a whole number"))? as usize;
            let to = match b.get(2) {
                Some(_) => from + b.num(2)? * (len.max(1) - 1) as f64,
                None => b.num_or(1, from + (len.max(1) - 1) as f64)?,
            };
            if len == 1 {
                return Ok(Value::Number(from));
            }
            let step = (to - from) / (len - 1) as f64;
            return Ok(Value::numbers((0..len).map(|i| from + step * i as f64).collect()));
        }
        let to = b.num_or(1, 1.0)?;
        let by = b.num_or(2, if to >= from { 1.0 } else { -1.0 })?;
        if by == 0.0 || (to - from) * by < 0.0 {
            return Err(domain(f, "wrong sign in `by`"));
        }
        let n = ((to - from) / by + 1e-10).floor() as usize + 1;
        if n > MAX_LEN {
            return Err(domain(f, "result too long"));
        }
        Ok(Value::numbers((0..n).map(|i| from + by * i as f64).collect()))
    }

    fn sample(&mut self, b: &Bound) -> Result<Value, ExprError> {
        let f = "sample";
        let x = b.req(0)?;
        // sample(n) draws from 1:n, as in R.
        let population = match x.as_f64() {
            Some(n) if !x.is_text() && n >= 1.0 && n.fract() == 0.0 && x.len() == 1 => {
                binary(BinaryOp::Range, Value::Number(1.0), Value::Number(n))?
            }
            _ => x.clone(),
        };
        let n = population.len();
        let size = match b.get(1) {
            Some(_) => b.count(1)?,
            None => n,
        };
        let replace = b.flag_or(2, false)?;
        let prob = match b.get(3) {
            Some(p) => {
                let p = numbers_of(f, p)?;
                if p.len() != n {
                    return Err(domain(f, format!("prob has length {}, population has {n}", p.len())));
                }
                if p.iter().any(|w| *w < 0.0) || p.iter().sum::<f64>() <= 0.0 {
                    return Err(domain(f, "prob must be nonnegative with a positive sum"));
                }
                Some(p)
            }
            None => None,
        };
        if n == 0 && size > 0 {
            return Err(domain(f, "cannot sample from an empty population"));
        }
        if !replace && size > n {
            return Err(domain(f, format!("cannot take a sample of {size} from {n} without replacement")));
        }
        let picks: Vec<usize> = match (&prob, replace) {
            (None, true) => (0..size).map(|_| self.sampler.below(n)).collect(),
            (None, false) => {
                let mut idx: Vec<usize> = (0..n).collect();
                for k in 0..size {
                    let j = k + self.sampler.below(n - k);
                    idx.swap(k, j);
                }
                idx.truncate(size);
                idx
            }
            (Some(p), true) => {
                let total: f64 = p.iter().sum();
                (0..size).map(|_| weighted_pick(p, total, self.sampler.uniform())).collect()
            }
            (Some(p), false) => {
                let mut w = p.clone();
                let mut out = Vec::with_capacity(size);
                for _ in 0..size {
                    let total: f64 = w.iter().sum();
                    if total <= 0.0 {
                        return Err(domain(f, "too few positive probabilities"));
                    }
                    let i = weighted_pick(&w, total, self.sampler.uniform());
                    out.push(i);
                    w[i] = 0.0;
                }
                out
            }
        };
        Ok(if population.is_text() {
            let t = texts_of(f, &population)?;
            Value::texts(picks.into_iter().map(|i| t[i].clone()).collect())
        } else {
            let v = numbers_of(f, &population)?;
            Value::numbers(picks.into_iter().map(|i| v[i]).collect())
        })
    }
}

fn weighted_pick(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}
