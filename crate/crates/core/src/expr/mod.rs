//! The randomization expression language: a small, side-effect free
//! R-lookalike with vectors, distribution sampling, summary statistics,
//! classical tests and numeric integration.
//!
//! ```
//! use quizforge_core::expr::{derive_stream, eval_str, Env};
//!
//! let mut sampler = derive_stream(42, 0).sampler();
//! let v = eval_str("round(integrate(x*exp(x), 0.5, 1.5), 2)", &Env::new(), &mut sampler).unwrap();
//! assert_eq!(v.as_f64(), Some(3.07));
//! ```

mod eval;
mod parser;
pub mod quad;
pub mod rng;
pub mod stats;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::numfmt::format_number;
use crate::table::{ColumnData, DataTable};

pub use eval::{eval, eval_str, BUILTINS};
pub(crate) use eval::unknown_functions;
pub use parser::{parse_expr, Arg, BinaryOp, Expr, UnaryOp, CONSTANTS};
pub use rng::{derive_stream, RngStream, Sampler};
pub use stats::{stat_test, StatResult, TestInput, TestKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{func}: {message}")]
    Arity { func: String, message: String },
    #[error("{func}: {message}")]
    Domain { func: String, message: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("non-finite result in {0}")]
    NonFinite(String),
    #[error("integrate: {0}")]
    Integrate(String),
}

/// Runtime value. Length-1 vectors are represented as scalars.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    Bool(bool),
    Numbers(Vec<f64>),
    Texts(Vec<String>),
    Table(DataTable),
    Test(Box<StatResult>),
}

impl Value {
    pub fn numbers(mut v: Vec<f64>) -> Value {
        if v.len() == 1 {
            Value::Number(v.pop().expect("len 1"))
        } else {
            Value::Numbers(v)
        }
    }

    pub fn texts(mut v: Vec<String>) -> Value {
        if v.len() == 1 {
            Value::Text(v.pop().expect("len 1"))
        } else {
            Value::Texts(v)
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Text(_) => "text",
            Value::Bool(_) => "boolean",
            Value::Numbers(_) => "numeric vector",
            Value::Texts(_) => "text vector",
            Value::Table(_) => "table",
            Value::Test(_) => "test result",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Value::Numbers(v) => v.len(),
            Value::Texts(v) => v.len(),
            Value::Table(t) => t.ncols(),
            _ => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scalar numeric view (numbers, booleans, length-1 vectors).
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Numbers(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(t) => Some(t),
            Value::Texts(v) if v.len() == 1 => Some(&v[0]),
            _ => None,
        }
    }

    /// Numeric vector view; text is a type error.
    pub fn to_numbers(&self) -> Option<Vec<f64>> {
        match self {
            Value::Number(x) => Some(vec![*x]),
            Value::Bool(b) => Some(vec![if *b { 1.0 } else { 0.0 }]),
            Value::Numbers(v) => Some(v.clone()),
            _ => None,
        }
    }

    /// Text vector view; numbers are formatted canonically.
    pub fn to_texts(&self) -> Option<Vec<String>> {
        match self {
            Value::Number(x) => Some(vec![format_number(*x)]),
            Value::Bool(b) => Some(vec![bool_text(*b).to_string()]),
            Value::Numbers(v) => Some(v.iter().map(|x| format_number(*x)).collect()),
            Value::Text(t) => Some(vec![t.clone()]),
            Value::Texts(v) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn is_text(&self) -> bool {
        matches!(self, Value::Text(_) | Value::Texts(_))
    }

    /// Column data for table rendering.
    pub fn to_column(&self) -> Option<ColumnData> {
        match self {
            Value::Text(_) | Value::Texts(_) => self.to_texts().map(ColumnData::Text),
            _ => self.to_numbers().map(ColumnData::Numeric),
        }
    }

    /// Text inserted for `{{name}}`: numbers canonical, vectors joined with
    /// `", "`, tables and test results as HTML.
    pub fn display(&self) -> String {
        match self {
            Value::Table(t) => crate::htmlgen::render_data_table(t),
            Value::Test(r) => crate::htmlgen::render_stat_block(r),
            other => other.to_texts().unwrap_or_default().join(", "),
        }
    }
}

fn bool_text(b: bool) -> &'static str {
    if b {
        "TRUE"
    } else {
        "FALSE"
    }
}

/// Variable bindings, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    vars: BTreeMap<String, Value>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Value) {
        self.vars.insert(name.into(), value);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.vars.iter()
    }
}
