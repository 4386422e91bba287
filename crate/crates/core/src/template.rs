//! Quiz template documents and their instantiation into quiz instances.
//!
//! A template is JSON. Each story lists variables (evaluated in order under
//! the instance's random stream), question parts with an answer field each,
//! a hint and an answer text. Text fields interpolate `{{name}}`; a part's
//! answer field is inserted at its `@` mark, or appended when there is none.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloze::{self, builtin_mc_options, encode_mc, encode_nm, encode_sa, nm_digits_subquestion, parse_cloze};
use crate::expr::{self, derive_stream, parse_expr, Env, Expr, ExprError, Sampler, Value};
use crate::numfmt::{format_number, round_half_away};

pub const SCHEMA: &str = "quizforge-template-v1";
pub const DEFAULT_PREFIX: &str = "problem -";

fn default_prefix() -> String {
    DEFAULT_PREFIX.to_string()
}

fn default_count() -> u32 {
    20
}

fn default_true() -> bool {
    true
}

fn default_weight() -> f64 {
    1.0
}

fn default_points() -> u32 {
    1
}

fn default_partial() -> u32 {
    cloze::DEFAULT_PARTIAL_WEIGHT
}

fn is_default_prefix(s: &String) -> bool {
    s == DEFAULT_PREFIX
}

fn is_true(b: &bool) -> bool {
    *b
}

/// The template document as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub category: String,
    #[serde(default = "default_prefix", skip_serializing_if = "is_default_prefix")]
    pub quizname_prefix: String,
    #[serde(default = "default_count")]
    pub count: u32,
    /// Wrap question, hint and answer text in `<h5>`.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub wrap_h5: bool,
    pub stories: Vec<StoryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoryDoc {
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default)]
    pub variables: Vec<VariableDoc>,
    pub parts: Vec<PartDoc>,
    #[serde(default)]
    pub hint: String,
    #[serde(default)]
    pub answer_text: String,
    /// Placed after the wrapped question text, e.g. a data table.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub appendix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDoc {
    pub text: String,
    pub answer: AnswerDoc,
    #[serde(default)]
    pub newline: bool,
}

/// A number or an expression in source form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumOrExpr {
    Number(f64),
    Expr(String),
}

impl NumOrExpr {
    fn source(&self) -> String {
        match self {
            NumOrExpr::Number(x) => format_number(*x),
            NumOrExpr::Expr(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandDoc {
    /// Defaults to the answer's main target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub weight: u32,
    pub tolerance: NumOrExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum AnswerDoc {
    Numeric {
        target: String,
        /// Grade on rounding to this many digits instead of fixed tolerances.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ndigits: Option<NumOrExpr>,
        #[serde(default = "default_partial")]
        partial_weight: u32,
        /// Tolerance of the full-credit band (default 0).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<NumOrExpr>,
        /// Further partial-credit bands.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        bands: Vec<BandDoc>,
        #[serde(default = "default_points")]
        points: u32,
    },
    Choice {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        options: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        builtin: Option<i64>,
        /// 1-based option index or the option text.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correct: Option<String>,
        /// One weight per option, as an expression.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<String>,
        #[serde(default = "default_points")]
        points: u32,
    },
    Shortanswer {
        answers: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<u32>>,
        #[serde(default = "default_true")]
        caps_insensitive: bool,
        #[serde(default = "default_points")]
        points: u32,
    },
    Display {
        /// Inserted at the `@` mark.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<String>,
    },
}

/// One problem found while loading a template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("{}", join_issues(.0))]
    Invalid(Vec<Issue>),
}

fn join_issues(issues: &[Issue]) -> String {
    issues.iter().map(Issue::to_string).collect::<Vec<_>>().join("; ")
}

impl TemplateError {
    pub fn issues(&self) -> Vec<Issue> {
        match self {
            TemplateError::Json(m) => vec![Issue { path: String::new(), message: m.clone() }],
            TemplateError::Invalid(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("n must be ≥ 1")]
    ZeroCount,
    #[error("story {requested} does not exist (template has {available})")]
    NoSuchStory { requested: usize, available: usize },
    #[error("instance {index}: {location}: {message}")]
    Instance { index: u64, location: String, message: String },
}

/// Interpolated text: literal runs and `{{name}}` slots.
#[derive(Debug, Clone, PartialEq)]
struct Text(Vec<Piece>);

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Lit(String),
    Var(String),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '.' || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_')
}

impl Text {
    fn parse(s: &str) -> Text {
        let mut pieces = Vec::new();
        let mut lit = String::new();
        let mut rest = s;
        while let Some(i) = rest.find("{{") {
            let after = &rest[i + 2..];
            match after.find("}}") {
                Some(j) if is_ident(after[..j].trim()) => {
                    lit.push_str(&rest[..i]);
                    if !lit.is_empty() {
                        pieces.push(Piece::Lit(std::mem::take(&mut lit)));
                    }
                    pieces.push(Piece::Var(after[..j].trim().to_string()));
                    rest = &after[j + 2..];
                }
                _ => {
                    lit.push_str(&rest[..i + 2]);
                    rest = after;
                }
            }
        }
        lit.push_str(rest);
        if !lit.is_empty() {
            pieces.push(Piece::Lit(lit));
        }
        Text(pieces)
    }

    fn vars(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter_map(|p| match p {
            Piece::Var(v) => Some(v.as_str()),
            Piece::Lit(_) => None,
        })
    }

    fn render(&self, env: &Env) -> String {
        let mut out = String::new();
        for p in &self.0 {
            match p {
                Piece::Lit(s) => out.push_str(s),
                Piece::Var(v) => out.push_str(&env.get(v).map(Value::display).unwrap_or_default()),
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum NumericMode {
    Digits { ndigits: Expr, partial_weight: u32 },
    Bands { tolerance: Expr, bands: Vec<(Option<Expr>, u32, Expr)> },
}

#[derive(Debug, Clone)]
enum ChoiceOptions {
    Builtin(i64),
    List(Vec<Text>),
}

#[derive(Debug, Clone)]
enum ChoiceSelector {
    Correct(Expr),
    Weights(Expr),
}

#[derive(Debug, Clone)]
enum Answer {
    Numeric { target: Expr, mode: NumericMode, points: u32 },
    Choice { options: ChoiceOptions, selector: ChoiceSelector, points: u32 },
    ShortAnswer { answers: Vec<Text>, weights: Vec<u32>, caps_insensitive: bool, points: u32 },
    Display { value: Option<Expr> },
}

#[derive(Debug, Clone)]
struct Part {
    before: Text,
    /// Text after the `@` mark, if there is one.
    after: Option<Text>,
    newline: bool,
    answer: Answer,
}

#[derive(Debug, Clone)]
struct Story {
    weight: f64,
    variables: Vec<(String, Expr)>,
    parts: Vec<Part>,
    hint: Text,
    answer_text: Text,
    appendix: Text,
}

/// A validated template, ready to instantiate.
#[derive(Debug, Clone)]
pub struct QuizTemplate {
    doc: TemplateDoc,
    stories: Vec<Story>,
}

/// One rendered quiz: the five elements Moodle needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizInstance {
    pub qtxt: String,
    pub htxt: String,
    pub atxt: String,
    pub category: String,
    pub quizname: String,
}

/// An instance together with how it was produced.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub instance: QuizInstance,
    /// 1-based story number.
    pub story: usize,
    /// A full-credit response for every answer field, in order.
    pub answer_key: Vec<String>,
    pub variables: Env,
}

struct Loader {
    issues: Vec<Issue>,
}

impl Loader {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue { path: path.into(), message: message.into() });
    }

    fn expr(&mut self, path: &str, source: &str) -> Option<Expr> {
        match parse_expr(source) {
            Ok(e) => {
                let unknown = expr::unknown_functions(&e);
                if !unknown.is_empty() {
                    self.issue(path, format!("unknown function `{}`", unknown.join("`, `")));
                    return None;
                }
                Some(e)
            }
            Err(err) => {
                self.issue(path, err.to_string());
                None
            }
        }
    }

    /// Check that `e` only uses variables in `known`.
    fn uses(&mut self, path: &str, e: &Expr, known: &BTreeSet<String>) {
        for v in e.free_vars() {
            if !known.contains(&v) && !expr::CONSTANTS.contains(&v.as_str()) {
                self.issue(path, format!("undeclared variable `{v}`"));
            }
        }
    }

    fn text(&mut self, path: &str, s: &str, known: &BTreeSet<String>) -> Text {
        let t = Text::parse(s);
        for v in t.vars() {
            if !known.contains(v) {
                self.issue(path, format!("undeclared variable `{v}` in {{{{{v}}}}}"));
            }
        }
        t
    }

    fn story(&mut self, path: &str, doc: &StoryDoc) -> Option<Story> {
        if !(doc.weight > 0.0 && doc.weight.is_finite()) {
            self.issue(format!("{path}.weight"), "weight must be a positive number");
        }
        let all: Vec<&str> = doc.variables.iter().map(|v| v.name.as_str()).collect();
        let mut known = BTreeSet::new();
        let mut variables = Vec::new();
        for (i, v) in doc.variables.iter().enumerate() {
            let vpath = format!("{path}.variables[{i}]");
            if !is_ident(&v.name) {
                self.issue(format!("{vpath}.name"), format!("`{}` is not a valid variable name", v.name));
            }
            if known.contains(&v.name) {
                self.issue(format!("{vpath}.name"), format!("variable `{}` is declared twice", v.name));
            }
            if let Some(e) = self.expr(&format!("{vpath}.expr"), &v.expr) {
                for free in e.free_vars() {
                    if known.contains(&free) || expr::CONSTANTS.contains(&free.as_str()) {
                        continue;
                    }
                    if all.contains(&free.as_str()) {
                        self.issue(
                            format!("{vpath}.expr"),
                            format!("variable `{}` refers to `{free}`, which is declared later", v.name),
                        );
                    } else {
                        self.issue(
                            format!("{vpath}.expr"),
                            format!("variable `{}` refers to undeclared variable `{free}`", v.name),
                        );
                    }
                }
                variables.push((v.name.clone(), e));
            }
            known.insert(v.name.clone());
        }
        if doc.parts.is_empty() {
            self.issue(format!("{path}.parts"), "story needs at least one part");
        }
        let mut parts = Vec::new();
        for (i, p) in doc.parts.iter().enumerate() {
            let ppath = format!("{path}.parts[{i}]");
            let marks = p.text.matches('@').count();
            if marks > 1 {
                self.issue(format!("{ppath}.text"), format!("at most one `@` mark allowed, found {marks}"));
            }
            let (before, after) = match p.text.split_once('@') {
                Some((b, a)) => (b, Some(a)),
                None => (p.text.as_str(), None),
            };
            let before = self.text(&format!("{ppath}.text"), before, &known);
            let after = after.map(|a| self.text(&format!("{ppath}.text"), a, &known));
            if let Some(answer) = self.answer(&format!("{ppath}.answer"), &p.answer, &known) {
                parts.push(Part { before, after, newline: p.newline, answer });
            }
        }
        let hint = self.text(&format!("{path}.hint"), &doc.hint, &known);
        let answer_text = self.text(&format!("{path}.answer_text"), &doc.answer_text, &known);
        let appendix = self.text(&format!("{path}.appendix"), &doc.appendix, &known);
        Some(Story { weight: doc.weight, variables, parts, hint, answer_text, appendix })
    }

    fn checked(&mut self, path: &str, source: &str, known: &BTreeSet<String>) -> Option<Expr> {
        let e = self.expr(path, source)?;
        self.uses(path, &e, known);
        Some(e)
    }

    fn points(&mut self, path: &str, points: u32) {
        if points == 0 {
            self.issue(format!("{path}.points"), "points must be at least 1");
        }
    }

    fn weight(&mut self, path: &str, w: u32) {
        if w > 100 {
            self.issue(path, format!("weight {w} outside 0..=100"));
        }
    }

    fn answer(&mut self, path: &str, doc: &AnswerDoc, known: &BTreeSet<String>) -> Option<Answer> {
        match doc {
            AnswerDoc::Numeric { target, ndigits, partial_weight, tolerance, bands, points } => {
                self.points(path, *points);
                let target = self.checked(&format!("{path}.target"), target, known);
                let mode = match (ndigits, tolerance, bands.is_empty()) {
                    (Some(nd), None, true) => {
                        self.weight(&format!("{path}.partial_weight"), *partial_weight);
                        let nd = self.checked(&format!("{path}.ndigits"), &nd.source(), known)?;
                        NumericMode::Digits { ndigits: nd, partial_weight: *partial_weight }
                    }
                    (Some(_), _, _) => {
                        self.issue(path, "`ndigits` cannot be combined with `tolerance` or `bands`");
                        return None;
                    }
                    (None, tol, _) => {
                        let src = tol.as_ref().map_or("0".to_string(), NumOrExpr::source);
                        let tolerance = self.checked(&format!("{path}.tolerance"), &src, known)?;
                        let mut out = Vec::new();
                        for (i, b) in bands.iter().enumerate() {
                            let bpath = format!("{path}.bands[{i}]");
                            self.weight(&format!("{bpath}.weight"), b.weight);
                            let t = match &b.target {
                                Some(t) => Some(self.checked(&format!("{bpath}.target"), t, known)?),
                                None => None,
                            };
                            let tol = self.checked(&format!("{bpath}.tolerance"), &b.tolerance.source(), known)?;
                            out.push((t, b.weight, tol));
                        }
                        NumericMode::Bands { tolerance, bands: out }
                    }
                };
                Some(Answer::Numeric { target: target?, mode, points: *points })
            }
            AnswerDoc::Choice { options, builtin, correct, weights, points } => {
                self.points(path, *points);
                let options = match (options, builtin) {
                    (Some(list), None) => {
                        if list.is_empty() {
                            self.issue(format!("{path}.options"), "options must not be empty");
                        }
                        let texts = list
                            .iter()
                            .enumerate()
                            .map(|(i, o)| {
                                if o.trim().is_empty() {
                                    self.issue(format!("{path}.options[{i}]"), "option text is empty");
                                }
                                self.text(&format!("{path}.options[{i}]"), o, known)
                            })
                            .collect();
                        ChoiceOptions::List(texts)
                    }
                    (None, Some(k)) => {
                        if let Err(e) = builtin_mc_options(*k) {
                            self.issue(format!("{path}.builtin"), e.to_string());
                        }
                        ChoiceOptions::Builtin(*k)
                    }
                    _ => {
                        self.issue(path, "give exactly one of `options` and `builtin`");
                        return None;
                    }
                };
                let selector = match (correct, weights) {
                    (Some(c), None) => ChoiceSelector::Correct(self.checked(&format!("{path}.correct"), c, known)?),
                    (None, Some(w)) => ChoiceSelector::Weights(self.checked(&format!("{path}.weights"), w, known)?),
                    _ => {
                        self.issue(path, "give exactly one of `correct` and `weights`");
                        return None;
                    }
                };
                Some(Answer::Choice { options, selector, points: *points })
            }
            AnswerDoc::Shortanswer { answers, weights, caps_insensitive, points } => {
                self.points(path, *points);
                if answers.is_empty() {
                    self.issue(format!("{path}.answers"), "at least one answer is required");
                }
                let weights = weights.clone().unwrap_or_else(|| vec![100; answers.len()]);
                if weights.len() != answers.len() {
                    self.issue(
                        format!("{path}.weights"),
                        format!("{} weights for {} answers", weights.len(), answers.len()),
                    );
                }
                for (i, w) in weights.iter().enumerate() {
                    self.weight(&format!("{path}.weights[{i}]"), *w);
                }
                if !answers.is_empty() && !weights.contains(&100) {
                    self.issue(format!("{path}.weights"), "one answer must be worth 100");
                }
                let texts = answers
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        if a.trim().is_empty() {
                            self.issue(format!("{path}.answers[{i}]"), "answer text is empty");
                        }
                        self.text(&format!("{path}.answers[{i}]"), a, known)
                    })
                    .collect();
                Some(Answer::ShortAnswer { answers: texts, weights, caps_insensitive: *caps_insensitive, points: *points })
            }
            AnswerDoc::Display { value } => {
                let value = match value {
                    Some(v) => Some(self.checked(&format!("{path}.value"), v, known)?),
                    None => None,
                };
                Some(Answer::Display { value })
            }
        }
    }
}

const REQUIRED: &[&str] = &["name", "category", "stories"];

/// Parse and validate a template document.
pub fn load_template(document: &str) -> Result<QuizTemplate, TemplateError> {
    let raw: serde_json::Value = serde_json::from_str(document).map_err(|e| TemplateError::Json(e.to_string()))?;
    load_template_value(raw)
}

/// [`load_template`] for an already parsed JSON value.
pub fn load_template_value(raw: serde_json::Value) -> Result<QuizTemplate, TemplateError> {
    let Some(obj) = raw.as_object() else {
        return Err(TemplateError::Invalid(vec![Issue {
            path: String::new(),
            message: "template must be a JSON object".into(),
        }]));
    };
    let missing: Vec<Issue> = REQUIRED
        .iter()
        .filter(|f| !obj.contains_key(**f))
        .map(|f| Issue { path: (*f).to_string(), message: "missing field".into() })
        .collect();
    if !missing.is_empty() {
        return Err(TemplateError::Invalid(missing));
    }
    let doc: TemplateDoc = serde_path_to_error::deserialize(raw).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        TemplateError::Invalid(vec![Issue { path, message: e.into_inner().to_string() }])
    })?;
    QuizTemplate::from_doc(doc)
}

impl QuizTemplate {
    pub fn from_doc(doc: TemplateDoc) -> Result<Self, TemplateError> {
        let mut l = Loader { issues: Vec::new() };
        if let Some(s) = &doc.schema {
            if s != SCHEMA {
                l.issue("schema", format!("unsupported schema `{s}`, expected `{SCHEMA}`"));
            }
        }
        if doc.name.trim().is_empty() {
            l.issue("name", "name must not be empty");
        }
        if doc.name.contains(['/', '\\']) || doc.name.starts_with('.') {
            l.issue("name", "name must be usable as a file name");
        }
        if doc.category.split('/').all(|p| p.trim().is_empty()) {
            l.issue("category", "category must not be empty");
        }
        if doc.count == 0 {
            l.issue("count", "count must be at least 1");
        }
        if doc.stories.is_empty() {
            l.issue("stories", "template needs at least one story");
        }
        let stories: Vec<Story> =
            doc.stories.iter().enumerate().filter_map(|(i, s)| l.story(&format!("stories[{i}]"), s)).collect();
        if l.issues.is_empty() {
            Ok(QuizTemplate { doc, stories })
        } else {
            Err(TemplateError::Invalid(l.issues))
        }
    }

    pub fn doc(&self) -> &TemplateDoc {
        &self.doc
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn story_count(&self) -> usize {
        self.stories.len()
    }

    /// Category shared by every instance of `story` (1-based).
    pub fn story_category(&self, story: usize) -> String {
        if self.stories.len() > 1 {
            format!("{} : Story : {story}", self.doc.category)
        } else {
            self.doc.category.clone()
        }
    }
}

fn wrap(doc: &TemplateDoc, s: String) -> String {
    if doc.wrap_h5 && !s.is_empty() {
        format!("<h5>{s}</h5>")
    } else {
        s
    }
}

struct Ctx<'a> {
    index: u64,
    env: &'a Env,
}

impl Ctx<'_> {
    fn fail(&self, location: &str, message: impl fmt::Display) -> GenerateError {
        GenerateError::Instance { index: self.index, location: location.to_string(), message: message.to_string() }
    }

    fn eval(&self, location: &str, e: &Expr, sampler: &mut Sampler) -> Result<Value, GenerateError> {
        expr::eval(e, self.env, sampler).map_err(|err: ExprError| self.fail(location, err))
    }

    fn number(&self, location: &str, e: &Expr, sampler: &mut Sampler) -> Result<f64, GenerateError> {
        let v = self.eval(location, e, sampler)?;
        v.as_f64().ok_or_else(|| self.fail(location, format!("expected a single number, got {}", v.type_name())))
    }

    /// Build the answer field; returns the CLOZE text and a full-credit response.
    fn answer(
        &self,
        location: &str,
        a: &Answer,
        sampler: &mut Sampler,
    ) -> Result<Option<(String, Option<String>)>, GenerateError> {
        let cloze_err = |e: cloze::ClozeError| self.fail(location, e);
        Ok(Some(match a {
            Answer::Numeric { target, mode, points } => {
                let t = self.number(&format!("{location}.target"), target, sampler)?;
                match mode {
                    NumericMode::Digits { ndigits, partial_weight } => {
                        let nd = self.number(&format!("{location}.ndigits"), ndigits, sampler)?;
                        if nd.fract() != 0.0 {
                            return Err(self.fail(location, format!("ndigits must be a whole number, got {nd}")));
                        }
                        let sub = nm_digits_subquestion(t, nd as i64, *partial_weight, *points).map_err(cloze_err)?;
                        (sub.encode().into_string(), Some(format_number(round_half_away(t, nd as i32))))
                    }
                    NumericMode::Bands { tolerance, bands } => {
                        let mut targets = vec![t];
                        let mut weights = vec![100];
                        let mut tols = vec![self.number(&format!("{location}.tolerance"), tolerance, sampler)?];
                        for (i, (bt, w, tol)) in bands.iter().enumerate() {
                            let bl = format!("{location}.bands[{i}]");
                            targets.push(match bt {
                                Some(e) => self.number(&format!("{bl}.target"), e, sampler)?,
                                None => t,
                            });
                            weights.push(*w);
                            tols.push(self.number(&format!("{bl}.tolerance"), tol, sampler)?);
                        }
                        let c = encode_nm(&targets, &weights, &tols, *points).map_err(cloze_err)?;
                        (c.into_string(), Some(format_number(t)))
                    }
                }
            }
            Answer::Choice { options, selector, points } => {
                let opts: Vec<String> = match options {
                    ChoiceOptions::Builtin(k) => {
                        builtin_mc_options(*k).map_err(cloze_err)?.into_iter().map(str::to_string).collect()
                    }
                    ChoiceOptions::List(list) => list.iter().map(|t| t.render(self.env)).collect(),
                };
                let weights: Vec<u32> = match selector {
                    ChoiceSelector::Correct(e) => {
                        let v = self.eval(&format!("{location}.correct"), e, sampler)?;
                        let pick = if let Some(text) = v.as_text() {
                            opts.iter().position(|o| o == text).ok_or_else(|| {
                                self.fail(location, format!("correct option `{text}` is not among the options"))
                            })?
                        } else {
                            let k = v.as_f64().ok_or_else(|| {
                                self.fail(location, format!("`correct` must be an index or option text, got {}", v.type_name()))
                            })?;
                            if k.fract() != 0.0 || k < 1.0 || k > opts.len() as f64 {
                                return Err(self.fail(location, format!("correct index {k} outside 1..={}", opts.len())));
                            }
                            k as usize - 1
                        };
                        (0..opts.len()).map(|i| if i == pick { 100 } else { 0 }).collect()
                    }
                    ChoiceSelector::Weights(e) => {
                        let v = self.eval(&format!("{location}.weights"), e, sampler)?;
                        let w = v.to_numbers().ok_or_else(|| self.fail(location, "weights must be numbers"))?;
                        w.iter()
                            .map(|x| {
                                if x.fract() == 0.0 && (0.0..=100.0).contains(x) {
                                    Ok(*x as u32)
                                } else {
                                    Err(self.fail(location, format!("weight {x} is not a whole number in 0..=100")))
                                }
                            })
                            .collect::<Result<_, _>>()?
                    }
                };
                let (c, correct) = encode_mc(&opts, &weights, *points).map_err(cloze_err)?;
                (c.into_string(), Some(correct))
            }
            Answer::ShortAnswer { answers, weights, caps_insensitive, points } => {
                let texts: Vec<String> = answers.iter().map(|t| t.render(self.env)).collect();
                let c = encode_sa(&texts, weights, *caps_insensitive, *points).map_err(cloze_err)?;
                let best = weights.iter().position(|w| *w == 100).expect("validated");
                (c.into_string(), Some(texts[best].clone()))
            }
            Answer::Display { value } => match value {
                Some(e) => (self.eval(&format!("{location}.value"), e, sampler)?.display(), None),
                None => return Ok(None),
            },
        }))
    }
}

fn pick_story(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Render instance `index` (0-based) under `seed`. `story` (1-based)
/// forces a story; the selection draw is consumed either way.
pub fn instantiate_detailed(
    t: &QuizTemplate,
    seed: u64,
    index: u64,
    story: Option<usize>,
) -> Result<Rendered, GenerateError> {
    let n = t.stories.len();
    if let Some(k) = story {
        if k == 0 || k > n {
            return Err(GenerateError::NoSuchStory { requested: k, available: n });
        }
    }
    let mut sampler = derive_stream(seed, index).sampler();
    let drawn = if n > 1 {
        let weights: Vec<f64> = t.stories.iter().map(|s| s.weight).collect();
        pick_story(&weights, sampler.uniform())
    } else {
        0
    };
    let k = story.map_or(drawn, |k| k - 1);
    let s = &t.stories[k];
    let mut env = Env::new();
    for (name, e) in &s.variables {
        let v = expr::eval(e, &env, &mut sampler).map_err(|err| GenerateError::Instance {
            index,
            location: format!("variable `{name}`"),
            message: err.to_string(),
        })?;
        env.insert(name.clone(), v);
    }
    let ctx = Ctx { index, env: &env };
    let mut qtxt = String::new();
    let mut key = Vec::new();
    for (i, p) in s.parts.iter().enumerate() {
        let location = format!("story {} part {}", k + 1, i + 1);
        let field = ctx.answer(&format!("{location} answer"), &p.answer, &mut sampler)?;
        if p.newline {
            qtxt.push_str("<p>");
        }
        qtxt.push_str(&p.before.render(&env));
        if let Some((text, correct)) = field {
            qtxt.push_str(&text);
            key.extend(correct);
        }
        if let Some(after) = &p.after {
            qtxt.push_str(&after.render(&env));
        }
    }
    let parsed = parse_cloze(&qtxt);
    if let Some(d) = parsed.diagnostics.first() {
        return Err(ctx.fail("question text", format!("invalid embedded answer: {d}")));
    }
    if parsed.subquestions.len() != key.len() {
        return Err(ctx.fail(
            "question text",
            format!("found {} answer fields, expected {}", parsed.subquestions.len(), key.len()),
        ));
    }
    let mut qtxt = wrap(&t.doc, qtxt);
    qtxt.push_str(&s.appendix.render(&env));
    let instance = QuizInstance {
        qtxt,
        htxt: wrap(&t.doc, s.hint.render(&env)),
        atxt: wrap(&t.doc, s.answer_text.render(&env)),
        category: t.story_category(k + 1),
        quizname: format!("{} {}", t.doc.quizname_prefix, index + 1),
    };
    Ok(Rendered { instance, story: k + 1, answer_key: key, variables: env })
}

pub fn instantiate(t: &QuizTemplate, seed: u64, index: u64, story: Option<usize>) -> Result<QuizInstance, GenerateError> {
    instantiate_detailed(t, seed, index, story).map(|r| r.instance)
}

/// Instances for indices `0..n`.
pub fn instantiate_batch(
    t: &QuizTemplate,
    seed: u64,
    n: u64,
    story: Option<usize>,
) -> Result<Vec<QuizInstance>, GenerateError> {
    if n == 0 {
        return Err(GenerateError::ZeroCount);
    }
    (0..n).map(|i| instantiate(t, seed, i, story)).collect()
}

/// Instantiate every story once under `seed`, so failures that only show at
/// evaluation time (bad data for a distribution, malformed answer fields)
/// surface when a template is checked.
pub fn trial_issues(t: &QuizTemplate, seed: u64) -> Vec<Issue> {
    (1..=t.story_count())
        .filter_map(|k| instantiate(t, seed, 0, Some(k)).err().map(|e| (k, e)))
        .map(|(k, e)| Issue { path: format!("stories[{}]", k - 1), message: e.to_string() })
        .collect()
}

/// Index pairs of instances with identical question text.
pub fn duplicate_questions(instances: &[QuizInstance]) -> Vec<(usize, usize)> {
    let mut seen: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut out = Vec::new();
    for (i, q) in instances.iter().enumerate() {
        if let Some(j) = seen.insert(&q.qtxt, i) {
            out.push((j, i));
        }
    }
    out
}
