//! Moodle embedded-answer (CLOZE) subquestions: encoders, a canonicalizing
//! parser and a grader.
//!
//! Wire syntax: `{points:KIND:answer~answer~...}` where an answer is
//! `%weight%body` (or `=body` for full credit), NM bodies are `value:tolerance`
//! and an optional `#feedback` tail is preserved. The characters `}` `~` `#`
//! `%` are backslash-escaped inside answer text.
//!
//! Two conventions go beyond Moodle's own importer:
//!
//! * an SA/SAC answer without a weight prefix is worth 100%, so the compact
//!   `{1:SA:*correlation*coefficient*}` form round-trips; NM/MC answers
//!   without a prefix stay at 0% as in Moodle;
//! * grading awards the best matching answer, not the first one.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::{format_number, parse_number, round_half_away};

/// Default weight of the neighbouring-precision bands built by
/// [`encode_nm_digits`].
pub const DEFAULT_PARTIAL_WEIGHT: u32 = 80;

const ESCAPED: [char; 4] = ['}', '~', '#', '%'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClozeError {
    #[error("answer lists differ in length ({0})")]
    LengthMismatch(String),
    #[error("no answer carries weight 100")]
    NoFullCredit,
    #[error("weight {0} is outside 0..=100")]
    WeightOutOfRange(i64),
    #[error("tolerance {0} must be a finite number >= 0")]
    BadTolerance(String),
    #[error("target {0} is not a finite number")]
    BadTarget(String),
    #[error("answer text is empty")]
    EmptyText,
    #[error("at least one answer is required")]
    NoAnswers,
    #[error("points must be a positive integer")]
    BadPoints,
    #[error("ndigits must be >= 0, got {0}")]
    NegativeDigits(i64),
    #[error("built-in option set {0} does not exist (expected 1..=11)")]
    UnknownOptionSet(i64),
    #[error("unbalanced braces: group opened at offset {offset} is never closed")]
    Unbalanced { offset: usize },
    #[error("unknown subquestion kind `{kind}` at offset {offset}")]
    UnknownKind { kind: String, offset: usize },
    #[error("malformed weight `{text}` at offset {offset}")]
    MalformedWeight { text: String, offset: usize },
    #[error("malformed number `{text}` at offset {offset}")]
    MalformedNumber { text: String, offset: usize },
    #[error("invalid subquestion at offset {offset}: {reason}")]
    Invalid { reason: String, offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "NM")]
    Numerical,
    #[serde(rename = "MC")]
    MultiChoice,
    #[serde(rename = "SA")]
    ShortAnswer,
    #[serde(rename = "SAC")]
    ShortAnswerCase,
}

impl Kind {
    pub fn token(self) -> &'static str {
        match self {
            Kind::Numerical => "NM",
            Kind::MultiChoice => "MC",
            Kind::ShortAnswer => "SA",
            Kind::ShortAnswerCase => "SAC",
        }
    }

    fn from_token(token: &str) -> Option<Kind> {
        Some(match token {
            "NM" | "NUMERICAL" => Kind::Numerical,
            "MC" | "MULTICHOICE" => Kind::MultiChoice,
            "SA" | "SHORTANSWER" | "MW" => Kind::ShortAnswer,
            "SAC" | "SHORTANSWER_C" | "MWC" => Kind::ShortAnswerCase,
            _ => return None,
        })
    }

    fn is_text(self) -> bool {
        !matches!(self, Kind::Numerical)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub weight: u32,
    pub target: Target,
    /// Only meaningful for NM answers; zero otherwise.
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
}

impl Answer {
    pub fn numeric(weight: u32, target: f64, tolerance: f64) -> Self {
        Answer { weight, target: Target::Number(target), tolerance, feedback: None }
    }

    pub fn text(weight: u32, text: impl Into<String>) -> Self {
        Answer { weight, target: Target::Text(text.into()), tolerance: 0.0, feedback: None }
    }
}

/// One CLOZE answer field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubQuestion {
    kind: Kind,
    points: u32,
    answers: Vec<Answer>,
}

impl SubQuestion {
    pub fn new(kind: Kind, points: u32, answers: Vec<Answer>) -> Result<Self, ClozeError> {
        if points == 0 {
            return Err(ClozeError::BadPoints);
        }
        if answers.is_empty() {
            return Err(ClozeError::NoAnswers);
        }
        for a in &answers {
            if a.weight > 100 {
                return Err(ClozeError::WeightOutOfRange(a.weight as i64));
            }
            match (&a.target, kind.is_text()) {
                (Target::Number(x), false) => {
                    if !x.is_finite() {
                        return Err(ClozeError::BadTarget(x.to_string()));
                    }
                    if !(a.tolerance.is_finite() && a.tolerance >= 0.0) {
                        return Err(ClozeError::BadTolerance(a.tolerance.to_string()));
                    }
                }
                (Target::Text(t), true) => {
                    if t.is_empty() {
                        return Err(ClozeError::EmptyText);
                    }
                    if a.tolerance != 0.0 {
                        return Err(ClozeError::BadTolerance(a.tolerance.to_string()));
                    }
                }
                (Target::Number(x), true) => {
                    return Err(ClozeError::BadTarget(format!("{x} (text expected for {kind})")))
                }
                (Target::Text(t), false) => return Err(ClozeError::BadTarget(t.clone())),
            }
        }
        if !answers.iter().any(|a| a.weight == 100) {
            return Err(ClozeError::NoFullCredit);
        }
        Ok(SubQuestion { kind, points, answers })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn points(&self) -> u32 {
        self.points
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    /// Canonical wire form.
    pub fn encode(&self) -> ClozeString {
        let mut out = format!("{{{}:{}:", self.points, self.kind);
        for (i, a) in self.answers.iter().enumerate() {
            if i > 0 || self.kind == Kind::MultiChoice {
                out.push('~');
            }
            match &a.target {
                Target::Number(x) => {
                    out.push_str(&format!(
                        "%{}%{}:{}",
                        a.weight,
                        format_number(*x),
                        format_number(a.tolerance)
                    ));
                }
                Target::Text(t) => {
                    let body = escape(t);
                    let compact = self.kind != Kind::MultiChoice
                        && a.weight == 100
                        && !body.starts_with('=');
                    if !compact {
                        out.push_str(&format!("%{}%", a.weight));
                    }
                    out.push_str(&body);
                }
            }
            if let Some(fb) = &a.feedback {
                out.push('#');
                out.push_str(&escape(fb));
            }
        }
        out.push('}');
        ClozeString(out)
    }

    /// A response that earns full credit: the first 100% answer, with SA
    /// wildcards turned back into single spaces.
    pub fn full_credit_response(&self) -> String {
        let best = self.answers.iter().find(|a| a.weight == 100).expect("invariant");
        match &best.target {
            Target::Number(x) => format_number(*x),
            Target::Text(t) if self.kind == Kind::MultiChoice => t.clone(),
            Target::Text(t) => t.split('*').filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" "),
        }
    }
}

/// Text of a single `{...}` group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClozeString(String);

impl ClozeString {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn parse(&self) -> Result<SubQuestion, ClozeError> {
        parse_group(&self.0, 0)
    }
}

impl fmt::Display for ClozeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ClozeString {
    type Err = ClozeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sub = parse_group(s, 0)?;
        Ok(sub.encode())
    }
}

fn check_weights(weights: &[u32]) -> Result<(), ClozeError> {
    if let Some(w) = weights.iter().find(|w| **w > 100) {
        return Err(ClozeError::WeightOutOfRange(*w as i64));
    }
    if !weights.contains(&100) {
        return Err(ClozeError::NoFullCredit);
    }
    Ok(())
}

/// Broadcast length-1 lists against the longest one.
fn broadcast_len(lens: &[(&str, usize)]) -> Result<usize, ClozeError> {
    let n = lens.iter().map(|(_, l)| *l).max().unwrap_or(0);
    if n == 0 || lens.iter().any(|(_, l)| *l == 0) {
        return Err(ClozeError::NoAnswers);
    }
    if lens.iter().any(|(_, l)| *l != 1 && *l != n) {
        let detail = lens.iter().map(|(name, l)| format!("{name}={l}")).collect::<Vec<_>>();
        return Err(ClozeError::LengthMismatch(detail.join(", ")));
    }
    Ok(n)
}

/// Numerical subquestion. Length-1 lists broadcast against the others.
pub fn encode_nm(
    targets: &[f64],
    weights: &[u32],
    tolerances: &[f64],
    points: u32,
) -> Result<ClozeString, ClozeError> {
    let n = broadcast_len(&[
        ("targets", targets.len()),
        ("weights", weights.len()),
        ("tolerances", tolerances.len()),
    ])?;
    check_weights(weights)?;
    let pick = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
    let answers = (0..n)
        .map(|i| {
            let w = if weights.len() == 1 { weights[0] } else { weights[i] };
            Answer::numeric(w, pick(targets, i), pick(tolerances, i))
        })
        .collect();
    Ok(SubQuestion::new(Kind::Numerical, points, answers)?.encode())
}

/// Numerical subquestion graded on rounding: the target rounded to `ndigits`
/// is worth 100%, roundings to one digit fewer or more are worth 80%.
pub fn encode_nm_digits(target: f64, ndigits: i64, points: u32) -> Result<ClozeString, ClozeError> {
    Ok(nm_digits_subquestion(target, ndigits, DEFAULT_PARTIAL_WEIGHT, points)?.encode())
}

pub fn encode_nm_digits_weighted(
    target: f64,
    ndigits: i64,
    partial_weight: u32,
    points: u32,
) -> Result<ClozeString, ClozeError> {
    Ok(nm_digits_subquestion(target, ndigits, partial_weight, points)?.encode())
}

/// Band list behind [`encode_nm_digits`].
pub fn nm_digits_subquestion(
    target: f64,
    ndigits: i64,
    partial_weight: u32,
    points: u32,
) -> Result<SubQuestion, ClozeError> {
    if ndigits < 0 {
        return Err(ClozeError::NegativeDigits(ndigits));
    }
    if partial_weight > 100 {
        return Err(ClozeError::WeightOutOfRange(partial_weight as i64));
    }
    if !target.is_finite() {
        return Err(ClozeError::BadTarget(target.to_string()));
    }
    let band = |digits: i64| {
        let d = digits as i32;
        let value = round_half_away(target, d);
        let tolerance = 0.5 * 10f64.powi(-d - 1);
        (value, tolerance)
    };
    let mut answers = vec![{
        let (v, t) = band(ndigits);
        Answer::numeric(100, v, t)
    }];
    let mut neighbours = vec![ndigits + 1];
    if ndigits >= 1 {
        neighbours.push(ndigits - 1);
    }
    for digits in neighbours {
        let (v, t) = band(digits);
        if answers.iter().any(|a| a.target == Target::Number(v)) {
            continue;
        }
        answers.push(Answer::numeric(partial_weight, v, t));
    }
    SubQuestion::new(Kind::Numerical, points, answers)
}

/// Multiple-choice subquestion plus the text of the best option.
pub fn encode_mc<S: AsRef<str>>(
    options: &[S],
    weights: &[u32],
    points: u32,
) -> Result<(ClozeString, String), ClozeError> {
    if options.is_empty() {
        return Err(ClozeError::NoAnswers);
    }
    if options.len() != weights.len() {
        return Err(ClozeError::LengthMismatch(format!(
            "options={}, weights={}",
            options.len(),
            weights.len()
        )));
    }
    check_weights(weights)?;
    let answers: Vec<Answer> = options
        .iter()
        .zip(weights)
        .map(|(o, w)| Answer::text(*w, o.as_ref()))
        .collect();
    let correct = answers
        .iter()
        .max_by_key(|a| a.weight)
        .map(|a| match &a.target {
            Target::Text(t) => t.clone(),
            Target::Number(_) => unreachable!(),
        })
        .unwrap_or_default();
    let sub = SubQuestion::new(Kind::MultiChoice, points, answers)?;
    Ok((sub.encode(), correct))
}

/// The eleven predefined option lists, 1-based.
pub fn builtin_mc_options(index: i64) -> Result<Vec<&'static str>, ClozeError> {
    let set: &[&str] = match index {
        1 => &["lower", "not equal to", "higher", "can't tell"],
        2 => &["lower", "not equal to", "higher"],
        3 => &["is statistically significant", "is not statistically significant"],
        4 => &[
            "is statistically significant",
            "is not statistically significant",
            "can't tell",
        ],
        5 => &["is", "is not"],
        6 => &["Male", "Female"],
        7 => &["true", "false"],
        8 => &["has", "does not have"],
        9 => &["\\(\\ne\\)", "\\(<\\)", "\\(>\\)", "can't tell"],
        10 => &["\\(\\ne\\)", "\\(<\\)", "\\(>\\)"],
        11 => &["\\(\\mu\\)", "\\(\\pi\\)", "\\(\\sigma\\)", "\\(\\lambda\\)", "\\(\\rho\\)", "other"],
        _ => return Err(ClozeError::UnknownOptionSet(index)),
    };
    Ok(set.to_vec())
}

/// Short-answer subquestion. Internal whitespace runs become `*` wildcards
/// and every text is wrapped in `*...*`.
pub fn encode_sa<S: AsRef<str>>(
    texts: &[S],
    weights: &[u32],
    caps_insensitive: bool,
    points: u32,
) -> Result<ClozeString, ClozeError> {
    let n = broadcast_len(&[("texts", texts.len()), ("weights", weights.len())])?;
    check_weights(weights)?;
    let mut answers = Vec::with_capacity(n);
    for i in 0..n {
        let text = if texts.len() == 1 { texts[0].as_ref() } else { texts[i].as_ref() };
        let w = if weights.len() == 1 { weights[0] } else { weights[i] };
        answers.push(Answer::text(w, wildcard_phrase(text)?));
    }
    let kind = if caps_insensitive { Kind::ShortAnswer } else { Kind::ShortAnswerCase };
    Ok(SubQuestion::new(kind, points, answers)?.encode())
}

/// `"chi square test"` → `"*chi*square*test*"`.
pub fn wildcard_phrase(text: &str) -> Result<String, ClozeError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(ClozeError::EmptyText);
    }
    Ok(format!("*{}*", tokens.join("*")))
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if ESCAPED.contains(&c) {
            out.push('\\');
            out.push(c);
        } else if c == '\\' {
            match chars.peek() {
                None => out.push_str("\\\\"),
                Some(n) if *n == '\\' || ESCAPED.contains(n) => out.push_str("\\\\"),
                Some(_) => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.peek() {
                Some(n) if *n == '\\' || ESCAPED.contains(n) => {
                    out.push(*n);
                    chars.next();
                }
                _ => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Split at unescaped occurrences of `sep`, keeping escapes intact.
fn split_unescaped(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        if c == '\\' {
            escaped = true;
        } else if c == sep {
            parts.push((start, &text[start..i]));
            start = i + c.len_utf8();
        }
    }
    parts.push((start, &text[start..]));
    parts
}

fn find_unescaped(text: &str, target: char) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == target {
            return Some(i);
        }
    }
    None
}

/// Parse one `{...}` group. `base` is the group's character offset in the
/// surrounding text and is only used for diagnostics.
fn parse_group(group: &str, base: usize) -> Result<SubQuestion, ClozeError> {
    let char_offset = |byte: usize| base + group[..byte].chars().count();
    let inner = group
        .strip_prefix('{')
        .and_then(|g| g.strip_suffix('}'))
        .ok_or(ClozeError::Unbalanced { offset: base })?;
    let (points_text, rest) =
        inner.split_once(':').ok_or_else(|| ClozeError::Invalid {
            reason: "missing `:` after points".into(),
            offset: base,
        })?;
    let points = if points_text.is_empty() {
        1
    } else {
        points_text.parse::<u32>().ok().filter(|p| *p > 0).ok_or_else(|| ClozeError::Invalid {
            reason: format!("points `{points_text}` is not a positive integer"),
            offset: base,
        })?
    };
    let (kind_text, body) = rest.split_once(':').ok_or_else(|| ClozeError::UnknownKind {
        kind: rest.to_string(),
        offset: char_offset(1 + points_text.len() + 1),
    })?;
    let kind = Kind::from_token(kind_text).ok_or_else(|| ClozeError::UnknownKind {
        kind: kind_text.to_string(),
        offset: char_offset(1 + points_text.len() + 1),
    })?;
    let body_start = 1 + points_text.len() + 1 + kind_text.len() + 1;
    let mut answers = Vec::new();
    for (idx, (rel, raw)) in split_unescaped(body, '~').into_iter().enumerate() {
        if raw.is_empty() && idx == 0 {
            continue;
        }
        let at = char_offset(body_start + rel);
        answers.push(parse_answer(kind, raw, at)?);
    }
    SubQuestion::new(kind, points, answers).map_err(|e| ClozeError::Invalid {
        reason: e.to_string(),
        offset: base,
    })
}

fn parse_answer(kind: Kind, raw: &str, offset: usize) -> Result<Answer, ClozeError> {
    let (weight, body) = if let Some(rest) = raw.strip_prefix('=') {
        (100, rest)
    } else if let Some(rest) = raw.strip_prefix('%') {
        let end = rest.find('%').ok_or_else(|| ClozeError::MalformedWeight {
            text: raw.to_string(),
            offset,
        })?;
        let text = &rest[..end];
        let w: i64 = text.parse().map_err(|_| ClozeError::MalformedWeight {
            text: text.to_string(),
            offset,
        })?;
        if !(0..=100).contains(&w) {
            return Err(ClozeError::MalformedWeight { text: text.to_string(), offset });
        }
        (w as u32, &rest[end + 1..])
    } else if kind.is_text() && kind != Kind::MultiChoice {
        (100, raw)
    } else {
        (0, raw)
    };
    let (body, feedback) = match find_unescaped(body, '#') {
        Some(i) => (&body[..i], Some(unescape(&body[i + 1..]))),
        None => (body, None),
    };
    let answer = if kind.is_text() {
        let text = unescape(body);
        if text.is_empty() {
            return Err(ClozeError::Invalid { reason: "empty answer text".into(), offset });
        }
        Answer { weight, target: Target::Text(text), tolerance: 0.0, feedback }
    } else {
        let (value_text, tol_text) = match body.split_once(':') {
            Some((v, t)) => (v, Some(t)),
            None => (body, None),
        };
        let value = parse_number(value_text).ok_or_else(|| ClozeError::MalformedNumber {
            text: value_text.to_string(),
            offset,
        })?;
        let tolerance = match tol_text {
            Some(t) => parse_number(t)
                .filter(|t| *t >= 0.0)
                .ok_or_else(|| ClozeError::MalformedNumber { text: t.to_string(), offset })?,
            None => 0.0,
        };
        Answer { weight, target: Target::Number(value), tolerance, feedback }
    };
    Ok(answer)
}

/// Result of splitting question text into literal segments and subquestions.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCloze {
    /// Literal text around the groups; always `subquestions.len() + 1` long.
    /// Groups that failed to parse stay in the literal text.
    pub segments: Vec<String>,
    pub subquestions: Vec<SubQuestion>,
    pub diagnostics: Vec<ClozeError>,
}

impl ParsedCloze {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// Reassemble with every group in canonical form.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (i, seg) in self.segments.iter().enumerate() {
            out.push_str(seg);
            if let Some(sub) = self.subquestions.get(i) {
                out.push_str(sub.encode().as_str());
            }
        }
        out
    }
}

/// Is the text after a `{` the start of a CLOZE group (`{digits:`)? Other
/// brace groups, e.g. LaTeX arguments, are literal text.
fn group_header_len(rest: &str) -> Option<usize> {
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    (rest.as_bytes().get(digits) == Some(&b':')).then_some(digits)
}

/// Split `text` at its CLOZE groups.
pub fn parse_cloze(text: &str) -> ParsedCloze {
    let mut segments = Vec::new();
    let mut subquestions = Vec::new();
    let mut diagnostics = Vec::new();
    let mut literal = String::new();
    let mut pos = 0;
    let mut char_pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("non-empty");
        if c == '{' && group_header_len(&rest[1..]).is_some() {
            match find_unescaped(&rest[1..], '}') {
                Some(end) => {
                    let group = &rest[..end + 2];
                    match parse_group(group, char_pos) {
                        Ok(sub) => {
                            segments.push(std::mem::take(&mut literal));
                            subquestions.push(sub);
                        }
                        Err(e) => {
                            diagnostics.push(e);
                            literal.push_str(group);
                        }
                    }
                    char_pos += group.chars().count();
                    pos += group.len();
                    continue;
                }
                None => {
                    diagnostics.push(ClozeError::Unbalanced { offset: char_pos });
                    literal.push_str(rest);
                    break;
                }
            }
        }
        literal.push(c);
        pos += c.len_utf8();
        char_pos += 1;
    }
    segments.push(literal);
    ParsedCloze { segments, subquestions, diagnostics }
}

/// Score of one response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grade {
    /// Fraction of the subquestion's points, in `[0, 1]`.
    pub fraction: f64,
    /// Set when an NM response is not a number.
    pub non_numeric: bool,
}

/// Grade `response` against `sub`; the best matching answer wins.
pub fn grade(sub: &SubQuestion, response: &str) -> Grade {
    let weight = match sub.kind {
        Kind::Numerical => {
            let Some(value) = NumericResponse::parse(response) else {
                return Grade { fraction: 0.0, non_numeric: true };
            };
            sub.answers
                .iter()
                .filter(|a| match a.target {
                    Target::Number(t) => value.within(t, a.tolerance),
                    Target::Text(_) => false,
                })
                .map(|a| a.weight)
                .max()
        }
        Kind::MultiChoice => sub
            .answers
            .iter()
            .filter(|a| matches!(&a.target, Target::Text(t) if t == response))
            .map(|a| a.weight)
            .max(),
        Kind::ShortAnswer | Kind::ShortAnswerCase => {
            let fold = sub.kind == Kind::ShortAnswer;
            let response = if fold { response.to_lowercase() } else { response.to_string() };
            sub.answers
                .iter()
                .filter(|a| match &a.target {
                    Target::Text(t) if fold => wildcard_match(&t.to_lowercase(), &response),
                    Target::Text(t) => wildcard_match(t, &response),
                    Target::Number(_) => false,
                })
                .map(|a| a.weight)
                .max()
        }
    };
    Grade { fraction: weight.unwrap_or(0) as f64 / 100.0, non_numeric: false }
}

/// Exact decimal comparison where the numbers fit, so `54.7 ± 0.1` accepts
/// `54.8` but not `54.8000001`.
enum NumericResponse {
    Exact(Decimal),
    Approx(f64),
}

impl NumericResponse {
    fn parse(text: &str) -> Option<Self> {
        let value = parse_number(text)?;
        let t = text.trim();
        let t = t.strip_prefix('+').unwrap_or(t);
        let exact = if t.contains(['e', 'E']) {
            Decimal::from_scientific(t).ok()
        } else {
            Decimal::from_str_exact(t).ok()
        };
        Some(match exact {
            Some(d) => NumericResponse::Exact(d),
            None => NumericResponse::Approx(value),
        })
    }

    fn within(&self, target: f64, tolerance: f64) -> bool {
        if let NumericResponse::Exact(r) = self {
            let t = Decimal::from_str_exact(&format_number(target));
            let tol = Decimal::from_str_exact(&format_number(tolerance));
            if let (Ok(t), Ok(tol)) = (t, tol) {
                if let Some(diff) = r.checked_sub(t) {
                    return diff.abs() <= tol;
                }
            }
        }
        let r = match self {
            NumericResponse::Exact(d) => d.to_string().parse::<f64>().unwrap_or(f64::NAN),
            NumericResponse::Approx(v) => *v,
        };
        (r - target).abs() <= tolerance
    }
}

/// `*` matches any run of characters, including the empty one.
pub fn wildcard_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|c| *c == '*')
}
