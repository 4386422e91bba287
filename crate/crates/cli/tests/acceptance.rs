//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use http_body_util::BodyExt;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use quizforge_cli::{render_preview, run, Format};
use quizforge_core::cloze::{encode_mc, encode_nm, encode_sa, grade, parse_cloze, Answer, ClozeString, Kind, SubQuestion};
use quizforge_core::corpus::list_examples;
use quizforge_core::expr::{derive_stream, eval_str, stats, Env, Value};
use quizforge_core::htmlgen::{render_vector_table, text_projection};
use quizforge_core::numfmt::{format_number, parse_number};
use quizforge_core::pastedata::{parse_pasted, to_csv};
use quizforge_core::table::ColumnData;
use quizforge_core::template::{instantiate_detailed, QuizInstance};
use quizforge_core::xmlout::Manifest;
use regex::Regex;
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn template_path(slug: &str) -> PathBuf {
    root().join("corpus").join(format!("{slug}.quiz.json"))
}

fn draw<S: Strategy>(s: &S, runner: &mut TestRunner) -> S::Value {
    s.new_tree(runner).expect("strategy").current()
}

// ---------------------------------------------------------------- [1]

fn cloze_exactness() -> Outcome {
    let (mc, _) = encode_mc(&["lower", "not equal to", "higher"], &[0, 0, 100], 1).map_err(|e| e.to_string())?;
    let nm = encode_nm(&[54.7], &[100, 80], &[0.1, 0.5], 2).map_err(|e| e.to_string())?;
    let sa = encode_sa(&["correlation coefficient"], &[100], true, 1).map_err(|e| e.to_string())?;
    let want = [
        "{1:MC:~%0%lower~%0%not equal to~%100%higher}",
        "{2:NM:%100%54.7:0.1~%80%54.7:0.5}",
        "{1:SA:*correlation*coefficient*}",
    ];
    for (got, want) in [mc, nm, sa].iter().zip(want) {
        ensure(got.as_str() == want, || format!("got {got}, want {want}"))?;
    }
    Ok("3/3 strings byte-identical".into())
}

// ---------------------------------------------------------------- fuzzed subquestions

const ANY_TEXT: &str = "[a-zA-Z0-9 ~#%}{=\\\\*:.-]{1,12}";

fn canonical_number() -> impl Strategy<Value = f64> {
    (-999_999i64..=999_999, 0u32..=6).prop_map(|(m, k)| parse_number(&format_number(m as f64 / 10f64.powi(k as i32))).unwrap())
}

fn tolerance() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), canonical_number().prop_map(f64::abs)]
}

fn subquestion() -> impl Strategy<Value = SubQuestion> {
    let kind = prop_oneof![
        Just(Kind::Numerical),
        Just(Kind::MultiChoice),
        Just(Kind::ShortAnswer),
        Just(Kind::ShortAnswerCase)
    ];
    (kind, 1u32..=10, 1usize..=5).prop_flat_map(|(kind, points, n)| {
        let weights = (proptest::collection::vec(0u32..=100, n), 0..n).prop_map(|(mut w, i)| {
            w[i] = 100;
            w
        });
        let raw = proptest::collection::vec((canonical_number(), tolerance(), ANY_TEXT), n);
        (weights, raw).prop_map(move |(w, raw)| {
            let answers = w
                .iter()
                .zip(raw)
                .map(|(&w, (x, tol, text))| match kind {
                    Kind::Numerical => Answer::numeric(w, x, tol),
                    _ => Answer::text(w, text),
                })
                .collect();
            SubQuestion::new(kind, points, answers).unwrap()
        })
    })
}

// ---------------------------------------------------------------- independent matcher

/// Matching rules rebuilt from the wire text alone.
struct OracleSub {
    kind: String,
    answers: Vec<(u32, OracleBody)>,
}

enum OracleBody {
    Number { target: BigRational, tol: BigRational },
    Exact(String),
    Pattern(Regex),
}

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)\\.|.").unwrap());
static ESCAPE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\([\\}~#%])").unwrap());
static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*([+-]?)([0-9]*)(?:\.([0-9]*))?(?:[eE]([+-]?[0-9]+))?\s*$").unwrap());

fn split_unescaped(text: &str, sep: char) -> Vec<String> {
    let mut parts = vec![String::new()];
    for m in TOKEN.find_iter(text) {
        if m.as_str().len() == 1 && m.as_str().starts_with(sep) {
            parts.push(String::new());
        } else {
            parts.last_mut().unwrap().push_str(m.as_str());
        }
    }
    parts
}

fn unescape(text: &str) -> String {
    ESCAPE.replace_all(text, "$1").into_owned()
}

/// Exact value of a decimal literal, or None when it isn't one.
fn rational(text: &str) -> Option<BigRational> {
    let c = NUMBER.captures(text)?;
    let int = c.get(2).map_or("", |m| m.as_str());
    let frac = c.get(3).map_or("", |m| m.as_str());
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let exp: i64 = c.get(4).map_or(Ok(0), |m| m.as_str().parse()).ok()?;
    let mantissa: BigInt = format!("{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(mantissa);
    if shift >= 0 {
        r *= BigRational::from_integer(ten.pow(shift as u32));
    } else {
        r /= BigRational::from_integer(ten.pow((-shift) as u32));
    }
    Some(if &c[1] == "-" { -r } else { r })
}

/// Plain decimal spelling of a terminating rational.
fn decimal(r: &BigRational) -> String {
    let mut scaled = r.abs();
    let mut k = 0usize;
    while !scaled.is_integer() {
        scaled *= BigRational::from_integer(BigInt::from(10));
        k += 1;
    }
    let digits = scaled.to_integer().to_string();
    let digits = format!("{}{digits}", "0".repeat((k + 1).saturating_sub(digits.len())));
    let (int, frac) = digits.split_at(digits.len() - k);
    let sign = if r.is_negative() { "-" } else { "" };
    if k == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

fn wildcard_regex(pattern: &str, fold: bool) -> Regex {
    let body: Vec<String> = pattern.split('*').map(regex::escape).collect();
    let flags = if fold { "(?si)" } else { "(?s)" };
    Regex::new(&format!("{flags}^{}$", body.join(".*"))).unwrap()
}

fn oracle_parse(wire: &str) -> Result<OracleSub, String> {
    let outer = Regex::new(r"(?s)^\{([0-9]+):(NM|MC|SA|SAC):(.*)\}$").unwrap();
    let c = outer.captures(wire).ok_or_else(|| format!("not a group: {wire}"))?;
    let kind = c[2].to_string();
    let mut pieces = split_unescaped(&c[3], '~');
    if kind == "MC" && pieces.first().is_some_and(String::is_empty) {
        pieces.remove(0);
    }
    let head = Regex::new(r"(?s)^(?:%([0-9]+)%|(=))?(.*)$").unwrap();
    let mut answers = Vec::new();
    for piece in pieces {
        let h = head.captures(&piece).unwrap();
        let weight = match (h.get(1), h.get(2)) {
            (Some(w), _) => w.as_str().parse().unwrap(),
            (None, Some(_)) => 100,
            (None, None) if kind == "SA" || kind == "SAC" => 100,
            (None, None) => 0,
        };
        let body = split_unescaped(&h[3], '#').remove(0);
        let parsed = match kind.as_str() {
            "NM" => {
                let (t, tol) = body.split_once(':').unwrap_or((&body, "0"));
                OracleBody::Number {
                    target: rational(t).ok_or_else(|| format!("bad target {t}"))?,
                    tol: rational(tol).ok_or_else(|| format!("bad tolerance {tol}"))?,
                }
            }
            "MC" => OracleBody::Exact(unescape(&body)),
            _ => OracleBody::Pattern(wildcard_regex(&unescape(&body), kind == "SA")),
        };
        answers.push((weight, parsed));
    }
    Ok(OracleSub { kind, answers })
}

fn oracle_grade(sub: &OracleSub, response: &str) -> f64 {
    let value = if sub.kind == "NM" {
        match rational(response) {
            Some(v) => Some(v),
            None => return 0.0,
        }
    } else {
        None
    };
    let best = sub
        .answers
        .iter()
        .filter(|(_, body)| match body {
            OracleBody::Number { target, tol } => {
                let v = value.as_ref().unwrap();
                (v - target).abs() <= *tol
            }
            OracleBody::Exact(t) => t == response,
            OracleBody::Pattern(re) => re.is_match(response),
        })
        .map(|(w, _)| *w)
        .max()
        .unwrap_or(0);
    best as f64 / 100.0
}

fn swap_case(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_lowercase() { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
        .collect()
}

/// Responses aimed at the answers of `sub`, plus noise, and how many NM
/// responses sit on or next to a band edge.
fn responses(sub: &SubQuestion, runner: &mut TestRunner) -> (Vec<String>, usize) {
    let mut aimed: Vec<String> = Vec::new();
    let mut edges = 0;
    let noise = prop_oneof![
        Just(String::new()),
        "[a-zA-Z0-9 .+-]{0,6}",
        ANY_TEXT.prop_map(|s| s),
        canonical_number().prop_map(format_number),
        (canonical_number(), -3i32..=3).prop_map(|(x, e)| format!("{}e{e}", format_number(x))),
        Just("1.2.3".to_string()),
        Just("--1".to_string()),
        Just("1e".to_string()),
        Just(".".to_string()),
    ];
    for a in sub.answers() {
        match &a.target {
            quizforge_core::cloze::Target::Number(x) => {
                let t = rational(&format_number(*x)).unwrap();
                let tol = rational(&format_number(a.tolerance)).unwrap();
                aimed.push(format_number(*x));
                aimed.push(format!(" +{} ", format_number(*x)));
                for k in [1u32, 3, 6, 9, 12] {
                    let eps = BigRational::new(BigInt::from(1), BigInt::from(10).pow(k));
                    for edge in [&t + &tol, &t - &tol] {
                        aimed.push(decimal(&edge));
                        aimed.push(decimal(&(&edge + &eps)));
                        aimed.push(decimal(&(&edge - &eps)));
                        edges += 3;
                    }
                }
                let edge = decimal(&(&t + &tol));
                let (m, e) = shift_exponent(&edge);
                aimed.push(format!("{m}e{e}"));
                aimed.push(format!("{m}E+{e}"));
                edges += 2;
            }
            quizforge_core::cloze::Target::Text(t) => {
                aimed.push(t.clone());
                aimed.push(swap_case(t));
                aimed.push(format!("{t} "));
                let fill = proptest::collection::vec("[a-zA-Z ]{0,3}", 1..=4);
                for _ in 0..3 {
                    let fillers = draw(&fill, runner);
                    let mut out = String::new();
                    for (i, part) in t.split('*').enumerate() {
                        if i > 0 {
                            out.push_str(&fillers[i % fillers.len()]);
                        }
                        out.push_str(part);
                    }
                    aimed.push(out.clone());
                    aimed.push(swap_case(&out));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(100);
    let pick = proptest::sample::select(aimed);
    while out.len() < 100 {
        let r = if out.len() % 4 == 3 { draw(&noise, runner) } else { draw(&pick, runner) };
        out.push(r);
    }
    (out, if sub.kind() == Kind::Numerical { edges.min(75) } else { 0 })
}

/// `12.5` as (`1.25`, `1`): the same value in scientific spelling.
fn shift_exponent(plain: &str) -> (String, i32) {
    let (sign, digits) = plain.strip_prefix('-').map_or(("", plain), |d| ("-", d));
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.len() <= 1 {
        return (plain.to_string(), 0);
    }
    let e = int.len() as i32 - 1;
    (format!("{sign}{}.{}{frac}", &int[..1], &int[1..]), e)
}

fn grading_oracle() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = subquestion();
    let (mut cases, mut edge_cases) = (0usize, 0usize);
    for i in 0..1000 {
        let sub = draw(&strategy, &mut runner);
        let wire = sub.encode();
        let oracle = oracle_parse(wire.as_str())?;
        let (resps, edges) = responses(&sub, &mut runner);
        edge_cases += edges;
        for r in &resps {
            let got = grade(&sub, r).fraction;
            let want = oracle_grade(&oracle, r);
            ensure(got == want, || format!("subquestion {i} {wire}: response {r:?} graded {got}, matcher says {want}"))?;
            cases += 1;
        }
    }
    ensure(edge_cases > 0, || "no band-edge responses generated".into())?;
    Ok(format!("{cases}/{cases} agree, NM band-edge responses included"))
}

// ---------------------------------------------------------------- [3]

fn round_trip() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = subquestion();
    for i in 0..10_000 {
        let sub = draw(&strategy, &mut runner);
        let wire = sub.encode();
        let back = wire.parse().map_err(|e| format!("#{i} {wire}: {e}"))?;
        ensure(back == sub, || format!("#{i} {wire}: parsed to a different subquestion"))?;
        ensure(back.encode() == wire, || format!("#{i} {wire}: not a fixed point"))?;
        let short = wire.as_str().replace("%100%", "=");
        let canon: ClozeString = short.parse().map_err(|e| format!("#{i} {short}: {e:?}"))?;
        ensure(canon == wire, || format!("#{i} shorthand {short} gave {canon}"))?;
    }
    for (short, want) in [("{1:NM:=50}", "{1:NM:%100%50:0}"), ("{1:MC:red~=blue}", "{1:MC:~%0%red~%100%blue}")] {
        let got: ClozeString = short.parse().map_err(|e| format!("{short}: {e:?}"))?;
        ensure(got.as_str() == want, || format!("{short} gave {got}"))?;
    }
    Ok("10000 fixed points, shorthand canonicalized".into())
}

// ---------------------------------------------------------------- [4] [6]

fn generate_with_cli(slug: &str, dir: &Path) -> Result<Vec<u8>, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let t = template_path(slug);
    let args = ["quizforge", "generate", t.to_str().unwrap(), "--seed", "42", "--n", "20", "--out", dir.to_str().unwrap()];
    let code = run(args, &mut out, &mut err);
    ensure(code == 0, || format!("{slug}: exit {code}: {}", String::from_utf8_lossy(&err)))?;
    std::fs::read(dir.join(format!("{slug}.xml"))).map_err(|e| e.to_string())
}

fn determinism(banks: &mut Vec<(String, Vec<u8>)>) -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for ex in list_examples() {
        let first = generate_with_cli(ex.slug, a.path())?;
        let second = generate_with_cli(ex.slug, b.path())?;
        ensure(first == second, || format!("{}: two runs differ", ex.slug))?;
        let golden = std::fs::read_to_string(root().join("corpus/golden").join(format!("{}.manifest.json", ex.slug)))
            .map_err(|e| format!("{}: {e}", ex.slug))?;
        let golden: Manifest = serde_json::from_str(&golden).map_err(|e| e.to_string())?;
        let hash = quizforge_core::xmlout::sha256_hex(&first);
        ensure(golden.seed == 42 && golden.n == 20, || format!("{}: golden manifest is not seed 42, n 20", ex.slug))?;
        ensure(hash == golden.sha256, || format!("{}: sha256 {hash} differs from golden {}", ex.slug, golden.sha256))?;
        banks.push((ex.slug.to_string(), first));
    }
    Ok(format!("{} templates, two runs identical, hashes match golden manifests", banks.len()))
}

fn xml_validity(banks: &[(String, Vec<u8>)]) -> Outcome {
    ensure(!banks.is_empty(), || "no banks to check".into())?;
    for (slug, bytes) in banks {
        let xml = std::str::from_utf8(bytes).map_err(|e| format!("{slug}: {e}"))?;
        let doc = roxmltree::Document::parse(xml).map_err(|e| format!("{slug}: {e}"))?;
        let all: Vec<_> = doc.descendants().filter(|d| d.has_tag_name("question")).collect();
        let categories = all.iter().filter(|q| q.attribute("type") == Some("category")).count();
        ensure(categories == 1, || format!("{slug}: {categories} category elements"))?;
        ensure(all[0].attribute("type") == Some("category"), || format!("{slug}: category is not first"))?;
        let clozes = all[1..].iter().filter(|q| q.attribute("type") == Some("cloze")).count();
        ensure(clozes == 20 && all.len() == 21, || format!("{slug}: {clozes} cloze of {} questions", all.len()))?;
        for chunk in xml.split("<![CDATA[").skip(1) {
            let end = chunk.find("]]>").ok_or_else(|| format!("{slug}: unterminated CDATA"))?;
            ensure(!chunk[..end].contains("]]>"), || format!("{slug}: terminator inside CDATA"))?;
        }
    }
    Ok(format!("{} banks well-formed, 1 category + 20 cloze each, CDATA clean", banks.len()))
}

// ---------------------------------------------------------------- [5]

fn corpus_soundness() -> Outcome {
    let mut keys = 0;
    for ex in list_examples() {
        let t = ex.template().map_err(|e| format!("{}: {e}", ex.slug))?;
        for i in 0..20 {
            let r = instantiate_detailed(&t, 42, i, None).map_err(|e| format!("{} #{i}: {e}", ex.slug))?;
            let parsed = parse_cloze(&r.instance.qtxt);
            ensure(parsed.is_clean(), || format!("{} #{i}: {:?}", ex.slug, parsed.diagnostics))?;
            ensure(parsed.subquestions.len() == r.answer_key.len(), || format!("{} #{i}: key length", ex.slug))?;
            for (sub, key) in parsed.subquestions.iter().zip(&r.answer_key) {
                let g = grade(sub, key).fraction;
                ensure(g == 1.0, || format!("{} #{i}: key {key:?} graded {g}", ex.slug))?;
                keys += 1;
            }
        }
    }
    let t = list_examples()[0].template().unwrap();
    let mut partial = 0;
    for i in 0..20 {
        let r = instantiate_detailed(&t, 42, i, None).unwrap();
        let x = r.variables.get("x").unwrap().to_numbers().unwrap();
        let mean = format_number(x.iter().sum::<f64>() / x.len() as f64);
        if mean == r.answer_key[0] {
            continue;
        }
        let g = grade(&parse_cloze(&r.instance.qtxt).subquestions[0], &mean).fraction;
        ensure(g == 0.8, || format!("example 1 #{i}: unrounded mean {mean} graded {g}"))?;
        partial += 1;
    }
    ensure(partial > 0, || "example 1 never had an unrounded mean distinct from the key".into())?;
    Ok(format!("15 x 20 instances clean, {keys} keys at 1.0, example 1 unrounded mean at 0.8 ({partial}/20)"))
}

// ---------------------------------------------------------------- [7]

fn data_round_trip() -> Outcome {
    let number = (-99_999_999i64..=99_999_999, 0u32..=4)
        .prop_map(|(m, k)| parse_number(&format_number(m as f64 / 10f64.powi(k as i32))).unwrap());
    let vector = prop_oneof![
        proptest::collection::vec(number, 1..=500).prop_map(ColumnData::Numeric),
        proptest::collection::vec("[a-zA-Z_][a-zA-Z0-9_{}&<>\"'-]{0,10}", 1..=500).prop_map(ColumnData::Text),
    ];
    let mut runner = TestRunner::deterministic();
    for i in 0..500 {
        let (x, ncol) = draw(&(vector.clone(), 1usize..=12), &mut runner);
        let html = render_vector_table(&x, ncol).map_err(|e| format!("#{i}: {e}"))?;
        let t = parse_pasted(&text_projection(&html)).map_err(|e| format!("#{i}: {e}"))?;
        ensure(t.is_vector() && t.columns()[0].data == x, || format!("#{i}: vector changed on the way back"))?;
        let rows: Vec<String> = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(to_csv(&t).as_bytes())
            .records()
            .flat_map(|r| r.unwrap().iter().map(str::to_string).collect::<Vec<_>>())
            .collect();
        let cells: Vec<String> = (0..x.len()).map(|k| x.cell(k)).collect();
        ensure(rows == cells, || format!("#{i}: csv re-parse differs"))?;
    }
    Ok("500 vectors reproduced exactly, csv re-parses equal".into())
}

// ---------------------------------------------------------------- [8]

fn eval_num(source: &str, env: &Env, seed: u64) -> Result<f64, String> {
    let mut sampler = derive_stream(seed, 0).sampler();
    eval_str(source, env, &mut sampler).map_err(|e| format!("{source}: {e}"))?.as_f64().ok_or_else(|| format!("{source}: not a number"))
}

fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn numeric_engine() -> Outcome {
    let mut runner = TestRunner::deterministic();
    for i in 0..100 {
        let (u, v) = draw(&(0.0f64..2.0, 0.0f64..2.0), &mut runner);
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        let mut env = Env::new();
        env.insert("A", Value::Number(a));
        env.insert("B", Value::Number(b));
        let got = eval_num("integrate(x*exp(x), A, B)", &env, 0)?;
        let f = |x: f64| (x - 1.0) * x.exp();
        let want = f(b) - f(a);
        ensure((got - want).abs() < 1e-6, || format!("#{i} [{a}, {b}]: {got} vs {want}"))?;
    }

    let n = 10_000.0f64;
    let env = Env::new();
    for seed in 0..20 {
        let m = eval_num("mean(rnorm(10000, 50, 7))", &env, seed)?;
        ensure((m - 50.0).abs() <= 4.0 * 7.0 / n.sqrt(), || format!("rnorm seed {seed}: {m}"))?;
        let m = eval_num("mean(runif(10000, 2, 9))", &env, seed)?;
        ensure((m - 5.5).abs() <= 4.0 * 7.0 / (12.0 * n).sqrt(), || format!("runif seed {seed}: {m}"))?;
        let m = eval_num("mean(rbinom(10000, 300, 0.55))", &env, seed)?;
        let sd = (300.0f64 * 0.55 * 0.45).sqrt();
        ensure((m - 165.0).abs() <= 4.0 * sd / n.sqrt(), || format!("rbinom seed {seed}: {m}"))?;
    }

    let alphabet = [-2.0, 0.0, 1.0, 3.5, 10.0];
    let probs = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
    let mut vectors = 0;
    for len in 1..=8u32 {
        for code in 0..5usize.pow(len) {
            let mut c = code;
            let x: Vec<f64> = (0..len)
                .map(|_| {
                    let v = alphabet[c % 5];
                    c /= 5;
                    v
                })
                .collect();
            let mut s = x.clone();
            s.sort_by(f64::total_cmp);
            let half = s.len().div_ceil(2);
            let want = [s[0], median_sorted(&s[..half]), median_sorted(&s), median_sorted(&s[s.len() - half..]), s[s.len() - 1]];
            let got = stats::fivenum(&x).map_err(|e| e.to_string())?;
            ensure(got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-12), || format!("fivenum {x:?}: {got:?} vs {want:?}"))?;
            for p in probs {
                let h = (s.len() - 1) as f64 * p;
                let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
                let want = s[lo] + (h - lo as f64) * (s[hi] - s[lo]);
                let got = stats::quantile(&x, p).map_err(|e| e.to_string())?;
                ensure((got - want).abs() < 1e-12, || format!("quantile {x:?} p={p}: {got} vs {want}"))?;
            }
            vectors += 1;
        }
    }
    Ok(format!("100 integrals within 1e-6, 20 seeds in bounds, {vectors} vectors match brute force"))
}

// ---------------------------------------------------------------- [9]

async fn post(path: &str, body: serde_json::Value) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(Method::POST)
        .uri(path)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let res = quizforge_service::router().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn parity(banks: &[(String, Vec<u8>)]) -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    ensure(banks.len() == list_examples().len(), || "generated banks missing".into())?;
    let mut previews = 0;
    for (ex, (slug, cli_bytes)) in list_examples().iter().zip(banks) {
        let template: serde_json::Value = serde_json::from_str(ex.source).unwrap();
        let body = serde_json::json!({ "template": template, "seed": 42, "n": 20 });
        let (status, api_bytes) = rt.block_on(post("/api/generate", body));
        ensure(status == StatusCode::OK, || format!("{slug}: /api/generate {status}"))?;
        ensure(&api_bytes == cli_bytes, || format!("{slug}: /api/generate bytes differ from generate"))?;

        for index in 0..3 {
            let body = serde_json::json!({ "template": template, "seed": 42, "index": index });
            let (status, json) = rt.block_on(post("/api/preview", body));
            ensure(status == StatusCode::OK, || format!("{slug}: /api/preview {status}"))?;
            let q: QuizInstance = serde_json::from_slice(&json).map_err(|e| format!("{slug}: {e}"))?;
            let (mut out, mut err) = (Vec::new(), Vec::new());
            let path = template_path(slug);
            let index = index.to_string();
            let args = ["quizforge", "preview", path.to_str().unwrap(), "--seed", "42", "--index", &index];
            let code = run(args, &mut out, &mut err);
            ensure(code == 0, || format!("{slug}: preview exit {code}"))?;
            ensure(render_preview(&q, Format::Html).into_bytes() == out, || format!("{slug} #{index}: /api/preview differs from preview"))?;
            previews += 1;
        }
    }
    Ok(format!("{} banks byte-identical, {previews} previews equal", banks.len()))
}

// ----------------------------------------------------------------

fn main() {
    let mut banks = Vec::new();
    let criteria: Vec<Criterion> = vec![
        ("CLOZE exactness", Some(Duration::from_secs(1)), Box::new(cloze_exactness)),
        ("Grading oracle", Some(Duration::from_secs(30)), Box::new(grading_oracle)),
        ("Round-trip", Some(Duration::from_secs(30)), Box::new(round_trip)),
        ("Determinism", None, Box::new(|| determinism(&mut banks))),
    ];
    let mut failed = run_all(criteria, 1);
    let criteria: Vec<Criterion> = vec![
        ("Corpus soundness", Some(Duration::from_secs(60)), Box::new(corpus_soundness)),
        ("XML validity", None, Box::new(|| xml_validity(&banks))),
        ("Data round-trip", None, Box::new(data_round_trip)),
        ("Numeric engine", None, Box::new(numeric_engine)),
        ("Service/CLI parity", None, Box::new(|| parity(&banks))),
    ];
    failed += run_all(criteria, 5);
    println!("9 criteria, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}

type Criterion<'a> = (&'a str, Option<Duration>, Box<dyn FnOnce() -> Outcome + 'a>);

fn run_all(criteria: Vec<Criterion<'_>>, first: usize) -> usize {
    let mut failed = 0;
    for (k, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {:.2} s, limit {} s", took.as_secs_f64(), l.as_secs())),
            (r, _) => r,
        };
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name}: {detail} ({:.2} s)", first + k, took.as_secs_f64());
    }
    failed
}
