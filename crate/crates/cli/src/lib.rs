//! The `quizforge` command line: generate, preview, validate, grade, paste
//! and serve. [`run`] takes its output streams as arguments so the commands
//! can be driven in-process.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::{Parser, Subcommand, ValueEnum};

use quizforge_core::cloze::{grade, parse_cloze, SubQuestion};
use quizforge_core::htmlgen::decode_entities;
use quizforge_core::numfmt::format_number;
use quizforge_core::pastedata::{parse_pasted, to_csv};
use quizforge_core::template::{
    instantiate, load_template, trial_issues, GenerateError, QuizInstance, QuizTemplate, TemplateError,
};
use quizforge_core::xmlout::{make_xml, MakeError};

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_GENERATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "quizforge", version, about = "Compile quiz templates into randomized Moodle CLOZE question banks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Html,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write `<name>.xml` with n randomized questions and `<name>.manifest.json`.
    Generate {
        /// Template document (JSON).
        template: PathBuf,
        /// Number of questions; defaults to the template's count.
        #[arg(long)]
        n: Option<u64>,
        /// Master seed; random when omitted (printed to stderr).
        #[arg(long)]
        seed: Option<u64>,
        /// Output folder.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Use only this story (1-based).
        #[arg(long)]
        story: Option<usize>,
    },
    /// Render one instance as an HTML page or plain text.
    Preview {
        template: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// 0-based instance index.
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        index: i64,
        #[arg(long, value_enum, default_value_t = Format::Html)]
        format: Format,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        story: Option<usize>,
    },
    /// Check a template, or a generated `.xml` bank.
    Validate { path: PathBuf },
    /// Grade responses, one per line, against a question's answer fields.
    Grade {
        /// A generated `.xml` bank or a template.
        source: PathBuf,
        /// Text file with one response per answer field.
        answers: PathBuf,
        /// Question number within an XML bank (1-based).
        #[arg(long, default_value_t = 1)]
        question: usize,
        /// Seed for a template source.
        #[arg(long)]
        seed: Option<u64>,
        /// Instance index for a template source.
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        story: Option<usize>,
    },
    /// Turn a table copied from a quiz into CSV.
    Paste {
        /// `clipboard`, `-` for stdin, or a file.
        #[arg(long = "in", default_value = "clipboard")]
        input: String,
        /// CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API, and static files from `--root`.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        root: Option<PathBuf>,
    },
}

/// A failed command: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure { code: EXIT_VALIDATION, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }
}

impl From<TemplateError> for Failure {
    fn from(e: TemplateError) -> Self {
        let lines: Vec<String> = e.issues().iter().map(ToString::to_string).collect();
        Failure::validation(lines.join("\n"))
    }
}

impl From<GenerateError> for Failure {
    fn from(e: GenerateError) -> Self {
        let code = match e {
            GenerateError::ZeroCount | GenerateError::NoSuchStory { .. } => EXIT_VALIDATION,
            GenerateError::Instance { .. } => EXIT_GENERATION,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<MakeError> for Failure {
    fn from(e: MakeError) -> Self {
        match e {
            MakeError::Generate(g) => g.into(),
            MakeError::Xml(x) => Failure { code: EXIT_GENERATION, message: x.to_string() },
            MakeError::Io { path, source } => Failure::io(&path, source),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{shown}");
                return 0;
            }
            let _ = write!(err, "{shown}");
            return EXIT_VALIDATION;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Generate { template, n, seed, out: folder, story } => cmd_generate(&template, n, seed, &folder, story, out, err),
        Command::Preview { template, seed, index, format, out: file, story } => {
            cmd_preview(&template, seed, index, format, file.as_deref(), story, out, err)
        }
        Command::Validate { path } => cmd_validate(&path, out),
        Command::Grade { source, answers, question, seed, index, story } => {
            cmd_grade(&source, &answers, question, seed, index, story, out)
        }
        Command::Paste { input, out: file } => cmd_paste(&input, file.as_deref(), out),
        Command::Serve { port, host, root } => cmd_serve(SocketAddr::new(host, port), root, err),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn load(path: &Path) -> Result<QuizTemplate, Failure> {
    let t = load_template(&read(path)?)?;
    Ok(t)
}

fn seed_or_random(seed: Option<u64>, err: &mut dyn Write) -> u64 {
    seed.unwrap_or_else(|| {
        let s = getrandom::u64().expect("system random source");
        let _ = writeln!(err, "seed: {s}");
        s
    })
}

fn write_out(file: Option<&Path>, text: &str, out: &mut dyn Write) -> Outcome {
    match file {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

pub fn cmd_generate(
    template: &Path,
    n: Option<u64>,
    seed: Option<u64>,
    folder: &Path,
    story: Option<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let t = load(template)?;
    let n = n.unwrap_or(t.doc().count as u64);
    if n == 0 {
        return Err(GenerateError::ZeroCount.into());
    }
    let seed = seed_or_random(seed, err);
    let (path, manifest) = make_xml(&t, n, folder, seed, story)?;
    let _ = writeln!(out, "{}", path.display());
    let _ = writeln!(out, "sha256 {}", manifest.sha256);
    Ok(())
}

pub fn render_preview(q: &QuizInstance, format: Format) -> String {
    match format {
        Format::Html => format!(
            "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{name}</title>\n</head>\n<body>\n\
             <p>{category}</p>\n<h2>Question</h2>\n{q}\n<h2>Hint</h2>\n{h}\n<h2>Answer</h2>\n{a}\n</body>\n</html>\n",
            name = escape(&q.quizname),
            category = escape(&q.category),
            q = q.qtxt,
            h = q.htxt,
            a = q.atxt,
        ),
        Format::Text => format!(
            "{} [{}]\n\nQuestion:\n{}\n\nHint:\n{}\n\nAnswer:\n{}\n",
            q.quizname,
            q.category,
            html_to_text(&q.qtxt),
            html_to_text(&q.htxt),
            html_to_text(&q.atxt)
        ),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Readable plain text: block ends become newlines, cells tabs, images a
/// placeholder; other tags are dropped.
pub fn html_to_text(html: &str) -> String {
    let mut text = String::new();
    let mut rest = html;
    while let Some(i) = rest.find('<') {
        text.push_str(&rest[..i]);
        let Some(j) = rest[i..].find('>') else {
            text.push_str(&rest[i..]);
            rest = "";
            break;
        };
        let tag = rest[i + 1..i + j].trim().to_ascii_lowercase();
        let name = tag.split(|c: char| c.is_whitespace() || c == '/' && !tag.starts_with('/')).next().unwrap_or("");
        match name {
            "br" | "/p" | "/h5" | "/tr" | "/pre" | "/table" | "/h2" => text.push('\n'),
            "/td" | "/th" => text.push('\t'),
            "img" => text.push_str("[image]"),
            _ => {}
        }
        rest = &rest[i + j + 1..];
    }
    text.push_str(rest);
    let decoded = decode_entities(&text);
    let lines: Vec<&str> = decoded.lines().map(|l| l.trim_end_matches(['\t', ' '])).collect();
    let mut out: Vec<&str> = Vec::new();
    for l in lines {
        if l.is_empty() && out.last().is_none_or(|p| p.is_empty()) {
            continue;
        }
        out.push(l);
    }
    out.join("\n").trim_end().to_string()
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_preview(
    template: &Path,
    seed: Option<u64>,
    index: i64,
    format: Format,
    file: Option<&Path>,
    story: Option<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    if index < 0 {
        return Err(Failure::validation(format!("index must be ≥ 0, got {index}")));
    }
    let t = load(template)?;
    let seed = seed_or_random(seed, err);
    let q = instantiate(&t, seed, index as u64, story)?;
    write_out(file, &render_preview(&q, format), out)
}

fn question_texts(xml: &str) -> Result<Vec<String>, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| format!("not well-formed XML: {e}"))?;
    let root = doc.root_element();
    if !root.has_tag_name("quiz") {
        return Err("root element is not <quiz>".into());
    }
    let mut texts = Vec::new();
    for q in root.children().filter(|c| c.has_tag_name("question")) {
        if q.attribute("type") != Some("cloze") {
            continue;
        }
        let text = q
            .children()
            .find(|c| c.has_tag_name("questiontext"))
            .and_then(|qt| qt.children().find(|c| c.has_tag_name("text")))
            .map(|t| t.children().filter_map(|c| c.text()).collect::<String>())
            .ok_or_else(|| format!("question {} has no questiontext", texts.len() + 1))?;
        texts.push(text);
    }
    Ok(texts)
}

fn is_xml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml"))
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Outcome {
    let text = read(path)?;
    if is_xml(path) {
        let texts = question_texts(&text).map_err(Failure::validation)?;
        for (i, t) in texts.iter().enumerate() {
            if let Some(d) = parse_cloze(t).diagnostics.first() {
                return Err(Failure::validation(format!("question {}: {d}", i + 1)));
            }
        }
        let _ = writeln!(out, "ok: {} cloze questions", texts.len());
        return Ok(());
    }
    let t = load_template(&text)?;
    let issues = trial_issues(&t, 0);
    if !issues.is_empty() {
        let lines: Vec<String> = issues.iter().map(ToString::to_string).collect();
        return Err(Failure::validation(lines.join("\n")));
    }
    let _ = writeln!(out, "ok: {} ({} stories)", t.name(), t.story_count());
    Ok(())
}

/// Per-field fractions and the points-weighted total, in percent.
pub fn grade_responses(subs: &[SubQuestion], responses: &[String]) -> (Vec<f64>, f64) {
    let fractions: Vec<f64> = subs
        .iter()
        .enumerate()
        .map(|(i, s)| grade(s, responses.get(i).map(String::as_str).unwrap_or("")).fraction)
        .collect();
    let points: u32 = subs.iter().map(SubQuestion::points).sum();
    let earned: f64 = subs.iter().zip(&fractions).map(|(s, f)| s.points() as f64 * f).sum();
    let total = if points == 0 { 0.0 } else { 100.0 * earned / points as f64 };
    (fractions, total)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_grade(
    source: &Path,
    answers: &Path,
    question: usize,
    seed: Option<u64>,
    index: u64,
    story: Option<usize>,
    out: &mut dyn Write,
) -> Outcome {
    let text = read(source)?;
    let qtxt = if is_xml(source) {
        let texts = question_texts(&text).map_err(Failure::validation)?;
        let k = question.checked_sub(1).filter(|k| *k < texts.len()).ok_or_else(|| {
            Failure::validation(format!("question {question} does not exist (bank has {})", texts.len()))
        })?;
        texts[k].clone()
    } else {
        let t = load_template(&text)?;
        let seed = seed.ok_or_else(|| Failure::validation("grading a template needs --seed"))?;
        instantiate(&t, seed, index, story)?.qtxt
    };
    let parsed = parse_cloze(&qtxt);
    if let Some(d) = parsed.diagnostics.first() {
        return Err(Failure::validation(format!("invalid embedded answer: {d}")));
    }
    let responses: Vec<String> = read(answers)?.lines().map(str::to_string).collect();
    let (fractions, total) = grade_responses(&parsed.subquestions, &responses);
    for (i, (s, f)) in parsed.subquestions.iter().zip(&fractions).enumerate() {
        let resp = responses.get(i).map(String::as_str).unwrap_or("");
        let _ = writeln!(out, "{}\t{}\t{}\t{}%\t{}", i + 1, s.kind(), s.points(), format_number(f * 100.0), resp);
    }
    let _ = writeln!(out, "total\t{}%", format_number(total));
    Ok(())
}

fn read_clipboard() -> Result<String, Failure> {
    let candidates: &[(&str, &[&str])] = if cfg!(target_os = "macos") {
        &[("pbpaste", &[])]
    } else if cfg!(windows) {
        &[("powershell", &["-NoProfile", "-Command", "Get-Clipboard -Raw"])]
    } else {
        &[
            ("wl-paste", &["--no-newline"]),
            ("xclip", &["-selection", "clipboard", "-o"]),
            ("xsel", &["--clipboard", "--output"]),
        ]
    };
    let mut tried = Vec::new();
    for (prog, args) in candidates {
        match Process::new(prog).args(*args).output() {
            Ok(o) if o.status.success() => return Ok(String::from_utf8_lossy(&o.stdout).into_owned()),
            _ => tried.push(*prog),
        }
    }
    Err(Failure { code: EXIT_IO, message: format!("could not read the clipboard (tried {})", tried.join(", ")) })
}

pub fn cmd_paste(input: &str, file: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let text = match input {
        "clipboard" => read_clipboard()?,
        "-" => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::io(Path::new("<stdin>"), e))?;
            s
        }
        path => read(Path::new(path))?,
    };
    let table = parse_pasted(&text).map_err(|e| Failure::validation(e.to_string()))?;
    write_out(file, &to_csv(&table), out)
}

fn cmd_serve(addr: SocketAddr, root: Option<PathBuf>, err: &mut dyn Write) -> Outcome {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(Path::new("<runtime>"), e))?;
    let _ = writeln!(err, "listening on http://{addr}");
    runtime.block_on(quizforge_service::serve(addr, root)).map_err(|e| Failure::io(Path::new(&addr.to_string()), e))
}
