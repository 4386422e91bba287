//! Moodle XML question bank output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cloze::parse_cloze;
use crate::template::{instantiate_batch, GenerateError, QuizInstance, QuizTemplate};

pub const DEFAULT_PENALTY: f64 = 1.0 / 3.0;
pub const COURSE_PREFIX: &str = "$course$/top/";

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionBank {
    pub category_path: String,
    pub questions: Vec<QuizInstance>,
    pub penalty: f64,
}

impl QuestionBank {
    pub fn new(category_path: impl Into<String>, questions: Vec<QuizInstance>) -> Self {
        QuestionBank { category_path: category_path.into(), questions, penalty: DEFAULT_PENALTY }
    }

    /// Bank for generated instances: their shared category, or the
    /// template's base category when stories differ.
    pub fn for_template(t: &QuizTemplate, questions: Vec<QuizInstance>) -> Self {
        let first = questions.first().map(|q| q.category.clone());
        let category = match first {
            Some(c) if questions.iter().all(|q| q.category == c) => c,
            _ => t.doc().category.clone(),
        };
        QuestionBank::new(category, questions)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    #[error("question bank is empty")]
    Empty,
    #[error("category path is empty")]
    EmptyCategory,
    #[error("penalty must lie in [0, 1]")]
    BadPenalty,
    #[error("{quizname}: invalid embedded answer: {message}")]
    InvalidCloze { quizname: String, message: String },
}

#[derive(Debug, Error)]
pub enum MakeError {
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// `{seed, n, sha256}` written next to every generated file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub n: u64,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub story: Option<usize>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `"Examples / 1"` → `"$course$/top/Examples/1"`.
pub fn category_text(path: &str) -> String {
    let parts: Vec<&str> = path.split('/').map(str::trim).filter(|p| !p.is_empty()).collect();
    format!("{COURSE_PREFIX}{}", parts.join("/"))
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn cdata(s: &str) -> String {
    format!("<![CDATA[{}]]>", s.replace("]]>", "]]]]><![CDATA[>"))
}

fn html_element(out: &mut String, tag: &str, payload: &str) {
    let _ = writeln!(out, "    <{tag} format=\"html\">");
    let _ = writeln!(out, "      <text>{}</text>", cdata(payload));
    let _ = writeln!(out, "    </{tag}>");
}

pub fn emit_xml(bank: &QuestionBank) -> Result<String, XmlError> {
    if bank.questions.is_empty() {
        return Err(XmlError::Empty);
    }
    if bank.category_path.split('/').all(|p| p.trim().is_empty()) {
        return Err(XmlError::EmptyCategory);
    }
    if !(0.0..=1.0).contains(&bank.penalty) {
        return Err(XmlError::BadPenalty);
    }
    for q in &bank.questions {
        if let Some(d) = parse_cloze(&q.qtxt).diagnostics.first() {
            return Err(XmlError::InvalidCloze { quizname: q.quizname.clone(), message: d.to_string() });
        }
    }
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<quiz>\n");
    out.push_str("  <question type=\"category\">\n    <category>\n");
    let _ = writeln!(out, "      <text>{}</text>", escape(&category_text(&bank.category_path)));
    out.push_str("    </category>\n  </question>\n");
    for q in &bank.questions {
        out.push_str("  <question type=\"cloze\">\n    <name>\n");
        let _ = writeln!(out, "      <text>{}</text>", escape(&q.quizname));
        out.push_str("    </name>\n");
        html_element(&mut out, "questiontext", &q.qtxt);
        html_element(&mut out, "generalfeedback", &q.atxt);
        let _ = writeln!(out, "    <penalty>{:.7}</penalty>", bank.penalty);
        if !q.htxt.is_empty() {
            html_element(&mut out, "hint", &q.htxt);
        }
        out.push_str("  </question>\n");
    }
    out.push_str("</quiz>\n");
    Ok(out)
}

/// Generate `n` instances and serialize them; no file I/O.
pub fn generate_xml(
    t: &QuizTemplate,
    n: u64,
    seed: u64,
    story: Option<usize>,
) -> Result<(String, Manifest), MakeError> {
    let instances = instantiate_batch(t, seed, n, story)?;
    let xml = emit_xml(&QuestionBank::for_template(t, instances))?;
    let manifest = Manifest { seed, n, sha256: sha256_hex(xml.as_bytes()), story };
    Ok((xml, manifest))
}

pub fn manifest_path(xml_path: &Path) -> PathBuf {
    xml_path.with_extension("manifest.json")
}

/// Write `<name>.xml` and `<name>.manifest.json` into `folder`.
pub fn make_xml(
    t: &QuizTemplate,
    n: u64,
    folder: &Path,
    seed: u64,
    story: Option<usize>,
) -> Result<(PathBuf, Manifest), MakeError> {
    let (xml, manifest) = generate_xml(t, n, seed, story)?;
    let path = folder.join(format!("{}.xml", t.name()));
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| MakeError::Io { path, source }
    };
    std::fs::write(&path, xml).map_err(io(&path))?;
    let mpath = manifest_path(&path);
    std::fs::write(&mpath, manifest.to_json()).map_err(io(&mpath))?;
    Ok((path, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(i: usize, htxt: &str) -> QuizInstance {
        QuizInstance {
            qtxt: format!("<h5>Value {{1:NM:%100%{i}:0}}</h5>"),
            htxt: htxt.into(),
            atxt: format!("<h5>{i}</h5>"),
            category: "Examples / 1".into(),
            quizname: format!("problem - {i}"),
        }
    }

    #[test]
    fn category_paths() {
        assert_eq!(category_text("Examples / 1"), "$course$/top/Examples/1");
        assert_eq!(category_text("moodlequizR / Percentage : Story : 2"), "$course$/top/moodlequizR/Percentage : Story : 2");
    }

    #[test]
    fn layout() {
        let bank = QuestionBank::new("Examples / 1", vec![instance(1, "")]);
        let xml = emit_xml(&bank).unwrap();
        let want = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>
<quiz>
  <question type=\"category\">
    <category>
      <text>$course$/top/Examples/1</text>
    </category>
  </question>
  <question type=\"cloze\">
    <name>
      <text>problem - 1</text>
    </name>
    <questiontext format=\"html\">
      <text><![CDATA[<h5>Value {1:NM:%100%1:0}</h5>]]></text>
    </questiontext>
    <generalfeedback format=\"html\">
      <text><![CDATA[<h5>1</h5>]]></text>
    </generalfeedback>
    <penalty>0.3333333</penalty>
  </question>
</quiz>
";
        assert_eq!(xml, want);
        let xml = emit_xml(&QuestionBank::new("c", vec![instance(2, "<h5>hint</h5>")])).unwrap();
        assert!(xml.contains("<hint format=\"html\">\n      <text><![CDATA[<h5>hint</h5>]]></text>\n    </hint>"));
    }

    #[test]
    fn cdata_terminators_are_split() {
        let mut q = instance(1, "");
        q.atxt = "a]]>b".into();
        let xml = emit_xml(&QuestionBank::new("c", vec![q])).unwrap();
        assert!(xml.contains("<![CDATA[a]]]]><![CDATA[>b]]>"));
    }

    #[test]
    fn rejects_bad_banks() {
        assert_eq!(emit_xml(&QuestionBank::new("c", vec![])), Err(XmlError::Empty));
        assert_eq!(emit_xml(&QuestionBank::new(" / ", vec![instance(1, "")])), Err(XmlError::EmptyCategory));
        let mut q = instance(1, "");
        q.qtxt = "{1:XX:bad}".into();
        assert!(matches!(emit_xml(&QuestionBank::new("c", vec![q])), Err(XmlError::InvalidCloze { quizname, .. }) if quizname == "problem - 1"));
    }
}
