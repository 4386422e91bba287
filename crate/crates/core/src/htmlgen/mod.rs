//! Moodle-ready HTML fragments: data tables, embedded PNG images, test
//! output blocks and a small built-in chart rasterizer.

mod chart;
mod font;

use std::fmt::Write as _;

use base64::Engine as _;
use thiserror::Error;

use crate::expr::{StatResult, TestKind};
use crate::numfmt::{format_number, signif};
use crate::table::{ColumnData, DataTable};

pub use chart::{chart_geometry, render_chart, Bar, ChartGeometry, ChartOptions, ChartSpec, PlotArea};

pub const DEFAULT_NCOL: usize = 10;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HtmlError {
    #[error("cannot render an empty vector")]
    EmptyVector,
    #[error("ncol must be at least 1")]
    ZeroColumns,
    #[error("input is not a PNG image")]
    NotPng,
    #[error("chart needs at least one data point")]
    EmptyData,
    #[error("binwidth must be > 0, got {0}")]
    BadBinwidth(f64),
    #[error("x and y lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("chart data must be finite")]
    NonFinite,
    #[error("image size {0}x{1} is out of range")]
    BadSize(u32, u32),
    #[error("histogram would need {0} bins")]
    TooManyBins(usize),
    #[error("png encoding failed: {0}")]
    Encode(String),
}

/// Escape text for HTML content. Curly braces become entities so that data
/// can never open or close an embedded-answer group.
pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '{' => out.push_str("&#123;"),
            '}' => out.push_str("&#125;"),
            c => out.push(c),
        }
    }
    out
}

fn cell(out: &mut String, tag: &str, numeric: bool, text: &str) {
    let align = if numeric { "right" } else { "left" };
    let _ = write!(out, "<{tag} style=\"text-align:{align}\">{}</{tag}>", escape_text(text));
}

/// Lay a vector out row-major in a table with `ncol` columns; the last row
/// is padded with empty cells.
pub fn render_vector_table(x: &ColumnData, ncol: usize) -> Result<String, HtmlError> {
    if ncol == 0 {
        return Err(HtmlError::ZeroColumns);
    }
    if x.is_empty() {
        return Err(HtmlError::EmptyVector);
    }
    let numeric = x.is_numeric();
    let rows = x.len().div_ceil(ncol);
    let mut out = String::from("<table border=\"1\" cellpadding=\"4\">\n");
    for r in 0..rows {
        out.push_str("<tr>");
        for c in 0..ncol {
            let i = r * ncol + c;
            if i < x.len() {
                cell(&mut out, "td", numeric, &x.cell(i));
            } else {
                out.push_str("<td></td>");
            }
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>");
    Ok(out)
}

/// Render a table as is, with a header row when any column is named.
pub fn render_data_table(t: &DataTable) -> String {
    let mut out = String::from("<table border=\"1\" cellpadding=\"4\">\n");
    if t.has_header() {
        out.push_str("<tr>");
        for col in t.columns() {
            cell(&mut out, "th", col.data.is_numeric(), col.name.as_deref().unwrap_or(""));
        }
        out.push_str("</tr>\n");
    }
    for r in 0..t.nrows() {
        out.push_str("<tr>");
        for col in t.columns() {
            cell(&mut out, "td", col.data.is_numeric(), &col.data.cell(r));
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>");
    out
}

/// The text a browser puts on the clipboard when a rendered table is
/// copied: one line per row, cells separated by tabs, entities decoded.
pub fn text_projection(html: &str) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut current: Option<String> = None;
    let mut rest = html;
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix('<') {
            let end = after.find('>').map_or(after.len(), |i| i + 1);
            let tag = after[..end.saturating_sub(1)].trim().to_ascii_lowercase();
            let name: String = tag.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '/').collect();
            match name.as_str() {
                "tr" => rows.push(Vec::new()),
                "td" | "th" => current = Some(String::new()),
                "/td" | "/th" => {
                    if let (Some(text), Some(row)) = (current.take(), rows.last_mut()) {
                        row.push(text);
                    }
                }
                _ => {}
            }
            rest = &after[end.min(after.len())..];
        } else {
            let end = rest.find('<').unwrap_or(rest.len());
            if let Some(text) = current.as_mut() {
                text.push_str(&decode_entities(&rest[..end]));
            }
            rest = &rest[end..];
        }
    }
    rows.iter().map(|r| r.join("\t")).collect::<Vec<_>>().join("\n")
}

/// Decode the entities [`escape_text`] produces plus numeric references.
pub fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        let decoded = tail.find(';').and_then(|j| {
            let body = &tail[1..j];
            let c = match body {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => body
                    .strip_prefix("#x")
                    .or_else(|| body.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| body.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            c.map(|c| (c, j + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &tail[len..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// `<img>` tag with the image inlined as a base64 data URI.
pub fn embed_png(bytes: &[u8]) -> Result<String, HtmlError> {
    if !bytes.starts_with(&PNG_SIGNATURE) {
        return Err(HtmlError::NotPng);
    }
    let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
    Ok(format!("<img src=\"data:image/png;base64,{encoded}\">"))
}

fn num4(x: f64) -> String {
    format_number(signif(x, 4))
}

fn p_text(p: f64) -> String {
    if p < 1e-6 {
        "p-value < 0.000001".to_string()
    } else {
        format!("p-value = {}", num4(p))
    }
}

/// Monospace block in the style of R's printed test output.
pub fn render_stat_block(r: &StatResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n        {}\n", r.method);
    let _ = writeln!(s, "data:  {}", r.data_name);
    match r.kind {
        TestKind::SimpleRegression => {
            let _ = writeln!(s, "\nCoefficients:");
            let _ = writeln!(s, "{:<12} {:>12} {:>12} {:>10} {:>10}", "", "Estimate", "Std. Error", "t value", "Pr(>|t|)");
            for c in &r.coefficients {
                let _ = writeln!(
                    s,
                    "{:<12} {:>12} {:>12} {:>10} {:>10}",
                    c.name,
                    num4(c.estimate),
                    num4(c.std_error),
                    num4(c.t_value),
                    num4(c.p_value)
                );
            }
            let _ = writeln!(
                s,
                "\nResidual standard error: {} on {} degrees of freedom",
                num4(r.residual_se.unwrap_or(0.0)),
                format_number(r.df.unwrap_or(0.0))
            );
            let _ = writeln!(s, "Multiple R-squared: {}", num4(r.r_squared.unwrap_or(0.0)));
        }
        _ => {
            let mut line = format!("{} = {}", r.statistic.0, num4(r.statistic.1));
            if let Some(df) = r.df {
                let _ = write!(line, ", df = {}", num4(df));
            }
            if let Some(n) = r.trials {
                let _ = write!(line, ", number of trials = {n}");
            }
            let _ = writeln!(s, "{line}, {}", p_text(r.p_value));
            let _ = writeln!(
                s,
                "alternative hypothesis: true {} is not equal to {}",
                r.null_value.0,
                format_number(r.null_value.1)
            );
            let _ = writeln!(s, "{} percent confidence interval:", format_number(r.conf_level * 100.0));
            let _ = writeln!(s, " {} {}", num4(r.conf_int.0), num4(r.conf_int.1));
            let _ = writeln!(s, "sample estimates:");
            for (name, v) in &r.estimate {
                let _ = writeln!(s, "{name}: {}", num4(*v));
            }
        }
    }
    format!("<pre>{}</pre>", escape_text(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::stats;
    use crate::table::Column;

    fn numbers(n: usize) -> ColumnData {
        ColumnData::Numeric((1..=n).map(|i| i as f64 * 1.5).collect())
    }

    #[test]
    fn vector_table_shape() {
        let html = render_vector_table(&numbers(23), 10).unwrap();
        assert_eq!(html.matches("<tr>").count(), 3);
        let last = html.lines().nth(3).unwrap();
        assert_eq!(last.matches("<td></td>").count(), 7);
        assert_eq!(last.matches("<td ").count(), 3);
        let html = render_vector_table(&numbers(50), 10).unwrap();
        assert_eq!(html.matches("<tr>").count(), 5);
        assert!(!html.contains("<td></td>"));
        assert_eq!(render_vector_table(&ColumnData::Numeric(vec![]), 10), Err(HtmlError::EmptyVector));
        assert_eq!(render_vector_table(&numbers(3), 0), Err(HtmlError::ZeroColumns));
    }

    #[test]
    fn projection_reads_values_in_order() {
        let html = render_vector_table(&numbers(23), 10).unwrap();
        let text = text_projection(&html);
        let cells: Vec<&str> = text.split(['\t', '\n']).filter(|c| !c.is_empty()).collect();
        let want: Vec<String> = (1..=23).map(|i| format_number(i as f64 * 1.5)).collect();
        assert_eq!(cells, want);
    }

    #[test]
    fn data_table_header_and_alignment() {
        let t = DataTable::new(vec![
            Column::numeric(Some("a"), vec![1.0, 2.0, 3.0]),
            Column::numeric(Some("b"), vec![4.0, 5.0, 6.0]),
        ])
        .unwrap();
        let html = render_data_table(&t);
        assert_eq!(html.matches("<th").count(), 2);
        assert_eq!(html.matches("<tr>").count(), 4);
        assert!(html.contains("text-align:right\">6</td>"));

        let mixed = DataTable::new(vec![
            Column::text(Some("brand"), vec!["Coca-Cola".into(), "Pepsi".into()]),
            Column::numeric(Some("n"), vec![3.0, 4.0]),
        ])
        .unwrap();
        let html = render_data_table(&mixed);
        assert!(html.contains("text-align:left\">Pepsi</td><td style=\"text-align:right\">4</td>"));

        let single = DataTable::new(vec![Column::text(Some("x"), vec!["Coca-Cola".into(), "Pepsi".into(), "Coca-Cola".into()])]).unwrap();
        let html = render_data_table(&single);
        assert_eq!(html.matches("<tr><td").count(), 3);
    }

    #[test]
    fn braces_are_escaped() {
        let t = DataTable::vector(ColumnData::Text(vec!["{1:NM:=5}".into(), "a<b".into()]));
        let html = render_data_table(&t);
        assert!(!html.contains('{') && !html.contains('}'));
        assert!(html.contains("&#123;1:NM:=5&#125;") && html.contains("a&lt;b"));
        assert_eq!(text_projection(&html), "{1:NM:=5}\na<b");
    }

    #[test]
    fn entity_decoding() {
        assert_eq!(decode_entities("a&amp;b &#123;&#x7d; &bogus; &"), "a&b {} &bogus; &");
    }

    #[test]
    fn png_embedding() {
        // Smallest transparent 1x1 PNG.
        let tiny: [u8; 67] = [
            0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00,
            0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00, 0x00, 0x1f, 0x15, 0xc4, 0x89, 0x00,
            0x00, 0x00, 0x0a, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x00, 0x01, 0x00, 0x00, 0x05, 0x00, 0x01,
            0x0d, 0x0a, 0x2d, 0xb4, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
        ];
        let html = embed_png(&tiny).unwrap();
        let prefix = "<img src=\"data:image/png;base64,";
        assert_eq!(html.len(), prefix.len() + 4 * 67usize.div_ceil(3) + 2);
        let payload = &html[prefix.len()..html.len() - 2];
        let back = base64::engine::general_purpose::STANDARD.decode(payload).unwrap();
        assert_eq!(back, tiny);
        assert_eq!(embed_png(&tiny[..5]), Err(HtmlError::NotPng));
    }

    #[test]
    fn stat_blocks() {
        let r = stats::t_one_sample(&[9.0, 10.0, 11.0], 10.0, 0.95, "x").unwrap();
        let html = render_stat_block(&r);
        assert!(html.starts_with("<pre>") && html.ends_with("</pre>"));
        assert!(html.contains("t = 0") && html.contains("p-value = 1"));
        let r = stats::binom_exact(5, 10, 0.5, 0.95, None).unwrap();
        assert!(render_stat_block(&r).contains("p-value = 1"));
        let r = stats::simple_regression(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.1, 5.9, 8.2], "y ~ x").unwrap();
        let html = render_stat_block(&r);
        assert!(html.contains("(Intercept)") && html.contains("Std. Error"));
    }
}
