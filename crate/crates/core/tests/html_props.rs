use proptest::prelude::*;
use quizforge_core::cloze::parse_cloze;
use quizforge_core::expr::stats::t_one_sample;
use quizforge_core::htmlgen::{embed_png, render_chart, render_data_table, render_stat_block, render_vector_table};
use quizforge_core::htmlgen::{ChartOptions, ChartSpec};
use quizforge_core::table::{Column, ColumnData, DataTable};

/// Every tag closes in order and no raw brace survives.
fn assert_balanced(html: &str) {
    let wrapped = format!("<root>{html}</root>");
    roxmltree::Document::parse(&wrapped.replace("<br>", "<br/>")).unwrap_or_else(|e| panic!("{e}: {html}"));
    assert!(!html.contains('{') && !html.contains('}'), "{html}");
    assert!(parse_cloze(html).subquestions.is_empty());
}

proptest! {
    #[test]
    fn tables_are_well_formed(cells in proptest::collection::vec("[ -~]{1,8}", 1..60), ncol in 1usize..12) {
        assert_balanced(&render_vector_table(&ColumnData::Text(cells.clone()), ncol).unwrap());
        let t = DataTable::new(vec![
            Column::text(Some("n{1}"), cells.clone()),
            Column::text(None, cells.iter().rev().cloned().collect()),
        ]).unwrap();
        assert_balanced(&render_data_table(&t));
    }

    #[test]
    fn png_embedding_uses_base64_alphabet(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        let mut png = b"\x89PNG\r\n\x1a\n".to_vec();
        png.extend(bytes);
        let tag = embed_png(&png).unwrap();
        let prefix = "<img src=\"data:image/png;base64,";
        prop_assert!(tag.starts_with(prefix) && tag.ends_with("\">"));
        let payload = &tag[prefix.len()..tag.len() - 2];
        prop_assert!(payload.chars().all(|c| c.is_ascii_alphanumeric() || "+/=".contains(c)));
    }
}

#[test]
fn stat_blocks_are_plain_text() {
    let r = t_one_sample(&[9.0, 10.0, 11.0], 10.0, 0.95, "x").unwrap();
    let html = render_stat_block(&r);
    assert!(html.contains("t = 0") && html.contains("p-value = 1"));
    assert_balanced(&html);
}

#[test]
fn charts_are_byte_stable() {
    let spec = ChartSpec::Scatter { x: vec![1.0, 2.0, 3.5], y: vec![2.0, 1.0, 4.0] };
    let a = render_chart(&spec, &ChartOptions::default()).unwrap();
    assert_eq!(a, render_chart(&spec, &ChartOptions::default()).unwrap());
    let tag = embed_png(&a).unwrap();
    assert!(!tag.contains('{') && !tag.contains('}'));
}
