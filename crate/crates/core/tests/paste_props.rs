use proptest::prelude::*;
use quizforge_core::htmlgen::{render_vector_table, text_projection};
use quizforge_core::numfmt::{format_number, parse_number};
use quizforge_core::pastedata::{parse_pasted, to_csv};
use quizforge_core::table::{ColumnData, DataTable};

fn canonical_number() -> impl Strategy<Value = f64> {
    (-99_999_999i64..=99_999_999, 0u32..=4).prop_map(|(m, k)| parse_number(&format_number(m as f64 / 10f64.powi(k as i32))).unwrap())
}

/// Text cells that do not read as numbers. A row holding a single cell
/// carries no tab, so cells can't hold whitespace.
fn text_cell() -> impl Strategy<Value = String> {
    "[a-zA-Z_][a-zA-Z0-9_{}&<>\"'-]{0,10}"
}

fn vector() -> impl Strategy<Value = ColumnData> {
    prop_oneof![
        proptest::collection::vec(canonical_number(), 1..500).prop_map(ColumnData::Numeric),
        proptest::collection::vec(text_cell(), 1..500).prop_map(ColumnData::Text),
    ]
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn vector_round_trip(x in vector(), ncol in 1usize..=12) {
        let html = render_vector_table(&x, ncol).unwrap();
        let t = parse_pasted(&text_projection(&html)).unwrap();
        prop_assert!(t.is_vector());
        prop_assert_eq!(&t.columns()[0].data, &x);
        let rows = csv_rows(&to_csv(&t));
        let cells: Vec<String> = (0..x.len()).map(|i| x.cell(i)).collect();
        prop_assert_eq!(rows.into_iter().flatten().collect::<Vec<_>>(), cells);
    }

    #[test]
    fn spaces_and_tabs_agree(rows in proptest::collection::vec(proptest::collection::vec(canonical_number(), 3), 1..20)) {
        let with = |sep: &str| {
            let body: Vec<String> = rows.iter().map(|r| r.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(sep)).collect();
            format!("a{sep}b{sep}c\n{}", body.join("\n"))
        };
        let t = parse_pasted(&with("\t")).unwrap();
        prop_assert_eq!(&t, &parse_pasted(&with("  ")).unwrap());
        prop_assert_eq!(t.ncols(), 3);
        let back = csv_rows(&to_csv(&t));
        prop_assert_eq!(&back[0], &vec!["a".to_string(), "b".into(), "c".into()]);
        prop_assert_eq!(back.len(), rows.len() + 1);
    }

    #[test]
    fn mixed_columns_stay_text(nums in proptest::collection::vec(canonical_number(), 1..10), word in "[a-z]{2,6}") {
        let mut lines: Vec<String> = nums.iter().map(|v| format!("{}\t{}", word, format_number(*v))).collect();
        lines.push(format!("{}\t{}", format_number(nums[0]), word));
        let t = parse_pasted(&format!("k\tv\n{}", lines.join("\n"))).unwrap();
        prop_assert!(t.columns().iter().all(|c| !c.data.is_numeric()));
    }
}

#[test]
fn headed_table_csv_matches_reader() {
    let t = parse_pasted("name score\nann 1.5\nbob 2\n").unwrap();
    assert_eq!(to_csv(&t), "name,score\r\nann,1.5\r\nbob,2\r\n");
    let _: &DataTable = &t;
}
