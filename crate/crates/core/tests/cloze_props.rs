use proptest::prelude::*;
use quizforge_core::cloze::{
    encode_mc, encode_nm, encode_sa, grade, parse_cloze, Answer, ClozeString, Kind, SubQuestion,
};
use quizforge_core::numfmt::{format_number, parse_number};

/// Numbers that survive formatting unchanged.
fn canonical_number() -> impl Strategy<Value = f64> {
    (-999_999i64..=999_999, 0u32..=6).prop_map(|(m, k)| parse_number(&format_number(m as f64 / 10f64.powi(k as i32))).unwrap())
}

const ANY_TEXT: &str = "[a-zA-Z0-9 ~#%}{=\\\\*:.-]{1,12}";
/// Text a student can type back verbatim: no wildcards or whitespace.
const TYPABLE_TEXT: &str = "[a-zA-Z0-9~#%}{=\\\\:.-]{1,12}";

fn weights(n: usize) -> impl Strategy<Value = Vec<u32>> {
    (proptest::collection::vec(0u32..=100, n), 0..n).prop_map(|(mut w, i)| {
        w[i] = 100;
        w
    })
}

fn subquestion() -> impl Strategy<Value = SubQuestion> {
    subquestion_over(ANY_TEXT)
}

fn subquestion_over(text: &'static str) -> impl Strategy<Value = SubQuestion> {
    let kind = prop_oneof![
        Just(Kind::Numerical),
        Just(Kind::MultiChoice),
        Just(Kind::ShortAnswer),
        Just(Kind::ShortAnswerCase)
    ];
    (kind, 1u32..=10, 1usize..=5).prop_flat_map(move |(kind, points, n)| {
        let answers = proptest::collection::vec((canonical_number(), canonical_number(), text), n);
        (weights(n), answers).prop_map(move |(w, raw)| {
            let answers = w
                .iter()
                .zip(raw)
                .map(|(&w, (x, tol, text))| match kind {
                    Kind::Numerical => Answer::numeric(w, x, tol.abs()),
                    _ => Answer::text(w, text),
                })
                .collect();
            SubQuestion::new(kind, points, answers).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn encode_parse_round_trip(sub in subquestion()) {
        let wire = sub.encode();
        let back = wire.parse().unwrap();
        prop_assert_eq!(&back, &sub);
        prop_assert_eq!(back.encode(), wire.clone());
        let parsed = parse_cloze(&format!("before {} after", wire));
        prop_assert!(parsed.is_clean());
        prop_assert_eq!(parsed.subquestions, vec![sub]);
    }

    #[test]
    fn grade_ignores_points(sub in subquestion(), points in 1u32..=50, resp in "[a-z0-9. -]{0,8}") {
        let other = SubQuestion::new(sub.kind(), points, sub.answers().to_vec()).unwrap();
        prop_assert_eq!(grade(&sub, &resp), grade(&other, &resp));
    }

    #[test]
    fn full_credit_response_scores_one(sub in subquestion_over(TYPABLE_TEXT)) {
        prop_assert_eq!(grade(&sub, &sub.full_credit_response()).fraction, 1.0);
    }

    #[test]
    fn max_weight_is_order_independent(sub in subquestion(), resp in "[a-z0-9.]{0,6}", seed in any::<u64>()) {
        let mut answers = sub.answers().to_vec();
        let n = answers.len();
        answers.rotate_left((seed % n as u64) as usize);
        answers.reverse();
        let shuffled = SubQuestion::new(sub.kind(), sub.points(), answers).unwrap();
        prop_assert_eq!(grade(&sub, &resp), grade(&shuffled, &resp));
    }

    #[test]
    fn nm_band_edges(target in canonical_number(), tol in 1u32..=1000, scale in 0i32..=4) {
        let tol = tol as f64 / 10f64.powi(scale);
        let tol = parse_number(&format_number(tol)).unwrap();
        let sub = encode_nm(&[target], &[100], &[tol], 1).unwrap().parse().unwrap();
        prop_assert_eq!(grade(&sub, &format_number(target)).fraction, 1.0);
        let edge = parse_number(&format_number(target + tol)).unwrap();
        if (edge - target).abs() <= tol {
            prop_assert!(grade(&sub, &format_number(edge)).fraction >= 1.0);
        }
        let eps = tol * 1e-6 + 1e-12;
        prop_assert_eq!(grade(&sub, &format!("{}", target + tol + eps * 4.0)).fraction, 0.0);
    }

    #[test]
    fn nested_bands_step_down(target in canonical_number(), inner in 1u32..=9) {
        let tight = inner as f64 / 100.0;
        let sub = encode_nm(&[target], &[100, 80], &[tight, 0.5], 1).unwrap().parse().unwrap();
        let just_out = format!("{}", target + tight + tight * 1e-6 + 1e-12 + 1e-9);
        let g = grade(&sub, &just_out).fraction;
        prop_assert!(g == 0.8, "{} -> {}", just_out, g);
    }

    #[test]
    fn sa_extra_whitespace_never_hurts(words in proptest::collection::vec("[a-z]{1,6}", 1..4), gaps in proptest::collection::vec("[ \t]{1,4}", 3)) {
        let phrase = words.join(" ");
        let sub = encode_sa(&[phrase.as_str()], &[100], true, 1).unwrap().parse().unwrap();
        let base = grade(&sub, &phrase).fraction;
        let spaced: String = words.iter().enumerate().map(|(i, w)| {
            if i == 0 { w.clone() } else { format!("{}{}", gaps[(i - 1) % gaps.len()], w) }
        }).collect();
        let padded = format!("  {} ", spaced);
        prop_assert!(grade(&sub, &padded).fraction >= base);
        prop_assert_eq!(base, 1.0);
    }
}

#[test]
fn reference_strings() {
    let (mc, _) = encode_mc(&["lower", "not equal to", "higher"], &[0, 0, 100], 1).unwrap();
    assert_eq!(mc.as_str(), "{1:MC:~%0%lower~%0%not equal to~%100%higher}");
    let nm = encode_nm(&[54.7], &[100, 80], &[0.1, 0.5], 2).unwrap();
    assert_eq!(nm.as_str(), "{2:NM:%100%54.7:0.1~%80%54.7:0.5}");
    let sa = encode_sa(&["correlation coefficient"], &[100], true, 1).unwrap();
    assert_eq!(sa.as_str(), "{1:SA:*correlation*coefficient*}");
}

#[test]
fn shorthand_is_canonicalized() {
    let wire: ClozeString = "{1:NM:=50}".parse().unwrap();
    assert_eq!(wire.as_str(), "{1:NM:%100%50:0}");
    let wire: ClozeString = "{1:MC:red~=blue}".parse().unwrap();
    assert_eq!(wire.as_str(), "{1:MC:~%0%red~%100%blue}");
}

#[test]
fn special_characters_are_escaped() {
    let sa = encode_sa(&["a}b~c#d%e"], &[100], false, 1).unwrap();
    assert_eq!(sa.as_str(), "{1:SAC:*a\\}b\\~c\\#d\\%e*}");
    let sub = sa.parse().unwrap();
    assert_eq!(grade(&sub, "a}b~c#d%e").fraction, 1.0);
}
