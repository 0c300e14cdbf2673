mod common;

use common::*;
use interfere_core::corpus::{
    classify, count_patterns, load_annotated, write_counts_csv, CountTable, Number, Pattern,
};
use proptest::prelude::*;

#[test]
fn hand_counted_file() {
    let s = load_annotated(data_dir().join("agreement_errors_10.jsonl")).unwrap();
    assert_eq!(s.len(), 10);
    let t = count_patterns(&s).unwrap();
    assert_eq!(
        t,
        CountTable {
            sg_interfering: 4,
            sg_non_interfering: 1,
            pl_interfering: 3,
            pl_non_interfering: 1,
            excluded: 1,
            multi_distractor: 1,
        }
    );
    assert_eq!(t.counted(), 9);
}

#[test]
fn agreement_errors_241_file() {
    let s = load_annotated(data_dir().join("agreement_errors_241.jsonl")).unwrap();
    let t = count_patterns(&s).unwrap();
    assert_eq!(
        [
            t.get(Number::Sg, Pattern::Interfering),
            t.get(Number::Sg, Pattern::NonInterfering),
            t.get(Number::Pl, Pattern::Interfering),
            t.get(Number::Pl, Pattern::NonInterfering),
        ],
        [80, 39, 71, 51]
    );
    assert_eq!(t.counted(), 241);
    assert!((t.ratio(Number::Sg).unwrap() - 2.05).abs() < 0.01);
}

#[test]
fn csv_output() {
    let s = load_annotated(data_dir().join("agreement_errors_241.jsonl")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("counts.csv");
    write_counts_csv(&p, &count_patterns(&s).unwrap()).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "subject_number,interfering,non_interfering,ratio");
    assert!(lines[1].starts_with("sg,80,39,2.05"));
    assert!(lines[2].starts_with("pl,71,51,1.39"));
}

#[test]
fn classification_ignores_text() {
    let mut s = load_annotated(data_dir().join("agreement_errors_10.jsonl")).unwrap();
    let before: Vec<_> = s.iter().map(|x| classify(x).unwrap()).collect();
    for x in &mut s {
        x.text = "unrelated".into();
    }
    let after: Vec<_> = s.iter().map(|x| classify(x).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn grammatical_sentence_is_an_error() {
    let mut s = load_annotated(data_dir().join("agreement_errors_10.jsonl")).unwrap();
    s[3].verb_number = s[3].subject_number;
    assert!(count_patterns(&s).is_err());
}

proptest! {
    #[test]
    fn counting_is_additive_and_order_free(split in 0usize..=241, seed in any::<u64>()) {
        let s = load_annotated(data_dir().join("agreement_errors_241.jsonl")).unwrap();
        let whole = count_patterns(&s).unwrap();
        let parts = count_patterns(&s[..split]).unwrap() + count_patterns(&s[split..]).unwrap();
        prop_assert_eq!(whole, parts);
        let mut shuffled = s.clone();
        let mut x = seed;
        for i in (1..shuffled.len()).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (x >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(count_patterns(&shuffled).unwrap(), whole);
    }
}
