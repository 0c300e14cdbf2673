mod common;

use common::*;
use interfere_core::headfinder::{
    all_heads, compute_baseline, find_specialized, head_accuracy, score_heads,
    select_specialized, DependencyCorpus, ScoringOptions, Threshold, REFLEXIVE_RELATION,
};
use interfere_core::{locate_span, Error, HeadId};
use proptest::prelude::*;

const NOUNS: [&str; 12] = [
    "coach", "senator", "pilot", "doctor", "farmer", "teacher", "lawyer", "singer", "baker",
    "judge", "nurse", "driver",
];

fn reflexive_lines(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let a = NOUNS[i % NOUNS.len()];
            let b = NOUNS[(i + 5) % NOUNS.len()];
            let text = format!("The {a} near the {b}s blamed themselves for day {i}.");
            // antecedent "a" is word 1, "themselves" word 6
            format!(r#"{{"text": "{text}", "antecedent_word_index": 1, "anaphor_word_index": 6}}"#)
        })
        .collect()
}

fn write_corpus(lines: &[String]) -> (tempfile::TempDir, DependencyCorpus) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("refl.jsonl");
    std::fs::write(&path, lines.join("\n")).unwrap();
    let corpus = DependencyCorpus::from_reflexive_jsonl(&path).unwrap();
    (dir, corpus)
}

/// Token ids, governor anchor and a subtoken of the dependent for instance `i`.
fn site(corpus: &DependencyCorpus, i: usize) -> (Vec<u32>, usize, usize) {
    let inst = &corpus.instances[i];
    let s = &corpus.sentences[inst.sentence];
    let spans = gpt2_tokenizer().encode(&s.text);
    let gov = locate_span(&spans, s.words[inst.governor].clone()).unwrap();
    let dep = locate_span(&spans, s.words[inst.dependent].clone()).unwrap();
    (spans.iter().map(|t| t.token_id).collect(), gov.end - 1, dep.start)
}

/// Plants `head` on the dependent for the first `hits` instances and on the
/// token right before the governor anchor for the rest.
fn planted(corpus: &DependencyCorpus, head: HeadId, hits: usize) -> PlantedModel {
    let mut m = PlantedModel::new(4, 6, 1024);
    for i in 0..corpus.instances.len() {
        let (tokens, anchor, dep) = site(corpus, i);
        let key = if i < hits { dep } else { anchor - 1 };
        m.plant(tokens, head, anchor, key);
    }
    m
}

#[test]
fn always_right_head_scores_one() {
    let (_d, corpus) = write_corpus(&reflexive_lines(10));
    let head = HeadId::new(1, 5);
    let m = planted(&corpus, head, 10);
    let s = head_accuracy(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, head, Default::default())
        .unwrap();
    assert_eq!((s.hits, s.n_instances, s.accuracy), (10, 10, 1.0));
}

#[test]
fn seven_of_ten_scores_point_seven() {
    let (_d, corpus) = write_corpus(&reflexive_lines(10));
    let head = HeadId::new(3, 2);
    let m = planted(&corpus, head, 7);
    let s = head_accuracy(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, head, Default::default())
        .unwrap();
    assert_eq!(s.accuracy, 0.7);
}

#[test]
fn uniform_heads_pick_the_first_token() {
    // ties go to the lowest index, so a uniform row points at token 0
    let (_d, corpus) = write_corpus(&reflexive_lines(4));
    let m = PlantedModel::new(2, 2, 1024);
    let scores = score_heads(
        &m,
        gpt2_tokenizer(),
        &corpus,
        REFLEXIVE_RELATION,
        &all_heads(&m),
        Default::default(),
    )
    .unwrap();
    assert!(scores.scores.iter().all(|s| s.hits == 0 && s.n_instances == 4));
}

#[test]
fn planted_head_beats_baseline() {
    let (_d, corpus) = write_corpus(&reflexive_lines(10));
    let head = HeadId::new(2, 5);
    let m = planted(&corpus, head, 9);
    let threshold = Threshold::from_proportion(0.81);
    let found = find_specialized(
        &m,
        gpt2_tokenizer(),
        &corpus,
        REFLEXIVE_RELATION,
        threshold,
        Default::default(),
    )
    .unwrap();
    assert_eq!(found.specialized.len(), 1);
    assert_eq!(found.specialized[0].head_id(), head);
    assert_eq!(found.specialized[0].accuracy, 0.9);
    assert_eq!(found.all.scores.len(), 24);
}

#[test]
fn specialized_is_brute_force_filter() {
    let (_d, corpus) = write_corpus(&reflexive_lines(10));
    let mut m = PlantedModel::new(3, 3, 1024);
    for (k, head) in [HeadId::new(0, 1), HeadId::new(1, 2), HeadId::new(2, 0)].into_iter().enumerate() {
        for i in 0..10 {
            let (tokens, anchor, dep) = site(&corpus, i);
            let key = if i < 3 + 3 * k { dep } else { anchor - 1 };
            m.plant(tokens, head, anchor, key);
        }
    }
    let all = score_heads(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, &all_heads(&m), Default::default())
        .unwrap();
    for p in [0.0, 0.3, 0.5, 0.6, 0.7, 0.9] {
        let t = Threshold::from_proportion(p);
        let mut expected: Vec<_> = all
            .scores
            .iter()
            .filter(|s| s.hits > 0 && s.accuracy >= t.value)
            .map(|s| s.head_id())
            .collect();
        let mut got: Vec<_> = select_specialized(&all.scores, t).iter().map(|s| s.head_id()).collect();
        expected.sort();
        got.sort();
        assert_eq!(got, expected, "baseline {p}");
    }
}

#[test]
fn self_attention_is_excluded_unless_requested() {
    let lines: Vec<String> = ["Coaches blamed themselves.", "Pilots praised themselves."]
        .iter()
        .map(|t| format!(r#"{{"text": "{t}", "antecedent_word_index": 0, "anaphor_word_index": 2}}"#))
        .collect();
    let (_d, corpus) = write_corpus(&lines);
    let head = HeadId::new(0, 0);
    let mut m = PlantedModel::new(1, 1, 1024);
    for i in 0..2 {
        let (tokens, anchor, _) = site(&corpus, i);
        m.plant(tokens, head, anchor, anchor);
    }
    // without self the prior row is all zero and the argmax falls on token 0,
    // which is the antecedent here
    let s = head_accuracy(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, head, Default::default())
        .unwrap();
    assert_eq!(s.hits, 2);
    let opts = ScoringOptions {
        include_self: true,
        ..Default::default()
    };
    let s = head_accuracy(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, head, opts).unwrap();
    assert_eq!(s.hits, 0);
}

#[test]
fn overlong_sentences_are_skipped() {
    let (_d, corpus) = write_corpus(&reflexive_lines(5));
    let m = PlantedModel::new(1, 1, 12);
    let s = score_heads(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, &all_heads(&m), Default::default())
        .unwrap();
    let fits = corpus
        .sentences
        .iter()
        .filter(|s| gpt2_tokenizer().encode(&s.text).len() <= 12)
        .count();
    assert_eq!(s.skipped_sentences, 5 - fits);
    assert_eq!(s.scores[0].n_instances as usize, fits);
}

#[test]
fn unknown_relation_and_head() {
    let (_d, corpus) = write_corpus(&reflexive_lines(2));
    let m = PlantedModel::new(1, 1, 1024);
    assert!(matches!(
        score_heads(&m, gpt2_tokenizer(), &corpus, "nsubj", &[HeadId::new(0, 0)], Default::default()),
        Err(Error::RelationAbsent(_))
    ));
    assert!(matches!(
        score_heads(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, &[HeadId::new(1, 0)], Default::default()),
        Err(Error::HeadOutOfRange { .. })
    ));
}

#[test]
fn reflexive_baseline() {
    let (_d, corpus) = write_corpus(&reflexive_lines(6));
    let b = compute_baseline(&corpus, REFLEXIVE_RELATION, Default::default()).unwrap();
    assert_eq!((b.offset, b.count, b.total), (-5, 6, 6));
}

#[test]
fn bad_reflexive_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(
        &path,
        "{\"text\": \"a b\", \"antecedent_word_index\": 0, \"anaphor_word_index\": 1}\n\
         {\"text\": \"a b\", \"antecedent_word_index\": 0, \"anaphor_word_index\": 2}\n",
    )
    .unwrap();
    assert!(matches!(
        DependencyCorpus::from_reflexive_jsonl(&path),
        Err(Error::Parse { line: 2, .. })
    ));
}

#[test]
fn conllu_corpus_baseline() {
    let text = "\
1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_
2\tkeys\tkey\tNOUN\t_\t_\t5\tnsubj\t_\t_
3\tto\tto\tADP\t_\t_\t4\tcase\t_\t_
4\tcabinets\tcabinet\tNOUN\t_\t_\t2\tnmod\t_\t_
5\tare\tbe\tAUX\t_\t_\t0\troot\t_\tSpaceAfter=No
6\t.\t.\tPUNCT\t_\t_\t5\tpunct\t_\t_

1\tDogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_
2\tbark\tbark\tVERB\t_\t_\t0\troot\t_\t_

1\tCats\tcat\tNOUN\t_\t_\t2\tnsubj\t_\t_
2\tsleep\tsleep\tVERB\t_\t_\t0\troot\t_\t_
";
    let parsed = interfere_core::headfinder::parse_conllu(text.as_bytes(), "t").unwrap();
    let corpus = DependencyCorpus::from_conllu(&parsed);
    assert_eq!(corpus.sentences[0].text, "The keys to cabinets are.");
    assert_eq!(corpus.instances_of("nsubj").count(), 3);
    let b = compute_baseline(&corpus, "nsubj", Default::default()).unwrap();
    assert_eq!((b.offset, b.count, b.total), (-1, 2, 3));
    assert_eq!(b.threshold(), Threshold::exact(2, 3));

    let head = HeadId::new(0, 0);
    let mut m = PlantedModel::new(1, 1, 1024);
    for (i, inst) in corpus.instances.iter().enumerate() {
        if inst.relation == "nsubj" {
            let (tokens, anchor, dep) = site(&corpus, i);
            m.plant(tokens, head, anchor, dep);
        }
    }
    let s = head_accuracy(&m, gpt2_tokenizer(), &corpus, "nsubj", head, Default::default()).unwrap();
    assert_eq!(s.accuracy, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scores_ignore_corpus_order(seed in any::<u64>(), hits in 0usize..=10) {
        let lines = reflexive_lines(10);
        let (_d, corpus) = write_corpus(&lines);
        let head = HeadId::new(1, 1);
        let m = planted(&corpus, head, hits);
        let mut shuffled = lines.clone();
        let mut x = seed;
        for i in (1..shuffled.len()).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (x >> 33) as usize % (i + 1));
        }
        let (_d2, corpus2) = write_corpus(&shuffled);
        let heads = all_heads(&m);
        let a = score_heads(&m, gpt2_tokenizer(), &corpus, REFLEXIVE_RELATION, &heads, Default::default()).unwrap();
        let b = score_heads(&m, gpt2_tokenizer(), &corpus2, REFLEXIVE_RELATION, &heads, Default::default()).unwrap();
        prop_assert_eq!(&a.scores, &b.scores);
        prop_assert_eq!(a.scores[6 + 1].hits as usize, hits);
    }
}
