mod common;

use common::*;
use interfere_core::{locate_span, Error};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Golden {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    text: String,
    ids: Vec<u32>,
}

fn golden() -> Golden {
    let text = std::fs::read_to_string(data_dir().join("tokenizer_golden.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn ids_match_reference_tokenizer() {
    let tok = gpt2_tokenizer();
    assert_eq!(tok.vocab_size(), 50257);
    for case in golden().cases {
        assert_eq!(tok.encode_ids(&case.text), case.ids, "text {:?}", case.text);
    }
}

#[test]
fn golden_ids_decode_to_source() {
    let tok = gpt2_tokenizer();
    for case in golden().cases {
        assert_eq!(tok.decode(&case.ids).unwrap(), case.text);
    }
}

#[test]
fn slogan_sentence() {
    let tok = gpt2_tokenizer();
    let text = "The slogan on the posters were designed to get attention.";
    assert_eq!(
        tok.encode_ids(text),
        vec![464, 23796, 319, 262, 19379, 547, 3562, 284, 651, 3241, 13]
    );
    let spans = tok.encode(text);
    let start = text.find("were").unwrap();
    assert_eq!(locate_span(&spans, start..start + 4).unwrap(), 5..6);
    assert_eq!((spans[5].byte_start, spans[5].byte_end), (start - 1, start + 4));
}

#[test]
fn themselves_in_reflexive_sentence() {
    let tok = gpt2_tokenizer();
    let text =
        "The basketball coach who trained the star players usually blamed themselves for the loss.";
    let spans = tok.encode(text);
    let ids: Vec<u32> = spans.iter().map(|s| s.token_id).collect();
    let reference = &golden().cases[2];
    assert_eq!(reference.text, text);
    assert_eq!(ids, reference.ids);
    let start = text.find("themselves").unwrap();
    let range = locate_span(&spans, start..start + "themselves".len()).unwrap();
    // " themselves" is a single GPT-2 token, the 11th of the sentence
    assert_eq!(range, 10..11);
    assert_eq!(tok.decode(&ids[range]).unwrap(), " themselves");
}

#[test]
fn empty_text() {
    let tok = gpt2_tokenizer();
    assert!(tok.encode("").is_empty());
    assert_eq!(tok.decode(&[]).unwrap(), "");
}

#[test]
fn multibyte_round_trip() {
    let tok = gpt2_tokenizer();
    let s = "naïve déjà-vu";
    assert_eq!(tok.decode(&tok.encode_ids(s)).unwrap(), s);
}

#[test]
fn decode_rejects_unknown_id() {
    let tok = gpt2_tokenizer();
    assert!(matches!(
        tok.decode(&[50257]),
        Err(Error::TokenOutOfRange { id: 50257, .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn decode_inverts_encode(s in "\\PC{0,40}") {
        let tok = gpt2_tokenizer();
        let ids = tok.encode_ids(&s);
        prop_assert_eq!(tok.decode_bytes(&ids).unwrap(), s.as_bytes().to_vec());
    }

    #[test]
    fn spans_tile_the_text(s in "[ a-zA-Z0-9.,'éß\\n\\t🦀]{0,60}") {
        let tok = gpt2_tokenizer();
        let spans = tok.encode(&s);
        let mut pos = 0;
        for sp in &spans {
            prop_assert_eq!(sp.byte_start, pos);
            prop_assert!(sp.byte_end > sp.byte_start);
            prop_assert_eq!(tok.token_bytes(sp.token_id).unwrap(), &s.as_bytes()[sp.byte_start..sp.byte_end]);
            pos = sp.byte_end;
        }
        prop_assert_eq!(pos, s.len());
        prop_assert_eq!(tok.encode(&s), spans);
    }
}
