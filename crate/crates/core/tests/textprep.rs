mod common;

use std::collections::HashSet;

use common::fixtures::{ENGLISH_SPLITS, ETHIOPIC_SPLITS};
use common::{shingle_jaccard, HELD_OUT_AM, HELD_OUT_EN, HELD_OUT_TI};
use corpusforge::lang::Lang;
use corpusforge::textprep::langid::{char_ngrams, LangProfile, Script};
use corpusforge::textprep::minhash::MinHasher;
use corpusforge::textprep::{dedup_exact, dedup_near, detect_language, normalize, split_text, LangIdError, Sentence};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ethiopic_split_fixtures() {
    for (input, expected) in ETHIOPIC_SPLITS {
        let lang = if input.contains("ኣ") { Lang::Ti } else { Lang::Am };
        assert_eq!(split_text(&normalize(input), lang), *expected, "input {input:?}");
    }
}

#[test]
fn english_split_fixtures() {
    for (input, expected) in ENGLISH_SPLITS {
        assert_eq!(split_text(&normalize(input), Lang::En), *expected, "input {input:?}");
    }
}

fn without_whitespace(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn text_strategy() -> impl Strategy<Value = String> {
    let atoms = prop::sample::select(vec![
        "a", "b", "Dr", "U", "S", "e", "g", "ሰ", "ላ", "ም", "፡", "።", "፧", "፨", ".", "!", "?", "\"", ")", "»", " ", " ", "\n", "\t",
        "3", "p", "m",
    ]);
    prop::collection::vec(atoms, 0..60).prop_map(|v| normalize(&v.concat()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn splitting_preserves_characters(text in text_strategy()) {
        for lang in [Lang::Am, Lang::En] {
            let parts = split_text(&text, lang);
            prop_assert!(parts.iter().all(|p| !p.is_empty() && p.trim() == p));
            prop_assert_eq!(without_whitespace(&parts.join(" ")), without_whitespace(&text));
        }
    }
}

#[test]
fn held_out_paragraphs_are_identified() {
    let profiles = LangProfile::bundled();
    for (texts, lang, script) in [
        (HELD_OUT_AM, Lang::Am, Script::Ethiopic),
        (HELD_OUT_TI, Lang::Ti, Script::Ethiopic),
        (HELD_OUT_EN, Lang::En, Script::Latin),
    ] {
        for text in texts {
            let p = detect_language(text, &profiles).unwrap();
            assert_eq!((p.lang, p.script), (lang, script), "{text}");
            assert!(p.confidence > 0.5 && p.confidence <= 1.0);
        }
    }
}

#[test]
fn langid_errors() {
    let profiles = LangProfile::bundled();
    assert!(matches!(detect_language("", &profiles), Err(LangIdError::EmptyInput)));
    assert_eq!(detect_language("  \n ", &profiles).unwrap_err().to_string(), "empty input");
    assert!(matches!(detect_language("hello", &[]), Err(LangIdError::NoProfiles)));
}

#[test]
fn bundled_profiles_round_trip() {
    for p in LangProfile::bundled() {
        let mut buf = Vec::new();
        p.write_jsonl(&mut buf).unwrap();
        let back = LangProfile::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back.lang, p.lang);
        let text = "ሰላም ዓለም hello";
        assert!((back.log_likelihood(&char_ngrams(text)) - p.log_likelihood(&char_ngrams(text))).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn ethiopic_text_is_never_english(chars in prop::collection::vec(0x1200u32..0x1358, 1..40)) {
        let text: String = chars.into_iter().filter_map(char::from_u32).filter(|c| c.is_alphabetic()).collect();
        prop_assume!(!text.is_empty());
        let p = detect_language(&text, &LangProfile::bundled()).unwrap();
        prop_assert_ne!(p.lang, Lang::En);
        prop_assert_eq!(p.script, Script::Ethiopic);
    }

    #[test]
    fn exact_dedup_idempotent_and_complete(picks in prop::collection::vec(0usize..12, 0..80)) {
        let sents: Vec<Sentence> = picks
            .iter()
            .enumerate()
            .map(|(i, k)| Sentence::new("d", i, &format!("sentence number {k}"), Lang::En).unwrap())
            .collect();
        let once = dedup_exact(sents.clone());
        prop_assert_eq!(dedup_exact(once.clone()), once.clone());
        let distinct: HashSet<&str> = sents.iter().map(|s| s.text.as_str()).collect();
        prop_assert_eq!(once.len(), distinct.len());
    }

    #[test]
    fn near_dedup_idempotent(picks in prop::collection::vec(0usize..6, 0..30), threshold in 0.3f64..1.0) {
        let sents: Vec<Sentence> = picks
            .iter()
            .enumerate()
            .map(|(i, k)| Sentence::new("d", i, &format!("shared words {}{}", "ab".repeat(*k), k), Lang::En).unwrap())
            .collect();
        let once = dedup_near(sents, threshold).unwrap();
        prop_assert_eq!(dedup_near(once.clone(), threshold).unwrap(), once);
    }

    #[test]
    fn identical_strings_identical_signatures(text in ".{5,40}", seed in any::<u64>()) {
        let h = MinHasher::new(64, 5, seed);
        prop_assert_eq!(h.signature(&text), h.signature(&text));
    }
}

#[test]
fn minhash_estimate_near_exact_jaccard() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let hasher = MinHasher::default();
    let alphabet: Vec<char> = "abcdefghij ሰላምዓለ".chars().collect();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let base: String = (0..rng.random_range(20..60)).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        let chars: Vec<char> = base.chars().collect();
        // edit a random fraction of positions so pairs span the whole range
        let rate = rng.random_range(0.0..0.6);
        let other: String = chars
            .iter()
            .map(|&c| if rng.random_bool(rate) { alphabet[rng.random_range(0..alphabet.len())] } else { c })
            .collect();
        let exact = shingle_jaccard(&base, &other, 5);
        let est = hasher.signature(&base).unwrap().jaccard(&hasher.signature(&other).unwrap());
        worst = worst.max((exact - est).abs());
    }
    assert!(worst <= 0.15, "worst deviation {worst}");
}

#[test]
fn near_dedup_half_overlap_is_kept() {
    // 9 shingles each, the 6 inside "abcdefghij" shared: 6 / 12
    let (a, b) = ("abcdefghijklm", "abcdefghijXYZ");
    assert_eq!(shingle_jaccard(a, b, 5), 0.5);
    let sig = |s: &str| MinHasher::default().signature(s).unwrap();
    assert!((sig(a).jaccard(&sig(b)) - 0.5).abs() <= 0.15);
    let kept = dedup_near(
        vec![Sentence::new("d", 0, a, Lang::En).unwrap(), Sentence::new("d", 1, b, Lang::En).unwrap()],
        0.8,
    )
    .unwrap();
    assert_eq!(kept.len(), 2);
}
