mod common;

use common::synth::{pair, toy_parallel};
use corpusforge::lang::Lang;
use corpusforge::lexmodel::{
    cross_entropy, cross_entropy_text, train_model1, train_model1_observed, Alignment, LexTable, Origin, DEFAULT_FLOOR,
};
use proptest::prelude::*;

fn dump(t: &LexTable) -> Vec<u8> {
    let mut buf = Vec::new();
    t.write_tsv(&mut buf).unwrap();
    buf
}

#[test]
fn log_likelihood_never_decreases() {
    for seed in [1, 2, 3] {
        let corpus = toy_parallel(seed, 200);
        let mut deviations = Vec::new();
        let trained = train_model1_observed(&corpus, 10, |_, t| deviations.push(t.max_row_deviation())).unwrap();
        assert_eq!(trained.log_likelihoods.len(), 11);
        for w in trained.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "seed {seed}: {} -> {}", w[0], w[1]);
        }
        assert!(deviations.iter().all(|&d| d <= 1e-9), "seed {seed}: {deviations:?}");
    }
}

#[test]
fn corpus_cross_entropy_never_increases() {
    // total nats over total target words, under the same likelihood EM climbs
    let corpus = toy_parallel(9, 150);
    let words: usize = corpus.iter().map(|p| p.tgt.text.split_whitespace().count()).sum();
    let mut previous = f64::INFINITY;
    for iters in 1..=8 {
        let table = train_model1(&corpus, iters).unwrap().table;
        let total: f64 = corpus
            .iter()
            .map(|p| {
                let n = p.tgt.text.split_whitespace().count() as f64;
                n * cross_entropy(&p.src, &p.tgt, &table, DEFAULT_FLOOR).unwrap().value()
            })
            .sum();
        let mean = total / words as f64;
        assert!(mean <= previous + 1e-12, "{iters}: {mean} > {previous}");
        previous = mean;
    }
}

#[test]
fn tables_identical_across_thread_counts() {
    let corpus = toy_parallel(4, 200);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| dump(&train_model1(&corpus, 6).unwrap().table))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn empty_sides_are_skipped() {
    let mut corpus = toy_parallel(5, 10);
    let mut bad = corpus[0].clone();
    bad.tgt.text = String::new();
    corpus.push(bad);
    let trained = train_model1(&corpus, 2).unwrap();
    assert_eq!(trained.skipped, 1);
}

#[test]
fn das_haus_two_word_target() {
    let t = LexTable::from_entries(Lang::En, Lang::Am, [("house", "das", 0.5), ("house", "haus", 0.5)]);
    let src = pair("house", "das haus", Lang::En, Lang::Am, Origin::Seed);
    let h = cross_entropy(&src.src, &src.tgt, &t, DEFAULT_FLOOR).unwrap();
    assert!((h.value() - std::f64::consts::LN_2).abs() < 1e-12);
}

fn small_table() -> LexTable {
    LexTable::from_entries(
        Lang::En,
        Lang::Am,
        [("a", "x", 0.7), ("a", "y", 0.3), ("b", "y", 1.0), ("c", "x", 0.2), ("c", "z", 0.8)],
    )
}

proptest! {
    #[test]
    fn cross_entropy_is_nonnegative_and_finite(
        src in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "q"]), 1..6),
        tgt in prop::collection::vec(prop::sample::select(vec!["x", "y", "z", "w"]), 1..6),
        uniform in any::<bool>(),
    ) {
        let alignment = if uniform { Alignment::Uniform } else { Alignment::BestLink };
        let h = cross_entropy_text(&src.join(" "), &tgt.join(" "), &small_table(), DEFAULT_FLOOR, alignment).unwrap();
        prop_assert!(h.value() >= 0.0 && h.value().is_finite());
        prop_assert!(h.value() <= -DEFAULT_FLOOR.ln() + 1e-9);
    }

    #[test]
    fn tsv_round_trip_preserves_probabilities(seed in 0u64..50) {
        let table = train_model1(&toy_parallel(seed, 30), 3).unwrap().table;
        let back = LexTable::read_tsv(&dump(&table)[..]).unwrap();
        prop_assert_eq!(dump(&back), dump(&table));
        prop_assert!(back.max_row_deviation() < 1e-9);
    }
}
