//! Synthetic bilingual data built from a random bijective lexicon, with the
//! true pairs known by construction.

use std::collections::HashSet;

use corpusforge::lang::Lang;
use corpusforge::lexmodel::{Origin, SentencePair};
use corpusforge::textprep::Sentence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Lexicon {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
}

impl Lexicon {
    /// `size` distinct Latin words paired one-to-one with `size` distinct
    /// Ethiopic words.
    pub fn random(size: usize, rng: &mut ChaCha8Rng) -> Self {
        let latin = |rng: &mut ChaCha8Rng| -> String {
            let len = rng.random_range(3..=8);
            (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
        };
        let ethiopic = |rng: &mut ChaCha8Rng| -> String {
            let len = rng.random_range(3..=6);
            let mut w = String::new();
            while w.chars().count() < len {
                // syllables U+1200..U+1357; the block has unassigned gaps
                let c = char::from_u32(rng.random_range(0x1200..0x1358)).unwrap();
                if c.is_alphabetic() {
                    w.push(c);
                }
            }
            w
        };
        Self {
            src: distinct(size, rng, latin),
            tgt: distinct(size, rng, ethiopic),
        }
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn src_sentence(&self, ids: &[usize]) -> String {
        ids.iter().map(|&k| self.src[k].as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn tgt_sentence(&self, ids: &[usize]) -> String {
        ids.iter().map(|&k| self.tgt[k].as_str()).collect::<Vec<_>>().join(" ")
    }
}

fn distinct(n: usize, rng: &mut ChaCha8Rng, mut make: impl FnMut(&mut ChaCha8Rng) -> String) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = make(rng);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn random_ids(rng: &mut ChaCha8Rng, vocab: usize, min: usize, max: usize) -> Vec<usize> {
    let len = rng.random_range(min..=max);
    (0..len).map(|_| rng.random_range(0..vocab)).collect()
}

pub fn pair(src: &str, tgt: &str, src_lang: Lang, tgt_lang: Lang, origin: Origin) -> SentencePair {
    SentencePair::new(
        Sentence::new("synthetic", 0, src, src_lang).unwrap(),
        Sentence::new("synthetic", 0, tgt, tgt_lang).unwrap(),
        origin,
    )
    .unwrap()
}

/// `n` word-for-word translation pairs in which every lexicon entry occurs.
pub fn covering_seed(lex: &Lexicon, n: usize, rng: &mut ChaCha8Rng) -> Vec<SentencePair> {
    let mut order: Vec<usize> = (0..lex.len()).collect();
    order.shuffle(rng);
    (0..n)
        .map(|p| {
            let mut ids: Vec<usize> = order[p * lex.len() / n..(p + 1) * lex.len() / n].to_vec();
            let target_len = rng.random_range(4..=10usize).max(ids.len());
            while ids.len() < target_len {
                ids.push(rng.random_range(0..lex.len()));
            }
            ids.shuffle(rng);
            pair(&lex.src_sentence(&ids), &lex.tgt_sentence(&ids), Lang::En, Lang::Am, Origin::Seed)
        })
        .collect()
}

pub struct MiningBenchmark {
    pub lexicon: Lexicon,
    pub docs: Vec<(Vec<Sentence>, Vec<Sentence>)>,
    pub seed: Vec<SentencePair>,
    pub truth: HashSet<(String, String)>,
}

/// `docs × per_doc` planted translation pairs, the same number of unrelated
/// distractor sentences on each side, and a covering seed of `seed_pairs`.
///
/// Each document side is a sequence of two-sentence blocks holding one true
/// sentence and one distractor in random order, so true partners sit at
/// most one position off the diagonal.
pub fn mining_benchmark(seed: u64, docs: usize, per_doc: usize, vocab: usize, seed_pairs: usize) -> MiningBenchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = Lexicon::random(vocab, &mut rng);
    let seed_corpus = covering_seed(&lexicon, seed_pairs, &mut rng);
    let mut truth = HashSet::new();
    let mut out_docs = Vec::new();
    for d in 0..docs {
        let doc_id = format!("doc{d}");
        let mut src_texts = Vec::new();
        let mut tgt_texts = Vec::new();
        for _ in 0..per_doc {
            let ids = random_ids(&mut rng, vocab, 4, 10);
            let (s, t) = (lexicon.src_sentence(&ids), lexicon.tgt_sentence(&ids));
            truth.insert((s.clone(), t.clone()));
            let s_noise = lexicon.src_sentence(&random_ids(&mut rng, vocab, 4, 10));
            let t_noise = lexicon.tgt_sentence(&random_ids(&mut rng, vocab, 4, 10));
            let mut s_block = [s, s_noise];
            let mut t_block = [t, t_noise];
            s_block.shuffle(&mut rng);
            t_block.shuffle(&mut rng);
            src_texts.extend(s_block);
            tgt_texts.extend(t_block);
        }
        let sents = |texts: Vec<String>, lang| -> Vec<Sentence> {
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Sentence::new(doc_id.clone(), i, t, lang).unwrap())
                .collect()
        };
        out_docs.push((sents(src_texts, Lang::En), sents(tgt_texts, Lang::Am)));
    }
    MiningBenchmark {
        lexicon,
        docs: out_docs,
        seed: seed_corpus,
        truth,
    }
}

/// Random toy parallel corpus with word-for-word translations over a small
/// vocabulary and some word-order noise on the target side.
pub fn toy_parallel(seed: u64, pairs: usize) -> Vec<SentencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = rng.random_range(10..40);
    let lex = Lexicon::random(vocab, &mut rng);
    (0..pairs)
        .map(|_| {
            let ids = random_ids(&mut rng, vocab, 1, 8);
            let mut tgt_ids = ids.clone();
            if rng.random_bool(0.5) {
                tgt_ids.shuffle(&mut rng);
            }
            pair(&lex.src_sentence(&ids), &lex.tgt_sentence(&tgt_ids), Lang::En, Lang::Am, Origin::Seed)
        })
        .collect()
}
