//! The batch stages. Each reads its inputs from the config and the output
//! directory, writes artifacts atomically and finishes with a manifest.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use corpusforge::augment::{back_translate, merge_corpora, ExternalCommandTranslator, NaiveTranslator, Translator};
use corpusforge::ingest::{read_documents_jsonl, write_documents_jsonl, CorpusLoader, Document};
use corpusforge::lang::Lang;
use corpusforge::lexmodel::{format_sig, read_parallel_tsv, train_model1, LexTable, Origin, SentencePair};
use corpusforge::miner::{mine_corpus, read_corpus_tsv, write_corpus_tsv, CorpusRow};
use corpusforge::textprep::langid::{detect_language, LangProfile};
use corpusforge::textprep::{dedup_exact, dedup_near, read_sentences_tsv, split_sentences, write_sentences_tsv, Sentence};
use rayon::prelude::*;

use crate::artifacts::{read_manifest, write_atomic, ManifestBuilder};
use crate::config::{Loaded, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Prep,
    Train,
    Mine,
    Augment,
}

impl Stage {
    pub const PIPELINE: [Stage; 5] = [Stage::Ingest, Stage::Prep, Stage::Train, Stage::Mine, Stage::Augment];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Prep => "prep",
            Stage::Train => "train",
            Stage::Mine => "mine",
            Stage::Augment => "augment",
        }
    }

    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Ingest | Stage::Train => &[],
            Stage::Prep => &[Stage::Ingest],
            Stage::Mine => &[Stage::Prep, Stage::Train],
            Stage::Augment => &[Stage::Prep, Stage::Train, Stage::Mine],
        }
    }

    pub fn manifest_path(self, out: &Path) -> PathBuf {
        out.join(format!("{}.manifest.json", self.name()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("stage {stage} requires output of stage {requires}")]
    Missing { stage: &'static str, requires: &'static str },
    #[error(transparent)]
    Failed(#[from] anyhow::Error),
}

pub const DOCS_SRC: &str = "docs.src.jsonl";
pub const DOCS_TGT: &str = "docs.tgt.jsonl";
pub const SENTS_SRC: &str = "sentences.src.tsv";
pub const SENTS_TGT: &str = "sentences.tgt.tsv";
pub const DOC_PAIRS: &str = "docpairs.tsv";
pub const LEX_FWD: &str = "lex.fwd.tsv";
pub const LEX_REV: &str = "lex.rev.tsv";
pub const MINED: &str = "mined.tsv";
pub const AUGMENTED: &str = "augmented.tsv";

/// A stage counts as done when its manifest and every output it lists exist.
fn is_complete(stage: Stage, loaded: &Loaded) -> bool {
    let out = &loaded.config.paths.output;
    match read_manifest(&stage.manifest_path(out)) {
        Ok(m) => m.outputs.iter().all(|o| loaded.base_dir.join(&o.path).is_file()),
        Err(_) => false,
    }
}

pub fn run_stage(stage: Stage, loaded: &Loaded) -> Result<(), StageError> {
    for &dep in stage.requires() {
        if !is_complete(dep, loaded) {
            return Err(StageError::Missing {
                stage: stage.name(),
                requires: dep.name(),
            });
        }
    }
    let mut m = ManifestBuilder::new(stage.name(), &loaded.base_dir, &loaded.sha256);
    let cfg = &loaded.config;
    match stage {
        Stage::Ingest => ingest(cfg, &mut m)?,
        Stage::Prep => prep(cfg, &mut m)?,
        Stage::Train => train(cfg, &mut m)?,
        Stage::Mine => mine(cfg, &mut m)?,
        Stage::Augment => augment(cfg, &mut m)?,
    }
    m.write(&stage.manifest_path(&cfg.paths.output))?;
    Ok(())
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn ingest(cfg: &PipelineConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let out = &cfg.paths.output;
    let mut errors = 0;
    for (root, lang, file, side) in [
        (&cfg.paths.src_root, cfg.languages.src, DOCS_SRC, "src"),
        (&cfg.paths.tgt_root, cfg.languages.tgt, DOCS_TGT, "tgt"),
    ] {
        let load = CorpusLoader::new(cfg.ingest.kind).lang_hint(lang).load(root)?;
        for e in &load.errors {
            eprintln!("warning: skipped {}: {}", e.path.display(), e.message);
        }
        errors += load.errors.len();
        let path = out.join(file);
        write_atomic(&path, |w| write_documents_jsonl(w, &load.documents))?;
        m.input_tree(root)?;
        m.output(&path)?;
        m.stat(&format!("{side}_documents"), load.documents.len());
    }
    m.stat("load_errors", errors);
    Ok(())
}

#[derive(Debug, Default)]
struct PrepCounts {
    split: usize,
    langid_dropped: usize,
    exact_dropped: usize,
    near_dropped: usize,
}

fn prep_side(
    docs: &[Document],
    lang: Lang,
    profiles: &[LangProfile],
    cfg: &PipelineConfig,
) -> anyhow::Result<(Vec<Sentence>, PrepCounts)> {
    let mut counts = PrepCounts::default();
    let sentences: Vec<Sentence> = docs.iter().flat_map(|d| split_sentences(d, lang)).collect();
    counts.split = sentences.len();
    let min_conf = cfg.textprep.langid_min_confidence;
    let keep: Vec<bool> = sentences
        .par_iter()
        .map(|s| match detect_language(&s.text, profiles) {
            Ok(p) => p.lang == lang || !p.lang.is_supported() || p.confidence < min_conf,
            // no profile covers the script: nothing to contradict the side label
            Err(_) => true,
        })
        .collect();
    let sentences: Vec<Sentence> = sentences.into_iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect();
    counts.langid_dropped = counts.split - sentences.len();
    let before = sentences.len();
    let sentences = dedup_exact(sentences);
    counts.exact_dropped = before - sentences.len();
    let before = sentences.len();
    let sentences = dedup_near(sentences, cfg.textprep.dedup_threshold)?;
    counts.near_dropped = before - sentences.len();
    Ok((sentences, counts))
}

/// Documents pair across sides by relative path without extension.
fn pairing_key(uri: &str) -> &str {
    let name_start = uri.rfind('/').map_or(0, |i| i + 1);
    match uri[name_start..].rfind('.') {
        Some(dot) if dot > 0 => &uri[..name_start + dot],
        _ => uri,
    }
}

fn prep(cfg: &PipelineConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let out = &cfg.paths.output;
    let profiles = if cfg.textprep.profiles.is_empty() {
        LangProfile::bundled()
    } else {
        let mut ps = Vec::new();
        for p in &cfg.textprep.profiles {
            ps.push(LangProfile::read_jsonl(open(p)?).with_context(|| format!("profile {}", p.display()))?);
            m.input(p)?;
        }
        ps
    };

    let mut keyed: Vec<BTreeMap<String, String>> = Vec::new();
    for (docs_file, sents_file, lang, side) in [
        (DOCS_SRC, SENTS_SRC, cfg.languages.src, "src"),
        (DOCS_TGT, SENTS_TGT, cfg.languages.tgt, "tgt"),
    ] {
        let docs_path = out.join(docs_file);
        m.input(&docs_path)?;
        let docs = read_documents_jsonl(open(&docs_path)?)?;
        let (sentences, c) = prep_side(&docs, lang, &profiles, cfg)?;
        let path = out.join(sents_file);
        write_atomic(&path, |w| write_sentences_tsv(w, &sentences))?;
        m.output(&path)?;
        m.stat(&format!("{side}_split"), c.split);
        m.stat(&format!("{side}_langid_dropped"), c.langid_dropped);
        m.stat(&format!("{side}_exact_duplicates"), c.exact_dropped);
        m.stat(&format!("{side}_near_duplicates"), c.near_dropped);
        m.stat(&format!("{side}_sentences"), sentences.len());

        let mut by_key = BTreeMap::new();
        for d in &docs {
            by_key.entry(pairing_key(&d.uri).to_string()).or_insert_with(|| d.id.clone());
        }
        keyed.push(by_key);
    }

    let (src, tgt) = (&keyed[0], &keyed[1]);
    let pairs: Vec<(&String, &String, &String)> =
        src.iter().filter_map(|(k, s)| tgt.get(k).map(|t| (k, s, t))).collect();
    let path = out.join(DOC_PAIRS);
    write_atomic(&path, |w| {
        for (k, s, t) in &pairs {
            writeln!(w, "{k}\t{s}\t{t}")?;
        }
        Ok(())
    })?;
    m.output(&path)?;
    m.stat("document_pairs", pairs.len());
    m.stat("unpaired_src_documents", src.len() - pairs.len());
    m.stat("unpaired_tgt_documents", tgt.len() - pairs.len());
    Ok(())
}

fn read_seed(cfg: &PipelineConfig) -> anyhow::Result<(Vec<SentencePair>, usize)> {
    let path = &cfg.paths.seed;
    read_parallel_tsv(open(path)?, cfg.languages.src, cfg.languages.tgt, Origin::Seed, "seed")
        .with_context(|| format!("seed corpus {}", path.display()))
}

fn train(cfg: &PipelineConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let out = &cfg.paths.output;
    m.input(&cfg.paths.seed)?;
    let (seed, unreadable) = read_seed(cfg)?;
    let iters = cfg.lexmodel.iterations;
    let fwd = train_model1(&seed, iters)?;
    let swapped: Vec<SentencePair> = seed.iter().map(SentencePair::swapped).collect();
    let rev = train_model1(&swapped, iters)?;
    for (file, trained, dir) in [(LEX_FWD, &fwd, "fwd"), (LEX_REV, &rev, "rev")] {
        let path = out.join(file);
        write_atomic(&path, |w| trained.table.write_tsv(w))?;
        m.output(&path)?;
        m.stat(&format!("{dir}_entries"), trained.table.entry_count());
        let ll = trained.log_likelihoods.last().copied().unwrap_or(f64::NAN);
        m.stat(&format!("{dir}_log_likelihood"), format_sig(ll, 12));
    }
    m.stat("seed_pairs", seed.len());
    m.stat("seed_lines_skipped", unreadable);
    m.stat("pairs_skipped_by_model", fwd.skipped);
    m.stat("iterations", iters);
    Ok(())
}

fn load_table(path: &Path, src: Lang, tgt: Lang) -> anyhow::Result<LexTable> {
    let t = LexTable::read_tsv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if (t.src_lang, t.tgt_lang) != (src, tgt) {
        bail!("{} holds a {}→{} table, expected {src}→{tgt}", path.display(), t.src_lang, t.tgt_lang);
    }
    Ok(t)
}

fn read_sentences(path: &Path) -> anyhow::Result<Vec<Sentence>> {
    read_sentences_tsv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn group_by_doc(sentences: Vec<Sentence>) -> HashMap<String, Vec<Sentence>> {
    let mut by_doc: HashMap<String, Vec<Sentence>> = HashMap::new();
    for s in sentences {
        by_doc.entry(s.doc_id.clone()).or_default().push(s);
    }
    by_doc
}

fn mine(cfg: &PipelineConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let out = &cfg.paths.output;
    let (src, tgt) = (cfg.languages.src, cfg.languages.tgt);
    for f in [LEX_FWD, LEX_REV, SENTS_SRC, SENTS_TGT, DOC_PAIRS] {
        m.input(&out.join(f))?;
    }
    let fwd = load_table(&out.join(LEX_FWD), src, tgt)?;
    let rev = load_table(&out.join(LEX_REV), tgt, src)?;
    let mut src_docs = group_by_doc(read_sentences(&out.join(SENTS_SRC))?);
    let mut tgt_docs = group_by_doc(read_sentences(&out.join(SENTS_TGT))?);

    let mut doc_pairs = Vec::new();
    for (n, line) in open(&out.join(DOC_PAIRS))?.lines().enumerate() {
        let line = line?;
        let cols: Vec<&str> = line.split('\t').collect();
        let [_, s, t] = cols[..] else {
            bail!("{DOC_PAIRS} line {}: expected 3 columns", n + 1);
        };
        doc_pairs.push((src_docs.remove(s).unwrap_or_default(), tgt_docs.remove(t).unwrap_or_default()));
    }
    let outcome = mine_corpus(&doc_pairs, &fwd, &rev, &cfg.filter)?;
    let mined = outcome.pairs.len();
    let rows: Vec<CorpusRow> = outcome.pairs.into_iter().map(CorpusRow::from).collect();
    let path = out.join(MINED);
    write_atomic(&path, |w| write_corpus_tsv(w, &rows, false))?;
    m.output(&path)?;
    m.stat("document_pairs", doc_pairs.len());
    m.stat("candidates", outcome.candidates);
    m.stat("accepted", outcome.accepted);
    m.stat("mined", mined);
    Ok(())
}

fn augment(cfg: &PipelineConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let out = &cfg.paths.output;
    let (src, tgt) = (cfg.languages.src, cfg.languages.tgt);
    for f in [LEX_REV, MINED, SENTS_TGT] {
        m.input(&out.join(f))?;
    }
    m.input(&cfg.paths.seed)?;

    let mined_rows = read_corpus_tsv(open(&out.join(MINED))?, "mined")?;
    let scores: HashMap<(String, String), f64> = mined_rows
        .iter()
        .filter_map(|r| r.score.map(|s| ((r.pair.src.text.clone(), r.pair.tgt.text.clone()), s)))
        .collect();
    let (seed, _) = read_seed(cfg)?;
    let real: Vec<SentencePair> = mined_rows.into_iter().map(|r| r.pair).chain(seed).collect();

    // target sentences that did not end up in a mined pair, then the extra
    // monolingual file
    let used: HashSet<&str> = real.iter().map(|p| p.tgt.text.as_str()).collect();
    let mut seen = HashSet::new();
    let mut mono: Vec<Sentence> = read_sentences(&out.join(SENTS_TGT))?
        .into_iter()
        .filter(|s| !used.contains(s.text.as_str()))
        .collect();
    if let Some(path) = &cfg.paths.mono {
        m.input(path)?;
        for (i, line) in open(path)?.lines().enumerate() {
            mono.extend(Sentence::new("mono", i, &line?, tgt));
        }
    }
    mono.retain(|s| seen.insert(s.text.clone()));

    let mut translator: Box<dyn Translator> = match &cfg.augment.command {
        Some(cmd) => Box::new(ExternalCommandTranslator::new(&cmd[0], cmd[1..].to_vec())),
        None => Box::new(NaiveTranslator::new(load_table(&out.join(LEX_REV), tgt, src)?)),
    };
    let mut bt = back_translate(&mono, translator.as_ref(), src);
    for _ in 1..cfg.augment.rounds {
        // retrain the reverse model on real plus this round's synthetic data
        let swapped: Vec<SentencePair> = real.iter().chain(&bt.pairs).map(SentencePair::swapped).collect();
        translator = Box::new(NaiveTranslator::new(train_model1(&swapped, cfg.lexmodel.iterations)?.table));
        bt = back_translate(&mono, translator.as_ref(), src);
    }
    let translated = bt.pairs.len();
    let merged = merge_corpora(real, bt.pairs, cfg.augment.cap_ratio)?;
    let rows: Vec<CorpusRow> = merged
        .pairs
        .into_iter()
        .map(|pair| CorpusRow {
            score: match pair.origin {
                Origin::Mined => scores.get(&(pair.src.text.clone(), pair.tgt.text.clone())).copied(),
                _ => None,
            },
            pair,
        })
        .collect();
    let path = out.join(AUGMENTED);
    write_atomic(&path, |w| write_corpus_tsv(w, &rows, true))?;
    m.output(&path)?;
    m.stat("mono_sentences", mono.len());
    m.stat("translated", translated);
    m.stat("translation_failures", bt.failures);
    m.stat("rounds", cfg.augment.rounds);
    m.stat("mined", merged.counts.mined);
    m.stat("seed", merged.counts.seed);
    m.stat("synthetic", merged.counts.synthetic);
    Ok(())
}
