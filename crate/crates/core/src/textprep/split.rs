//! Rule-based sentence splitting for Ethiopic and Latin script text.

use crate::ingest::Document;
use crate::lang::Lang;

use super::Sentence;

/// ። ፧ ፨ and the Latin terminators.
const TERMINATORS: &[char] = &['\u{1362}', '\u{1367}', '\u{1368}', '.', '!', '?'];

/// Closing punctuation that stays with the sentence it ends.
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{00bb}', '\u{203a}'];

/// English tokens (lowercased, final period removed) after which a period
/// does not end a sentence.
const EN_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "vs", "etc", "e.g", "i.e",
    "cf", "u.s", "u.k", "u.n", "u.s.a", "e.u", "inc", "ltd", "co", "corp", "dept", "univ",
    "gen", "col", "lt", "sgt", "capt", "gov", "sen", "rep", "rev", "hon", "pres", "fig",
    "approx", "est", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
    "nov", "dec", "a.m", "p.m", "ph.d", "b.a", "m.a", "vol", "pp", "ch", "ave", "blvd",
];

fn is_abbreviation(token: &str) -> bool {
    let token = token.trim_start_matches(|c: char| !c.is_alphanumeric());
    let Some(stem) = token.strip_suffix('.') else {
        return false;
    };
    // single initials: "J. R. R. Tolkien"
    let mut chars = stem.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_uppercase() {
            return true;
        }
    }
    let lower = stem.to_lowercase();
    EN_ABBREVIATIONS.contains(&lower.as_str())
}

/// Split normalized `text` into trimmed sentence strings.
///
/// A sentence ends after a terminator (plus any closing quotes or brackets)
/// that is followed by whitespace or the end of the line, and at every
/// newline. For English, periods ending a known abbreviation or an initial
/// do not split.
pub fn split_text(text: &str, lang: Lang) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut start = 0usize;
        let mut k = 0usize;
        while k < chars.len() {
            let (pos, c) = chars[k];
            if !TERMINATORS.contains(&c) {
                k += 1;
                continue;
            }
            let mut end = k + 1;
            while end < chars.len() && CLOSERS.contains(&chars[end].1) {
                end += 1;
            }
            let at_boundary = end == chars.len() || chars[end].1.is_whitespace();
            if !at_boundary {
                k += 1;
                continue;
            }
            if lang == Lang::En && c == '.' {
                let token_start = line[..pos]
                    .rfind(char::is_whitespace)
                    .map_or(0, |w| w + line[w..].chars().next().map_or(1, char::len_utf8));
                if is_abbreviation(&line[token_start..pos + 1]) {
                    k = end;
                    continue;
                }
            }
            let byte_end = chars.get(end).map_or(line.len(), |(b, _)| *b);
            push_segment(&mut out, &line[start..byte_end]);
            start = byte_end;
            k = end;
        }
        push_segment(&mut out, &line[start..]);
    }
    out
}

fn push_segment(out: &mut Vec<String>, seg: &str) {
    let seg = seg.trim();
    if !seg.is_empty() {
        out.push(seg.to_string());
    }
}

/// Split a document into sentences tagged with `lang`, numbered from 0.
pub fn split_sentences(doc: &Document, lang: Lang) -> Vec<Sentence> {
    split_text(&doc.text, lang)
        .iter()
        .filter_map(|s| Sentence::new(doc.id.clone(), 0, s, lang))
        .enumerate()
        .map(|(i, mut s)| {
            s.index = i;
            s
        })
        .collect()
}
