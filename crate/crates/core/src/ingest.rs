//! Document acquisition: markup stripping, metadata capture and directory loading.
//!
//! Web dumps (`.html`/`.htm`) go through [`extract_text`]; everything else is
//! read as plain text. Invalid UTF-8 is replaced with U+FFFD so a dirty file
//! never aborts a load.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lang::Lang;

pub type Metadata = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Web,
    /// Text that came out of an OCR + post-editing workflow upstream.
    OfflineOcr,
    Plain,
}

impl std::str::FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "web" => Ok(SourceKind::Web),
            "offline_ocr" | "ocr" => Ok(SourceKind::OfflineOcr),
            "plain" => Ok(SourceKind::Plain),
            other => Err(format!("unknown source kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub uri: String,
    pub source_kind: SourceKind,
    pub lang_hint: Option<Lang>,
    pub text: String,
    pub metadata: Metadata,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("corpus root {0} does not exist or is not a directory")]
    RootMissing(PathBuf),
    #[error("walking {path}: {message}")]
    Walk { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("documents line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub text: String,
    pub metadata: Metadata,
}

/// Elements whose content never reaches the output text.
const SKIPPED_ELEMENTS: &[&str] = &["script", "style", "noscript", "template", "svg", "title"];

const BLOCK_ELEMENTS: &[&str] = &[
    "p", "div", "br", "li", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "ul", "ol", "table",
    "section", "article", "header", "footer", "blockquote", "hr", "pre",
];

const CELL_ELEMENTS: &[&str] = &["td", "th"];

/// Lossy front door for raw bytes.
pub fn extract_text_bytes(raw: &[u8]) -> Extracted {
    extract_text(&String::from_utf8_lossy(raw))
}

/// Strip markup from `raw_html` and collect title/author/date metadata.
///
/// Input without any tag is treated as plain text, so its newlines are kept;
/// otherwise source newlines are ordinary whitespace and only block elements
/// produce line breaks. Together with [`neutralize_markup`] on the output this
/// makes the function idempotent.
pub fn extract_text(raw_html: &str) -> Extracted {
    let mut metadata = Metadata::new();
    let markup = contains_markup(raw_html);
    let mut out = String::with_capacity(raw_html.len());
    let mut run_start = 0usize;
    let mut i = 0usize;
    let bytes = raw_html.as_bytes();

    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &raw_html[i..];
        let skip = if rest.starts_with("<!--") {
            Some(rest.find("-->").map_or(rest.len(), |e| e + 3))
        } else {
            match bytes.get(i + 1) {
                Some(b'!' | b'?') => rest.find('>').map(|e| e + 1),
                Some(c) if c.is_ascii_alphabetic() || *c == b'/' => find_tag_end(rest).map(|end| end + 1),
                _ => None,
            }
        };
        let Some(skip) = skip else {
            i += 1;
            continue;
        };
        push_text(&mut out, &raw_html[run_start..i], markup);
        let mut next = i + skip;
        if bytes[i + 1].is_ascii_alphabetic() || bytes[i + 1] == b'/' {
            let tag = parse_tag(&rest[1..skip - 1]);
            let name = tag.name.as_str();
            if tag.closing {
                if BLOCK_ELEMENTS.contains(&name) {
                    out.push('\n');
                }
            } else if SKIPPED_ELEMENTS.contains(&name) && !tag.self_closing {
                let (body_end, after) = find_closing(raw_html, next, name);
                if name == "title" {
                    let title = collapse_inline(&decode_entities(&raw_html[next..body_end]));
                    if !title.is_empty() {
                        metadata.entry("title".into()).or_insert(title);
                    }
                }
                next = after;
            } else if name == "meta" {
                capture_meta(&tag.attrs, &mut metadata);
            } else if BLOCK_ELEMENTS.contains(&name) {
                out.push('\n');
            } else if CELL_ELEMENTS.contains(&name) {
                out.push(' ');
            }
        }
        i = next;
        run_start = next;
    }
    push_text(&mut out, &raw_html[run_start..], markup);

    let text = collapse_whitespace(&neutralize_markup(&out));
    Extracted { text, metadata }
}

fn push_text(out: &mut String, run: &str, markup: bool) {
    if run.is_empty() {
        return;
    }
    for c in decode_entities(run).chars() {
        if c.is_whitespace() {
            out.push(if markup { ' ' } else { c });
        } else if !c.is_control() {
            out.push(c);
        }
    }
}

fn decode_entities(s: &str) -> String {
    if s.contains('&') {
        html_escape::decode_html_entities(s).into_owned()
    } else {
        s.to_string()
    }
}

/// True when `s` holds something a tag parser would treat as markup.
pub fn contains_markup(s: &str) -> bool {
    s.as_bytes()
        .windows(2)
        .any(|w| w[0] == b'<' && is_tag_lead(w[1]))
}

fn is_tag_lead(b: u8) -> bool {
    b.is_ascii_alphabetic() || matches!(b, b'/' | b'!' | b'?')
}

/// Break up tag-like and entity-like sequences in already-extracted text so a
/// second pass leaves it unchanged (`<p` becomes `< p`, a decodable `&amp;`
/// becomes `& amp;`).
pub fn neutralize_markup(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let bytes = s.as_bytes();
    for (i, c) in s.char_indices() {
        out.push(c);
        match c {
            '<' if bytes.get(i + 1).is_some_and(|b| is_tag_lead(*b)) => out.push(' '),
            '&' if entity_at(&s[i..]) => out.push(' '),
            _ => {}
        }
    }
    out
}

fn entity_at(s: &str) -> bool {
    let body = &s[1..];
    let run = body
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '#'))
        .unwrap_or(body.len());
    let end = if body[run..].starts_with(';') { run + 2 } else { run + 1 };
    let candidate = &s[..end];
    html_escape::decode_html_entities(candidate) != candidate
}

/// Horizontal whitespace runs become one space, runs containing a line break
/// become one newline; the result is trimmed.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending: Option<char> = None;
    for c in s.chars() {
        if c.is_whitespace() {
            let brk = c == '\n' || c == '\r';
            pending = match pending {
                Some('\n') => Some('\n'),
                _ if brk => Some('\n'),
                _ => Some(' '),
            };
        } else {
            if let Some(p) = pending.take() {
                if !out.is_empty() {
                    out.push(p);
                }
            }
            out.push(c);
        }
    }
    out
}

fn collapse_inline(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Tag {
    name: String,
    closing: bool,
    self_closing: bool,
    attrs: Vec<(String, String)>,
}

/// Index of the `>` closing the tag that starts at `s[0] == '<'`, honouring quotes.
fn find_tag_end(s: &str) -> Option<usize> {
    let mut quote: Option<u8> = None;
    for (i, &b) in s.as_bytes().iter().enumerate().skip(1) {
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => return Some(i),
            None => {}
        }
    }
    // unbalanced quote: fall back to the first '>'
    s.find('>')
}

fn parse_tag(inner: &str) -> Tag {
    let (closing, body) = match inner.strip_prefix('/') {
        Some(b) => (true, b),
        None => (false, inner),
    };
    let self_closing = body.trim_end().ends_with('/');
    let name_end = body
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == ':'))
        .unwrap_or(body.len());
    let name = body[..name_end].to_ascii_lowercase();
    let attrs = if closing { Vec::new() } else { parse_attrs(&body[name_end..]) };
    Tag { name, closing, self_closing, attrs }
}

fn parse_attrs(s: &str) -> Vec<(String, String)> {
    let mut attrs = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        while i < chars.len() && (chars[i].is_whitespace() || chars[i] == '/') {
            i += 1;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '=' && chars[i] != '/' {
            i += 1;
        }
        if start == i {
            i += 1;
            continue;
        }
        let name: String = chars[start..i].iter().collect::<String>().to_ascii_lowercase();
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < chars.len() && chars[i] == '=' {
            i += 1;
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            if i < chars.len() && (chars[i] == '"' || chars[i] == '\'') {
                let q = chars[i];
                i += 1;
                let vs = i;
                while i < chars.len() && chars[i] != q {
                    i += 1;
                }
                value = chars[vs..i].iter().collect();
                i += 1;
            } else {
                let vs = i;
                while i < chars.len() && !chars[i].is_whitespace() {
                    i += 1;
                }
                value = chars[vs..i].iter().collect();
            }
        }
        attrs.push((name, value));
    }
    attrs
}

/// Returns (end of element body, index just past the closing tag).
fn find_closing(html: &str, from: usize, name: &str) -> (usize, usize) {
    let needle = format!("</{name}");
    let hay = &html.as_bytes()[from..];
    let pos = hay
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle.as_bytes()));
    match pos {
        Some(p) => {
            let body_end = from + p;
            let after = html[body_end..].find('>').map_or(html.len(), |e| body_end + e + 1);
            (body_end, after)
        }
        None => (html.len(), html.len()),
    }
}

fn capture_meta(attrs: &[(String, String)], metadata: &mut Metadata) {
    let get = |key: &str| attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let Some(content) = get("content") else { return };
    let key = get("name").or_else(|| get("property")).unwrap_or("").to_ascii_lowercase();
    let field = match key.as_str() {
        "author" | "article:author" => "author",
        "date" | "article:published_time" | "dc.date" => "date",
        _ => return,
    };
    let value = collapse_inline(&decode_entities(content));
    if !value.is_empty() {
        metadata.entry(field.to_string()).or_insert(value);
    }
}

/// Clean a plain-text payload: lossy decode, control characters dropped,
/// tag-like sequences neutralized. Line structure is kept.
pub fn clean_plain_text(raw: &[u8]) -> String {
    let decoded = String::from_utf8_lossy(raw);
    let kept: String = decoded
        .chars()
        .filter(|c| c.is_whitespace() || !c.is_control())
        .collect();
    neutralize_markup(&kept)
}

/// Stable document id: truncated SHA-256 over the locator and the raw content.
pub fn document_id(uri: &str, content: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(uri.as_bytes());
    hasher.update([0u8]);
    hasher.update(content);
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadError {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub documents: Vec<Document>,
    pub errors: Vec<LoadError>,
}

#[derive(Debug, Clone)]
pub struct CorpusLoader {
    kind: SourceKind,
    lang_hint: Option<Lang>,
}

impl CorpusLoader {
    pub fn new(kind: SourceKind) -> Self {
        Self { kind, lang_hint: None }
    }

    pub fn lang_hint(mut self, lang: Lang) -> Self {
        self.lang_hint = Some(lang);
        self
    }

    /// Load every regular file below `root`, in path order.
    pub fn load(&self, root: &Path) -> Result<CorpusLoad, IngestError> {
        if !root.is_dir() {
            return Err(IngestError::RootMissing(root.to_path_buf()));
        }
        let mut paths = Vec::new();
        for entry in walkdir::WalkDir::new(root).follow_links(true) {
            let entry = entry.map_err(|e| IngestError::Walk {
                path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
                message: e.to_string(),
            })?;
            if entry.file_type().is_file() {
                paths.push(entry.into_path());
            }
        }
        paths.sort();

        let results: Vec<Result<Document, LoadError>> =
            paths.par_iter().map(|p| self.load_file(root, p)).collect();
        let mut load = CorpusLoad::default();
        for r in results {
            match r {
                Ok(doc) => load.documents.push(doc),
                Err(e) => load.errors.push(e),
            }
        }
        Ok(load)
    }

    /// The uri is the path relative to `root`, so ids survive moving the corpus.
    fn load_file(&self, root: &Path, path: &Path) -> Result<Document, LoadError> {
        let raw = fs::read(path).map_err(|e| LoadError {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let uri = path
            .strip_prefix(root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        let is_html = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"));
        let (text, mut metadata) = if is_html {
            let ex = extract_text_bytes(&raw);
            (ex.text, ex.metadata)
        } else {
            (clean_plain_text(&raw), Metadata::new())
        };
        if self.kind == SourceKind::OfflineOcr {
            metadata.insert("provenance".into(), "ocr".into());
        }
        Ok(Document {
            id: document_id(&uri, &raw),
            uri,
            source_kind: self.kind,
            lang_hint: self.lang_hint,
            text,
            metadata,
        })
    }
}

pub fn load_corpus(root: &Path, kind: SourceKind) -> Result<CorpusLoad, IngestError> {
    CorpusLoader::new(kind).load(root)
}

pub fn write_documents_jsonl<W: Write>(mut w: W, docs: &[Document]) -> io::Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_documents_jsonl<R: BufRead>(r: R) -> Result<Vec<Document>, IngestError> {
    let mut docs = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(
            serde_json::from_str(&line).map_err(|source| IngestError::Json { line: n + 1, source })?,
        );
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> String {
        extract_text(s).text
    }

    #[test]
    fn single_tag() {
        let ex = extract_text("<p>hello</p>");
        assert_eq!(ex.text, "hello");
        assert!(ex.metadata.is_empty());
    }

    #[test]
    fn head_is_dropped_and_title_captured() {
        let ex = extract_text(
            "<html><head><title>T</title><script>x=1</script></head><body>a <b>b</b></body></html>",
        );
        assert_eq!(ex.text, "a b");
        assert_eq!(ex.metadata.get("title").map(String::as_str), Some("T"));
        assert_eq!(ex.metadata.len(), 1);
    }

    #[test]
    fn empty_input() {
        let ex = extract_text("");
        assert_eq!(ex.text, "");
        assert!(ex.metadata.is_empty());
    }

    #[test]
    fn blocks_become_lines() {
        assert_eq!(text("<div>one</div><div>two<br>three</div>"), "one\ntwo\nthree");
        assert_eq!(text("<ul><li>a</li>\n  <li>b</li></ul>"), "a\nb");
        assert_eq!(text("<p>wrapped\nsource   line</p>"), "wrapped source line");
        assert_eq!(text("<table><tr><td>x</td><td>y</td></tr></table>"), "x y");
    }

    #[test]
    fn entities_decoded() {
        assert_eq!(text("<p>Tom &amp; Jerry &#4608;&#x1230;</p>"), "Tom & Jerry ሀሰ");
        assert_eq!(text("<p>a&nbsp;b</p>"), "a b");
    }

    #[test]
    fn meta_fields() {
        let ex = extract_text(
            r#"<head><meta name="Author" content="Abebe Kebede">
               <meta property="article:published_time" content="2020-05-01T10:00:00Z">
               <meta name="keywords" content="x"></head><p>body</p>"#,
        );
        assert_eq!(ex.metadata["author"], "Abebe Kebede");
        assert_eq!(ex.metadata["date"], "2020-05-01T10:00:00Z");
        assert!(!ex.metadata.contains_key("keywords"));
        assert_eq!(ex.text, "body");
    }

    #[test]
    fn comments_doctype_and_style() {
        let html = "<!DOCTYPE html><!-- c <p>hidden</p> --><style>p{}</style><p>shown</p>";
        assert_eq!(text(html), "shown");
    }

    #[test]
    fn malformed_markup_best_effort() {
        assert_eq!(text("<p>a < b and c</p>"), "a < b and c");
        assert_eq!(text("<p>open <b unterminated"), "open < b unterminated");
        assert_eq!(text("<script>never closed"), "");
        assert_eq!(text("<a href='x>y'>link</a>"), "link");
    }

    #[test]
    fn escaped_markup_is_neutralized() {
        let once = text("<p>&lt;b&gt;bold&lt;/b&gt; &amp;amp;</p>");
        assert!(!contains_markup(&once));
        assert_eq!(text(&once), once);
    }

    #[test]
    fn plain_input_keeps_lines() {
        assert_eq!(text("line one\nline two"), "line one\nline two");
    }

    #[test]
    fn invalid_utf8_replaced() {
        let ex = extract_text_bytes(b"<p>ok\xff\xfe</p>");
        assert_eq!(ex.text, "ok\u{FFFD}\u{FFFD}");
        let plain = clean_plain_text(b"a\x00b\xff");
        assert_eq!(plain, "ab\u{FFFD}");
    }

    #[test]
    fn ids_are_stable_and_content_sensitive() {
        assert_eq!(document_id("a", b"x"), document_id("a", b"x"));
        assert_ne!(document_id("a", b"x"), document_id("a", b"y"));
        assert_ne!(document_id("a", b"x"), document_id("b", b"x"));
        assert_eq!(document_id("a", b"x").len(), 32);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn htmlish() -> impl Strategy<Value = String> {
            proptest::string::string_regex(
                "(<[a-zA-Z/!?][a-z0-9 =\"']{0,6}>?|&[a-z#x0-9]{1,6};?|</?(p|div|br|script|title|b)>|[a-zA-Z <>&;\n\t\x00ሀ፡።]){0,40}",
            )
            .unwrap()
        }

        proptest! {
            #[test]
            fn extraction_is_idempotent(raw in htmlish()) {
                let once = extract_text(&raw).text;
                prop_assert_eq!(extract_text(&once).text, once.clone());
            }

            #[test]
            fn output_is_markup_free(raw in htmlish()) {
                let t = extract_text(&raw).text;
                prop_assert!(!contains_markup(&t));
                prop_assert!(!t.contains('\0'));
            }
        }
    }
}
