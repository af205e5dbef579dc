//! Pipeline configuration: a TOML file plus `--set section.key=value`
//! overrides. Relative paths resolve against the config file's directory.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use corpusforge::ingest::SourceKind;
use corpusforge::lang::Lang;
use corpusforge::lexmodel::{DEFAULT_FLOOR, DEFAULT_ITERATIONS};
use corpusforge::miner::{FilterConfig, MineError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config: {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub languages: Languages,
    #[serde(default)]
    pub ingest: IngestSettings,
    #[serde(default)]
    pub textprep: TextprepSettings,
    #[serde(default)]
    pub lexmodel: LexSettings,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub augment: AugmentSettings,
    #[serde(default)]
    pub eval: EvalSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Source-language documents; files pair with `tgt_root` by relative
    /// path without extension.
    pub src_root: PathBuf,
    pub tgt_root: PathBuf,
    /// Seed parallel corpus, `src \t tgt` per line.
    pub seed: PathBuf,
    /// Extra target-language sentences for back-translation, one per line.
    #[serde(default)]
    pub mono: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Languages {
    pub src: Lang,
    pub tgt: Lang,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSettings {
    pub kind: SourceKind,
}

impl Default for IngestSettings {
    fn default() -> Self {
        Self { kind: SourceKind::Web }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextprepSettings {
    pub dedup_threshold: f64,
    /// Language profile files; empty means the bundled profiles.
    pub profiles: Vec<PathBuf>,
    /// A sentence is dropped when language id assigns it to another
    /// language with at least this confidence.
    pub langid_min_confidence: f64,
}

impl Default for TextprepSettings {
    fn default() -> Self {
        Self {
            dedup_threshold: 0.8,
            profiles: Vec::new(),
            langid_min_confidence: 0.99,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexSettings {
    pub iterations: usize,
    /// Probability floor for cross-entropy; also used by the filter.
    pub floor: f64,
}

impl Default for LexSettings {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            floor: DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSettings {
    pub cap_ratio: f64,
    pub rounds: usize,
    /// External translator `[program, args...]`; unset means the built-in
    /// word-by-word translator over the reverse table.
    pub command: Option<Vec<String>>,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        Self {
            cap_ratio: 1.0,
            rounds: 1,
            command: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub bind: String,
    pub data_dir: PathBuf,
    /// JSONL file of evaluation items loaded when the data dir is empty.
    pub items: Option<PathBuf>,
    pub base_seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            data_dir: "eval".into(),
            items: None,
            base_seed: 0,
        }
    }
}

/// A validated configuration with absolute paths, plus the digest of the
/// effective settings before path resolution.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
    pub sha256: String,
}

/// Parse `key=value`; the value is read as a TOML value when possible and
/// as a bare string otherwise, so `--set languages.src=am` works unquoted.
pub fn parse_override(raw: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| invalid(raw, "override must look like section.key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(invalid(raw, "override key is empty"));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

fn apply_override(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut cur = table;
    for (k, part) in parents.iter().enumerate() {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| invalid(parts[..=k].join("."), "is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub fn load(path: &Path, overrides: &[(String, toml::Value)]) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(path.display().to_string(), e.to_string()))?;
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| invalid(path.display().to_string(), e.message()))?;
    for (k, v) in overrides {
        apply_override(&mut table, k, v.clone())?;
    }
    if table.get("filter").and_then(|f| f.get("floor")).is_some() {
        return Err(invalid("filter.floor", "not settable here; use lexmodel.floor"));
    }
    let mut config: PipelineConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        invalid(if path == "." { "config".into() } else { path }, e.inner().message())
    })?;
    config.filter.floor = config.lexmodel.floor;
    let sha256 = hex(&Sha256::digest(serde_json::to_vec(&config).expect("config serializes")));

    let base_dir = path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let base_dir = std::fs::canonicalize(&base_dir).map_err(|e| invalid("config", e.to_string()))?;
    resolve(&mut config, &base_dir);
    validate(&config)?;
    Ok(Loaded { config, base_dir, sha256 })
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn resolve(cfg: &mut PipelineConfig, base: &Path) {
    let abs = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    abs(&mut cfg.paths.src_root);
    abs(&mut cfg.paths.tgt_root);
    abs(&mut cfg.paths.seed);
    abs(&mut cfg.paths.output);
    if let Some(p) = cfg.paths.mono.as_mut() {
        abs(p);
    }
    cfg.textprep.profiles.iter_mut().for_each(abs);
    abs(&mut cfg.eval.data_dir);
    if let Some(p) = cfg.eval.items.as_mut() {
        abs(p);
    }
}

fn must_exist(field: &str, p: &Path, dir: bool) -> Result<(), ConfigError> {
    let ok = if dir { p.is_dir() } else { p.is_file() };
    if ok {
        Ok(())
    } else {
        let what = if dir { "directory" } else { "file" };
        Err(invalid(field, format!("{what} {} does not exist", p.display())))
    }
}

pub fn validate(cfg: &PipelineConfig) -> Result<(), ConfigError> {
    must_exist("paths.src_root", &cfg.paths.src_root, true)?;
    must_exist("paths.tgt_root", &cfg.paths.tgt_root, true)?;
    must_exist("paths.seed", &cfg.paths.seed, false)?;
    if let Some(p) = &cfg.paths.mono {
        must_exist("paths.mono", p, false)?;
    }
    for (i, p) in cfg.textprep.profiles.iter().enumerate() {
        must_exist(&format!("textprep.profiles[{i}]"), p, false)?;
    }
    if let Some(p) = &cfg.eval.items {
        must_exist("eval.items", p, false)?;
    }

    for (field, lang) in [("languages.src", cfg.languages.src), ("languages.tgt", cfg.languages.tgt)] {
        if !lang.is_supported() {
            return Err(invalid(field, "must be one of am, ti, en"));
        }
    }
    if cfg.languages.src == cfg.languages.tgt {
        return Err(invalid("languages.tgt", "must differ from languages.src"));
    }

    let t = cfg.textprep.dedup_threshold;
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid("textprep.dedup_threshold", format!("must be in (0, 1], got {t}")));
    }
    let c = cfg.textprep.langid_min_confidence;
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid("textprep.langid_min_confidence", format!("must be in [0, 1], got {c}")));
    }
    if cfg.lexmodel.iterations == 0 {
        return Err(invalid("lexmodel.iterations", "must be at least 1"));
    }
    let f = cfg.lexmodel.floor;
    if !(f > 0.0 && f <= 1.0) {
        return Err(invalid("lexmodel.floor", format!("must be in (0, 1], got {f}")));
    }
    // the filter's messages start with the offending field name
    if let Err(MineError::Config(msg)) = cfg.filter.validate() {
        let (field, rest) = msg.split_once(' ').unwrap_or((&msg, ""));
        return Err(invalid(format!("filter.{field}"), rest));
    }

    let r = cfg.augment.cap_ratio;
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("augment.cap_ratio", format!("must be a positive number, got {r}")));
    }
    if cfg.augment.rounds == 0 {
        return Err(invalid("augment.rounds", "must be at least 1"));
    }
    if let Some(cmd) = &cfg.augment.command {
        if cmd.is_empty() || cmd[0].trim().is_empty() {
            return Err(invalid("augment.command", "must name a program"));
        }
        if cfg.augment.rounds > 1 {
            return Err(invalid("augment.rounds", "must be 1 with an external translator"));
        }
    }
    cfg.eval
        .bind
        .parse::<SocketAddr>()
        .map_err(|e| invalid("eval.bind", format!("'{}': {e}", cfg.eval.bind)))?;
    Ok(())
}
