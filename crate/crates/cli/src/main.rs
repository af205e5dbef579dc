mod artifacts;
mod config;
mod stages;

use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use corpusforge::evalkit::{import_eval_dataset, render_report, EvalItem, EvalStore, Granularity};
use corpusforge::textprep::langid::{LangProfile, BUNDLED_SEEDS};
use corpusforge_server::{EvalService, ARCHIVE_FILE};

use crate::artifacts::write_atomic;
use crate::config::{ConfigError, Loaded};
use crate::stages::{run_stage, Stage, StageError};

#[derive(Parser)]
#[command(name = "corpusforge", version, about = "Parallel corpus mining and blind evaluation")]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set filter.threshold=0.6`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load source and target documents.
    Ingest,
    /// Split, language-filter and deduplicate sentences.
    Prep,
    /// Train forward and reverse lexical tables on the seed corpus.
    Train,
    /// Score candidate pairs and keep the best one-to-one set.
    Mine,
    /// Back-translate monolingual target text and merge under the cap.
    Augment,
    /// Run ingest, prep, train, mine and augment in order.
    Run,
    /// Serve blind evaluation sessions over HTTP.
    EvalServe(ServeArgs),
    /// Print the aggregated evaluation report.
    EvalReport(ReportArgs),
    /// Retrain language-id profiles from seed texts.
    TrainProfiles(ProfileArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    bind: Option<SocketAddr>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSONL evaluation items, used when the data dir holds no archive yet.
    #[arg(long)]
    items: Option<PathBuf>,
    /// Base seed for per-evaluator shuffles.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    granularity: Option<Granularity>,
    /// Divide means and standard deviations by the scale maximum.
    #[arg(long)]
    normalized: bool,
}

#[derive(Args)]
struct ProfileArgs {
    /// Directory with `am.txt`, `ti.txt`, `en.txt`; defaults to the bundled seeds.
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Stage(StageError::Missing { .. }) => 2,
            _ => 1,
        }
    }
}

fn load_config(cli: &Cli) -> Result<Option<Loaded>, CliError> {
    let overrides = cli
        .overrides
        .iter()
        .map(|o| config::parse_override(o))
        .collect::<Result<Vec<_>, _>>()?;
    match &cli.config {
        Some(path) => Ok(Some(config::load(path, &overrides)?)),
        None if !overrides.is_empty() => Err(ConfigError {
            path: "--set".into(),
            message: "overrides need --config".into(),
        }
        .into()),
        None => Ok(None),
    }
}

fn require_config(loaded: Option<Loaded>) -> Result<Loaded, CliError> {
    loaded.ok_or_else(|| {
        ConfigError {
            path: "--config".into(),
            message: "this stage needs a config file".into(),
        }
        .into()
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(ConfigError {
                path: "--jobs".into(),
                message: "must be at least 1".into(),
            }
            .into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let loaded = load_config(&cli)?;
    let stage = |s: Stage, loaded: Option<Loaded>| -> Result<(), CliError> {
        let loaded = require_config(loaded)?;
        run_stage(s, &loaded)?;
        eprintln!("{}: done", s.name());
        Ok(())
    };
    match cli.command {
        Command::Ingest => stage(Stage::Ingest, loaded),
        Command::Prep => stage(Stage::Prep, loaded),
        Command::Train => stage(Stage::Train, loaded),
        Command::Mine => stage(Stage::Mine, loaded),
        Command::Augment => stage(Stage::Augment, loaded),
        Command::Run => {
            let loaded = require_config(loaded)?;
            for s in Stage::PIPELINE {
                run_stage(s, &loaded)?;
                eprintln!("{}: done", s.name());
            }
            Ok(())
        }
        Command::EvalServe(args) => eval_serve(args, loaded),
        Command::EvalReport(args) => eval_report(args, loaded),
        Command::TrainProfiles(args) => train_profiles(args),
    }
}

fn read_items(path: &Path) -> anyhow::Result<Vec<EvalItem>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut items = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), n + 1))?);
    }
    Ok(items)
}

fn eval_serve(args: ServeArgs, loaded: Option<Loaded>) -> Result<(), CliError> {
    let settings = loaded.map(|l| l.config.eval).unwrap_or_default();
    let bind = match args.bind {
        Some(b) => b,
        None => settings.bind.parse().context("eval.bind")?,
    };
    let data = args.data.unwrap_or(settings.data_dir);
    let seed = args.seed.unwrap_or(settings.base_seed);
    let items = match args.items.or(settings.items) {
        Some(p) => read_items(&p)?,
        None => Vec::new(),
    };
    let service = EvalService::open(&data, seed, items).context("opening evaluation store")?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting runtime")?;
    eprintln!("eval-serve: listening on http://{bind}, data in {}", data.display());
    runtime
        .block_on(corpusforge_server::serve(bind, Arc::new(service)))
        .with_context(|| format!("serving on {bind}"))?;
    Ok(())
}

fn eval_report(args: ReportArgs, loaded: Option<Loaded>) -> Result<(), CliError> {
    let settings = loaded.map(|l| l.config.eval).unwrap_or_default();
    let data = args.data.unwrap_or(settings.data_dir);
    let path = data.join(ARCHIVE_FILE);
    if !path.is_file() {
        return Err(StageError::Missing {
            stage: "eval-report",
            requires: "eval-serve",
        }
        .into());
    }
    let f = std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let ds = import_eval_dataset(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
    let store = EvalStore::from_dataset(ds, settings.base_seed).context("replaying archive")?;
    let agg = store.aggregate();
    let cells: Vec<_> = agg
        .cells
        .into_iter()
        .filter(|c| args.granularity.is_none_or(|g| c.granularity == g))
        .collect();
    print!("{}", render_report(&cells, args.normalized));
    let d = agg.diagnostics;
    if d.missing_session + d.missing_item + d.bad_position > 0 {
        eprintln!(
            "warning: {} scores could not be unblinded ({} unknown session, {} unknown item, {} bad position)",
            d.missing_session + d.missing_item + d.bad_position,
            d.missing_session,
            d.missing_item,
            d.bad_position
        );
    }
    Ok(())
}

fn train_profiles(args: ProfileArgs) -> Result<(), CliError> {
    for (lang, bundled) in BUNDLED_SEEDS {
        let text = match &args.seeds {
            Some(dir) => {
                let p = dir.join(format!("{}.txt", lang.code()));
                std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?
            }
            None => bundled.to_string(),
        };
        let profile = LangProfile::train(lang, text.lines());
        let out = args.out.join(format!("{}.jsonl", lang.code()));
        write_atomic(&out, |w| profile.write_jsonl(w))?;
        eprintln!("train-profiles: wrote {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // keep exit code 2 for missing stage artifacts
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
