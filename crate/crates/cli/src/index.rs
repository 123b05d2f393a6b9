//! The on-disk index: an assembled lake plus its extracted nuggets.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use cardlake::lake::{write_cards, write_tables, Corpus, EvidenceTable, ModelLake, TableLake};
use cardlake::markdown::parse_markdown_tables;
use cardlake::nuggets::{extract_store, NuggetStore};
use cardlake::provider::{AuditLog, CompletionProvider, EmbeddingProvider, HashingEmbedder, HttpCompletion, HttpEmbedder, PromptRunner};
use cardlake::{DiscoveryConfig, Engine, TextIndexConfig};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "cardlake-index/1";
const MANIFEST: &str = "manifest.json";
const CARDS: &str = "cards.jsonl";
const TABLES: &str = "tables.jsonl";
const NUGGETS: &str = "nuggets.jsonl";
const AUDIT: &str = "audit.jsonl";

/// Dimension requested from a remote embedder.
const REMOTE_DIMENSION: usize = 768;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub cards: usize,
    pub tables: usize,
    /// Tables dropped for being too large or left without a card.
    pub dropped_tables: usize,
    pub nuggets: usize,
    /// Provider names used to build the index.
    pub embedder: String,
    pub extractor: String,
    pub warnings: Vec<String>,
}

/// The embedder configured through the environment, or the offline default.
pub fn embedder_from_env() -> Arc<dyn EmbeddingProvider> {
    match HttpEmbedder::from_env(REMOTE_DIMENSION) {
        Some(remote) => Arc::new(remote),
        None => Arc::new(HashingEmbedder::default()),
    }
}

pub fn completion_from_env() -> Option<Box<dyn CompletionProvider>> {
    HttpCompletion::from_env().map(|p| Box::new(p) as Box<dyn CompletionProvider>)
}

pub struct IngestOptions {
    /// Lift pipe tables out of the text of cards that link no tables.
    pub markdown_tables: bool,
}

/// Loads, links and compacts the lake, extracts nuggets, and writes the
/// index directory.
pub fn ingest(cards: &Path, tables: &Path, out: &Path, options: &IngestOptions) -> Result<Manifest> {
    let mut lake = ModelLake::load(cards, tables).context("loading the lake")?;
    if options.markdown_tables {
        lake = with_markdown_tables(lake)?;
    }
    let before = lake.tables.len();
    let lake = lake.compact();
    let embedder = embedder_from_env();

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let completion = completion_from_env();
    let audit = AuditLog::to_file(out.join(AUDIT));
    let runner = completion.as_deref().map(|provider| PromptRunner { provider, audit: &audit });
    let store = extract_store(&lake, runner.as_ref()).context("extracting nuggets")?;

    write_cards(&out.join(CARDS), lake.corpus.cards())?;
    write_tables(&out.join(TABLES), lake.tables.tables())?;
    store.write(&out.join(NUGGETS))?;
    let manifest = Manifest {
        format: FORMAT.to_owned(),
        cards: lake.corpus.len(),
        tables: lake.tables.len(),
        dropped_tables: before - lake.tables.len(),
        nuggets: store.nugget_count(),
        embedder: embedder.name().to_owned(),
        extractor: completion.as_deref().map_or("fallback", |p| p.name()).to_owned(),
        warnings: lake.warnings.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(out.join(MANIFEST), json + "\n").with_context(|| format!("writing {}", out.join(MANIFEST).display()))?;
    Ok(manifest)
}

fn with_markdown_tables(lake: ModelLake) -> Result<ModelLake> {
    let mut tables: Vec<EvidenceTable> = lake.tables.into_tables();
    let mut cards = lake.corpus.into_cards();
    for card in cards.iter_mut().filter(|c| c.table_ids.is_empty()) {
        for table in parse_markdown_tables(&card.text, &card.id) {
            card.table_ids.push(table.id.clone());
            tables.push(table);
        }
    }
    Ok(ModelLake::assemble(Corpus::new(cards)?, TableLake::new(tables)?))
}

/// A loaded index, ready to answer queries.
pub struct Index {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub engine: Engine,
    pub nuggets: NuggetStore,
    completion: Option<Box<dyn CompletionProvider>>,
    audit: AuditLog,
}

impl Index {
    pub fn open(dir: &Path) -> Result<Index> {
        let path = dir.join(MANIFEST);
        let raw = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: Manifest = serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        if manifest.format != FORMAT {
            bail!("{}: unsupported index format `{}` (expected `{FORMAT}`)", path.display(), manifest.format);
        }
        let embedder = embedder_from_env();
        if embedder.name() != manifest.embedder {
            bail!(
                "index was built with embedder `{}` but `{}` is configured",
                manifest.embedder,
                embedder.name()
            );
        }
        let lake = ModelLake::load(&dir.join(CARDS), &dir.join(TABLES))?;
        let mut nuggets = NuggetStore::read(&dir.join(NUGGETS))?;
        // ingest extracted every card; those without nuggets have no lines
        nuggets.register_empty(lake.corpus.iter().map(|c| c.id.as_str()));
        let engine = Engine::build(lake, embedder, TextIndexConfig::default(), DiscoveryConfig::default())?;
        Ok(Index {
            dir: dir.to_path_buf(),
            manifest,
            engine,
            nuggets,
            completion: completion_from_env(),
            audit: AuditLog::in_memory(),
        })
    }

    /// The configured completion provider, if any, logging to this index's
    /// in-memory audit log.
    pub fn runner(&self) -> Option<PromptRunner<'_>> {
        self.completion.as_deref().map(|provider| PromptRunner {
            provider,
            audit: &self.audit,
        })
    }

    pub fn lake(&self) -> &ModelLake {
        self.engine.lake()
    }
}
