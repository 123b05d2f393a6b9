//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use cardlake::eval::{
    aggregate, prepare_queries, read_query_file, run_benchmark, write_reports, BenchConfig, DEFAULT_BUDGETS,
};
use cardlake::nuggets::extract_nuggets;
use cardlake::text_index::RetrievalMethod;
use cardlake::{Operator, PipelineConfig, RetrievalResult, SemanticMethod};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::api::{self, DEFAULT_K};
use crate::index::{self, Index, IngestOptions};

#[derive(Debug, Parser)]
#[command(name = "cardlake", version, about = "Search model cards through their evidence tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index directory from card and table files.
    Ingest(IngestArgs),
    /// Text-only card search.
    Search(SearchArgs),
    /// Rank tables against an anchor table with one discovery operator.
    Discover(DiscoverArgs),
    /// Card to tables to cards retrieval.
    Pipeline(PipelineArgs),
    /// Orientation-aware integration of an anchor table with other tables.
    Integrate(IntegrateArgs),
    /// Nugget extraction and candidate-set scoring.
    #[command(subcommand)]
    Nuggets(NuggetsCommand),
    /// Run every retrieval method over a query file and write reports.
    Bench(BenchArgs),
    /// Serve the read-only HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Markdown,
    Json,
}

fn semantic_parser() -> impl TypedValueParser<Value = SemanticMethod> {
    PossibleValuesParser::new(SemanticMethod::ALL.map(|m| m.as_str())).map(|s| s.parse().expect("listed value"))
}

fn operator_parser() -> impl TypedValueParser<Value = Operator> {
    PossibleValuesParser::new(Operator::ALL.map(|o| o.as_str())).map(|s| s.parse().expect("listed value"))
}

fn method_parser() -> impl TypedValueParser<Value = RetrievalMethod> {
    PossibleValuesParser::new(RetrievalMethod::ALL.map(|m| m.as_str())).map(|s| s.parse().expect("listed value"))
}

#[derive(Debug, Args)]
pub struct IndexArg {
    /// Index directory written by `ingest`.
    #[arg(long)]
    pub index: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Card file, one JSON record per line.
    #[arg(long)]
    pub cards: PathBuf,
    /// Table file, one JSON record per line.
    #[arg(long)]
    pub tables: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also lift pipe tables out of cards that link no tables.
    #[arg(long)]
    pub markdown_tables: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub index: IndexArg,
    #[arg(long)]
    pub q: String,
    #[arg(long, default_value = "dense", value_parser = semantic_parser())]
    pub method: SemanticMethod,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub index: IndexArg,
    #[arg(long, value_parser = operator_parser())]
    pub operator: Operator,
    #[arg(long)]
    pub anchor_table: String,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub index: IndexArg,
    #[arg(long)]
    pub q: String,
    #[arg(long, default_value = "dense", value_parser = semantic_parser())]
    pub semantic: SemanticMethod,
    #[arg(long, default_value = "unionable", value_parser = operator_parser())]
    pub operator: Operator,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Anchor cards taken from the top of the semantic ranking.
    #[arg(long, default_value_t = 1)]
    pub anchor_count: usize,
    /// Candidates kept per seed table; defaults to max(20, k).
    #[arg(long)]
    pub discovery_k: Option<usize>,
    /// Also write the JSON result to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

impl PipelineArgs {
    pub fn config(&self) -> PipelineConfig {
        let mut config = PipelineConfig::new(self.semantic, self.operator, self.k);
        config.anchor_count = self.anchor_count;
        if let Some(d) = self.discovery_k {
            config.discovery_k = d;
        }
        config
    }
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub index: IndexArg,
    #[arg(long)]
    pub anchor_table: String,
    /// Comma-separated table ids, integrated in the given order.
    #[arg(long, default_value = "")]
    pub tables: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Subcommand)]
pub enum NuggetsCommand {
    /// Extract nuggets for cards of the index and print them as JSON lines.
    Extract(ExtractArgs),
    /// Count the query-relevant nuggets covered by a set of cards.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub index: IndexArg,
    /// Cards to extract; every card when omitted.
    #[arg(long = "card")]
    pub cards: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub index: IndexArg,
    #[arg(long)]
    pub q: String,
    /// Comma-separated card ids.
    #[arg(long)]
    pub cards: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub index: IndexArg,
    /// Query file, one {"id", "text"} record per line.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BUDGETS)]
    pub budgets: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = method_parser())]
    pub methods: Vec<RetrievalMethod>,
    /// Semantic stage of the structured methods.
    #[arg(long, default_value = "dense", value_parser = semantic_parser())]
    pub semantic: SemanticMethod,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub index: IndexArg,
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub addr: String,
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_cards(out: &mut dyn Write, result: &RetrievalResult) -> Result<()> {
    for (i, card) in result.cards.iter().enumerate() {
        write!(out, "{}\t{}\t{:.6}", i + 1, card.card_id, card.score)?;
        if !card.supporting_tables.is_empty() {
            write!(out, "\t{}", card.supporting_tables.join(","))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn open(arg: &IndexArg) -> Result<Index> {
    Index::open(&arg.index).with_context(|| format!("opening index {}", arg.index.display()))
}

/// Runs one command, writing its result to `out`. `serve` blocks until the
/// process is interrupted.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let options = IngestOptions {
                markdown_tables: a.markdown_tables,
            };
            let manifest = index::ingest(&a.cards, &a.tables, &a.out, &options)?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            json_line(out, &manifest)
        }
        Command::Search(a) => {
            let index = open(&a.index)?;
            let result = api::search(&index, &a.q, a.method, a.k)?;
            match a.format {
                Format::Json => json_line(out, &result),
                Format::Text => print_cards(out, &result),
            }
        }
        Command::Discover(a) => {
            let index = open(&a.index)?;
            let result = api::discover(&index, &a.anchor_table, a.operator, a.k)?;
            match a.format {
                Format::Json => json_line(out, &result),
                Format::Text => {
                    for (i, hit) in result.discovery.hits.iter().enumerate() {
                        writeln!(out, "{}\t{}\t{}", i + 1, hit.table_id, hit.score)?;
                    }
                    Ok(())
                }
            }
        }
        Command::Pipeline(a) => {
            let index = open(&a.index)?;
            let result = api::pipeline(&index, &a.q, &a.config())?;
            if let Some(path) = &a.out {
                let json = serde_json::to_string_pretty(&result)? + "\n";
                fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
            }
            match a.format {
                Format::Json => json_line(out, &result),
                Format::Text => {
                    writeln!(out, "anchor\t{}", result.anchors.join(","))?;
                    print_cards(out, &result)
                }
            }
        }
        Command::Integrate(a) => {
            let index = open(&a.index)?;
            let tables = api::split_ids(&a.tables);
            let result = api::integrate(&index, &a.anchor_table, &tables)?;
            match a.format {
                TableFormat::Csv => write!(out, "{}", result.integrated.to_csv()?)?,
                TableFormat::Markdown => write!(out, "{}", result.integrated.to_markdown())?,
                TableFormat::Json => json_line(out, &result)?,
            }
            Ok(())
        }
        Command::Nuggets(NuggetsCommand::Extract(a)) => {
            let index = open(&a.index)?;
            let lake = index.lake();
            let ids: Vec<String> = if a.cards.is_empty() {
                lake.corpus.iter().map(|c| c.id.clone()).collect()
            } else {
                a.cards.clone()
            };
            let runner = index.runner();
            for id in ids {
                let card = lake.card(&id)?;
                let tables: Vec<_> = lake.tables_of(card).collect();
                for nugget in extract_nuggets(card, &tables, runner.as_ref())? {
                    writeln!(out, "{}", serde_json::to_string(&nugget)?)?;
                }
            }
            Ok(())
        }
        Command::Nuggets(NuggetsCommand::Score(a)) => {
            let index = open(&a.index)?;
            let cards = api::split_ids(&a.cards);
            let result = api::score(&index, &a.q, &cards)?;
            match a.format {
                Format::Json => json_line(out, &result),
                Format::Text => Ok(writeln!(out, "{}", result.score)?),
            }
        }
        Command::Bench(a) => {
            let index = open(&a.index)?;
            let specs = read_query_file(&a.queries)?;
            let runner = index.runner();
            let queries = prepare_queries(&specs, runner.as_ref())?;
            let mut config = BenchConfig {
                budgets: a.budgets.clone(),
                semantic: a.semantic,
                ..BenchConfig::default()
            };
            if !a.methods.is_empty() {
                config.methods = a.methods.clone();
            }
            let rows = run_benchmark(&index.engine, &index.nuggets, &queries, &config, runner.as_ref())?;
            fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            write_reports(&a.out, &queries, &rows)?;
            json_line(out, &aggregate(&rows)?)
        }
        Command::Serve(a) => {
            let index = open(&a.index)?;
            tokio::runtime::Runtime::new()?.block_on(crate::http::serve(index, &a.addr))
        }
    }
}

