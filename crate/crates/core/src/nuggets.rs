//! Nuggets: six-attribute evidence tuples extracted from cards, query
//! constraints over those attributes, and set-level coverage scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::discovery::ColumnProfile;
use crate::error::{Error, ProviderError, Result};
use crate::lake::{EvidenceTable, ModelCard, ModelLake};
use crate::markdown::parse_markdown_tables;
use crate::provider::{strip_code_fence, AuditRecord, PromptRunner};
use crate::token::{normalized_key, token_strings};

pub const EXTRACT_PROMPT: &str = include_str!("../assets/prompts/extract_nuggets.v1.txt");
pub const MAP_QUERY_PROMPT: &str = include_str!("../assets/prompts/map_query.v1.txt");
pub const QUERY_LEXICON: &str = include_str!("../assets/query_lexicon.tsv");
const PROMPT_VERSION: &str = "v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Model,
    BaseModel,
    ModelVariant,
    Dataset,
    MetricName,
    MetricValue,
}

impl Attribute {
    pub const ALL: [Attribute; 6] = [
        Self::Model,
        Self::BaseModel,
        Self::ModelVariant,
        Self::Dataset,
        Self::MetricName,
        Self::MetricValue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::BaseModel => "base_model",
            Self::ModelVariant => "model_variant",
            Self::Dataset => "dataset",
            Self::MetricName => "metric_name",
            Self::MetricValue => "metric_value",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown nugget attribute `{s}`")))
    }
}

/// One atomic piece of evidence from one card. Field order is the nugget
/// file's column order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nugget {
    pub model: Option<String>,
    pub base_model: Option<String>,
    pub model_variant: Option<String>,
    pub dataset: Option<String>,
    pub metric_name: Option<String>,
    pub metric_value: Option<String>,
    pub card_id: String,
}

/// The normalized six-attribute projection that defines nugget identity.
pub type NuggetKey = [Option<String>; 6];

impl Nugget {
    pub fn for_card(card_id: &str) -> Self {
        Self {
            card_id: card_id.to_owned(),
            ..Self::default()
        }
    }

    pub fn get(&self, attribute: Attribute) -> Option<&str> {
        match attribute {
            Attribute::Model => self.model.as_deref(),
            Attribute::BaseModel => self.base_model.as_deref(),
            Attribute::ModelVariant => self.model_variant.as_deref(),
            Attribute::Dataset => self.dataset.as_deref(),
            Attribute::MetricName => self.metric_name.as_deref(),
            Attribute::MetricValue => self.metric_value.as_deref(),
        }
    }

    pub fn set(&mut self, attribute: Attribute, value: Option<String>) {
        let value = value.map(|v| v.trim().to_owned()).filter(|v| !v.is_empty());
        match attribute {
            Attribute::Model => self.model = value,
            Attribute::BaseModel => self.base_model = value,
            Attribute::ModelVariant => self.model_variant = value,
            Attribute::Dataset => self.dataset = value,
            Attribute::MetricName => self.metric_name = value,
            Attribute::MetricValue => self.metric_value = value,
        }
    }

    fn with(mut self, attribute: Attribute, value: impl Into<String>) -> Self {
        self.set(attribute, Some(value.into()));
        self
    }

    /// Lowercased token sequences; values without tokens count as null.
    pub fn key(&self) -> NuggetKey {
        Attribute::ALL.map(|a| {
            self.get(a)
                .map(normalized_key)
                .filter(|v| !v.is_empty())
        })
    }

    /// At least one of the six attributes carries a value.
    pub fn is_instantiated(&self) -> bool {
        self.key().iter().any(Option::is_some)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "terms", rename_all = "snake_case")]
pub enum AttributeConstraint {
    Irrelevant,
    RequiredNonNull,
    /// Every term must occur among the value's normalized tokens.
    MustContain(Vec<String>),
}

impl AttributeConstraint {
    /// Normalizes the terms; a term list with no tokens degrades to
    /// `RequiredNonNull`.
    pub fn must_contain<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = Vec::new();
        for term in terms {
            for t in token_strings(term.as_ref()) {
                if !tokens.contains(&t) {
                    tokens.push(t);
                }
            }
        }
        if tokens.is_empty() {
            Self::RequiredNonNull
        } else {
            Self::MustContain(tokens)
        }
    }

    pub fn is_relevant(&self) -> bool {
        !matches!(self, Self::Irrelevant)
    }

    pub fn accepts(&self, value: Option<&str>) -> bool {
        match self {
            Self::Irrelevant => true,
            Self::RequiredNonNull => value.is_some_and(|v| !token_strings(v).is_empty()),
            Self::MustContain(terms) => value.is_some_and(|v| {
                let tokens: BTreeSet<String> = token_strings(v).into_iter().collect();
                terms.iter().all(|t| tokens.contains(t))
            }),
        }
    }
}

/// A query as nugget constraints: one per attribute, plus the exchange that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryConstraint {
    pub query: String,
    /// Indexed in [`Attribute::ALL`] order.
    pub attributes: BTreeMap<Attribute, AttributeConstraint>,
    pub audit: AuditRecord,
}

impl QueryConstraint {
    /// A constraint with every attribute irrelevant; callers fill in the rest.
    pub fn unconstrained(query: &str) -> Self {
        Self {
            query: query.to_owned(),
            attributes: Attribute::ALL
                .into_iter()
                .map(|a| (a, AttributeConstraint::Irrelevant))
                .collect(),
            audit: AuditRecord {
                task: "map_query".into(),
                prompt_version: "manual".into(),
                input: query.to_owned(),
                output: String::new(),
                post_processed: String::new(),
            },
        }
    }

    pub fn with(mut self, attribute: Attribute, constraint: AttributeConstraint) -> Self {
        self.attributes.insert(attribute, constraint);
        self
    }

    pub fn get(&self, attribute: Attribute) -> &AttributeConstraint {
        self.attributes
            .get(&attribute)
            .unwrap_or(&AttributeConstraint::Irrelevant)
    }

    pub fn is_satisfiable_shape(&self) -> bool {
        self.attributes.values().any(AttributeConstraint::is_relevant)
    }

    fn render(&self) -> String {
        serde_json::to_string(&self.attributes).expect("constraints serialize")
    }
}

pub fn matches(nugget: &Nugget, constraint: &QueryConstraint) -> bool {
    Attribute::ALL
        .into_iter()
        .all(|a| constraint.get(a).accepts(nugget.get(a)))
}

fn key_matches(key: &NuggetKey, constraint: &QueryConstraint) -> bool {
    Attribute::ALL
        .into_iter()
        .all(|a| constraint.get(a).accepts(key[a.index()].as_deref()))
}

static BITS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:^|[^0-9])([0-9]{1,2})[ _-]?bits?\b|\bint([0-9]{1,2})\b").expect("valid regex"));

const QUANTIZATION_TAGS: &[&str] = &[
    "quantized",
    "quantization",
    "gptq",
    "awq",
    "gguf",
    "bitsandbytes",
    "exl2",
    "int4",
    "int8",
];

fn quantization_bits(tag: &str) -> Option<String> {
    let caps = BITS.captures(tag)?;
    let bits = caps.get(1).or_else(|| caps.get(2))?.as_str();
    Some(format!("{bits}-bit"))
}

fn is_quantization_tag(tag: &str) -> bool {
    let tokens = token_strings(tag);
    tokens.iter().any(|t| QUANTIZATION_TAGS.contains(&t.as_str())) || quantization_bits(tag).is_some()
}

const METRIC_NAME_HEADERS: &[&str] = &["metric", "metrics", "metric name", "measure"];

/// Nuggets from leaderboard-shaped tables: the first column names the
/// dataset of each row, numeric-only columns hold metric values, and the
/// metric name is the column header (or the row's entry in a `Metric`
/// column when the table has one).
fn table_nuggets(card_id: &str, table: &EvidenceTable, out: &mut Vec<Nugget>) {
    if table.n_cols() < 2 {
        return;
    }
    let profiles = ColumnProfile::of_table(table);
    if profiles[0].numeric_only {
        return;
    }
    let metric_columns: Vec<usize> = (1..table.n_cols()).filter(|&j| profiles[j].numeric_only).collect();
    let name_column = (1..table.n_cols())
        .find(|&j| !profiles[j].numeric_only && METRIC_NAME_HEADERS.contains(&profiles[j].header.as_str()));
    for row in &table.rows {
        if row[0].is_null() {
            continue;
        }
        let dataset = row[0].to_string();
        for &j in &metric_columns {
            if row[j].is_null() {
                continue;
            }
            let metric_name = match name_column {
                Some(n) if !row[n].is_null() => row[n].to_string(),
                _ => table.headers[j].clone(),
            };
            out.push(
                Nugget::for_card(card_id)
                    .with(Attribute::Model, card_id)
                    .with(Attribute::Dataset, dataset.clone())
                    .with(Attribute::MetricName, metric_name)
                    .with(Attribute::MetricValue, row[j].to_string()),
            );
        }
    }
}

/// Rule-based extraction used when no completion provider is configured.
///
/// Tags yield lineage (`base_model:[relation:]org/name`), dataset
/// (`dataset:name`) and quantization-variant nuggets; leaderboard tables
/// yield one nugget per (row, metric column). Duplicate projections within
/// the card are dropped.
pub fn extract_fallback(card: &ModelCard, tables: &[&EvidenceTable]) -> Vec<Nugget> {
    let mut out = Vec::new();
    let mut quantized = false;
    let mut bits: Vec<String> = Vec::new();

    for tag in &card.tags {
        let tag = tag.trim();
        let lower = tag.to_lowercase();
        if lower.starts_with("base_model:") {
            let parts: Vec<&str> = tag.splitn(3, ':').collect();
            let (relation, base) = match parts.as_slice() {
                [_, base] => (None, *base),
                [_, relation, base] => (Some(relation.to_lowercase()), *base),
                _ => continue,
            };
            if relation.as_deref() == Some("quantized") {
                quantized = true;
            }
            out.push(
                Nugget::for_card(&card.id)
                    .with(Attribute::Model, card.id.as_str())
                    .with(Attribute::BaseModel, base),
            );
        } else if lower.starts_with("dataset:") {
            out.push(
                Nugget::for_card(&card.id)
                    .with(Attribute::Model, card.id.as_str())
                    .with(Attribute::Dataset, &tag["dataset:".len()..]),
            );
        } else if is_quantization_tag(tag) {
            quantized = true;
            if let Some(b) = quantization_bits(tag) {
                if !bits.contains(&b) {
                    bits.push(b);
                }
            }
        }
    }
    if quantized {
        let variant = Nugget::for_card(&card.id)
            .with(Attribute::Model, card.id.as_str())
            .with(Attribute::ModelVariant, "quantization");
        if bits.is_empty() {
            out.push(variant);
        } else {
            for b in bits {
                out.push(
                    variant
                        .clone()
                        .with(Attribute::MetricName, "quantization bits")
                        .with(Attribute::MetricValue, b),
                );
            }
        }
    }

    for table in tables {
        table_nuggets(&card.id, table, &mut out);
    }
    dedupe(out)
}

fn dedupe(nuggets: Vec<Nugget>) -> Vec<Nugget> {
    let mut seen = BTreeSet::new();
    nuggets
        .into_iter()
        .filter(|n| n.is_instantiated() && seen.insert(n.key()))
        .collect()
}

fn render_tables(tables: &[&EvidenceTable]) -> String {
    let mut out = String::new();
    for table in tables {
        let view = crate::integration::IntegratedTable::from(*table);
        out.push_str(&format!("[{}]\n{}\n", table.id, view.to_markdown()));
    }
    out
}

#[derive(Deserialize)]
struct RawNugget {
    model: Option<serde_json::Value>,
    base_model: Option<serde_json::Value>,
    model_variant: Option<serde_json::Value>,
    dataset: Option<serde_json::Value>,
    metric_name: Option<serde_json::Value>,
    metric_value: Option<serde_json::Value>,
}

fn scalar(v: Option<serde_json::Value>) -> Option<String> {
    match v? {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => Some(s),
        other => Some(other.to_string()),
    }
}

/// Parses a provider reply into nuggets for `card_id`.
pub fn parse_nugget_reply(card_id: &str, reply: &str) -> Result<Vec<Nugget>, String> {
    let raw: Vec<RawNugget> = serde_json::from_str(strip_code_fence(reply)).map_err(|e| e.to_string())?;
    let nuggets = raw
        .into_iter()
        .map(|r| {
            let mut n = Nugget::for_card(card_id);
            n.set(Attribute::Model, scalar(r.model));
            n.set(Attribute::BaseModel, scalar(r.base_model));
            n.set(Attribute::ModelVariant, scalar(r.model_variant));
            n.set(Attribute::Dataset, scalar(r.dataset));
            n.set(Attribute::MetricName, scalar(r.metric_name));
            n.set(Attribute::MetricValue, scalar(r.metric_value));
            n
        })
        .collect();
    Ok(dedupe(nuggets))
}

/// Extracts the nugget set of one card: through the provider when one is
/// given (failures are returned, never replaced by the fallback), otherwise
/// with [`extract_fallback`].
///
/// When `tables` is empty, pipe tables embedded in the card text are used.
pub fn extract_nuggets(
    card: &ModelCard,
    tables: &[&EvidenceTable],
    provider: Option<&PromptRunner<'_>>,
) -> Result<Vec<Nugget>> {
    let embedded;
    let tables: &[&EvidenceTable] = if tables.is_empty() {
        embedded = parse_markdown_tables(&card.text, &card.id);
        &embedded.iter().collect::<Vec<_>>()
    } else {
        tables
    };
    let Some(runner) = provider else {
        return Ok(extract_fallback(card, tables));
    };
    let prompt = EXTRACT_PROMPT
        .replace("{card_id}", &card.id)
        .replace("{tags}", &card.tags.join(", "))
        .replace("{card_text}", &card.text)
        .replace("{tables}", &render_tables(tables));
    let nuggets = runner.run("extract_nuggets", PROMPT_VERSION, prompt, |reply| {
        let nuggets = parse_nugget_reply(&card.id, reply)
            .map_err(|e| ProviderError::invalid_response(runner.provider.name(), e))?;
        let rendered = serde_json::to_string(&nuggets).expect("nuggets serialize");
        Ok((nuggets, rendered))
    })?;
    Ok(nuggets)
}

/// One line of the query lexicon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconRule {
    pub phrase: Vec<String>,
    pub attribute: Attribute,
    /// Empty for "attribute required".
    pub terms: Vec<String>,
}

pub fn parse_lexicon(text: &str) -> Result<Vec<LexiconRule>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [phrase, attribute, terms] = fields.as_slice() else {
            return Err(Error::InvalidConfig(format!(
                "lexicon line {}: expected 3 tab-separated fields",
                i + 1
            )));
        };
        let phrase = token_strings(phrase);
        if phrase.is_empty() {
            return Err(Error::InvalidConfig(format!("lexicon line {}: empty phrase", i + 1)));
        }
        let terms = if terms.trim() == "*" {
            Vec::new()
        } else {
            token_strings(terms)
        };
        rules.push(LexiconRule {
            phrase,
            attribute: attribute.trim().parse()?,
            terms,
        });
    }
    Ok(rules)
}

static LEXICON: LazyLock<Vec<LexiconRule>> =
    LazyLock::new(|| parse_lexicon(QUERY_LEXICON).expect("bundled lexicon is valid"));

pub fn lexicon() -> &'static [LexiconRule] {
    &LEXICON
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// The term list containing every other proposal's terms, if there is one.
fn most_specific(options: &[Vec<String>]) -> Option<&Vec<String>> {
    options
        .iter()
        .filter(|t| !t.is_empty())
        .find(|t| options.iter().all(|o| !o.is_empty() && o.iter().all(|x| t.contains(x))))
}

/// Lexicon-driven query mapping.
///
/// Every rule whose phrase occurs in the query constrains its attribute.
/// When several rules hit one attribute and one term list contains all the
/// others ("mmlu pro" over "mmlu"), that list is kept; rules that disagree
/// relax the attribute to "required". A query that hits no
/// rule is treated as a bare task query: dataset and metric name required.
pub fn map_query_fallback(query: &str) -> Result<QueryConstraint> {
    let tokens = token_strings(query);
    if tokens.is_empty() {
        return Err(Error::EmptyQuery(query.to_owned()));
    }
    let mut proposals: BTreeMap<Attribute, Vec<Vec<String>>> = BTreeMap::new();
    let mut hits = Vec::new();
    for rule in lexicon() {
        if contains_run(&tokens, &rule.phrase) {
            hits.push(format!("{} -> {}", rule.phrase.join(" "), rule.attribute));
            let list = proposals.entry(rule.attribute).or_default();
            if !list.contains(&rule.terms) {
                list.push(rule.terms.clone());
            }
        }
    }

    let mut constraint = QueryConstraint::unconstrained(query);
    for (attribute, options) in &proposals {
        let c = match most_specific(options) {
            Some(terms) => AttributeConstraint::MustContain(terms.clone()),
            None => AttributeConstraint::RequiredNonNull,
        };
        constraint.attributes.insert(*attribute, c);
    }
    if proposals.is_empty() {
        hits.push("no lexicon hit: bare task query".into());
        constraint
            .attributes
            .insert(Attribute::Dataset, AttributeConstraint::RequiredNonNull);
        constraint
            .attributes
            .insert(Attribute::MetricName, AttributeConstraint::RequiredNonNull);
    }
    constraint.audit = AuditRecord {
        task: "map_query".into(),
        prompt_version: "lexicon-v1".into(),
        input: query.to_owned(),
        output: hits.join("; "),
        post_processed: constraint.render(),
    };
    Ok(constraint)
}

fn parse_constraint_reply(query: &str, reply: &str) -> Result<QueryConstraint, String> {
    let value: serde_json::Value = serde_json::from_str(strip_code_fence(reply)).map_err(|e| e.to_string())?;
    let object = value.as_object().ok_or("expected a JSON object")?;
    let mut constraint = QueryConstraint::unconstrained(query);
    for attribute in Attribute::ALL {
        let c = match object.get(attribute.as_str()) {
            None | Some(serde_json::Value::Null) => AttributeConstraint::Irrelevant,
            Some(serde_json::Value::String(s)) if s == "required" => AttributeConstraint::RequiredNonNull,
            Some(serde_json::Value::String(s)) => AttributeConstraint::must_contain([s]),
            Some(serde_json::Value::Array(items)) => {
                let terms: Vec<String> = items
                    .iter()
                    .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_owned))
                    .collect();
                AttributeConstraint::must_contain(terms)
            }
            Some(other) => return Err(format!("{attribute}: unexpected value {other}")),
        };
        constraint.attributes.insert(attribute, c);
    }
    if !constraint.is_satisfiable_shape() {
        return Err("no attribute is relevant".into());
    }
    Ok(constraint)
}

/// Maps a query through the provider when one is given, otherwise through the
/// lexicon. The returned constraint always carries its audit record.
pub fn map_query(query: &str, provider: Option<&PromptRunner<'_>>) -> Result<QueryConstraint> {
    if token_strings(query).is_empty() {
        return Err(Error::EmptyQuery(query.to_owned()));
    }
    let Some(runner) = provider else {
        return map_query_fallback(query);
    };
    let prompt = MAP_QUERY_PROMPT.replace("{query}", query);
    let input = prompt.clone();
    let mut output = String::new();
    let mut constraint = runner.run("map_query", PROMPT_VERSION, prompt, |reply| {
        output = reply.to_owned();
        let c = parse_constraint_reply(query, reply)
            .map_err(|e| ProviderError::invalid_response(runner.provider.name(), e))?;
        let rendered = c.render();
        Ok((c, rendered))
    })?;
    constraint.audit = AuditRecord {
        task: "map_query".into(),
        prompt_version: PROMPT_VERSION.into(),
        input,
        output,
        post_processed: constraint.render(),
    };
    Ok(constraint)
}

/// Per-card nugget sets. Append-only: a card's set is written once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NuggetStore {
    cards: BTreeMap<String, Vec<Nugget>>,
}

impl NuggetStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, card_id: &str, nuggets: Vec<Nugget>) -> Result<()> {
        if self.cards.contains_key(card_id) {
            return Err(Error::NuggetsAlreadyStored(card_id.to_owned()));
        }
        self.cards.insert(card_id.to_owned(), nuggets);
        Ok(())
    }

    /// Registers cards known to have no nuggets.
    pub fn register_empty<'a>(&mut self, card_ids: impl IntoIterator<Item = &'a str>) {
        for id in card_ids {
            self.cards.entry(id.to_owned()).or_default();
        }
    }

    pub fn get(&self, card_id: &str) -> Option<&[Nugget]> {
        self.cards.get(card_id).map(Vec::as_slice)
    }

    pub fn contains(&self, card_id: &str) -> bool {
        self.cards.contains_key(card_id)
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn nugget_count(&self) -> usize {
        self.cards.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Nugget])> {
        self.cards.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// One JSON nugget per line, cards in id order.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for nugget in self.cards.values().flatten() {
            let line = serde_json::to_string(nugget).expect("nuggets serialize");
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut store = NuggetStore::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let nugget: Nugget = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            store.cards.entry(nugget.card_id.clone()).or_default().push(nugget);
        }
        Ok(store)
    }
}

/// Extracts every card of the lake into a fresh store.
pub fn extract_store(lake: &ModelLake, provider: Option<&PromptRunner<'_>>) -> Result<NuggetStore> {
    let mut store = NuggetStore::new();
    for card in lake.corpus.iter() {
        let tables: Vec<&EvidenceTable> = lake.tables_of(card).collect();
        store.insert(&card.id, extract_nuggets(card, &tables, provider)?)?;
    }
    Ok(store)
}

/// Distinct query-matching six-tuples across the union of the cards' nugget
/// sets. Repeated cards and repeated tuples count once.
pub fn score_candidate_set<S: AsRef<str>>(
    cards: &[S],
    constraint: &QueryConstraint,
    store: &NuggetStore,
) -> Result<usize> {
    let mut union: BTreeSet<NuggetKey> = BTreeSet::new();
    for card in cards {
        let card = card.as_ref();
        let nuggets = store
            .get(card)
            .ok_or_else(|| Error::MissingNuggets(card.to_owned()))?;
        union.extend(nuggets.iter().map(Nugget::key));
    }
    Ok(union.iter().filter(|k| key_matches(k, constraint)).count())
}
