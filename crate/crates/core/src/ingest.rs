//! Score files, Elo files, and the validated in-memory tables built from them.
//!
//! Score files hold one record per (prompt, policy model). Two dialects are
//! accepted: line-delimited JSON and CSV with a header row. Elo files are a
//! JSON object `{model_id: elo}`, line-delimited `{"model_id", "elo"}`
//! records, or CSV with `model_id,elo` columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::{Error, Result};

/// One reward-model score for a (prompt, policy model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub prompt_id: String,
    pub model_id: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_label: Option<String>,
}

impl ScoreRecord {
    pub fn new(prompt_id: impl Into<String>, model_id: impl Into<String>, score: f64) -> Self {
        ScoreRecord {
            prompt_id: prompt_id.into(),
            model_id: model_id.into(),
            score,
            response_text: None,
            category: None,
            style_label: None,
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.response_text = Some(text.into());
        self
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }

    pub fn with_style(mut self, label: impl Into<String>) -> Self {
        self.style_label = Some(label.into());
        self
    }
}

/// On-disk dialect of a score file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFormat {
    Jsonl,
    Csv,
}

impl ScoreFormat {
    /// `.csv` selects CSV; anything else is treated as line-delimited JSON.
    pub fn from_path(path: &Path) -> Self {
        match extension(path).as_deref() {
            Some("csv") => ScoreFormat::Csv,
            _ => ScoreFormat::Jsonl,
        }
    }
}

impl FromStr for ScoreFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Ok(ScoreFormat::Jsonl),
            "csv" => Ok(ScoreFormat::Csv),
            other => Err(Error::invalid(format!("unknown score format {other:?}"))),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// Validated set of score records, indexed by model and prompt.
///
/// Records are kept sorted by `(prompt_id, model_id)` so that every
/// aggregate over prompts is evaluated in the same order on every run.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    records: Vec<ScoreRecord>,
    by_model: BTreeMap<String, BTreeMap<String, usize>>,
    prompts: Vec<String>,
}

impl PartialEq for ScoreTable {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl ScoreTable {
    /// Builds a table, rejecting non-finite scores and duplicate keys.
    ///
    /// Error line numbers are 1-based positions in `records`.
    pub fn from_records(records: Vec<ScoreRecord>) -> Result<Self> {
        Self::from_numbered(records.into_iter().enumerate().map(|(i, r)| (i + 1, r)))
    }

    fn from_numbered(records: impl IntoIterator<Item = (usize, ScoreRecord)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for (line, record) in records {
            if !record.score.is_finite() {
                return Err(Error::NonFiniteScore {
                    line,
                    value: record.score,
                });
            }
            if !seen.insert((record.prompt_id.clone(), record.model_id.clone())) {
                return Err(Error::DuplicateRecord {
                    line,
                    prompt_id: record.prompt_id,
                    model_id: record.model_id,
                });
            }
            kept.push(record);
        }
        kept.sort_by(|a, b| {
            (a.prompt_id.as_str(), a.model_id.as_str()).cmp(&(b.prompt_id.as_str(), b.model_id.as_str()))
        });

        let mut by_model: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut prompts = BTreeSet::new();
        for (idx, r) in kept.iter().enumerate() {
            by_model
                .entry(r.model_id.clone())
                .or_default()
                .insert(r.prompt_id.clone(), idx);
            prompts.insert(r.prompt_id.clone());
        }
        Ok(ScoreTable {
            records: kept,
            by_model,
            prompts: prompts.into_iter().collect(),
        })
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Model ids in lexicographic order.
    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.by_model.keys().map(String::as_str)
    }

    /// Every prompt id that appears in the table, lexicographically ordered.
    pub fn prompts(&self) -> &[String] {
        &self.prompts
    }

    pub fn contains_model(&self, model: &str) -> bool {
        self.by_model.contains_key(model)
    }

    pub fn record(&self, prompt_id: &str, model_id: &str) -> Option<&ScoreRecord> {
        self.by_model
            .get(model_id)
            .and_then(|m| m.get(prompt_id))
            .map(|&i| &self.records[i])
    }

    pub fn score(&self, prompt_id: &str, model_id: &str) -> Option<f64> {
        self.record(prompt_id, model_id).map(|r| r.score)
    }

    /// Records of one model, ordered by prompt id.
    pub fn model_records(&self, model_id: &str) -> Result<impl Iterator<Item = &ScoreRecord>> {
        let prompts = self
            .by_model
            .get(model_id)
            .ok_or_else(|| Error::UnknownModel(model_id.to_string()))?;
        Ok(prompts.values().map(|&i| &self.records[i]))
    }

    /// Prompts answered by both `a` and `b`, lexicographically ordered.
    pub fn shared_prompts(&self, a: &str, b: &str) -> Result<Vec<&str>> {
        let pa = self.by_model.get(a).ok_or_else(|| Error::UnknownModel(a.to_string()))?;
        let pb = self.by_model.get(b).ok_or_else(|| Error::UnknownModel(b.to_string()))?;
        Ok(pa.keys().filter(|p| pb.contains_key(*p)).map(String::as_str).collect())
    }

    /// Like [`shared_prompts`](Self::shared_prompts), but an empty table or
    /// an empty intersection is reported as [`Error::NoSharedPrompts`].
    pub fn require_shared(&self, a: &str, b: &str) -> Result<Vec<&str>> {
        let no_shared = || Error::NoSharedPrompts {
            a: a.to_string(),
            b: b.to_string(),
        };
        if self.is_empty() {
            return Err(no_shared());
        }
        let shared = self.shared_prompts(a, b)?;
        if shared.is_empty() {
            return Err(no_shared());
        }
        Ok(shared)
    }

    pub fn load(path: &Path, format: ScoreFormat) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        match format {
            ScoreFormat::Jsonl => Self::read_jsonl(BufReader::new(file)),
            ScoreFormat::Csv => Self::read_csv(file),
        }
    }

    pub fn read_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut warned = BTreeSet::new();
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawScoreRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            for key in raw.extra.keys() {
                if warned.insert(key.clone()) {
                    log::warn!("line {line_no}: ignoring unknown field {key:?}");
                }
            }
            records.push((line_no, raw.into_record()));
        }
        Self::from_numbered(records)
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Malformed {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let column = |name: &str| headers.iter().position(|h| h.trim() == name);
        let prompt_col = column("prompt_id");
        let model_col = column("model_id");
        let score_col = column("score");
        let (Some(prompt_col), Some(model_col), Some(score_col)) = (prompt_col, model_col, score_col) else {
            return Err(Error::Malformed {
                line: 1,
                message: "header must name prompt_id, model_id and score".into(),
            });
        };
        let text_col = column("response_text");
        let category_col = column("category");
        let style_col = column("style_label");
        for h in headers.iter() {
            if !KNOWN_SCORE_FIELDS.contains(&h.trim()) {
                log::warn!("ignoring unknown column {h:?}");
            }
        }

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::Malformed {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            let optional = |col: Option<usize>| {
                col.and_then(|c| row.get(c))
                    .filter(|v| !v.is_empty())
                    .map(str::to_string)
            };
            let score_text = row.get(score_col).unwrap_or("").trim();
            let score = score_text.parse::<f64>().map_err(|_| Error::Malformed {
                line,
                message: format!("score {score_text:?} is not a number"),
            })?;
            records.push((
                line,
                ScoreRecord {
                    prompt_id: row.get(prompt_col).unwrap_or("").to_string(),
                    model_id: row.get(model_col).unwrap_or("").to_string(),
                    score,
                    response_text: optional(text_col),
                    category: optional(category_col),
                    style_label: optional(style_col),
                },
            ));
        }
        Self::from_numbered(records)
    }

    /// Writes one JSON record per line, in table order.
    pub fn write_jsonl(&self, mut writer: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut writer, r)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

const KNOWN_SCORE_FIELDS: [&str; 6] = [
    "prompt_id",
    "model_id",
    "score",
    "response_text",
    "category",
    "style_label",
];

#[derive(Deserialize)]
struct RawScoreRecord {
    prompt_id: String,
    model_id: String,
    #[serde(deserialize_with = "lenient_f64")]
    score: f64,
    #[serde(default)]
    response_text: Option<String>,
    #[serde(default)]
    category: Option<String>,
    #[serde(default)]
    style_label: Option<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

impl RawScoreRecord {
    fn into_record(self) -> ScoreRecord {
        ScoreRecord {
            prompt_id: self.prompt_id,
            model_id: self.model_id,
            score: self.score,
            response_text: self.response_text,
            category: self.category,
            style_label: self.style_label,
        }
    }
}

/// Accepts a JSON number or a numeric string such as `"NaN"` or `"inf"`, so
/// that non-finite scores surface as validation errors rather than parse
/// errors.
fn lenient_f64<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NumOrText {
        Num(f64),
        Text(String),
    }
    match NumOrText::deserialize(deserializer)? {
        NumOrText::Num(v) => Ok(v),
        NumOrText::Text(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| de::Error::custom(format!("score {s:?} is not a number"))),
    }
}

/// On-disk layout of an Elo file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EloFormat {
    /// A single JSON object mapping model id to rating.
    Map,
    /// One `{"model_id": .., "elo": ..}` object per line.
    Jsonl,
    /// CSV with `model_id` and `elo` columns.
    Csv,
}

impl EloFormat {
    pub fn from_path(path: &Path) -> Self {
        match extension(path).as_deref() {
            Some("jsonl") | Some("ndjson") => EloFormat::Jsonl,
            Some("csv") => EloFormat::Csv,
            _ => EloFormat::Map,
        }
    }
}

impl FromStr for EloFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "map" | "json" => Ok(EloFormat::Map),
            "jsonl" | "ndjson" => Ok(EloFormat::Jsonl),
            "csv" => Ok(EloFormat::Csv),
            other => Err(Error::invalid(format!("unknown Elo format {other:?}"))),
        }
    }
}

/// Arena ratings keyed by model id.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EloTable {
    entries: BTreeMap<String, f64>,
}

/// Ratings from the arena leaderboard snapshot used for the bundled fixtures.
const ARENA_SNAPSHOT: &str = include_str!("../data/arena_elo.json");

impl EloTable {
    pub fn from_entries<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (model, elo) in entries {
            let model = model.into();
            if !elo.is_finite() {
                return Err(Error::NonFiniteRating { model, value: elo });
            }
            if map.insert(model.clone(), elo).is_some() {
                return Err(Error::DuplicateModel(model));
            }
        }
        Ok(EloTable { entries: map })
    }

    /// The policy-model leaderboard snapshot shipped with the crate.
    pub fn arena_snapshot() -> Self {
        Self::parse_map(ARENA_SNAPSHOT).expect("bundled Elo snapshot is valid")
    }

    pub fn get(&self, model: &str) -> Result<f64> {
        self.entries
            .get(model)
            .copied()
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    pub fn contains(&self, model: &str) -> bool {
        self.entries.contains_key(model)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Highest-rated model; ties go to the lexicographically first id.
    pub fn top_model<'a>(&self, among: impl IntoIterator<Item = &'a str>) -> Result<&'a str> {
        let mut best: Option<(&str, f64)> = None;
        for m in among {
            let elo = self.get(m)?;
            if best.is_none_or(|(bm, be)| elo > be || (elo == be && m < bm)) {
                best = Some((m, elo));
            }
        }
        best.map(|(m, _)| m).ok_or_else(|| Error::invalid("no models given"))
    }

    pub fn load(path: &Path, format: EloFormat) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        match format {
            EloFormat::Map => Self::parse_map(&text),
            EloFormat::Jsonl => Self::parse_jsonl(&text),
            EloFormat::Csv => Self::parse_csv(&text),
        }
    }

    pub fn parse_map(text: &str) -> Result<Self> {
        let entries: OrderedEntries = serde_json::from_str(text).map_err(|e| Error::Malformed {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_entries(entries.0)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Entry {
            model_id: String,
            #[serde(deserialize_with = "lenient_f64")]
            elo: f64,
        }
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: Entry = serde_json::from_str(line).map_err(|e| Error::Malformed {
                line: idx + 1,
                message: e.to_string(),
            })?;
            entries.push((e.model_id, e.elo));
        }
        Self::from_entries(entries)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Entry {
            model_id: String,
            elo: f64,
        }
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for row in rdr.deserialize::<Entry>() {
            let e = row.map_err(|e| Error::Malformed {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            entries.push((e.model_id, e.elo));
        }
        Self::from_entries(entries)
    }

    /// Serializes as a JSON object, the [`EloFormat::Map`] layout.
    pub fn write_json(&self, writer: impl Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(writer, &self.entries)?;
        Ok(())
    }
}

/// JSON object read as an ordered list of pairs so duplicate keys survive
/// long enough to be reported.
struct OrderedEntries(Vec<(String, f64)>);

impl<'de> Deserialize<'de> for OrderedEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = OrderedEntries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping model id to Elo rating")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, f64>()? {
                    out.push((k, v));
                }
                Ok(OrderedEntries(out))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}
