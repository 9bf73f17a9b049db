//! Line-delimited report records and the plot-ready tables derived from them.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::calibrator::{CalibrationResult, MismatchReport, WinRates};
use crate::style::{PatternStats, StyleGroupStats};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub over_valued: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub result: CalibrationResult,
    pub before: MismatchReport,
    pub after: MismatchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleSummary {
    pub variance_across_groups: f64,
    pub degenerate: bool,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ReportRecord {
    Manifest(serde_json::Value),
    Calibration(CalibrationRecord),
    Joint(CalibrationResult),
    Mismatch(MismatchReport),
    Pattern(PatternStats),
    StyleGroup(StyleGroupStats),
    StyleSummary(StyleSummary),
}

pub fn write_records(records: &[ReportRecord], mut writer: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(|e| Error::invalid(format!("serializing report: {e}")))?;
        writer.write_all(b"\n").map_err(|e| Error::io("<report>", e))?;
    }
    Ok(())
}

pub fn read_records(reader: impl BufRead) -> Result<Vec<ReportRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pre,
    Post,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Pre => "pre",
            Stage::Post => "post",
        }
    }
}

/// One point of a win-rate scatter: Elo-expected against empirical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinRatePoint {
    pub over_valued: String,
    pub reference: String,
    pub category: String,
    pub stage: Stage,
    pub expected: f64,
    pub empirical: f64,
}

impl WinRatePoint {
    /// Distance from the diagonal along the empirical axis.
    pub fn gap(&self) -> f64 {
        (self.empirical - self.expected).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdRow {
    pub over_valued: String,
    pub reference: String,
    pub category: String,
    pub stage: Stage,
    pub md: f64,
    pub direction: String,
}

fn md_row(m: &MismatchReport, category: &str, stage: Stage) -> MdRow {
    MdRow {
        over_valued: m.over_valued.clone(),
        reference: m.reference.clone(),
        category: category.to_string(),
        stage,
        md: m.md,
        direction: serde_json::to_value(m.direction)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
    }
}

fn point(m: &MismatchReport, category: &str, stage: Stage) -> WinRatePoint {
    WinRatePoint {
        over_valued: m.over_valued.clone(),
        reference: m.reference.clone(),
        category: category.to_string(),
        stage,
        expected: m.expected,
        empirical: m.empirical,
    }
}

/// Plot data collected from a set of report records.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PlotData {
    pub win_rates: Vec<WinRatePoint>,
    pub md: Vec<MdRow>,
    pub patterns: Vec<PatternStats>,
    pub style_groups: Vec<StyleGroupStats>,
}

impl PlotData {
    pub fn is_empty(&self) -> bool {
        self.win_rates.is_empty() && self.md.is_empty() && self.patterns.is_empty() && self.style_groups.is_empty()
    }
}

/// Standalone mismatch records count as pre-calibration when their offset
/// is zero, post-calibration otherwise. Joint results contribute one pre and
/// one post point per ordered model pair (upper triangle).
pub fn collect_plot_data<'a>(records: impl IntoIterator<Item = &'a ReportRecord>) -> PlotData {
    let mut out = PlotData::default();
    for r in records {
        match r {
            ReportRecord::Manifest(_) | ReportRecord::StyleSummary(_) => {}
            ReportRecord::Calibration(c) => {
                let cat = c.category.as_deref().unwrap_or("all");
                out.win_rates.push(point(&c.before, cat, Stage::Pre));
                out.win_rates.push(point(&c.after, cat, Stage::Post));
                out.md.push(md_row(&c.before, cat, Stage::Pre));
                out.md.push(md_row(&c.after, cat, Stage::Post));
            }
            ReportRecord::Mismatch(m) => {
                let stage = if m.offset == 0.0 { Stage::Pre } else { Stage::Post };
                out.win_rates.push(point(m, "all", stage));
                out.md.push(md_row(m, "all", stage));
            }
            ReportRecord::Joint(j) => {
                if let WinRates::Matrix {
                    models,
                    initial,
                    achieved,
                    target,
                } = &j.win_rates
                {
                    for (stage, m) in [(Stage::Pre, initial), (Stage::Post, achieved)] {
                        for i in 0..models.len() {
                            for k in i + 1..models.len() {
                                out.win_rates.push(WinRatePoint {
                                    over_valued: models[i].clone(),
                                    reference: models[k].clone(),
                                    category: "joint".into(),
                                    stage,
                                    expected: target[i][k],
                                    empirical: m[i][k],
                                });
                            }
                        }
                    }
                }
            }
            ReportRecord::Pattern(p) => out.patterns.push(p.clone()),
            ReportRecord::StyleGroup(g) => out.style_groups.push(g.clone()),
        }
    }
    out
}

fn tsv(writer: impl Write) -> csv::Writer<impl Write> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(writer)
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("writing table: {e}"))
}

pub fn write_win_rate_tsv(points: &[WinRatePoint], writer: impl Write) -> Result<()> {
    let mut w = tsv(writer);
    w.write_record([
        "over_valued",
        "reference",
        "category",
        "stage",
        "expected",
        "empirical",
        "gap",
    ])
    .map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.over_valued.as_str(),
            &p.reference,
            &p.category,
            p.stage.as_str(),
            &p.expected.to_string(),
            &p.empirical.to_string(),
            &p.gap().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<table>", e))
}

pub fn write_md_tsv(rows: &[MdRow], writer: impl Write) -> Result<()> {
    let mut w = tsv(writer);
    w.write_record(["over_valued", "reference", "category", "stage", "md", "direction"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.over_valued.as_str(),
            &r.reference,
            &r.category,
            r.stage.as_str(),
            &r.md.to_string(),
            &r.direction,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<table>", e))
}

/// Columns: pattern, chosen, rejected, ratio (two decimals, cut).
pub fn write_pattern_tsv(stats: &[PatternStats], writer: impl Write) -> Result<()> {
    let mut w = tsv(writer);
    w.write_record(["pattern", "chosen", "rejected", "ratio"])
        .map_err(csv_err)?;
    for s in stats {
        w.write_record([
            s.pattern.label(),
            &s.chosen_count.to_string(),
            &s.rejected_count.to_string(),
            &s.ratio_label(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<table>", e))
}

pub fn write_style_tsv(groups: &[StyleGroupStats], writer: impl Write) -> Result<()> {
    let mut w = tsv(writer);
    w.write_record(["group", "mean_z", "count"]).map_err(csv_err)?;
    for g in groups {
        w.write_record([g.group_label.as_str(), &g.mean_z.to_string(), &g.count.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<table>", e))
}
