//! Writing reports, CSV tables and models.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    sha256_hex, Analysis, BaseOrigin, DistributionSummary, GroupTest, PipelineError, Report,
};
use crate::embedding;
use crate::topics;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    CsvBundle,
}

/// Real number for CSV tables: 6 significant digits below 1 in magnitude,
/// 6 decimal places from 1 up, so the rounding error never exceeds 5e-7.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.abs() >= 1.0 {
        let fixed = format!("{x:.6}");
        return fixed
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Files written so far; removed again unless [`Output::commit`] runs.
struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Output {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        }
    }

    fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.dir.join(relative);
        let fail = |source| PipelineError::Output {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(fail)?;
        }
        fs::write(&path, bytes).map_err(fail)?;
        self.written.push(path);
        Ok(())
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Output {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Write the report as JSON (`report.json`) or as CSV tables under `csv/`.
pub fn emit_report(
    report: &Report,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Output::new(dir);
    write_report(&mut out, report, format)?;
    Ok(out.commit())
}

fn write_report(
    out: &mut Output,
    report: &Report,
    format: ReportFormat,
) -> Result<(), PipelineError> {
    match format {
        ReportFormat::Json => out.write("report.json", report_json(report).as_bytes()),
        ReportFormat::CsvBundle => {
            for (name, text) in csv_tables(report) {
                out.write(&format!("csv/{name}"), text.as_bytes())?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    seed: u64,
    artifacts: Vec<ManifestEntry>,
}

/// File-name-safe form of an identifier.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Write the JSON report, the CSV bundle, every model and a manifest of
/// checksums. On failure every file written by this call is removed.
pub fn write_run(analysis: &Analysis, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let report = &analysis.report;
    let mut out = Output::new(dir);
    let mut artifacts: Vec<(String, Vec<u8>)> = Vec::new();
    artifacts.push(("report.json".into(), report_json(report).into_bytes()));
    for (name, text) in csv_tables(report) {
        artifacts.push((format!("csv/{name}"), text.into_bytes()));
    }
    for (class, model) in report.topics.iter().zip(&analysis.topic_models) {
        let mut bytes = Vec::new();
        topics::write_model(model, &mut bytes).expect("writing to memory");
        artifacts.push((
            format!("models/lda/{}.txt", file_stem(&class.label())),
            bytes,
        ));
    }
    let emb = &analysis.embeddings;
    if emb.origin == BaseOrigin::TrainedOnCorpus {
        let mut bytes = Vec::new();
        embedding::write_binary(&emb.base, &mut bytes).expect("writing to memory");
        artifacts.push(("models/embedding/base.emb".into(), bytes));
    }
    for m in &emb.models {
        let mut bytes = Vec::new();
        embedding::write_binary(&m.model, &mut bytes).expect("writing to memory");
        let stem = file_stem(&format!("{}_{}", m.channel_id, m.source));
        artifacts.push((format!("models/embedding/{stem}.emb"), bytes));
    }

    let manifest = Manifest {
        tool: report.meta.tool,
        version: report.meta.version,
        seed: report.meta.seed,
        artifacts: artifacts
            .iter()
            .map(|(path, bytes)| ManifestEntry {
                path: path.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            })
            .collect(),
    };
    for (path, bytes) in &artifacts {
        out.write(path, bytes)?;
    }
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    out.write("manifest.json", text.as_bytes())?;
    Ok(out.commit())
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new<S: AsRef<str>>(header: impl IntoIterator<Item = S>) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer
            .write_record(header.into_iter().map(|h| h.as_ref().to_string()))
            .expect("writing to memory");
        Self { writer }
    }

    fn row(&mut self, fields: Vec<String>) {
        self.writer.write_record(fields).expect("writing to memory");
    }

    fn finish(self) -> String {
        String::from_utf8(self.writer.into_inner().expect("flush to memory"))
            .expect("fields are UTF-8")
    }
}

fn source_str(s: Option<crate::corpus::Source>) -> String {
    s.map(|s| s.as_str().to_string()).unwrap_or_default()
}

fn summaries_into(table: &mut Table, section: &str, rows: &[DistributionSummary]) {
    for s in rows {
        let b = &s.stats;
        table.row(vec![
            section.into(),
            s.metric.clone(),
            s.level.into(),
            s.group.clone(),
            source_str(s.source),
            b.n.to_string(),
            format_real(b.min),
            format_real(b.q1),
            format_real(b.median),
            format_real(b.q3),
            format_real(b.max),
            format_real(b.whisker_low),
            format_real(b.whisker_high),
            b.outliers
                .iter()
                .map(|o| format_real(*o))
                .collect::<Vec<_>>()
                .join(";"),
        ]);
    }
}

fn group_tests_into(table: &mut Table, section: &str, rows: &[GroupTest]) {
    for t in rows {
        table.row(vec![
            section.into(),
            t.metric.clone(),
            t.level.into(),
            source_str(t.source),
            t.group_a.clone(),
            t.group_b.clone(),
            t.n_a.to_string(),
            t.n_b.to_string(),
            format_real(t.median_a),
            format_real(t.median_b),
            format_real(t.difference),
            format_real(t.p),
            t.resamples.to_string(),
        ]);
    }
}

/// Every report table as `(file name, CSV text)`.
pub fn csv_tables(report: &Report) -> Vec<(&'static str, String)> {
    let lex = &report.lexical;
    let names: Vec<&str> = lex.categories.iter().map(|c| c.name.as_str()).collect();
    let mut tables = Vec::new();

    let mut t = Table::new(
        ["video_id", "channel_id", "group", "source"]
            .into_iter()
            .map(String::from)
            .chain(names.iter().map(|n| format!("{n}_count")))
            .chain(names.iter().map(|n| n.to_string())),
    );
    for v in &lex.videos {
        let mut row = vec![
            v.video_id.clone(),
            v.channel_id.clone(),
            v.group.clone(),
            v.source.to_string(),
        ];
        row.extend(v.counts.iter().map(u64::to_string));
        row.extend(v.fractions.iter().map(|f| format_real(*f)));
        t.row(row);
    }
    tables.push(("video_profiles.csv", t.finish()));

    let mut t = Table::new(
        ["channel_id", "group", "source", "videos"]
            .into_iter()
            .map(String::from)
            .chain(names.iter().map(|n| n.to_string())),
    );
    for c in &lex.channels {
        let mut row = vec![
            c.channel_id.clone(),
            c.group.clone(),
            c.source.to_string(),
            c.videos.to_string(),
        ];
        row.extend(c.fractions.iter().map(|f| format_real(*f)));
        t.row(row);
    }
    tables.push(("channel_profiles.csv", t.finish()));

    let mut t = Table::new(["video_id", "channel_id", "group", "similarity"]);
    for s in &lex.similarities {
        t.row(vec![
            s.video_id.clone(),
            s.channel_id.clone(),
            s.group.clone(),
            format_real(s.similarity),
        ]);
    }
    tables.push(("similarities.csv", t.finish()));

    let mut t = Table::new(["channel_id", "group", "videos", "mean_similarity"]);
    for s in &lex.channel_similarities {
        t.row(vec![
            s.channel_id.clone(),
            s.group.clone(),
            s.videos.to_string(),
            format_opt(s.mean_similarity),
        ]);
    }
    tables.push(("channel_similarities.csv", t.finish()));

    let mut t = Table::new([
        "category",
        "group",
        "source",
        "channels",
        "r",
        "p",
        "significant",
        "diagnostic",
    ]);
    for r in &lex.correlations {
        t.row(vec![
            r.category.clone(),
            r.group.clone(),
            r.source.to_string(),
            r.channels.to_string(),
            format_opt(r.r),
            format_opt(r.p),
            r.significant.to_string(),
            r.diagnostic.clone().unwrap_or_default(),
        ]);
    }
    tables.push(("correlations.csv", t.finish()));

    let mut t = Table::new([
        "section",
        "metric",
        "level",
        "group",
        "source",
        "n",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "whisker_low",
        "whisker_high",
        "outliers",
    ]);
    summaries_into(&mut t, "lexical", &lex.summaries);
    summaries_into(&mut t, "weat", &report.weat.summaries);
    tables.push(("summaries.csv", t.finish()));

    let mut t = Table::new([
        "section",
        "metric",
        "level",
        "source",
        "group_a",
        "group_b",
        "n_a",
        "n_b",
        "median_a",
        "median_b",
        "difference",
        "p",
        "resamples",
    ]);
    group_tests_into(&mut t, "lexical", &lex.group_tests);
    group_tests_into(&mut t, "weat", &report.weat.group_tests);
    tables.push(("group_tests.csv", t.finish()));

    let mut t = Table::new([
        "group",
        "source",
        "documents",
        "rank",
        "topic",
        "dominant_documents",
        "words",
    ]);
    for c in &report.topics {
        for topic in &c.topics {
            t.row(vec![
                c.group.clone(),
                c.source.to_string(),
                c.documents.to_string(),
                topic.rank.to_string(),
                topic.topic.to_string(),
                topic.dominant_documents.to_string(),
                topic.words.join(" "),
            ]);
        }
    }
    tables.push(("topics.csv", t.finish()));

    let mut t = Table::new([
        "channel_id",
        "group",
        "spec",
        "source",
        "statistic",
        "effect_size",
        "p_value",
        "partitions",
        "mode",
        "comparison",
        "degenerate",
        "dropped",
        "error",
    ]);
    for r in &report.weat.rows {
        for (source, o) in [("caption", &r.caption), ("comments", &r.comments)] {
            t.row(vec![
                r.channel_id.clone(),
                r.group.clone(),
                r.spec.clone(),
                source.into(),
                format_opt(o.statistic),
                format_opt(o.effect_size),
                format_opt(o.p_value),
                o.partitions.map(|p| p.to_string()).unwrap_or_default(),
                o.mode.map(|m| m.to_string()).unwrap_or_default(),
                o.comparison.to_string(),
                o.degenerate.to_string(),
                o.dropped.join(" "),
                o.error.clone().unwrap_or_default(),
            ]);
        }
    }
    tables.push(("weat.csv", t.finish()));

    let mut t = Table::new([
        "channel_id",
        "group",
        "spec",
        "effect_size_difference",
        "statistic_difference",
    ]);
    for r in &report.weat.rows {
        t.row(vec![
            r.channel_id.clone(),
            r.group.clone(),
            r.spec.clone(),
            format_opt(r.effect_size_difference),
            format_opt(r.statistic_difference),
        ]);
    }
    tables.push(("weat_differences.csv", t.finish()));

    let mut t = Table::new([
        "video_id",
        "channel_id",
        "group",
        "source",
        "language_score",
        "lexical",
        "topics",
        "embedding",
    ]);
    for e in &report.exclusions.ledger {
        t.row(vec![
            e.video_id.clone(),
            e.channel_id.clone(),
            e.group.clone(),
            e.source.to_string(),
            format_real(e.language_score),
            e.lexical.as_str().into(),
            e.topics.as_str().into(),
            e.embedding.as_str().into(),
        ]);
    }
    tables.push(("exclusions.csv", t.finish()));
    tables
}
