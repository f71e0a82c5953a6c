//! The report bundle: `report.json` plus two standalone SVG figures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{AffinityMatrix, IntertopicMap};
use crate::coherence::{CoherenceScores, SweepPoint};
use crate::corpus::CorpusStats;
use crate::dedup::RepetitionCluster;
use crate::error::{Error, Result};
use crate::lda::WeightedTerm;
use crate::sentiment::PolarWordRanking;

pub const REPORT_SCHEMA: &str = "tweetlens.report/v1";
pub const REPORT_FILE: &str = "report.json";
pub const MAP_FILE: &str = "intertopic_map.svg";
pub const HEATMAP_FILE: &str = "affinity_heatmap.svg";
/// Every file [`emit_report`] writes.
pub const BUNDLE_FILES: [&str; 3] = [REPORT_FILE, MAP_FILE, HEATMAP_FILE];

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub lda: u64,
    pub embedding: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub stats: CorpusStats,
    pub skipped_records: usize,
    pub filter_hashtags: Vec<String>,
    pub filter_no_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupSummary {
    pub clusters: usize,
    pub documents_removed: usize,
    pub largest_clusters: Vec<RepetitionCluster>,
    pub near_duplicate_pairs: usize,
    pub documents_kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub id: usize,
    pub prevalence: f64,
    pub coherence: f64,
    pub top_words: Vec<WeightedTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSummary {
    pub scores: CoherenceScores,
    pub sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub corpus: CorpusSummary,
    pub dedup: DedupSummary,
    pub topics: Vec<TopicSummary>,
    pub coherence: CoherenceSummary,
    pub polar_words: PolarWordRanking,
    pub affinity: AffinityMatrix,
    pub intertopic_map: IntertopicMap,
    pub figures: Vec<String>,
}

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_significant(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// The report as pretty JSON with every float rounded.
pub fn report_json(report: &Report) -> Result<String> {
    let mut value = serde_json::to_value(report).map_err(|e| Error::format("report", e.to_string()))?;
    round_value(&mut value);
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::format("report", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: Report = serde_json::from_str(&text).map_err(|e| Error::format("report", e.to_string()))?;
    if report.schema != REPORT_SCHEMA {
        return Err(Error::format("report", format!("unknown schema {:?}", report.schema)));
    }
    Ok(report)
}

const MAP_SIZE: f64 = 600.0;
const MAP_MARGIN: f64 = 90.0;
const MAX_RADIUS: f64 = 70.0;

/// Circle radius for a topic; areas are proportional to prevalence.
pub fn circle_radius(area: f64, max_area: f64) -> f64 {
    if max_area <= 0.0 {
        return 0.0;
    }
    MAX_RADIUS * (area / max_area).sqrt()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn intertopic_map_svg(map: &IntertopicMap) -> String {
    let max_area = map.areas.iter().copied().fold(0.0, f64::max);
    let extent = map
        .coords
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let half = (MAP_SIZE - 2.0 * MAP_MARGIN) / 2.0;
    let scale = if extent > 0.0 { half / extent } else { 0.0 };
    let centre = MAP_SIZE / 2.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{MAP_SIZE}" height="{MAP_SIZE}" viewBox="0 0 {MAP_SIZE} {MAP_SIZE}">"#
    );
    let _ = writeln!(svg, r#"<title>Intertopic distance map</title>"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<line x1="{MAP_MARGIN:.1}" y1="{centre:.1}" x2="{:.1}" y2="{centre:.1}" stroke="#999" stroke-dasharray="4 4"/>"##,
        MAP_SIZE - MAP_MARGIN
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{centre:.1}" y1="{MAP_MARGIN:.1}" x2="{centre:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 4"/>"##,
        MAP_SIZE - MAP_MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif">PC1</text>"#, MAP_SIZE - MAP_MARGIN + 4.0, centre + 4.0);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif">PC2</text>"#, centre + 4.0, MAP_MARGIN - 6.0);
    for (k, (p, area)) in map.coords.iter().zip(&map.areas).enumerate() {
        let cx = centre + p[0] * scale;
        let cy = centre - p[1] * scale;
        let r = circle_radius(*area, max_area);
        let _ = writeln!(
            svg,
            r##"<circle class="topic" data-topic="{k}" data-prevalence="{:.6}" cx="{cx:.3}" cy="{cy:.3}" r="{r:.6}" fill="#4c78a8" fill-opacity="0.45" stroke="#1f3b5a"/>"##,
            area
        );
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.3}" y="{:.3}" font-size="14" font-family="sans-serif" text-anchor="middle">{}</text>"#,
            cy + 5.0,
            k + 1
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Diverging blue/white/red fill for a value in `[-1, 1]`.
fn heat_colour(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

pub fn affinity_heatmap_svg(m: &AffinityMatrix) -> String {
    let cell = 64.0;
    let left = 90.0;
    let top = 110.0;
    let width = left + cell * m.opinions.len() as f64 + 20.0;
    let height = top + cell * m.topics() as f64 + 40.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<title>Opinion and topic affinity ({:?} mode)</title>"#, m.mode);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (o, name) in m.opinions.iter().enumerate() {
        let x = left + cell * (o as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" font-size="13" font-family="sans-serif" text-anchor="start" transform="rotate(-45 {x:.1} {:.1})">{}</text>"#,
            top - 8.0,
            top - 8.0,
            escape(name)
        );
    }
    for (k, row) in m.values.iter().enumerate() {
        let y = top + cell * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" font-family="sans-serif" text-anchor="end">topic {}</text>"#,
            left - 8.0,
            y + cell / 2.0 + 4.0,
            k + 1
        );
        for (o, value) in row.iter().enumerate() {
            let x = left + cell * o as f64;
            let best = m.argmax[k].as_deref() == Some(m.opinions[o].as_str());
            let (fill, label) = match value {
                Some(v) => (heat_colour(*v), format!("{v:.3}")),
                None => ("#d9d9d9".to_string(), "n/a".to_string()),
            };
            let stroke = if best { r##"stroke="#000" stroke-width="3""## } else { r##"stroke="#fff" stroke-width="1""## };
            let _ = writeln!(
                svg,
                r#"<rect class="cell" data-topic="{k}" data-opinion="{}" x="{x:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="{fill}" {stroke}/>"#,
                escape(&m.opinions[o])
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif" text-anchor="middle">{label}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the bundle into `dir`, creating it if needed, and returns the file paths.
pub fn emit_report(report: &Report, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let contents = [
        report_json(report)?,
        intertopic_map_svg(&report.intertopic_map),
        affinity_heatmap_svg(&report.affinity),
    ];
    let mut written = Vec::with_capacity(BUNDLE_FILES.len());
    for (name, text) in BUNDLE_FILES.iter().zip(contents) {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
