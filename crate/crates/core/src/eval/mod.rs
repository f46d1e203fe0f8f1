//! Evaluation toolkit: text metrics, scene-graph QA, the compile-rate
//! diagnostic, and benchmark aggregation over pipeline manifests.

pub mod qa;
pub mod text;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::limits::Limits;
use crate::parse::parse;
use crate::pipeline::{Manifest, PipelineRecord};
use crate::raster::RasterImage;
use crate::sandbox::check;
use crate::scene::ElementKind;

pub use qa::{qa_accuracy, qa_answer, QAItem, QAReport, QueryError};
pub use text::{levenshtein, normalize, text_scores, TextMetricScores};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompileRateReport {
    pub compiled: usize,
    pub total: usize,
    pub rate: f64,
    /// True when the input was empty, which forces the vacuous rate 1.0.
    pub degenerate: bool,
}

/// Fraction of sources that parse and validate.
pub fn compile_rate<I>(sources: I, limits: &Limits) -> CompileRateReport
where
    I: IntoIterator,
    I::Item: AsRef<[u8]>,
{
    let mut compiled = 0usize;
    let mut total = 0usize;
    for source in sources {
        total += 1;
        if check(source.as_ref(), limits).compiled() {
            compiled += 1;
        }
    }
    CompileRateReport {
        compiled,
        total,
        rate: if total == 0 {
            1.0
        } else {
            compiled as f64 / total as f64
        },
        degenerate: total == 0,
    }
}

/// Pulls the text a viewer should see out of a pipeline record.
pub trait TextExtractor {
    fn extract(&self, record: &PipelineRecord, base_dir: &Path) -> Result<String, String>;
    fn name(&self) -> &'static str;
}

/// Reads every rendered string straight from the scene graph of the
/// record's code: text contents, table cells, axes labels and bar labels,
/// in paint order, space-joined. Ground truth whenever the final image is
/// a faithful rendering of the code.
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleExtractor;

impl TextExtractor for OracleExtractor {
    fn extract(&self, record: &PipelineRecord, _base_dir: &Path) -> Result<String, String> {
        let program = parse(&record.code).map_err(|e| e.to_string())?;
        let mut pieces: Vec<&str> = Vec::new();
        for element in &program.elements {
            match &element.kind {
                ElementKind::Text { content, .. } => pieces.push(content),
                ElementKind::Table { cells, .. } => {
                    pieces.extend(cells.iter().map(|c| c.content.as_str()))
                }
                ElementKind::Axes { xlabel, ylabel, .. } => {
                    pieces.extend(xlabel.as_deref());
                    pieces.extend(ylabel.as_deref());
                }
                ElementKind::Bar { label, .. } => pieces.extend(label.as_deref()),
                _ => {}
            }
        }
        Ok(pieces.join(" "))
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}

#[derive(Deserialize)]
struct OcrResponse {
    text: String,
}

/// OCR endpoint slot: posts the record's final (or draft) image as base64
/// PNG and expects {text} back. For evaluating externally refined images
/// where the scene graph is no longer ground truth.
pub struct RemoteOCRExtractor {
    url: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteOCRExtractor {
    pub fn new(url: &str, token: Option<&str>) -> RemoteOCRExtractor {
        RemoteOCRExtractor {
            url: url.to_string(),
            token: token.map(str::to_string),
            client: reqwest::blocking::Client::new(),
        }
    }

    /// Reads DF_OCR_URL (required) and DF_OCR_TOKEN (optional).
    pub fn from_env() -> Option<RemoteOCRExtractor> {
        let url = std::env::var("DF_OCR_URL").ok()?;
        let token = std::env::var("DF_OCR_TOKEN").ok();
        Some(RemoteOCRExtractor::new(url.as_str(), token.as_deref()))
    }
}

impl TextExtractor for RemoteOCRExtractor {
    fn extract(&self, record: &PipelineRecord, base_dir: &Path) -> Result<String, String> {
        let rel = record
            .final_path
            .as_deref()
            .or(record.draft_path.as_deref())
            .ok_or_else(|| "record has no stored image".to_string())?;
        let bytes = std::fs::read(base_dir.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        let image = RasterImage::from_ppm(&bytes).or_else(|_| RasterImage::decode(&bytes))?;
        use base64::Engine;
        let b64 = base64::engine::general_purpose::STANDARD.encode(image.to_png());
        let mut req = self
            .client
            .post(&self.url)
            .json(&serde_json::json!({ "image_b64": b64 }));
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("http status {}", resp.status()));
        }
        let parsed: OcrResponse = resp.json().map_err(|e| e.to_string())?;
        Ok(parsed.text)
    }

    fn name(&self) -> &'static str {
        "remote_ocr"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Text,
    Qa,
}

/// One benchmark-suite row, referencing every record whose id starts with
/// `{prompt_id}-`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub prompt_id: String,
    pub kind: SuiteKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa_items: Option<Vec<QAItem>>,
}

pub fn suite_from_jsonl(text: &str) -> Result<Vec<SuiteRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(line).map_err(|e| format!("suite line {}: {e}", i + 1))?);
    }
    Ok(rows)
}

pub fn suite_to_jsonl(rows: &[SuiteRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("suite row serialization"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptScore {
    pub prompt_id: String,
    pub n_samples: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub kind: SuiteKind,
    pub prompts: Vec<PromptScore>,
    /// Mean of per-prompt scores (each prompt weighs its samples equally).
    pub mean: f64,
    pub n: usize,
    /// QA only: accuracy pooled over every question of every sample.
    pub per_question_accuracy: Option<f64>,
    /// Suite prompt ids with no manifest records.
    pub missing: Vec<String>,
}

impl BenchmarkReport {
    /// Per-prompt rows followed by one summary row.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.prompts {
            out.push_str(&serde_json::to_string(p).expect("prompt row"));
            out.push('\n');
        }
        let mut summary = serde_json::json!({
            "benchmark": self.kind,
            "mean": self.mean,
            "n": self.n,
        });
        if let Some(pq) = self.per_question_accuracy {
            summary["per_question_accuracy"] = pq.into();
        }
        if !self.missing.is_empty() {
            summary["missing"] = serde_json::json!(self.missing);
        }
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

fn prompt_of(id: &str) -> &str {
    id.split_once('-').map_or(id, |(p, _)| p)
}

/// Scores a manifest against a suite. Text rows compare extractor output
/// to the reference with [`text_scores`]; QA rows grade items against the
/// record's re-parsed code. A sample that cannot be scored at all (no
/// extractable text, unparseable code) scores 0.
pub fn run_benchmark(
    manifest: &Manifest,
    suite: &[SuiteRow],
    kind: SuiteKind,
    extractor: &dyn TextExtractor,
    base_dir: &Path,
) -> Result<BenchmarkReport, String> {
    let mut prompts = Vec::new();
    let mut missing = Vec::new();
    let mut q_correct = 0usize;
    let mut q_total = 0usize;

    for (i, row) in suite.iter().enumerate() {
        if row.kind != kind {
            return Err(format!(
                "suite row {} ({}) is a {:?} row in a {kind:?} run",
                i + 1,
                row.prompt_id,
                row.kind
            ));
        }
        let records: Vec<&PipelineRecord> = manifest
            .records
            .iter()
            .filter(|r| prompt_of(&r.id) == row.prompt_id)
            .collect();
        if records.is_empty() {
            missing.push(row.prompt_id.clone());
            continue;
        }
        let mut total = 0.0f64;
        for record in &records {
            let score = match kind {
                SuiteKind::Text => {
                    let reference = row.ref_text.as_deref().ok_or_else(|| {
                        format!("suite row {} has no ref_text", row.prompt_id)
                    })?;
                    let hyp = extractor.extract(record, base_dir).unwrap_or_default();
                    text_scores(reference, &hyp).composite
                }
                SuiteKind::Qa => {
                    let items = row.qa_items.as_deref().ok_or_else(|| {
                        format!("suite row {} has no qa_items", row.prompt_id)
                    })?;
                    q_total += items.len();
                    match parse(&record.code) {
                        Ok(program) => {
                            let report = qa_accuracy(&program, items);
                            q_correct += report.correct;
                            report.accuracy
                        }
                        Err(_) => 0.0,
                    }
                }
            };
            total += score;
        }
        prompts.push(PromptScore {
            prompt_id: row.prompt_id.clone(),
            n_samples: records.len(),
            score: total / records.len() as f64,
        });
    }

    let n = prompts.len();
    let mean = if n == 0 {
        0.0
    } else {
        prompts.iter().map(|p| p.score).sum::<f64>() / n as f64
    };
    Ok(BenchmarkReport {
        kind,
        prompts,
        mean,
        n,
        per_question_accuracy: match kind {
            SuiteKind::Qa if q_total > 0 => Some(q_correct as f64 / q_total as f64),
            SuiteKind::Qa => Some(1.0),
            SuiteKind::Text => None,
        },
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{IdentityRefine, TemplateBackend};
    use crate::pipeline::{run_batch, PipelineConfig};

    #[test]
    fn compile_rate_counts_exactly() {
        let sources: Vec<&[u8]> = vec![
            b"canvas 16 16",
            b"canvas 16 16\nrect r 0 0 5 5",
            b"not a program",
            b"canvas 1 1",
            b"canvas 16 16\nplot p nowhere \"x\"",
        ];
        let report = compile_rate(sources, &Limits::default());
        assert_eq!(report.compiled, 2);
        assert_eq!(report.total, 5);
        assert_eq!(report.rate, 0.4);
        assert!(!report.degenerate);
    }

    #[test]
    fn empty_input_is_flagged_degenerate() {
        let report = compile_rate(Vec::<Vec<u8>>::new(), &Limits::default());
        assert_eq!(report.rate, 1.0);
        assert_eq!(report.total, 0);
        assert!(report.degenerate);
    }

    #[test]
    fn union_counts_are_additive() {
        let a: Vec<&[u8]> = vec![b"canvas 16 16", b"junk"];
        let b: Vec<&[u8]> = vec![b"canvas 20 20", b"canvas 16 16\nbad", b"canvas 24 24"];
        let ra = compile_rate(a.clone(), &Limits::default());
        let rb = compile_rate(b.clone(), &Limits::default());
        let ru = compile_rate(a.into_iter().chain(b), &Limits::default());
        assert_eq!(ru.compiled, ra.compiled + rb.compiled);
        assert_eq!(ru.total, ra.total + rb.total);
    }

    fn record_for(code: &str) -> PipelineRecord {
        PipelineRecord {
            id: "0-0".into(),
            prompt: String::new(),
            code: code.into(),
            status: crate::sandbox::Status::Rendered,
            error_kind: None,
            error_detail: None,
            parse_ms: 0,
            render_ms: 0,
            draft_digest: None,
            final_digest: None,
            draft_path: None,
            final_path: None,
            codegen: "replay".into(),
            refiner: "none".into(),
            scores: None,
        }
    }

    #[test]
    fn oracle_extractor_joins_texts_and_cells_in_paint_order() {
        let code = concat!(
            "canvas 100 100\n",
            "text a 0 0 8 start #000000 \"first\"\n",
            "table t 0 20 1 2 20 10\n",
            "cell t 0 0 \"mid\"\n",
            "cell t 0 1 \"cells\"\n",
            "text b 0 50 8 start #000000 \"last\"\n",
        );
        let out = OracleExtractor
            .extract(&record_for(code), Path::new("."))
            .unwrap();
        assert_eq!(out, "first mid cells last");
    }

    #[test]
    fn oracle_extractor_includes_axes_and_bar_labels() {
        let code = concat!(
            "canvas 100 100\n",
            "axes ax 10 10 80 80 0 2 0 10 xlabel=\"month\" ylabel=\"count\"\n",
            "bar b0 ax 0.5 0.7 4 label=\"jan\"\n",
            "bar b1 ax 1.5 0.7 6\n",
        );
        let out = OracleExtractor
            .extract(&record_for(code), Path::new("."))
            .unwrap();
        assert_eq!(out, "month count jan");
    }

    #[test]
    fn benchmark_on_identity_pipeline_scores_one() {
        let prompts = vec![
            "poster titled 'HELLO' with text 'world'".to_string(),
            "table with 1 rows and 2 columns: aa | bb".to_string(),
        ];
        let manifest = run_batch(
            &prompts,
            &TemplateBackend,
            Some(&IdentityRefine),
            &PipelineConfig {
                samples_per_prompt: 2,
                ..PipelineConfig::default()
            },
            None,
        );
        let suite = vec![
            SuiteRow {
                prompt_id: "0".into(),
                kind: SuiteKind::Text,
                ref_text: Some("HELLO world".into()),
                qa_items: None,
            },
            SuiteRow {
                prompt_id: "1".into(),
                kind: SuiteKind::Text,
                ref_text: Some("aa bb".into()),
                qa_items: None,
            },
        ];
        let report =
            run_benchmark(&manifest, &suite, SuiteKind::Text, &OracleExtractor, Path::new("."))
                .unwrap();
        assert_eq!(report.n, 2);
        assert_eq!(report.mean, 1.0);
        assert!(report.prompts.iter().all(|p| p.score == 1.0));
        assert!(report.prompts.iter().all(|p| p.n_samples == 2));
        assert!(report.missing.is_empty());
    }

    #[test]
    fn qa_benchmark_grades_against_reparsed_code() {
        let prompts = vec!["bar chart of a:3, b:5".to_string()];
        let manifest = run_batch(
            &prompts,
            &TemplateBackend,
            None,
            &PipelineConfig::default(),
            None,
        );
        let suite = vec![SuiteRow {
            prompt_id: "0".into(),
            kind: SuiteKind::Qa,
            ref_text: None,
            qa_items: Some(vec![
                QAItem {
                    query: "COUNT kind=bar".into(),
                    expected: "2".into(),
                },
                QAItem {
                    query: "BAR_VALUE label=\"a\"".into(),
                    expected: "3".into(),
                },
                QAItem {
                    query: "BAR_VALUE label=\"b\"".into(),
                    expected: "99".into(),
                },
            ]),
        }];
        let report =
            run_benchmark(&manifest, &suite, SuiteKind::Qa, &OracleExtractor, Path::new("."))
                .unwrap();
        assert_eq!(report.n, 1);
        assert!((report.mean - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.per_question_accuracy, Some(2.0 / 3.0));
    }

    #[test]
    fn missing_prompts_are_listed_not_scored() {
        let manifest = Manifest::default();
        let suite = vec![SuiteRow {
            prompt_id: "7".into(),
            kind: SuiteKind::Text,
            ref_text: Some("x".into()),
            qa_items: None,
        }];
        let report =
            run_benchmark(&manifest, &suite, SuiteKind::Text, &OracleExtractor, Path::new("."))
                .unwrap();
        assert_eq!(report.n, 0);
        assert_eq!(report.missing, vec!["7".to_string()]);
    }

    #[test]
    fn mixed_kind_suites_are_rejected() {
        let manifest = Manifest::default();
        let suite = vec![SuiteRow {
            prompt_id: "0".into(),
            kind: SuiteKind::Qa,
            ref_text: None,
            qa_items: Some(vec![]),
        }];
        let err = run_benchmark(&manifest, &suite, SuiteKind::Text, &OracleExtractor, Path::new("."))
            .unwrap_err();
        assert!(err.contains("Qa row in a Text run"));
    }

    #[test]
    fn report_jsonl_has_per_prompt_rows_and_a_summary() {
        let report = BenchmarkReport {
            kind: SuiteKind::Text,
            prompts: vec![PromptScore {
                prompt_id: "0".into(),
                n_samples: 2,
                score: 0.75,
            }],
            mean: 0.75,
            n: 1,
            per_question_accuracy: None,
            missing: vec![],
        };
        let text = report.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let row: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(row["prompt_id"], "0");
        let summary: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(summary["benchmark"], "text");
        assert_eq!(summary["mean"], 0.75);
        assert_eq!(summary["n"], 1);
    }

    #[test]
    fn suite_rows_roundtrip() {
        let rows = vec![
            SuiteRow {
                prompt_id: "0".into(),
                kind: SuiteKind::Text,
                ref_text: Some("hello".into()),
                qa_items: None,
            },
            SuiteRow {
                prompt_id: "1".into(),
                kind: SuiteKind::Qa,
                ref_text: None,
                qa_items: Some(vec![QAItem {
                    query: "COUNT kind=text".into(),
                    expected: "1".into(),
                }]),
            },
        ];
        let text = suite_to_jsonl(&rows);
        assert_eq!(suite_from_jsonl(&text).unwrap(), rows);
    }
}
