//! Three-stage orchestration: generate code, execute it, refine the draft.
//!
//! Each (prompt, sample) pair becomes one flat manifest record. Failures
//! never abort a batch; they are recorded with the furthest status the
//! sample reached. With deterministic backends two runs of the same batch
//! differ only in the timing fields, which [`Manifest::scrubbed`] zeroes
//! for comparisons.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, CodegenBackend, RefineBackend};
use crate::limits::Limits;
use crate::sandbox::{execute, ErrorKind, Status};

/// One manifest row. Field order is the wire order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub id: String,
    pub prompt: String,
    pub code: String,
    pub status: Status,
    pub error_kind: Option<ErrorKind>,
    pub error_detail: Option<String>,
    pub parse_ms: u64,
    pub render_ms: u64,
    pub draft_digest: Option<String>,
    pub final_digest: Option<String>,
    pub draft_path: Option<String>,
    pub final_path: Option<String>,
    pub codegen: String,
    pub refiner: String,
    pub scores: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub records: Vec<PipelineRecord>,
}

impl Manifest {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serialization"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Manifest, String> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: PipelineRecord = serde_json::from_str(line)
                .map_err(|e| format!("manifest line {}: {e}", i + 1))?;
            records.push(record);
        }
        Ok(Manifest { records })
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_jsonl())
    }

    pub fn read(path: &Path) -> Result<Manifest, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Manifest::from_jsonl(&text)
    }

    /// Copy with timing fields zeroed, the canonical form for determinism
    /// comparisons.
    pub fn scrubbed(&self) -> Manifest {
        let records = self
            .records
            .iter()
            .map(|r| PipelineRecord {
                parse_ms: 0,
                render_ms: 0,
                ..r.clone()
            })
            .collect();
        Manifest { records }
    }

    pub fn record(&self, id: &str) -> Option<&PipelineRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

/// Rebuilds a replay code source from an existing manifest.
pub fn replay_from_manifest(manifest: &Manifest) -> crate::backends::ReplayBackend {
    let mut replay = crate::backends::ReplayBackend::new();
    for record in &manifest.records {
        replay.insert(&record.id, &record.prompt, &record.code);
    }
    replay
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub limits: Limits,
    pub samples_per_prompt: u32,
    /// Also write PNG copies of every stored image, for viewing.
    pub write_png: bool,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            limits: Limits::default(),
            samples_per_prompt: 1,
            write_png: false,
        }
    }
}

fn store_image(
    out_dir: &Path,
    rel: &str,
    image: &crate::raster::RasterImage,
    write_png: bool,
) -> Result<(), String> {
    let path = out_dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    fs::write(&path, image.to_ppm()).map_err(|e| format!("{}: {e}", path.display()))?;
    if write_png {
        let png = path.with_extension("png");
        fs::write(&png, image.to_png()).map_err(|e| format!("{}: {e}", png.display()))?;
    }
    Ok(())
}

/// Runs one sample end to end. `out_dir` is the directory the manifest
/// will live in; image paths in the record are relative to it. With
/// `out_dir` None no files are written and the paths stay null.
pub fn run_one(
    id: &str,
    prompt: &str,
    codegen: &dyn CodegenBackend,
    refiner: Option<&dyn RefineBackend>,
    config: &PipelineConfig,
    out_dir: Option<&Path>,
) -> PipelineRecord {
    let mut record = PipelineRecord {
        id: id.to_string(),
        prompt: prompt.to_string(),
        code: String::new(),
        status: Status::CompileFailed,
        error_kind: Some(ErrorKind::Parse),
        error_detail: None,
        parse_ms: 0,
        render_ms: 0,
        draft_digest: None,
        final_digest: None,
        draft_path: None,
        final_path: None,
        codegen: codegen.name().to_string(),
        refiner: refiner.map_or("none", |r| r.name()).to_string(),
        scores: None,
    };

    let code = match codegen.generate(prompt) {
        Ok(code) => code,
        Err(BackendError::ExhaustedAttempts { last_code, .. }) => last_code,
        Err(e) => {
            record.error_detail = Some(format!("code generation failed: {e}"));
            return record;
        }
    };
    record.code = code;

    let (report, image) = execute(record.code.as_bytes(), &config.limits);
    record.status = report.status;
    record.error_kind = report.error_kind;
    record.error_detail = report.error_detail;
    record.parse_ms = report.parse_ms;
    record.render_ms = report.render_ms;
    let draft = match image {
        Some(img) => img,
        None => return record,
    };
    record.draft_digest = report.digest;

    if let Some(dir) = out_dir {
        let rel = format!("images/{id}-draft.ppm");
        match store_image(dir, &rel, &draft, config.write_png) {
            Ok(()) => record.draft_path = Some(rel),
            Err(e) => record.error_detail = Some(format!("draft not stored: {e}")),
        }
    }

    let refiner = match refiner {
        Some(r) => r,
        None => return record,
    };
    match refiner.refine(prompt, &draft) {
        Ok(final_image) => {
            record.final_digest = Some(final_image.digest());
            if let Some(dir) = out_dir {
                let rel = format!("images/{id}-final.ppm");
                match store_image(dir, &rel, &final_image, config.write_png) {
                    Ok(()) => record.final_path = Some(rel),
                    Err(e) => record.error_detail = Some(format!("final not stored: {e}")),
                }
            }
        }
        Err(e) => {
            record.error_detail = Some(format!("refine failed: {e}"));
        }
    }
    record
}

/// Runs every prompt `samples_per_prompt` times. Record ids are
/// `{prompt_idx}-{sample_idx}` and the output order is ascending in both,
/// whatever the execution order.
pub fn run_batch(
    prompts: &[String],
    codegen: &dyn CodegenBackend,
    refiner: Option<&dyn RefineBackend>,
    config: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Manifest {
    let mut records = Vec::with_capacity(prompts.len() * config.samples_per_prompt as usize);
    for (prompt_idx, prompt) in prompts.iter().enumerate() {
        for sample_idx in 0..config.samples_per_prompt {
            let id = format!("{prompt_idx}-{sample_idx}");
            records.push(run_one(&id, prompt, codegen, refiner, config, out_dir));
        }
    }
    Manifest { records }
}
