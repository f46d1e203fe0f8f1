//! Training-data construction: prompt synthesis, text-code pairs,
//! draft/final image triplets, external edit-pair ingestion, and mixture
//! assembly under a text-code ratio.
//!
//! Everything seeded is driven by ChaCha8, so a (seed, n) pair fixes the
//! prompts, the shuffle and therefore the whole training manifest.
//! Triplet digests always come from a real render; writing the image
//! files themselves is optional, since some callers only need the
//! manifest.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{CodegenBackend, RefineBackend, TemplateBackend};
use crate::limits::Limits;
use crate::numfmt::format_number;
use crate::raster::RasterImage;
use crate::sandbox::{execute, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    GeneralEditing,
    ScientificDiagram,
    ComplexText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextCodeRecord {
    pub prompt: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub prompt: String,
    pub code: String,
    pub a_path: String,
    pub a_digest: String,
    pub b_path: String,
    pub b_digest: String,
    pub capability: Capability,
}

/// One training-manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainRow {
    TextCode {
        prompt: String,
        code: String,
    },
    Triplet {
        prompt: String,
        code: String,
        a_path: String,
        a_digest: String,
        b_path: String,
        b_digest: String,
        capability: Capability,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBuildConfig {
    pub n_total: usize,
    /// Fraction of rows that are text-code pairs rather than triplets.
    pub mixture_ratio: f64,
    pub seed: u64,
    /// Relative draw weights for the plot, chart, table and poster prompt
    /// families.
    pub family_weights: [u32; 4],
}

impl Default for DatasetBuildConfig {
    fn default() -> DatasetBuildConfig {
        DatasetBuildConfig {
            n_total: 1000,
            mixture_ratio: 0.1,
            seed: 0,
            family_weights: [1, 1, 1, 1],
        }
    }
}

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("pool '{pool}' has {have} records, need {need}")]
    InsufficientPool {
        pool: &'static str,
        have: usize,
        need: usize,
    },
    #[error("mixture ratio {0} is outside [0, 1]")]
    BadRatio(f64),
}

/// A record that was skipped, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub index: usize,
    pub prompt: String,
    pub reason: String,
}

const BAR_LABELS: [&str; 16] = [
    "alpha", "bravo", "delta", "echo", "kilo", "lima", "mike", "nova", "oscar", "papa", "квант",
    "romeo", "sierra", "tango", "victor", "zulu",
];

const CELL_WORDS: [&str; 14] = [
    "total", "north", "south", "east", "west", "mean", "max", "min", "sum", "rate", "count",
    "score", "налог", "段階",
];

const POSTER_TITLES: [&str; 10] = [
    "GRAND OPENING",
    "SUMMER SALE",
    "LIVE TONIGHT",
    "FINAL CALL",
    "新装開店",
    "大感謝祭",
    "CONCERT 2026",
    "MIDNIGHT RUN",
    "Fête de la Musique",
    "OFERTA ESPECIAL",
];

const POSTER_BODIES: [&str; 10] = [
    "Opens Friday at the main square",
    "Everything must go",
    "全品半額 本日限り",
    "One night only, doors at nine",
    "Deux jours seulement",
    "Descuentos en toda la tienda",
    "Starts this weekend",
    "三日間限定セール",
    "Tickets at the door",
    "Bring this poster for a discount",
];

fn synth_plot(rng: &mut ChaCha8Rng) -> String {
    let a = rng.random_range(1..=5);
    let b = rng.random_range(1..=9);
    let expr = match rng.random_range(0..8) {
        0 => format!("sin({a}*x)"),
        1 => format!("cos(x)*{a}"),
        2 => format!("x^2-{a}*x+{b}"),
        3 => format!("exp(0-x^2/{a})"),
        4 => format!("{a}*sqrt(abs(x))"),
        5 => format!("log(abs(x)+1)*{a}"),
        6 => format!("x^3/{b}-x"),
        _ => format!("abs(sin(x))*{a}+{b}"),
    };
    let lo = -rng.random_range(1..=10i64);
    let hi = rng.random_range(1..=10i64);
    format!("plot of y = {expr} from {lo} to {hi}")
}

fn synth_chart(rng: &mut ChaCha8Rng) -> String {
    let count = rng.random_range(2..=6usize);
    let mut labels: Vec<&str> = BAR_LABELS.to_vec();
    labels.shuffle(rng);
    let items: Vec<String> = labels[..count]
        .iter()
        .map(|label| {
            let value = rng.random_range(-6..=40i64) as f64 / 2.0;
            format!("{label}:{}", format_number(value))
        })
        .collect();
    format!("bar chart of {}", items.join(", "))
}

fn synth_table(rng: &mut ChaCha8Rng) -> String {
    let rows = rng.random_range(1..=5u32);
    let cols = rng.random_range(1..=4u32);
    let mut cells = Vec::with_capacity((rows * cols) as usize);
    for _ in 0..rows * cols {
        if rng.random_bool(0.5) {
            cells.push(CELL_WORDS.choose(rng).unwrap().to_string());
        } else {
            cells.push(rng.random_range(0..1000u32).to_string());
        }
    }
    format!(
        "table with {rows} rows and {cols} columns: {}",
        cells.join(" | ")
    )
}

fn synth_poster(rng: &mut ChaCha8Rng) -> String {
    let title = POSTER_TITLES.choose(rng).unwrap();
    let body = POSTER_BODIES.choose(rng).unwrap();
    format!("poster titled '{title}' with text '{body}'")
}

/// Seeded prompt synthesis over the four template families. The weights
/// set the relative frequency of each family; a zero weight drops the
/// family entirely.
pub fn synth_prompts(seed: u64, n: usize, family_weights: [u32; 4]) -> Vec<String> {
    let total: u64 = family_weights.iter().map(|w| *w as u64).sum();
    assert!(total > 0, "at least one family weight must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prompts = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.random_range(0..total);
        let mut family = 0usize;
        for (i, w) in family_weights.iter().enumerate() {
            if pick < *w as u64 {
                family = i;
                break;
            }
            pick -= *w as u64;
        }
        prompts.push(match family {
            0 => synth_plot(&mut rng),
            1 => synth_chart(&mut rng),
            2 => synth_table(&mut rng),
            _ => synth_poster(&mut rng),
        });
    }
    prompts
}

/// Capability tag implied by the prompt family, None for prompts outside
/// the template grammar.
pub fn capability_for_prompt(prompt: &str) -> Option<Capability> {
    let prompt = prompt.trim();
    if prompt.starts_with("plot of y = ") || prompt.starts_with("bar chart of ") {
        Some(Capability::ScientificDiagram)
    } else if prompt.starts_with("table with ") || prompt.starts_with("poster titled ") {
        Some(Capability::ComplexText)
    } else {
        None
    }
}

/// Text-code pairs via the template backend; prompts it refuses are
/// dropped with a reason.
pub fn build_text_code_pool(prompts: &[String]) -> (Vec<TextCodeRecord>, Vec<DroppedRecord>) {
    let mut records = Vec::with_capacity(prompts.len());
    let mut drops = Vec::new();
    for (index, prompt) in prompts.iter().enumerate() {
        match TemplateBackend.generate(prompt) {
            Ok(code) => records.push(TextCodeRecord {
                prompt: prompt.clone(),
                code,
            }),
            Err(e) => drops.push(DroppedRecord {
                index,
                prompt: prompt.clone(),
                reason: format!("codegen: {e}"),
            }),
        }
    }
    (records, drops)
}

/// Renders each prompt's code into a draft (the A image), refines it into
/// the B image, and records both digests. Image files are named by digest
/// and written under `images_dir` when given; identical images share one
/// file. Prompts that fail any stage are dropped with a reason.
pub fn build_triplets(
    prompts: &[String],
    refiner: &dyn RefineBackend,
    limits: &Limits,
    images_dir: Option<&Path>,
) -> (Vec<TripletRecord>, Vec<DroppedRecord>) {
    let mut records = Vec::with_capacity(prompts.len());
    let mut drops = Vec::new();
    let mut written: HashSet<String> = HashSet::new();
    let store = |image: &RasterImage, digest: &str, written: &mut HashSet<String>| -> Result<String, String> {
        let rel = format!("images/{digest}.ppm");
        if let Some(dir) = images_dir {
            if written.insert(digest.to_string()) {
                let path = dir.join(format!("{digest}.ppm"));
                fs::write(&path, image.to_ppm()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
        }
        Ok(rel)
    };

    for (index, prompt) in prompts.iter().enumerate() {
        let drop = |reason: String| DroppedRecord {
            index,
            prompt: prompt.clone(),
            reason,
        };
        let code = match TemplateBackend.generate(prompt) {
            Ok(code) => code,
            Err(e) => {
                drops.push(drop(format!("codegen: {e}")));
                continue;
            }
        };
        let (report, image) = execute(code.as_bytes(), limits);
        let a_image = match (report.status, image) {
            (Status::Rendered, Some(img)) => img,
            _ => {
                drops.push(drop(format!(
                    "execute: {}",
                    report.error_detail.unwrap_or_else(|| "no image".to_string())
                )));
                continue;
            }
        };
        let a_digest = report.digest.expect("rendered reports carry a digest");
        let b_image = match refiner.refine(prompt, &a_image) {
            Ok(img) => img,
            Err(e) => {
                drops.push(drop(format!("refine: {e}")));
                continue;
            }
        };
        let b_digest = b_image.digest();
        let a_path = match store(&a_image, &a_digest, &mut written) {
            Ok(p) => p,
            Err(e) => {
                drops.push(drop(format!("store: {e}")));
                continue;
            }
        };
        let b_path = if b_digest == a_digest {
            a_path.clone()
        } else {
            match store(&b_image, &b_digest, &mut written) {
                Ok(p) => p,
                Err(e) => {
                    drops.push(drop(format!("store: {e}")));
                    continue;
                }
            }
        };
        records.push(TripletRecord {
            prompt: prompt.clone(),
            code,
            a_path,
            a_digest,
            b_path,
            b_digest,
            capability: capability_for_prompt(prompt).unwrap_or(Capability::ScientificDiagram),
        });
    }
    (records, drops)
}

#[derive(Debug, Deserialize)]
struct EditPairRow {
    prompt: String,
    a_path: String,
    b_path: String,
}

fn load_image(path: &Path) -> Result<RasterImage, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    RasterImage::from_ppm(&bytes)
        .or_else(|_| RasterImage::decode(&bytes))
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Normalizes an external edit-pair manifest (JSON Lines rows of
/// {prompt, a_path, b_path}, paths relative to `base_dir`) into triplet
/// records tagged general_editing. Rows with missing or undecodable
/// images are skipped with a reason.
pub fn ingest_edit_pairs(
    manifest_text: &str,
    base_dir: &Path,
) -> (Vec<TripletRecord>, Vec<DroppedRecord>) {
    let mut records = Vec::new();
    let mut drops = Vec::new();
    for (index, line) in manifest_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: EditPairRow = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                drops.push(DroppedRecord {
                    index,
                    prompt: String::new(),
                    reason: format!("row: {e}"),
                });
                continue;
            }
        };
        let drop = |reason: String| DroppedRecord {
            index,
            prompt: row.prompt.clone(),
            reason,
        };
        let a_image = match load_image(&base_dir.join(&row.a_path)) {
            Ok(img) => img,
            Err(e) => {
                drops.push(drop(e));
                continue;
            }
        };
        let b_image = match load_image(&base_dir.join(&row.b_path)) {
            Ok(img) => img,
            Err(e) => {
                drops.push(drop(e));
                continue;
            }
        };
        records.push(TripletRecord {
            prompt: row.prompt,
            code: String::new(),
            a_path: row.a_path,
            a_digest: a_image.digest(),
            b_path: row.b_path,
            b_digest: b_image.digest(),
            capability: Capability::GeneralEditing,
        });
    }
    (records, drops)
}

/// How many rows of an n-row mixture are text-code pairs.
pub fn text_code_count(n_total: usize, mixture_ratio: f64) -> usize {
    (n_total as f64 * mixture_ratio + 0.5).floor() as usize
}

/// Draws `n_total` rows, text_code_count of them text-code and the rest
/// triplets, then interleaves them with a seeded shuffle.
pub fn assemble_mixture(
    triplets: &[TripletRecord],
    text_code_pool: &[TextCodeRecord],
    config: &DatasetBuildConfig,
) -> Result<Vec<TrainRow>, MixtureError> {
    if !(0.0..=1.0).contains(&config.mixture_ratio) {
        return Err(MixtureError::BadRatio(config.mixture_ratio));
    }
    let n_code = text_code_count(config.n_total, config.mixture_ratio);
    let n_trip = config.n_total - n_code;
    if text_code_pool.len() < n_code {
        return Err(MixtureError::InsufficientPool {
            pool: "text_code",
            have: text_code_pool.len(),
            need: n_code,
        });
    }
    if triplets.len() < n_trip {
        return Err(MixtureError::InsufficientPool {
            pool: "triplet",
            have: triplets.len(),
            need: n_trip,
        });
    }
    let mut rows = Vec::with_capacity(config.n_total);
    for record in &text_code_pool[..n_code] {
        rows.push(TrainRow::TextCode {
            prompt: record.prompt.clone(),
            code: record.code.clone(),
        });
    }
    for record in &triplets[..n_trip] {
        rows.push(TrainRow::Triplet {
            prompt: record.prompt.clone(),
            code: record.code.clone(),
            a_path: record.a_path.clone(),
            a_digest: record.a_digest.clone(),
            b_path: record.b_path.clone(),
            b_digest: record.b_digest.clone(),
            capability: record.capability,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rows.shuffle(&mut rng);
    Ok(rows)
}

pub fn train_rows_to_jsonl(rows: &[TrainRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("row serialization"));
        out.push('\n');
    }
    out
}

pub fn train_rows_from_jsonl(text: &str) -> Result<Vec<TrainRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(line).map_err(|e| format!("train row {}: {e}", i + 1))?,
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSummary {
    pub n_rows: usize,
    pub n_text_code: usize,
    pub n_triplets: usize,
    pub n_dropped: usize,
}

/// One-shot build: synthesizes prompts, fills both pools, assembles the
/// mixture and writes train.jsonl plus the image files under `out_dir`.
pub fn build(config: &DatasetBuildConfig, out_dir: &Path) -> Result<BuildSummary, String> {
    let n_code = text_code_count(config.n_total, config.mixture_ratio);
    let n_trip = config.n_total - n_code;
    let images_dir = out_dir.join("images");
    fs::create_dir_all(&images_dir).map_err(|e| format!("{}: {e}", images_dir.display()))?;

    // Synthesize with headroom so per-record drops cannot starve the pools.
    let headroom = config.n_total / 10 + 16;
    let prompts = synth_prompts(config.seed, config.n_total + headroom, config.family_weights);
    let (code_pool, mut drops) = build_text_code_pool(&prompts[..n_code.min(prompts.len())]);
    let mut extra = Vec::new();
    let mut code_pool = code_pool;
    let mut next = n_code;
    while code_pool.len() < n_code && next < prompts.len() {
        let (more, more_drops) = build_text_code_pool(&prompts[next..next + 1]);
        code_pool.extend(more);
        extra.extend(more_drops);
        next += 1;
    }
    let limits = Limits::default();
    let mut triplets = Vec::new();
    while triplets.len() < n_trip && next < prompts.len() {
        let take = (n_trip - triplets.len()).min(prompts.len() - next);
        let (more, more_drops) =
            build_triplets(&prompts[next..next + take], &crate::backends::IdentityRefine, &limits, Some(&images_dir));
        triplets.extend(more);
        extra.extend(more_drops);
        next += take;
    }
    drops.extend(extra);

    let rows = assemble_mixture(&triplets, &code_pool, config).map_err(|e| e.to_string())?;
    let n_text_code = rows
        .iter()
        .filter(|r| matches!(r, TrainRow::TextCode { .. }))
        .count();
    let train_path = out_dir.join("train.jsonl");
    fs::write(&train_path, train_rows_to_jsonl(&rows))
        .map_err(|e| format!("{}: {e}", train_path.display()))?;
    Ok(BuildSummary {
        n_rows: rows.len(),
        n_text_code,
        n_triplets: rows.len() - n_text_code,
        n_dropped: drops.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::IdentityRefine;
    use crate::sandbox::check;

    #[test]
    fn prompt_synthesis_is_seeded() {
        let a = synth_prompts(42, 10, [1, 1, 1, 1]);
        let b = synth_prompts(42, 10, [1, 1, 1, 1]);
        assert_eq!(a, b);
        let c = synth_prompts(43, 10, [1, 1, 1, 1]);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_weights_silence_families() {
        for prompt in synth_prompts(7, 50, [1, 0, 0, 0]) {
            assert!(prompt.starts_with("plot of y = "), "{prompt}");
        }
        for prompt in synth_prompts(7, 50, [0, 0, 0, 1]) {
            assert!(prompt.starts_with("poster titled "), "{prompt}");
        }
    }

    #[test]
    fn synthesized_prompts_are_all_templatable() {
        let prompts = synth_prompts(11, 400, [1, 1, 1, 1]);
        for prompt in &prompts {
            let code = TemplateBackend
                .generate(prompt)
                .unwrap_or_else(|e| panic!("{prompt:?}: {e}"));
            let report = check(code.as_bytes(), &Limits::default());
            assert_eq!(report.status, Status::Compiled, "{prompt}");
        }
    }

    #[test]
    fn poster_corpus_includes_non_ascii_text() {
        let prompts = synth_prompts(3, 200, [0, 0, 0, 1]);
        assert!(prompts.iter().any(|p| p.chars().any(|c| !c.is_ascii())));
    }

    #[test]
    fn triplets_with_identity_refiner_share_digests() {
        let prompts = synth_prompts(5, 20, [1, 1, 1, 1]);
        let (records, drops) =
            build_triplets(&prompts, &IdentityRefine, &Limits::default(), None);
        assert_eq!(drops.len(), 0, "{drops:?}");
        assert_eq!(records.len(), 20);
        for record in &records {
            assert_eq!(record.a_digest, record.b_digest);
            assert_eq!(record.a_path, record.b_path);
        }
    }

    #[test]
    fn triplet_digests_match_a_fresh_render() {
        let prompts = synth_prompts(9, 5, [1, 1, 1, 1]);
        let (records, _) = build_triplets(&prompts, &IdentityRefine, &Limits::default(), None);
        for record in &records {
            let (report, _) = execute(record.code.as_bytes(), &Limits::default());
            assert_eq!(report.digest.as_deref(), Some(record.a_digest.as_str()));
        }
    }

    #[test]
    fn triplet_image_files_are_digest_named_and_deduped() {
        let dir = tempfile::tempdir().unwrap();
        let prompts = vec![
            "poster titled 'A' with text 'b'".to_string(),
            "poster titled 'A' with text 'b'".to_string(),
        ];
        let (records, _) =
            build_triplets(&prompts, &IdentityRefine, &Limits::default(), Some(dir.path()));
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].a_digest, records[1].a_digest);
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
        let bytes = std::fs::read(dir.path().join(format!("{}.ppm", records[0].a_digest))).unwrap();
        let img = RasterImage::from_ppm(&bytes).unwrap();
        assert_eq!(img.digest(), records[0].a_digest);
    }

    #[test]
    fn unsupported_prompts_are_dropped_with_reasons() {
        let prompts = vec![
            "bar chart of a:1".to_string(),
            "a watercolor of venice".to_string(),
        ];
        let (records, drops) =
            build_triplets(&prompts, &IdentityRefine, &Limits::default(), None);
        assert_eq!(records.len(), 1);
        assert_eq!(drops.len(), 1);
        assert_eq!(drops[0].index, 1);
        assert!(drops[0].reason.contains("codegen"));
    }

    #[test]
    fn capability_tags_follow_the_family() {
        assert_eq!(
            capability_for_prompt("plot of y = x"),
            Some(Capability::ScientificDiagram)
        );
        assert_eq!(
            capability_for_prompt("bar chart of a:1"),
            Some(Capability::ScientificDiagram)
        );
        assert_eq!(
            capability_for_prompt("table with 1 rows and 1 columns: x"),
            Some(Capability::ComplexText)
        );
        assert_eq!(
            capability_for_prompt("poster titled 'a' with text 'b'"),
            Some(Capability::ComplexText)
        );
        assert_eq!(capability_for_prompt("a photo of a cat"), None);
    }

    #[test]
    fn mixture_counts_follow_the_rounding_rule() {
        assert_eq!(text_code_count(10_000, 0.05), 500);
        assert_eq!(text_code_count(10_000, 0.10), 1_000);
        assert_eq!(text_code_count(10_000, 0.20), 2_000);
        assert_eq!(text_code_count(10, 0.0), 0);
        assert_eq!(text_code_count(10, 1.0), 10);
        assert_eq!(text_code_count(3, 0.5), 2);
        assert_eq!(text_code_count(5, 0.55), 3);
    }

    fn tiny_pools() -> (Vec<TripletRecord>, Vec<TextCodeRecord>) {
        let prompts = synth_prompts(1, 12, [1, 1, 1, 1]);
        let (triplets, _) = build_triplets(&prompts, &IdentityRefine, &Limits::default(), None);
        let code_prompts = synth_prompts(2, 12, [1, 1, 1, 1]);
        let (codes, _) = build_text_code_pool(&code_prompts);
        (triplets, codes)
    }

    #[test]
    fn mixture_is_seeded_and_exactly_sized() {
        let (triplets, codes) = tiny_pools();
        let config = DatasetBuildConfig {
            n_total: 10,
            mixture_ratio: 0.3,
            seed: 77,
            family_weights: [1, 1, 1, 1],
        };
        let rows = assemble_mixture(&triplets, &codes, &config).unwrap();
        assert_eq!(rows.len(), 10);
        let n_code = rows
            .iter()
            .filter(|r| matches!(r, TrainRow::TextCode { .. }))
            .count();
        assert_eq!(n_code, 3);
        let again = assemble_mixture(&triplets, &codes, &config).unwrap();
        assert_eq!(train_rows_to_jsonl(&rows), train_rows_to_jsonl(&again));
        let other_seed = assemble_mixture(
            &triplets,
            &codes,
            &DatasetBuildConfig {
                seed: 78,
                ..config
            },
        )
        .unwrap();
        assert_ne!(train_rows_to_jsonl(&rows), train_rows_to_jsonl(&other_seed));
    }

    #[test]
    fn short_pools_name_the_culprit() {
        let (triplets, codes) = tiny_pools();
        let config = DatasetBuildConfig {
            n_total: 100,
            mixture_ratio: 0.9,
            seed: 0,
            family_weights: [1, 1, 1, 1],
        };
        match assemble_mixture(&triplets, &codes, &config) {
            Err(MixtureError::InsufficientPool { pool, need, .. }) => {
                assert_eq!(pool, "text_code");
                assert_eq!(need, 90);
            }
            other => panic!("expected InsufficientPool, got {other:?}"),
        }
    }

    #[test]
    fn train_rows_roundtrip_with_kind_tags() {
        let (triplets, codes) = tiny_pools();
        let config = DatasetBuildConfig {
            n_total: 8,
            mixture_ratio: 0.5,
            seed: 5,
            family_weights: [1, 1, 1, 1],
        };
        let rows = assemble_mixture(&triplets, &codes, &config).unwrap();
        let text = train_rows_to_jsonl(&rows);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let kind = v["kind"].as_str().unwrap();
            assert!(kind == "text_code" || kind == "triplet");
            if kind == "triplet" {
                assert!(v["capability"].is_string());
            }
        }
        let back = train_rows_from_jsonl(&text).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn ingest_reads_pairs_and_skips_broken_rows() {
        let dir = tempfile::tempdir().unwrap();
        let img_a = RasterImage::new(8, 8, crate::scene::Color::BLACK);
        let img_b = RasterImage::new(8, 8, crate::scene::Color::WHITE);
        std::fs::write(dir.path().join("a.ppm"), img_a.to_ppm()).unwrap();
        std::fs::write(dir.path().join("b.png"), img_b.to_png()).unwrap();
        std::fs::write(dir.path().join("junk.ppm"), b"not an image").unwrap();
        let manifest = concat!(
            r#"{"prompt":"make it white","a_path":"a.ppm","b_path":"b.png"}"#,
            "\n",
            r#"{"prompt":"missing","a_path":"nope.ppm","b_path":"b.png"}"#,
            "\n",
            r#"{"prompt":"junk","a_path":"junk.ppm","b_path":"b.png"}"#,
            "\n",
        );
        let (records, drops) = ingest_edit_pairs(manifest, dir.path());
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].capability, Capability::GeneralEditing);
        assert_eq!(records[0].code, "");
        assert_eq!(records[0].a_digest, img_a.digest());
        assert_eq!(records[0].b_digest, img_b.digest());
        assert_eq!(drops.len(), 2);
        let (again, _) = ingest_edit_pairs(manifest, dir.path());
        assert_eq!(again, records);
    }

    #[test]
    fn one_shot_build_writes_train_and_images() {
        let dir = tempfile::tempdir().unwrap();
        let config = DatasetBuildConfig {
            n_total: 40,
            mixture_ratio: 0.25,
            seed: 123,
            family_weights: [1, 1, 1, 1],
        };
        let summary = build(&config, dir.path()).unwrap();
        assert_eq!(summary.n_rows, 40);
        assert_eq!(summary.n_text_code, 10);
        assert_eq!(summary.n_triplets, 30);
        let text = std::fs::read_to_string(dir.path().join("train.jsonl")).unwrap();
        let rows = train_rows_from_jsonl(&text).unwrap();
        assert_eq!(rows.len(), 40);
        for row in &rows {
            if let TrainRow::Triplet { a_path, a_digest, .. } = row {
                let file = dir.path().join(a_path);
                let img = RasterImage::from_ppm(&std::fs::read(&file).unwrap()).unwrap();
                assert_eq!(&img.digest(), a_digest);
            }
        }
    }
}
