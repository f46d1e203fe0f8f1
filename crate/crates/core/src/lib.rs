//! DraftScript: a small scene description language, a deterministic
//! software rasterizer for it, and the pipeline, dataset and evaluation
//! machinery built on top.
//!
//! The language layer (parse, validate, format) and the pixel layer
//! (raster) are pure and deterministic: the same source bytes always
//! produce the same canonical text and the same image digest. Everything
//! above them (sandbox, backends, pipeline, dataset, eval) composes those
//! guarantees into batch tooling.

pub mod backends;
pub mod dataset;
pub mod eval;
pub mod expr;
pub mod font;
pub mod format;
pub mod limits;
pub mod numfmt;
pub mod parse;
pub mod pipeline;
pub mod progen;
pub mod raster;
pub mod sandbox;
pub mod scene;
pub mod validate;

pub use backends::{
    BackendError, CodegenBackend, IdentityRefine, RefineBackend, RemoteBackend, RemoteRefine,
    RepairPolicy, ReplayBackend, TemplateBackend,
};
pub use dataset::{
    assemble_mixture, build as build_dataset, build_text_code_pool, build_triplets,
    ingest_edit_pairs, synth_prompts, BuildSummary, Capability, DatasetBuildConfig,
    TextCodeRecord, TrainRow, TripletRecord,
};
pub use eval::{
    compile_rate, qa_accuracy, qa_answer, run_benchmark, suite_from_jsonl, suite_to_jsonl,
    text_scores, BenchmarkReport, CompileRateReport, OracleExtractor, QAItem, QAReport,
    RemoteOCRExtractor, SuiteKind, SuiteRow, TextExtractor, TextMetricScores,
};
pub use expr::{parse_expr, Expr, ExprError};
pub use format::format;
pub use limits::Limits;
pub use parse::{parse, ParseError};
pub use pipeline::{
    replay_from_manifest, run_batch, run_one, Manifest, PipelineConfig, PipelineRecord,
};
pub use progen::{random_corpus, random_expr, random_program};
pub use raster::{map_point, render, render_with_deadline, sample_plot, RasterImage};
pub use sandbox::{check, execute, ErrorKind, ExecutionReport, Status};
pub use scene::{Anchor, CanvasSpec, Color, Element, ElementKind, SceneProgram, TableCell};
pub use validate::{validate, ValidateError, ValidatedProgram, ValidationError};
