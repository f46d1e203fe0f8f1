//! draftflow command line: compile checks, rendering, pipeline and
//! dataset runs, evaluation, and the HTTP service.
//!
//! Machine-readable output goes to files, human summaries to stdout.
//! Exit codes: 0 success, 1 operational failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use draftflow_cli::server::{self, ServiceConfig};
use draftflow_core::{
    build_dataset, compile_rate, replay_from_manifest, run_batch, run_benchmark, suite_from_jsonl,
    CodegenBackend, DatasetBuildConfig, IdentityRefine, Limits, Manifest, OracleExtractor,
    PipelineConfig, RefineBackend, RemoteBackend, RemoteOCRExtractor, RemoteRefine, Status,
    SuiteKind, TemplateBackend, TextExtractor,
};

#[derive(Parser)]
#[command(name = "draftflow", version, about = "Deterministic code-to-image toolchain")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a program without rendering it.
    Check { file: PathBuf },
    /// Render a program to a .ppm (or .png) image.
    Render {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    #[command(subcommand)]
    Dataset(DatasetCmd),
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Generate, execute and optionally refine one record per prompt sample.
    Run {
        /// Prompt file, one prompt per line.
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long, value_enum)]
        codegen: CodegenKind,
        /// Manifest to replay codes from (required with --codegen replay).
        #[arg(long, required_if_eq("codegen", "replay"))]
        replay: Option<PathBuf>,
        #[arg(long, value_enum)]
        refine: Option<RefineKind>,
        #[arg(long, default_value_t = 1)]
        samples_per_prompt: u32,
        /// Manifest output path; images land beside it under images/.
        #[arg(short, long)]
        output: PathBuf,
        /// Skip writing image files.
        #[arg(long)]
        no_images: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodegenKind {
    Template,
    Remote,
    Replay,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RefineKind {
    Identity,
    Remote,
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Build a training mixture of text-code pairs and image triplets.
    Build {
        /// Total number of training rows.
        #[arg(long)]
        n: usize,
        /// Text-code mixture ratio in [0,1].
        #[arg(long)]
        rc: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Score extracted text against per-prompt references.
    Text {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        suite: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = ExtractorKind::Oracle)]
        extractor: ExtractorKind,
    },
    /// Grade structured questions against each record's scene graph.
    Qa {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        suite: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fraction of .ds files in a directory that compile.
    CompileRate {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExtractorKind {
    Oracle,
    RemoteOcr,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Check { file } => cmd_check(&file),
        Cmd::Render { file, output } => cmd_render(&file, &output),
        Cmd::Pipeline(PipelineCmd::Run {
            prompts,
            codegen,
            replay,
            refine,
            samples_per_prompt,
            output,
            no_images,
        }) => cmd_pipeline(
            &prompts,
            codegen,
            replay.as_deref(),
            refine,
            samples_per_prompt,
            &output,
            no_images,
        ),
        Cmd::Dataset(DatasetCmd::Build { n, rc, seed, output }) => {
            cmd_dataset_build(n, rc, seed, &output)
        }
        Cmd::Eval(EvalCmd::Text {
            manifest,
            suite,
            output,
            extractor,
        }) => cmd_eval(&manifest, &suite, &output, SuiteKind::Text, extractor),
        Cmd::Eval(EvalCmd::Qa {
            manifest,
            suite,
            output,
        }) => cmd_eval(&manifest, &suite, &output, SuiteKind::Qa, ExtractorKind::Oracle),
        Cmd::Eval(EvalCmd::CompileRate { dir }) => cmd_compile_rate(&dir),
        Cmd::Serve { config } => cmd_serve(config.as_deref()),
    }
}

fn cmd_check(file: &Path) -> Result<ExitCode, String> {
    let source = std::fs::read(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let report = draftflow_core::check(&source, &Limits::default());
    if report.compiled() {
        println!("Compiled");
        Ok(ExitCode::SUCCESS)
    } else {
        let detail = report.error_detail.unwrap_or_else(|| "unknown error".to_string());
        eprintln!("{:?}: {detail}", report.status);
        Ok(ExitCode::from(1))
    }
}

fn cmd_render(file: &Path, output: &Path) -> Result<ExitCode, String> {
    let source = std::fs::read(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let (report, image) = draftflow_core::execute(&source, &Limits::default());
    let Some(image) = image else {
        let detail = report.error_detail.unwrap_or_else(|| "unknown error".to_string());
        eprintln!("{:?}: {detail}", report.status);
        return Ok(ExitCode::from(1));
    };
    let bytes = match output.extension().and_then(|e| e.to_str()) {
        Some("png") => image.to_png(),
        _ => image.to_ppm(),
    };
    std::fs::write(output, bytes).map_err(|e| format!("{}: {e}", output.display()))?;
    println!(
        "Rendered {}x{} image, digest {}, to {}",
        image.width(),
        image.height(),
        report.digest.as_deref().unwrap_or(""),
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn read_prompts(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn cmd_pipeline(
    prompts_path: &Path,
    codegen: CodegenKind,
    replay: Option<&Path>,
    refine: Option<RefineKind>,
    samples_per_prompt: u32,
    output: &Path,
    no_images: bool,
) -> Result<ExitCode, String> {
    let prompts = read_prompts(prompts_path)?;
    if samples_per_prompt == 0 {
        return Err("--samples-per-prompt must be at least 1".to_string());
    }

    let replay_backend = match codegen {
        CodegenKind::Replay => {
            let path = replay.expect("clap enforces --replay");
            Some(replay_from_manifest(&Manifest::read(path)?))
        }
        _ => None,
    };
    let remote_backend = match codegen {
        CodegenKind::Remote => Some(RemoteBackend::from_env().ok_or(
            "remote codegen needs DF_CODEGEN_URL (and optionally DF_CODEGEN_TOKEN, DF_CODEGEN_MODEL)",
        )?),
        _ => None,
    };
    let codegen_backend: &dyn CodegenBackend = match codegen {
        CodegenKind::Template => &TemplateBackend,
        CodegenKind::Remote => remote_backend.as_ref().expect("built above"),
        CodegenKind::Replay => replay_backend.as_ref().expect("built above"),
    };

    let remote_refine = match refine {
        Some(RefineKind::Remote) => Some(
            RemoteRefine::from_env()
                .ok_or("remote refine needs DF_REFINE_URL (and optionally DF_REFINE_TOKEN)")?,
        ),
        _ => None,
    };
    let refine_backend: Option<&dyn RefineBackend> = match refine {
        None => None,
        Some(RefineKind::Identity) => Some(&IdentityRefine),
        Some(RefineKind::Remote) => remote_refine.as_ref().map(|r| r as &dyn RefineBackend),
    };

    let config = PipelineConfig {
        samples_per_prompt,
        ..PipelineConfig::default()
    };
    let out_dir = if no_images {
        None
    } else {
        Some(output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")))
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }

    let manifest = run_batch(&prompts, codegen_backend, refine_backend, &config, out_dir);
    manifest
        .write(output)
        .map_err(|e| format!("{}: {e}", output.display()))?;

    let rendered = manifest
        .records
        .iter()
        .filter(|r| r.status == Status::Rendered)
        .count();
    let failed = manifest.records.len() - rendered;
    println!(
        "{} records ({rendered} rendered, {failed} failed) -> {}",
        manifest.records.len(),
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_dataset_build(n: usize, rc: f64, seed: u64, output: &Path) -> Result<ExitCode, String> {
    let config = DatasetBuildConfig {
        n_total: n,
        mixture_ratio: rc,
        seed,
        ..DatasetBuildConfig::default()
    };
    let summary = build_dataset(&config, output)?;
    println!(
        "{} rows ({} text-code, {} triplets, {} dropped) -> {}",
        summary.n_rows,
        summary.n_text_code,
        summary.n_triplets,
        summary.n_dropped,
        output.join("train.jsonl").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(
    manifest_path: &Path,
    suite_path: &Path,
    output: &Path,
    kind: SuiteKind,
    extractor: ExtractorKind,
) -> Result<ExitCode, String> {
    let manifest = Manifest::read(manifest_path)?;
    let suite_text = std::fs::read_to_string(suite_path)
        .map_err(|e| format!("{}: {e}", suite_path.display()))?;
    let suite = suite_from_jsonl(&suite_text)?;
    let base_dir = manifest_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));

    let remote_ocr = match extractor {
        ExtractorKind::RemoteOcr => Some(
            RemoteOCRExtractor::from_env().ok_or("remote OCR needs DF_OCR_URL")?,
        ),
        ExtractorKind::Oracle => None,
    };
    let extractor: &dyn TextExtractor = match &remote_ocr {
        Some(r) => r,
        None => &OracleExtractor,
    };

    let report = run_benchmark(&manifest, &suite, kind, extractor, base_dir)?;
    std::fs::write(output, report.to_jsonl())
        .map_err(|e| format!("{}: {e}", output.display()))?;

    let label = match kind {
        SuiteKind::Text => "text",
        SuiteKind::Qa => "qa",
    };
    println!(
        "{label} benchmark: mean {:.4} over {} prompts -> {}",
        report.mean,
        report.n,
        output.display()
    );
    if let Some(pq) = report.per_question_accuracy {
        println!("per-question accuracy {pq:.4}");
    }
    if !report.missing.is_empty() {
        println!("missing records for {} prompts: {}", report.missing.len(), report.missing.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compile_rate(dir: &Path) -> Result<ExitCode, String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("ds"))
        .collect();
    paths.sort();
    let mut sources = Vec::with_capacity(paths.len());
    for path in &paths {
        sources.push(std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?);
    }
    let report = compile_rate(sources, &Limits::default());
    if report.degenerate {
        println!("no .ds files in {}", dir.display());
    } else {
        println!(
            "{}/{} compiled, rate {} ({:.2}%)",
            report.compiled,
            report.total,
            report.rate,
            report.rate * 100.0
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_serve(config_path: Option<&Path>) -> Result<ExitCode, String> {
    let config = match config_path {
        Some(path) => ServiceConfig::from_file(path)?,
        None => ServiceConfig::default(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let (addr, future) = server::bind(&config).await?;
        println!("listening on {addr}");
        future.await.map_err(|e| e.to_string())
    })?;
    Ok(ExitCode::SUCCESS)
}
