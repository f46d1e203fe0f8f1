//! Execution harness: parse, validate and render under resource budgets,
//! reporting outcomes instead of throwing them.
//!
//! Every byte sequence gets a report. Compile failures (parse, validation,
//! limits) never start a render; render failures are currently only wall
//! clock timeouts. The language has no I/O, no imports and no unbounded
//! recursion, so budgets plus a cooperative deadline are the whole sandbox:
//! there is nothing else hostile code could do.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::limits::Limits;
use crate::parse::parse;
use crate::raster::{render_with_deadline, RasterImage};
use crate::scene::SceneProgram;
use crate::validate::{check_program, ValidateError, ValidatedProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Compiled,
    CompileFailed,
    Rendered,
    RenderFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Parse,
    Validation,
    LimitExceeded,
    Eval,
    Timeout,
}

/// Flat outcome record, shaped for manifest rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub status: Status,
    pub error_kind: Option<ErrorKind>,
    pub error_detail: Option<String>,
    /// 1-based source line of the failure, when one can be pinned down.
    pub line: Option<u32>,
    pub parse_ms: u64,
    pub render_ms: u64,
    pub digest: Option<String>,
}

impl ExecutionReport {
    fn failure(
        status: Status,
        kind: ErrorKind,
        detail: String,
        line: Option<u32>,
        parse_ms: u64,
        render_ms: u64,
    ) -> ExecutionReport {
        ExecutionReport {
            status,
            error_kind: Some(kind),
            error_detail: Some(detail),
            line,
            parse_ms,
            render_ms,
            digest: None,
        }
    }

    pub fn compiled(&self) -> bool {
        matches!(self.status, Status::Compiled | Status::Rendered)
    }
}

fn ms_since(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// 1-based line number of a byte offset, for pointing at UTF-8 errors.
fn line_of_offset(bytes: &[u8], offset: usize) -> u32 {
    1 + bytes[..offset.min(bytes.len())]
        .iter()
        .filter(|b| **b == b'\n')
        .count() as u32
}

enum CompileOutcome {
    Ok(SceneProgram),
    Failed(ExecutionReport),
}

fn compile(source: &[u8], limits: &Limits) -> CompileOutcome {
    let start = Instant::now();
    if source.len() > limits.max_source_bytes {
        return CompileOutcome::Failed(ExecutionReport::failure(
            Status::CompileFailed,
            ErrorKind::LimitExceeded,
            format!(
                "max_source_bytes: {} exceeds cap {}",
                source.len(),
                limits.max_source_bytes
            ),
            None,
            ms_since(start),
            0,
        ));
    }
    let text = match std::str::from_utf8(source) {
        Ok(t) => t,
        Err(e) => {
            let line = line_of_offset(source, e.valid_up_to());
            return CompileOutcome::Failed(ExecutionReport::failure(
                Status::CompileFailed,
                ErrorKind::Parse,
                format!("line {line}: source is not valid UTF-8"),
                Some(line),
                ms_since(start),
                0,
            ));
        }
    };
    let program = match parse(text) {
        Ok(p) => p,
        Err(e) => {
            let line = e.line;
            return CompileOutcome::Failed(ExecutionReport::failure(
                Status::CompileFailed,
                ErrorKind::Parse,
                e.to_string(),
                Some(line),
                ms_since(start),
                0,
            ));
        }
    };
    if let Err(e) = check_program(&program, limits) {
        let (kind, line) = match &e {
            ValidateError::Invalid(v) => (
                ErrorKind::Validation,
                v.index.and_then(|i| program.line_of(i)),
            ),
            ValidateError::Limit(_) => (ErrorKind::LimitExceeded, None),
        };
        return CompileOutcome::Failed(ExecutionReport::failure(
            Status::CompileFailed,
            kind,
            e.to_string(),
            line,
            ms_since(start),
            0,
        ));
    }
    CompileOutcome::Ok(program)
}

/// Parse and validate only. Never renders; status is Compiled or
/// CompileFailed.
pub fn check(source: &[u8], limits: &Limits) -> ExecutionReport {
    let start = Instant::now();
    match compile(source, limits) {
        CompileOutcome::Failed(report) => report,
        CompileOutcome::Ok(_) => ExecutionReport {
            status: Status::Compiled,
            error_kind: None,
            error_detail: None,
            line: None,
            parse_ms: ms_since(start),
            render_ms: 0,
            digest: None,
        },
    }
}

/// Full pipeline. The wall clock budget covers the whole call; a timed-out
/// render yields RenderFailed with no partial image.
pub fn execute(source: &[u8], limits: &Limits) -> (ExecutionReport, Option<RasterImage>) {
    let start = Instant::now();
    let deadline = start + Duration::from_millis(limits.wall_timeout_ms);
    let program = match compile(source, limits) {
        CompileOutcome::Failed(report) => return (report, None),
        CompileOutcome::Ok(p) => p,
    };
    let parse_ms = ms_since(start);
    let validated = ValidatedProgram::assume_checked(program);
    let render_start = Instant::now();
    match render_with_deadline(&validated, Some(deadline)) {
        Ok(image) => {
            let report = ExecutionReport {
                status: Status::Rendered,
                error_kind: None,
                error_detail: None,
                line: None,
                parse_ms,
                render_ms: ms_since(render_start),
                digest: Some(image.digest()),
            };
            (report, Some(image))
        }
        Err(_) => (
            ExecutionReport::failure(
                Status::RenderFailed,
                ErrorKind::Timeout,
                format!("render exceeded the {} ms budget", limits.wall_timeout_ms),
                None,
                parse_ms,
                ms_since(render_start),
            ),
            None,
        ),
    }
}
