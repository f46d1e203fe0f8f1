//! Pluggable code and image producers.
//!
//! Code generation (prompt to DraftScript source) has three
//! implementations: a deterministic template engine covering four prompt
//! families, a remote chat endpoint with a compile-and-repair loop, and a
//! replay source that serves code stored in an earlier manifest.
//! Refinement (prompt + draft image to final image) has an identity
//! implementation and a remote one. Templates and replay are pure
//! functions of their input; the remote backends are not and say so
//! through [`CodegenBackend::deterministic`].

use std::collections::HashMap;
use std::sync::OnceLock;

use base64::Engine;
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::expr::parse_expr;
use crate::limits::Limits;
use crate::numfmt::format_number;
use crate::raster::RasterImage;
use crate::sandbox;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("prompt is outside the template grammar")]
    UnsupportedPrompt,
    #[error("no stored code for this prompt")]
    NotFound,
    #[error("network: {0}")]
    Network(String),
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("response contained no fenced code block")]
    NoCodeBlock,
    #[error("no compiling code after {attempts} attempts; last error: {last_error}")]
    ExhaustedAttempts {
        attempts: u32,
        last_code: String,
        last_error: String,
    },
    #[error("refined image is {got_w}x{got_h}, draft is {want_w}x{want_h}")]
    DimensionMismatch {
        want_w: u32,
        want_h: u32,
        got_w: u32,
        got_h: u32,
    },
}

/// Prompt to DraftScript source.
pub trait CodegenBackend: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, BackendError>;
    fn name(&self) -> &'static str;
    /// True when equal prompts always yield equal code.
    fn deterministic(&self) -> bool;
}

/// Prompt plus draft image to final image.
pub trait RefineBackend: Send + Sync {
    fn refine(&self, prompt: &str, draft: &RasterImage) -> Result<RasterImage, BackendError>;
    fn name(&self) -> &'static str;
}

/// Retry budget for the remote compile-and-repair loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairPolicy {
    pub max_attempts: u32,
}

impl Default for RepairPolicy {
    fn default() -> RepairPolicy {
        RepairPolicy { max_attempts: 3 }
    }
}

fn num(v: f64) -> String {
    format_number(v)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Deterministic prompt-to-code engine over four prompt shapes:
///
/// - `plot of y = EXPR` with an optional `from A to B` range
/// - `bar chart of LABEL:VALUE, LABEL:VALUE, ...`
/// - `table with R rows and C columns: c11 | c12 | ...`
/// - `poster titled 'TITLE' with text 'BODY'`
///
/// Plot and chart prompts get a square 512x512 canvas; poster prompts get
/// a wide 768x432 one; tables size the canvas to their content. Anything
/// that does not match, or that would not survive validation (a malformed
/// expression, an oversized table, an empty axis range), is refused with
/// [`BackendError::UnsupportedPrompt`] rather than emitted broken: code
/// from this backend always compiles.
#[derive(Debug, Default, Clone, Copy)]
pub struct TemplateBackend;

const BAR_PALETTE: [&str; 6] = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377",
];

fn plot_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^plot of y = (.+?)(?: from (\S+) to (\S+))?$").expect("fixed pattern")
    })
}

fn table_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^table with ([0-9]+) rows? and ([0-9]+) columns?:(.*)$")
            .expect("fixed pattern")
    })
}

fn poster_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^poster titled '([^']*)' with text '([^']*)'$").expect("fixed pattern")
    })
}

impl TemplateBackend {
    fn plot(&self, expr_text: &str, from: Option<&str>, to: Option<&str>) -> Option<String> {
        let expr = parse_expr(expr_text).ok()?;
        let canonical = expr.to_string();
        if canonical.chars().count() > 1000 {
            return None;
        }
        let xmin = match from {
            Some(s) => s.parse::<f64>().ok()?,
            None => -5.0,
        };
        let xmax = match to {
            Some(s) => s.parse::<f64>().ok()?,
            None => 5.0,
        };
        if !xmin.is_finite() || !xmax.is_finite() {
            return None;
        }
        let (xmin, xmax) = (canon(xmin)?, canon(xmax)?);
        if xmin >= xmax {
            return None;
        }

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..256 {
            let x = xmin + i as f64 * (xmax - xmin) / 255.0;
            let y = expr.eval(x);
            if y.is_finite() {
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        let pad = ((hi - lo) * 0.05).max(f64::MIN_POSITIVE);
        let mut ymin = canon(lo - pad)?;
        let mut ymax = canon(hi + pad)?;
        if ymin >= ymax {
            ymin = canon(ymin - 1.0)?;
            ymax = canon(ymax + 1.0)?;
        }
        if ymin >= ymax {
            return None;
        }

        Some(format!(
            "canvas 512 512\n\
             axes ax 64 64 384 384 {} {} {} {} xlabel=\"x\" ylabel=\"y\"\n\
             plot fn ax {}\n",
            num(xmin),
            num(xmax),
            num(ymin),
            num(ymax),
            quote(&canonical),
        ))
    }

    fn bar_chart(&self, body: &str) -> Option<String> {
        let mut bars = Vec::new();
        for piece in body.split(',') {
            let piece = piece.trim();
            let (label, value) = piece.rsplit_once(':')?;
            let label = label.trim();
            let value: f64 = value.trim().parse().ok()?;
            if label.is_empty() || label.chars().count() > 1000 || !value.is_finite() {
                return None;
            }
            bars.push((label.to_string(), canon(value)?));
        }
        if bars.is_empty() {
            return None;
        }

        let top = bars.iter().map(|b| b.1).fold(0.0f64, f64::max);
        let bottom = bars.iter().map(|b| b.1).fold(0.0f64, f64::min);
        let mut ymax = canon(if top > 0.0 { top * 1.05 } else { top })?;
        let mut ymin = canon(if bottom < 0.0 { bottom * 1.05 } else { bottom })?;
        if ymin >= ymax {
            ymin = canon(ymin - 1.0)?;
            ymax = canon(ymax + 1.0)?;
        }
        if ymin >= ymax {
            return None;
        }

        let mut code = format!(
            "canvas 512 512\naxes ax 64 64 384 384 0 {} {} {}\n",
            num(bars.len() as f64),
            num(ymin),
            num(ymax),
        );
        for (i, (label, value)) in bars.iter().enumerate() {
            code.push_str(&format!(
                "bar b{i} ax {} 0.7 {} fill={} label={}\n",
                num(i as f64 + 0.5),
                num(*value),
                BAR_PALETTE[i % BAR_PALETTE.len()],
                quote(label),
            ));
        }
        Some(code)
    }

    fn table(&self, rows: &str, cols: &str, body: &str) -> Option<String> {
        let rows: u32 = rows.parse().ok()?;
        let cols: u32 = cols.parse().ok()?;
        if rows == 0 || cols == 0 {
            return None;
        }
        let width = cols.checked_mul(120)?.checked_add(32)?;
        let height = rows.checked_mul(40)?.checked_add(32)?;
        if width > 4096 || height > 4096 {
            return None;
        }
        let cells: Vec<&str> = if body.trim().is_empty() {
            Vec::new()
        } else {
            body.split('|').map(str::trim).collect()
        };
        if cells.len() > (rows as usize) * (cols as usize) {
            return None;
        }
        if cells.iter().any(|c| c.chars().count() > 1000) {
            return None;
        }

        let mut code = format!("canvas {width} {height}\ntable tbl 16 16 {rows} {cols} 120 40\n");
        for (i, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let r = i as u32 / cols;
            let c = i as u32 % cols;
            code.push_str(&format!("cell tbl {r} {c} {}\n", quote(cell)));
        }
        Some(code)
    }

    fn poster(&self, title: &str, text: &str) -> Option<String> {
        if title.chars().count() > 1000 || text.chars().count() > 1000 {
            return None;
        }
        Some(format!(
            "canvas 768 432 bg=#1b2a4a\n\
             rect band 0 120 768 96 fill=#2e4a77\n\
             text title 384 144 48 middle #ffffff {}\n\
             text body 384 268 24 middle #dce6f5 {}\n",
            quote(title),
            quote(text),
        ))
    }
}

/// Round-trips the value through its canonical text form; None when the
/// result cannot be written as a plain decimal literal.
fn canon(v: f64) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    let c = crate::numfmt::canon_number(v);
    c.is_finite().then_some(c)
}

impl CodegenBackend for TemplateBackend {
    fn generate(&self, prompt: &str) -> Result<String, BackendError> {
        let prompt = prompt.trim();
        let out = if let Some(caps) = plot_re().captures(prompt) {
            self.plot(
                caps.get(1).map_or("", |m| m.as_str()),
                caps.get(2).map(|m| m.as_str()),
                caps.get(3).map(|m| m.as_str()),
            )
        } else if let Some(body) = prompt.strip_prefix("bar chart of ") {
            self.bar_chart(body)
        } else if let Some(caps) = table_re().captures(prompt) {
            self.table(
                caps.get(1).map_or("", |m| m.as_str()),
                caps.get(2).map_or("", |m| m.as_str()),
                caps.get(3).map_or("", |m| m.as_str()),
            )
        } else if let Some(caps) = poster_re().captures(prompt) {
            self.poster(
                caps.get(1).map_or("", |m| m.as_str()),
                caps.get(2).map_or("", |m| m.as_str()),
            )
        } else {
            None
        };
        out.ok_or(BackendError::UnsupportedPrompt)
    }

    fn name(&self) -> &'static str {
        "template"
    }

    fn deterministic(&self) -> bool {
        true
    }
}

/// Serves code recorded in an earlier run, keyed by prompt text and by
/// record id.
#[derive(Debug, Default, Clone)]
pub struct ReplayBackend {
    by_prompt: HashMap<String, String>,
    by_id: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn new() -> ReplayBackend {
        ReplayBackend::default()
    }

    pub fn insert(&mut self, id: &str, prompt: &str, code: &str) {
        self.by_prompt
            .entry(prompt.to_string())
            .or_insert_with(|| code.to_string());
        self.by_id.insert(id.to_string(), code.to_string());
    }

    pub fn code_for_id(&self, id: &str) -> Result<&str, BackendError> {
        self.by_id
            .get(id)
            .map(String::as_str)
            .ok_or(BackendError::NotFound)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

impl CodegenBackend for ReplayBackend {
    fn generate(&self, prompt: &str) -> Result<String, BackendError> {
        self.by_prompt
            .get(prompt)
            .cloned()
            .ok_or(BackendError::NotFound)
    }

    fn name(&self) -> &'static str {
        "replay"
    }

    fn deterministic(&self) -> bool {
        true
    }
}

/// Finds the first closed fenced code block, preferring one tagged
/// `draftscript`.
pub fn extract_code_block(text: &str) -> Option<String> {
    let parts: Vec<&str> = text.split("```").collect();
    let mut first: Option<String> = None;
    for i in (1..parts.len().saturating_sub(1)).step_by(2) {
        let (info, body) = match parts[i].split_once('\n') {
            Some(x) => x,
            None => continue,
        };
        if info.trim() == "draftscript" {
            return Some(body.to_string());
        }
        if first.is_none() {
            first = Some(body.to_string());
        }
    }
    first
}

const CODEGEN_INSTRUCTION: &str = "You write DraftScript, a small scene description language. \
Reply with one fenced code block tagged draftscript containing only the program.\n\
Statements (one per line, # starts a comment):\n\
  canvas W H [bg=#rrggbb]   (first statement, 16..4096)\n\
  rect ID X Y W H [fill=#..] [stroke=#..] [sw=N]\n\
  circle ID CX CY R [fill=#..] [stroke=#..] [sw=N]\n\
  line ID X1 Y1 X2 Y2 [stroke=#..] [sw=N]\n\
  polyline ID x1 y1 x2 y2 ... [stroke=#..] [sw=N]\n\
  text ID X Y SIZE start|middle|end #rrggbb \"STRING\"\n\
  axes ID X Y W H XMIN XMAX YMIN YMAX [xlabel=\"..\"] [ylabel=\"..\"]\n\
  plot ID AXESID \"EXPR\" [samples=N] [stroke=#..]\n\
  bar ID AXESID XCENTER WIDTH VALUE [fill=#..] [label=\"..\"]\n\
  table ID X Y ROWS COLS CELLW CELLH [stroke=#..]\n\
  cell TABLEID ROW COL \"STRING\"\n\
  grid ID X Y W H NX NY [stroke=#..]\n\
Expressions use x, + - * / ^, sin cos tan sqrt exp log abs floor ceil.\n\n\
Task: ";

#[derive(Deserialize)]
struct ChatResponse {
    content: String,
}

/// Chat-endpoint code generator with a compile-and-repair loop: code that
/// fails `check` is sent back with the error for another try, up to the
/// policy's attempt budget.
pub struct RemoteBackend {
    url: String,
    token: Option<String>,
    model: String,
    policy: RepairPolicy,
    limits: Limits,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(url: &str, token: Option<&str>, model: &str, policy: RepairPolicy) -> RemoteBackend {
        RemoteBackend {
            url: url.to_string(),
            token: token.map(str::to_string),
            model: model.to_string(),
            policy,
            limits: Limits::default(),
            client: http_client(),
        }
    }

    /// Reads DF_CODEGEN_URL (required) and DF_CODEGEN_TOKEN, DF_CODEGEN_MODEL
    /// (optional).
    pub fn from_env() -> Option<RemoteBackend> {
        let url = std::env::var("DF_CODEGEN_URL").ok()?;
        let token = std::env::var("DF_CODEGEN_TOKEN").ok();
        let model = std::env::var("DF_CODEGEN_MODEL").unwrap_or_else(|_| "default".to_string());
        Some(RemoteBackend::new(
            &url,
            token.as_deref(),
            &model,
            RepairPolicy::default(),
        ))
    }

    fn post(&self, messages: &serde_json::Value) -> Result<String, BackendError> {
        let body = serde_json::json!({ "model": self.model, "messages": messages });
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| BackendError::Network(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::BadResponse(format!("http status {status}")));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| BackendError::BadResponse(e.to_string()))?;
        Ok(parsed.content)
    }

    /// Like [`CodegenBackend::generate`] but also reports how many attempts
    /// the repair loop used.
    pub fn generate_with_attempts(&self, prompt: &str) -> Result<(String, u32), BackendError> {
        let mut messages = vec![serde_json::json!({
            "role": "user",
            "content": format!("{CODEGEN_INSTRUCTION}{prompt}"),
        })];
        let mut last_code = String::new();
        let mut last_error = String::new();
        for attempt in 1..=self.policy.max_attempts {
            let content = self.post(&serde_json::Value::Array(messages.clone()))?;
            let code = extract_code_block(&content).ok_or(BackendError::NoCodeBlock)?;
            let report = sandbox::check(code.as_bytes(), &self.limits);
            if report.compiled() {
                return Ok((code, attempt));
            }
            last_error = report
                .error_detail
                .unwrap_or_else(|| "did not compile".to_string());
            last_code = code;
            messages.push(serde_json::json!({ "role": "assistant", "content": content }));
            messages.push(serde_json::json!({
                "role": "user",
                "content": format!(
                    "That program failed to compile.\nError: {last_error}\n\
                     Reply with a corrected program in one ```draftscript block."
                ),
            }));
        }
        Err(BackendError::ExhaustedAttempts {
            attempts: self.policy.max_attempts,
            last_code,
            last_error,
        })
    }
}

impl CodegenBackend for RemoteBackend {
    fn generate(&self, prompt: &str) -> Result<String, BackendError> {
        self.generate_with_attempts(prompt).map(|(code, _)| code)
    }

    fn name(&self) -> &'static str {
        "remote"
    }

    fn deterministic(&self) -> bool {
        false
    }
}

/// The degenerate refiner: the final image is the draft.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityRefine;

impl RefineBackend for IdentityRefine {
    fn refine(&self, _prompt: &str, draft: &RasterImage) -> Result<RasterImage, BackendError> {
        Ok(draft.clone())
    }

    fn name(&self) -> &'static str {
        "identity"
    }
}

#[derive(Deserialize)]
struct RefineResponse {
    image_b64: String,
}

/// Image-editing endpoint: ships the draft as base64 PNG alongside the
/// prompt and expects a same-size image back. A size change is an error,
/// never a silent resize.
pub struct RemoteRefine {
    url: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteRefine {
    pub fn new(url: &str, token: Option<&str>) -> RemoteRefine {
        RemoteRefine {
            url: url.to_string(),
            token: token.map(str::to_string),
            client: http_client(),
        }
    }

    /// Reads DF_REFINE_URL (required) and DF_REFINE_TOKEN (optional).
    pub fn from_env() -> Option<RemoteRefine> {
        let url = std::env::var("DF_REFINE_URL").ok()?;
        let token = std::env::var("DF_REFINE_TOKEN").ok();
        Some(RemoteRefine::new(&url, token.as_deref()))
    }
}

impl RefineBackend for RemoteRefine {
    fn refine(&self, prompt: &str, draft: &RasterImage) -> Result<RasterImage, BackendError> {
        let b64 = base64::engine::general_purpose::STANDARD.encode(draft.to_png());
        let body = serde_json::json!({ "prompt": prompt, "image_b64": b64 });
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| BackendError::Network(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::BadResponse(format!("http status {status}")));
        }
        let parsed: RefineResponse = resp
            .json()
            .map_err(|e| BackendError::BadResponse(e.to_string()))?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(parsed.image_b64.as_bytes())
            .map_err(|e| BackendError::BadResponse(format!("image_b64: {e}")))?;
        let image = RasterImage::decode(&bytes).map_err(BackendError::BadResponse)?;
        if image.width() != draft.width() || image.height() != draft.height() {
            return Err(BackendError::DimensionMismatch {
                want_w: draft.width(),
                want_h: draft.height(),
                got_w: image.width(),
                got_h: image.height(),
            });
        }
        Ok(image)
    }

    fn name(&self) -> &'static str {
        "remote"
    }
}

fn http_client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .connect_timeout(std::time::Duration::from_secs(10))
        .timeout(std::time::Duration::from_secs(120))
        .build()
        .expect("client construction uses only static options")
}
