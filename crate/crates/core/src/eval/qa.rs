//! Structural question answering against the scene graph.
//!
//! Queries come in four shapes:
//!
//! ```text
//! COUNT kind=<rect|circle|line|polyline|text|axes|plot|bar|table|grid> [axes=<id>]
//! ATTR id=<id> field=<name>
//! TEXT_OF id=<id>
//! BAR_VALUE label="<label>"
//! ```
//!
//! Answers are canonical strings: integers bare, decimals trimmed to at
//! most six fractional digits, colors as lowercase hex, absent optional
//! values as "none". Grading is exact string match.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numfmt::format_number;
use crate::scene::{Color, Element, ElementKind, SceneProgram};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryError {
    UnknownId,
    UnknownField,
    NoSuchLabel,
    BadQuery,
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryError::UnknownId => "unknown element id",
            QueryError::UnknownField => "unknown field for this element",
            QueryError::NoSuchLabel => "no bar with this label",
            QueryError::BadQuery => "query does not match the grammar",
        })
    }
}

impl std::error::Error for QueryError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub query: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QAReport {
    pub verdicts: Vec<bool>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

const KINDS: [&str; 10] = [
    "rect", "circle", "line", "polyline", "text", "axes", "plot", "bar", "table", "grid",
];

fn num(v: f64) -> String {
    format_number(v)
}

fn uint(v: u32) -> String {
    v.to_string()
}

fn opt_color(c: &Option<Color>) -> String {
    match c {
        Some(c) => c.to_string(),
        None => "none".to_string(),
    }
}

fn opt_string(s: &Option<String>) -> String {
    match s {
        Some(s) => s.clone(),
        None => "none".to_string(),
    }
}

fn axes_id_of(kind: &ElementKind) -> Option<&str> {
    match kind {
        ElementKind::Plot { axes_id, .. } | ElementKind::Bar { axes_id, .. } => Some(axes_id),
        _ => None,
    }
}

fn attr(element: &Element, field: &str) -> Result<String, QueryError> {
    let v = match (&element.kind, field) {
        (ElementKind::Rect { x, .. }, "x") => num(*x),
        (ElementKind::Rect { y, .. }, "y") => num(*y),
        (ElementKind::Rect { w, .. }, "w") => num(*w),
        (ElementKind::Rect { h, .. }, "h") => num(*h),
        (ElementKind::Rect { fill, .. }, "fill") => opt_color(fill),
        (ElementKind::Rect { stroke, .. }, "stroke") => opt_color(stroke),
        (ElementKind::Rect { stroke_width, .. }, "sw") => uint(*stroke_width),

        (ElementKind::Circle { cx, .. }, "cx") => num(*cx),
        (ElementKind::Circle { cy, .. }, "cy") => num(*cy),
        (ElementKind::Circle { r, .. }, "r") => num(*r),
        (ElementKind::Circle { fill, .. }, "fill") => opt_color(fill),
        (ElementKind::Circle { stroke, .. }, "stroke") => opt_color(stroke),
        (ElementKind::Circle { stroke_width, .. }, "sw") => uint(*stroke_width),

        (ElementKind::Line { x1, .. }, "x1") => num(*x1),
        (ElementKind::Line { y1, .. }, "y1") => num(*y1),
        (ElementKind::Line { x2, .. }, "x2") => num(*x2),
        (ElementKind::Line { y2, .. }, "y2") => num(*y2),
        (ElementKind::Line { stroke, .. }, "stroke") => stroke.to_string(),
        (ElementKind::Line { stroke_width, .. }, "sw") => uint(*stroke_width),

        (ElementKind::Polyline { points, .. }, "points") => points
            .iter()
            .flat_map(|(x, y)| [num(*x), num(*y)])
            .collect::<Vec<_>>()
            .join(" "),
        (ElementKind::Polyline { stroke, .. }, "stroke") => stroke.to_string(),
        (ElementKind::Polyline { stroke_width, .. }, "sw") => uint(*stroke_width),

        (ElementKind::Text { x, .. }, "x") => num(*x),
        (ElementKind::Text { y, .. }, "y") => num(*y),
        (ElementKind::Text { size, .. }, "size") => num(*size),
        (ElementKind::Text { anchor, .. }, "anchor") => anchor.as_str().to_string(),
        (ElementKind::Text { color, .. }, "color") => color.to_string(),
        (ElementKind::Text { content, .. }, "content") => content.clone(),

        (ElementKind::Axes { x, .. }, "x") => num(*x),
        (ElementKind::Axes { y, .. }, "y") => num(*y),
        (ElementKind::Axes { w, .. }, "w") => num(*w),
        (ElementKind::Axes { h, .. }, "h") => num(*h),
        (ElementKind::Axes { xmin, .. }, "xmin") => num(*xmin),
        (ElementKind::Axes { xmax, .. }, "xmax") => num(*xmax),
        (ElementKind::Axes { ymin, .. }, "ymin") => num(*ymin),
        (ElementKind::Axes { ymax, .. }, "ymax") => num(*ymax),
        (ElementKind::Axes { xlabel, .. }, "xlabel") => opt_string(xlabel),
        (ElementKind::Axes { ylabel, .. }, "ylabel") => opt_string(ylabel),

        (ElementKind::Plot { axes_id, .. }, "axes") => axes_id.clone(),
        (ElementKind::Plot { expr, .. }, "expr") => expr.to_string(),
        (ElementKind::Plot { samples, .. }, "samples") => uint(*samples),
        (ElementKind::Plot { stroke, .. }, "stroke") => stroke.to_string(),

        (ElementKind::Bar { axes_id, .. }, "axes") => axes_id.clone(),
        (ElementKind::Bar { xcenter, .. }, "xcenter") => num(*xcenter),
        (ElementKind::Bar { width, .. }, "width") => num(*width),
        (ElementKind::Bar { value, .. }, "value") => num(*value),
        (ElementKind::Bar { fill, .. }, "fill") => fill.to_string(),
        (ElementKind::Bar { label, .. }, "label") => opt_string(label),

        (ElementKind::Table { x, .. }, "x") => num(*x),
        (ElementKind::Table { y, .. }, "y") => num(*y),
        (ElementKind::Table { rows, .. }, "rows") => uint(*rows),
        (ElementKind::Table { cols, .. }, "cols") => uint(*cols),
        (ElementKind::Table { cell_w, .. }, "cell_w") => num(*cell_w),
        (ElementKind::Table { cell_h, .. }, "cell_h") => num(*cell_h),
        (ElementKind::Table { stroke, .. }, "stroke") => stroke.to_string(),

        (ElementKind::Grid { x, .. }, "x") => num(*x),
        (ElementKind::Grid { y, .. }, "y") => num(*y),
        (ElementKind::Grid { w, .. }, "w") => num(*w),
        (ElementKind::Grid { h, .. }, "h") => num(*h),
        (ElementKind::Grid { nx, .. }, "nx") => uint(*nx),
        (ElementKind::Grid { ny, .. }, "ny") => uint(*ny),
        (ElementKind::Grid { stroke, .. }, "stroke") => stroke.to_string(),

        _ => return Err(QueryError::UnknownField),
    };
    Ok(v)
}

fn text_of(element: &Element) -> Result<String, QueryError> {
    match &element.kind {
        ElementKind::Text { content, .. } => Ok(content.clone()),
        ElementKind::Table { cells, .. } => Ok(cells
            .iter()
            .map(|c| c.content.as_str())
            .collect::<Vec<_>>()
            .join(" ")),
        _ => Err(QueryError::UnknownField),
    }
}

fn kv<'a>(token: &'a str, key: &str) -> Option<&'a str> {
    token.strip_prefix(key)?.strip_prefix('=')
}

/// Answers one query against the program's scene graph.
pub fn qa_answer(program: &SceneProgram, query: &str) -> Result<String, QueryError> {
    let query = query.trim();
    if let Some(rest) = query.strip_prefix("COUNT ") {
        let mut kind: Option<&str> = None;
        let mut axes: Option<&str> = None;
        for token in rest.split_whitespace() {
            if let Some(v) = kv(token, "kind") {
                if kind.replace(v).is_some() {
                    return Err(QueryError::BadQuery);
                }
            } else if let Some(v) = kv(token, "axes") {
                if axes.replace(v).is_some() {
                    return Err(QueryError::BadQuery);
                }
            } else {
                return Err(QueryError::BadQuery);
            }
        }
        let kind = kind.ok_or(QueryError::BadQuery)?;
        if !KINDS.contains(&kind) {
            return Err(QueryError::BadQuery);
        }
        let count = program
            .elements
            .iter()
            .filter(|e| e.kind.kind_name() == kind)
            .filter(|e| match axes {
                None => true,
                Some(a) => axes_id_of(&e.kind) == Some(a),
            })
            .count();
        return Ok(count.to_string());
    }
    if let Some(rest) = query.strip_prefix("ATTR ") {
        let mut id: Option<&str> = None;
        let mut field: Option<&str> = None;
        for token in rest.split_whitespace() {
            if let Some(v) = kv(token, "id") {
                if id.replace(v).is_some() {
                    return Err(QueryError::BadQuery);
                }
            } else if let Some(v) = kv(token, "field") {
                if field.replace(v).is_some() {
                    return Err(QueryError::BadQuery);
                }
            } else {
                return Err(QueryError::BadQuery);
            }
        }
        let id = id.ok_or(QueryError::BadQuery)?;
        let field = field.ok_or(QueryError::BadQuery)?;
        let element = program.element(id).ok_or(QueryError::UnknownId)?;
        return attr(element, field);
    }
    if let Some(rest) = query.strip_prefix("TEXT_OF ") {
        let id = kv(rest.trim(), "id").ok_or(QueryError::BadQuery)?;
        if id.contains(char::is_whitespace) {
            return Err(QueryError::BadQuery);
        }
        let element = program.element(id).ok_or(QueryError::UnknownId)?;
        return text_of(element);
    }
    if let Some(rest) = query.strip_prefix("BAR_VALUE ") {
        let rest = rest.trim();
        let quoted = rest.strip_prefix("label=").ok_or(QueryError::BadQuery)?;
        let inner = quoted
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or(QueryError::BadQuery)?;
        for element in &program.elements {
            if let ElementKind::Bar { value, label, .. } = &element.kind {
                if label.as_deref() == Some(inner) {
                    return Ok(num(*value));
                }
            }
        }
        return Err(QueryError::NoSuchLabel);
    }
    Err(QueryError::BadQuery)
}

/// Grades a list of items; a query error counts as incorrect.
pub fn qa_accuracy(program: &SceneProgram, items: &[QAItem]) -> QAReport {
    let verdicts: Vec<bool> = items
        .iter()
        .map(|item| qa_answer(program, &item.query).as_deref() == Ok(item.expected.as_str()))
        .collect();
    let correct = verdicts.iter().filter(|v| **v).count();
    let total = verdicts.len();
    QAReport {
        verdicts,
        correct,
        total,
        accuracy: if total == 0 {
            1.0
        } else {
            correct as f64 / total as f64
        },
    }
}
