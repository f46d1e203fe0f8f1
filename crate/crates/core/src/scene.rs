//! The scene graph produced by parsing a DraftScript program.
//!
//! A program is a canvas declaration followed by drawable elements in paint
//! order. Everything here is plain data; geometry stays in source units
//! (pixels, y growing downward) until the rasterizer rounds it.

use std::fmt;

use crate::expr::Expr;

/// An opaque sRGB color. Alpha does not exist in DraftScript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Color {
    pub const BLACK: Color = Color { r: 0, g: 0, b: 0 };
    pub const WHITE: Color = Color { r: 255, g: 255, b: 255 };

    /// Parses `#rrggbb` with case-insensitive hex digits.
    pub fn parse(s: &str) -> Option<Color> {
        let hex = s.strip_prefix('#')?;
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        let v = u32::from_str_radix(hex, 16).ok()?;
        Some(Color {
            r: (v >> 16) as u8,
            g: (v >> 8) as u8,
            b: v as u8,
        })
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

/// Horizontal placement of a text run relative to its x coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Start,
    Middle,
    End,
}

impl Anchor {
    pub fn parse(s: &str) -> Option<Anchor> {
        match s {
            "start" => Some(Anchor::Start),
            "middle" => Some(Anchor::Middle),
            "end" => Some(Anchor::End),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Anchor::Start => "start",
            Anchor::Middle => "middle",
            Anchor::End => "end",
        }
    }
}

/// The mandatory first statement of every program.
#[derive(Debug, Clone, PartialEq)]
pub struct CanvasSpec {
    pub width: u32,
    pub height: u32,
    pub background: Color,
}

/// One populated cell of a table. Untouched cells render empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub row: u32,
    pub col: u32,
    pub content: String,
}

/// A drawable statement: a stable id plus kind-specific data.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: String,
    pub kind: ElementKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Rect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        fill: Option<Color>,
        stroke: Option<Color>,
        stroke_width: u32,
    },
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
        fill: Option<Color>,
        stroke: Option<Color>,
        stroke_width: u32,
    },
    Line {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        stroke: Color,
        stroke_width: u32,
    },
    Polyline {
        points: Vec<(f64, f64)>,
        stroke: Color,
        stroke_width: u32,
    },
    Text {
        x: f64,
        y: f64,
        size: f64,
        anchor: Anchor,
        color: Color,
        content: String,
    },
    Axes {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
        xlabel: Option<String>,
        ylabel: Option<String>,
    },
    Plot {
        axes_id: String,
        expr: Expr,
        samples: u32,
        stroke: Color,
    },
    Bar {
        axes_id: String,
        xcenter: f64,
        width: f64,
        value: f64,
        fill: Color,
        label: Option<String>,
    },
    Table {
        x: f64,
        y: f64,
        rows: u32,
        cols: u32,
        cell_w: f64,
        cell_h: f64,
        stroke: Color,
        cells: Vec<TableCell>,
    },
    Grid {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        nx: u32,
        ny: u32,
        stroke: Color,
    },
}

impl ElementKind {
    /// The statement keyword this element was written with.
    pub fn kind_name(&self) -> &'static str {
        match self {
            ElementKind::Rect { .. } => "rect",
            ElementKind::Circle { .. } => "circle",
            ElementKind::Line { .. } => "line",
            ElementKind::Polyline { .. } => "polyline",
            ElementKind::Text { .. } => "text",
            ElementKind::Axes { .. } => "axes",
            ElementKind::Plot { .. } => "plot",
            ElementKind::Bar { .. } => "bar",
            ElementKind::Table { .. } => "table",
            ElementKind::Grid { .. } => "grid",
        }
    }
}

/// A parsed program: canvas, elements in paint order, and the source line
/// each element came from (parallel to `elements`, for error reporting).
#[derive(Debug, Clone)]
pub struct SceneProgram {
    pub canvas: CanvasSpec,
    pub elements: Vec<Element>,
    pub source_lines: Vec<u32>,
}

impl PartialEq for SceneProgram {
    /// Structural equality: canvas and elements. Source line positions are
    /// bookkeeping and do not affect what the program means.
    fn eq(&self, other: &Self) -> bool {
        self.canvas == other.canvas && self.elements == other.elements
    }
}

impl SceneProgram {
    pub fn element(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Source line of the element at `index`, when known.
    pub fn line_of(&self, index: usize) -> Option<u32> {
        self.source_lines.get(index).copied()
    }
}
