//! Parser for DraftScript source text.
//!
//! The language is line-oriented: one statement per line, `#` lines are
//! comments, blank lines are ignored. A statement is a keyword, positional
//! arguments, then `key=value` attributes in any order. Strings are double
//! quoted with `\"`, `\\` and `\n` escapes.
//!
//! Parsing covers syntax and token typing only. Whether the program is
//! acceptable (id uniqueness, ranges, resource caps) is the validator's
//! job, with one exception: a `cell` must name a table that already
//! exists, because the cell is folded into that table right here.

use std::fmt;

use crate::expr::parse_expr;
use crate::numfmt::canon_number;
use crate::scene::{Anchor, CanvasSpec, Color, Element, ElementKind, SceneProgram, TableCell};

/// A syntax error with its position. Lines and columns are 1-based;
/// columns count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone)]
enum TokVal {
    Word(String),
    Quoted(String),
}

#[derive(Debug, Clone)]
struct Token {
    col: u32,
    key: Option<String>,
    val: TokVal,
}

fn err(line: u32, col: u32, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        col,
        message: message.into(),
    }
}

/// Parses a whole program. The first statement must be `canvas`; elements
/// keep source order, which is paint order.
pub fn parse(source: &str) -> Result<SceneProgram, ParseError> {
    let mut canvas: Option<CanvasSpec> = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut source_lines: Vec<u32> = Vec::new();

    for (idx, raw) in source.split('\n').enumerate() {
        let line_no = (idx + 1) as u32;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks = tokenize(line, line_no)?;
        let mut cur = Cursor::new(line_no, line, toks);
        let (kw_col, kw) = cur.keyword()?;

        if kw == "canvas" {
            if canvas.is_some() {
                return Err(err(line_no, kw_col, "duplicate canvas statement"));
            }
            if !elements.is_empty() {
                return Err(err(line_no, kw_col, "canvas must be the first statement"));
            }
            canvas = Some(stmt_canvas(cur)?);
            continue;
        }
        if canvas.is_none() {
            return Err(err(line_no, kw_col, "first statement must be canvas"));
        }

        match kw.as_str() {
            "rect" => elements.push(stmt_rect(cur)?),
            "circle" => elements.push(stmt_circle(cur)?),
            "line" => elements.push(stmt_line(cur)?),
            "polyline" => elements.push(stmt_polyline(cur)?),
            "text" => elements.push(stmt_text(cur)?),
            "axes" => elements.push(stmt_axes(cur)?),
            "plot" => elements.push(stmt_plot(cur)?),
            "bar" => elements.push(stmt_bar(cur)?),
            "table" => elements.push(stmt_table(cur)?),
            "grid" => elements.push(stmt_grid(cur)?),
            "cell" => {
                stmt_cell(cur, &mut elements)?;
                continue;
            }
            other => {
                return Err(err(line_no, kw_col, format!("unknown statement '{other}'")));
            }
        }
        source_lines.push(line_no);
    }

    let canvas = canvas.ok_or_else(|| err(1, 1, "missing canvas statement"))?;
    Ok(SceneProgram {
        canvas,
        elements,
        source_lines,
    })
}

fn tokenize(line: &str, line_no: u32) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0usize;

    while i < chars.len() {
        let c = chars[i];
        if c == ' ' || c == '\t' {
            i += 1;
            continue;
        }
        let start_col = (i + 1) as u32;

        if c == '"' {
            let (s, ni) = scan_quoted(&chars, i, line_no)?;
            i = ni;
            boundary(&chars, i, line_no)?;
            toks.push(Token {
                col: start_col,
                key: None,
                val: TokVal::Quoted(s),
            });
            continue;
        }

        let mut buf = String::new();
        let mut key: Option<String> = None;
        let mut quoted_value = false;
        while i < chars.len() {
            let c = chars[i];
            if c == ' ' || c == '\t' {
                break;
            }
            if c == '=' && key.is_none() {
                if buf.is_empty() {
                    return Err(err(line_no, start_col, "attribute name missing before '='"));
                }
                key = Some(std::mem::take(&mut buf));
                i += 1;
                if i < chars.len() && chars[i] == '"' {
                    let (s, ni) = scan_quoted(&chars, i, line_no)?;
                    i = ni;
                    boundary(&chars, i, line_no)?;
                    toks.push(Token {
                        col: start_col,
                        key: key.take(),
                        val: TokVal::Quoted(s),
                    });
                    quoted_value = true;
                    break;
                }
                continue;
            }
            if c == '"' {
                return Err(err(line_no, (i + 1) as u32, "unexpected '\"' inside a token"));
            }
            buf.push(c);
            i += 1;
        }
        if quoted_value {
            continue;
        }
        match key {
            Some(k) => {
                if buf.is_empty() {
                    return Err(err(line_no, start_col, format!("empty value for '{k}'")));
                }
                toks.push(Token {
                    col: start_col,
                    key: Some(k),
                    val: TokVal::Word(buf),
                });
            }
            None => {
                toks.push(Token {
                    col: start_col,
                    key: None,
                    val: TokVal::Word(buf),
                });
            }
        }
    }
    Ok(toks)
}

fn scan_quoted(
    chars: &[char],
    open: usize,
    line_no: u32,
) -> Result<(String, usize), ParseError> {
    let mut s = String::new();
    let mut i = open + 1;
    loop {
        match chars.get(i) {
            None => {
                return Err(err(line_no, (open + 1) as u32, "unterminated string"));
            }
            Some('"') => return Ok((s, i + 1)),
            Some('\\') => match chars.get(i + 1) {
                Some('"') => {
                    s.push('"');
                    i += 2;
                }
                Some('\\') => {
                    s.push('\\');
                    i += 2;
                }
                Some('n') => {
                    s.push('\n');
                    i += 2;
                }
                Some(c) => {
                    return Err(err(
                        line_no,
                        (i + 1) as u32,
                        format!("unknown escape '\\{c}'"),
                    ));
                }
                None => {
                    return Err(err(line_no, (open + 1) as u32, "unterminated string"));
                }
            },
            Some(c) => {
                s.push(*c);
                i += 1;
            }
        }
    }
}

fn boundary(chars: &[char], i: usize, line_no: u32) -> Result<(), ParseError> {
    match chars.get(i) {
        None => Ok(()),
        Some(' ') | Some('\t') => Ok(()),
        Some(_) => Err(err(
            line_no,
            (i + 1) as u32,
            "expected whitespace after string",
        )),
    }
}

struct Cursor {
    line: u32,
    end_col: u32,
    toks: Vec<Token>,
    next: usize,
}

impl Cursor {
    fn new(line: u32, text: &str, toks: Vec<Token>) -> Cursor {
        Cursor {
            line,
            end_col: (text.chars().count() + 1) as u32,
            toks,
            next: 0,
        }
    }

    fn keyword(&mut self) -> Result<(u32, String), ParseError> {
        let t = self.toks.first().ok_or_else(|| {
            err(self.line, 1, "expected a statement keyword")
        })?;
        match (&t.key, &t.val) {
            (None, TokVal::Word(w)) => {
                self.next = 1;
                Ok((t.col, w.clone()))
            }
            _ => Err(err(self.line, t.col, "expected a statement keyword")),
        }
    }

    fn positional(&mut self, what: &str) -> Result<(u32, TokVal), ParseError> {
        match self.toks.get(self.next) {
            None => Err(err(self.line, self.end_col, format!("expected {what}"))),
            Some(t) if t.key.is_some() => {
                Err(err(self.line, t.col, format!("expected {what}")))
            }
            Some(t) => {
                self.next += 1;
                Ok((t.col, t.val.clone()))
            }
        }
    }

    fn peek_is_positional(&self) -> bool {
        matches!(self.toks.get(self.next), Some(t) if t.key.is_none())
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        let (col, val) = self.positional(what)?;
        match val {
            TokVal::Word(w) => parse_number_text(&w)
                .ok_or_else(|| err(self.line, col, format!("expected a number for {what}"))),
            TokVal::Quoted(_) => {
                Err(err(self.line, col, format!("expected a number for {what}")))
            }
        }
    }

    fn uint(&mut self, what: &str) -> Result<u32, ParseError> {
        let (col, val) = self.positional(what)?;
        match val {
            TokVal::Word(w) => parse_uint_text(&w).ok_or_else(|| {
                err(
                    self.line,
                    col,
                    format!("expected a non-negative integer for {what}"),
                )
            }),
            TokVal::Quoted(_) => Err(err(
                self.line,
                col,
                format!("expected a non-negative integer for {what}"),
            )),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        let (col, val) = self.positional(what)?;
        match val {
            TokVal::Word(w) if is_ident(&w) => Ok(w),
            _ => Err(err(self.line, col, format!("expected an identifier for {what}"))),
        }
    }

    fn color(&mut self, what: &str) -> Result<Color, ParseError> {
        let (col, val) = self.positional(what)?;
        match val {
            TokVal::Word(w) => Color::parse(&w).ok_or_else(|| {
                err(self.line, col, format!("expected a #rrggbb color for {what}"))
            }),
            TokVal::Quoted(_) => Err(err(
                self.line,
                col,
                format!("expected a #rrggbb color for {what}"),
            )),
        }
    }

    fn anchor(&mut self) -> Result<Anchor, ParseError> {
        let (col, val) = self.positional("ANCHOR")?;
        match val {
            TokVal::Word(w) => Anchor::parse(&w).ok_or_else(|| {
                err(self.line, col, "ANCHOR must be start, middle or end")
            }),
            TokVal::Quoted(_) => {
                Err(err(self.line, col, "ANCHOR must be start, middle or end"))
            }
        }
    }

    fn quoted(&mut self, what: &str) -> Result<(u32, String), ParseError> {
        let (col, val) = self.positional(what)?;
        match val {
            TokVal::Quoted(s) => Ok((col, s)),
            TokVal::Word(_) => {
                Err(err(self.line, col, format!("expected a quoted string for {what}")))
            }
        }
    }

    /// Consumes the remaining tokens as attributes. Every leftover token
    /// must be `key=value`, and keys must be unique.
    fn attrs(self) -> Result<Attrs, ParseError> {
        let line = self.line;
        let mut entries: Vec<(String, u32, TokVal)> = Vec::new();
        for t in &self.toks[self.next..] {
            let Some(key) = &t.key else {
                return Err(err(line, t.col, "unexpected token"));
            };
            if entries.iter().any(|(k, _, _)| k == key) {
                return Err(err(line, t.col, format!("duplicate attribute '{key}'")));
            }
            entries.push((key.clone(), t.col, t.val.clone()));
        }
        Ok(Attrs { line, entries })
    }
}

struct Attrs {
    line: u32,
    entries: Vec<(String, u32, TokVal)>,
}

impl Attrs {
    fn take(&mut self, key: &str) -> Option<(u32, TokVal)> {
        let idx = self.entries.iter().position(|(k, _, _)| k == key)?;
        let (_, col, val) = self.entries.remove(idx);
        Some((col, val))
    }

    fn color(&mut self, key: &str) -> Result<Option<Color>, ParseError> {
        match self.take(key) {
            None => Ok(None),
            Some((col, TokVal::Word(w))) => Color::parse(&w).map(Some).ok_or_else(|| {
                err(self.line, col, format!("expected a #rrggbb color for '{key}'"))
            }),
            Some((col, TokVal::Quoted(_))) => Err(err(
                self.line,
                col,
                format!("expected a #rrggbb color for '{key}'"),
            )),
        }
    }

    fn uint(&mut self, key: &str) -> Result<Option<u32>, ParseError> {
        match self.take(key) {
            None => Ok(None),
            Some((col, TokVal::Word(w))) => parse_uint_text(&w).map(Some).ok_or_else(|| {
                err(
                    self.line,
                    col,
                    format!("expected a non-negative integer for '{key}'"),
                )
            }),
            Some((col, TokVal::Quoted(_))) => Err(err(
                self.line,
                col,
                format!("expected a non-negative integer for '{key}'"),
            )),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ParseError> {
        match self.take(key) {
            None => Ok(None),
            Some((_, TokVal::Quoted(s))) => Ok(Some(s)),
            Some((col, TokVal::Word(_))) => Err(err(
                self.line,
                col,
                format!("expected a quoted string for '{key}'"),
            )),
        }
    }

    fn finish(self) -> Result<(), ParseError> {
        if let Some((k, col, _)) = self.entries.first() {
            return Err(err(self.line, *col, format!("unknown attribute '{k}'")));
        }
        Ok(())
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_number_text(s: &str) -> Option<f64> {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let ok = match frac_part {
        Some(f) => (digits(int_part) && digits(f)) || (int_part.is_empty() && digits(f)),
        None => digits(int_part),
    };
    if !ok {
        return None;
    }
    let v: f64 = s.parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    Some(canon_number(v))
}

fn parse_uint_text(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn stmt_canvas(mut cur: Cursor) -> Result<CanvasSpec, ParseError> {
    let width = cur.uint("WIDTH")?;
    let height = cur.uint("HEIGHT")?;
    let mut attrs = cur.attrs()?;
    let background = attrs.color("bg")?.unwrap_or(Color::WHITE);
    attrs.finish()?;
    Ok(CanvasSpec {
        width,
        height,
        background,
    })
}

fn stmt_rect(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let x = cur.number("X")?;
    let y = cur.number("Y")?;
    let w = cur.number("W")?;
    let h = cur.number("H")?;
    let mut attrs = cur.attrs()?;
    let fill = attrs.color("fill")?;
    let stroke = attrs.color("stroke")?;
    let stroke_width = attrs.uint("sw")?.unwrap_or(1);
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Rect {
            x,
            y,
            w,
            h,
            fill,
            stroke,
            stroke_width,
        },
    })
}

fn stmt_circle(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let cx = cur.number("CX")?;
    let cy = cur.number("CY")?;
    let r = cur.number("R")?;
    let mut attrs = cur.attrs()?;
    let fill = attrs.color("fill")?;
    let stroke = attrs.color("stroke")?;
    let stroke_width = attrs.uint("sw")?.unwrap_or(1);
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Circle {
            cx,
            cy,
            r,
            fill,
            stroke,
            stroke_width,
        },
    })
}

fn stmt_line(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let x1 = cur.number("X1")?;
    let y1 = cur.number("Y1")?;
    let x2 = cur.number("X2")?;
    let y2 = cur.number("Y2")?;
    let mut attrs = cur.attrs()?;
    let stroke = attrs.color("stroke")?.unwrap_or(Color::BLACK);
    let stroke_width = attrs.uint("sw")?.unwrap_or(1);
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Line {
            x1,
            y1,
            x2,
            y2,
            stroke,
            stroke_width,
        },
    })
}

fn stmt_polyline(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let mut coords: Vec<f64> = Vec::new();
    let mut last_col = 0;
    while cur.peek_is_positional() {
        let (col, val) = cur.positional("a coordinate")?;
        last_col = col;
        match val {
            TokVal::Word(w) => {
                let v = parse_number_text(&w).ok_or_else(|| {
                    err(cur.line, col, "expected a number in the point list")
                })?;
                coords.push(v);
            }
            TokVal::Quoted(_) => {
                return Err(err(cur.line, col, "expected a number in the point list"));
            }
        }
    }
    let line = cur.line;
    let end_col = cur.end_col;
    let mut attrs = cur.attrs()?;
    let stroke = attrs.color("stroke")?.unwrap_or(Color::BLACK);
    let stroke_width = attrs.uint("sw")?.unwrap_or(1);
    attrs.finish()?;
    if coords.len() % 2 != 0 {
        return Err(err(line, last_col, "point list must pair x with y"));
    }
    if coords.len() < 4 {
        return Err(err(
            line,
            if last_col == 0 { end_col } else { last_col },
            "polyline needs at least two points",
        ));
    }
    let points = coords.chunks(2).map(|c| (c[0], c[1])).collect();
    Ok(Element {
        id,
        kind: ElementKind::Polyline {
            points,
            stroke,
            stroke_width,
        },
    })
}

fn stmt_text(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let x = cur.number("X")?;
    let y = cur.number("Y")?;
    let size = cur.number("SIZE")?;
    let anchor = cur.anchor()?;
    let color = cur.color("COLOR")?;
    let (_, content) = cur.quoted("STRING")?;
    let attrs = cur.attrs()?;
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Text {
            x,
            y,
            size,
            anchor,
            color,
            content,
        },
    })
}

fn stmt_axes(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let x = cur.number("X")?;
    let y = cur.number("Y")?;
    let w = cur.number("W")?;
    let h = cur.number("H")?;
    let xmin = cur.number("XMIN")?;
    let xmax = cur.number("XMAX")?;
    let ymin = cur.number("YMIN")?;
    let ymax = cur.number("YMAX")?;
    let mut attrs = cur.attrs()?;
    let xlabel = attrs.string("xlabel")?;
    let ylabel = attrs.string("ylabel")?;
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Axes {
            x,
            y,
            w,
            h,
            xmin,
            xmax,
            ymin,
            ymax,
            xlabel,
            ylabel,
        },
    })
}

fn stmt_plot(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let axes_id = cur.ident("AXESID")?;
    let (expr_col, expr_text) = cur.quoted("EXPR")?;
    let line = cur.line;
    let mut attrs = cur.attrs()?;
    let samples = attrs.uint("samples")?.unwrap_or(256);
    let stroke = attrs.color("stroke")?.unwrap_or(Color::BLACK);
    attrs.finish()?;
    let expr = parse_expr(&expr_text).map_err(|e| {
        err(
            line,
            expr_col + 1 + e.offset as u32,
            format!("in expression: {}", e.message),
        )
    })?;
    Ok(Element {
        id,
        kind: ElementKind::Plot {
            axes_id,
            expr,
            samples,
            stroke,
        },
    })
}

fn stmt_bar(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let axes_id = cur.ident("AXESID")?;
    let xcenter = cur.number("XCENTER")?;
    let width = cur.number("WIDTH")?;
    let value = cur.number("VALUE")?;
    let mut attrs = cur.attrs()?;
    let fill = attrs.color("fill")?.unwrap_or(Color::BLACK);
    let label = attrs.string("label")?;
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Bar {
            axes_id,
            xcenter,
            width,
            value,
            fill,
            label,
        },
    })
}

fn stmt_table(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let x = cur.number("X")?;
    let y = cur.number("Y")?;
    let rows = cur.uint("ROWS")?;
    let cols = cur.uint("COLS")?;
    let cell_w = cur.number("CELLW")?;
    let cell_h = cur.number("CELLH")?;
    let mut attrs = cur.attrs()?;
    let stroke = attrs.color("stroke")?.unwrap_or(Color::BLACK);
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Table {
            x,
            y,
            rows,
            cols,
            cell_w,
            cell_h,
            stroke,
            cells: Vec::new(),
        },
    })
}

fn stmt_grid(mut cur: Cursor) -> Result<Element, ParseError> {
    let id = cur.ident("ID")?;
    let x = cur.number("X")?;
    let y = cur.number("Y")?;
    let w = cur.number("W")?;
    let h = cur.number("H")?;
    let nx = cur.uint("NX")?;
    let ny = cur.uint("NY")?;
    let mut attrs = cur.attrs()?;
    let stroke = attrs.color("stroke")?.unwrap_or(Color::BLACK);
    attrs.finish()?;
    Ok(Element {
        id,
        kind: ElementKind::Grid {
            x,
            y,
            w,
            h,
            nx,
            ny,
            stroke,
        },
    })
}

fn stmt_cell(mut cur: Cursor, elements: &mut [Element]) -> Result<(), ParseError> {
    let line = cur.line;
    let id_col = cur.toks.get(cur.next).map(|t| t.col).unwrap_or(cur.end_col);
    let table_id = cur.ident("TABLEID")?;
    let row = cur.uint("ROW")?;
    let col = cur.uint("COL")?;
    let (_, content) = cur.quoted("STRING")?;
    let attrs = cur.attrs()?;
    attrs.finish()?;

    let target = elements.iter_mut().find(|e| e.id == table_id);
    match target {
        None => Err(err(line, id_col, format!("unknown table '{table_id}'"))),
        Some(Element {
            kind: ElementKind::Table { cells, .. },
            ..
        }) => {
            if let Some(existing) = cells.iter_mut().find(|c| c.row == row && c.col == col) {
                existing.content = content;
            } else {
                cells.push(TableCell { row, col, content });
            }
            Ok(())
        }
        Some(_) => Err(err(line, id_col, format!("'{table_id}' is not a table"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(src: &str) -> SceneProgram {
        parse(src).unwrap_or_else(|e| panic!("parse failed: {e}\n{src}"))
    }

    fn fail(src: &str) -> ParseError {
        match parse(src) {
            Ok(_) => panic!("expected a parse error:\n{src}"),
            Err(e) => e,
        }
    }

    #[test]
    fn minimal_program() {
        let p = ok("canvas 100 100");
        assert_eq!(p.canvas.width, 100);
        assert_eq!(p.canvas.background, Color::WHITE);
        assert!(p.elements.is_empty());
    }

    #[test]
    fn canvas_must_come_first() {
        let e = fail("rect r 0 0 10 10");
        assert_eq!(e.line, 1);
        assert!(e.message.contains("canvas"), "{}", e.message);
    }

    #[test]
    fn canvas_after_comments_is_fine() {
        let p = ok("# heading\n\n  # more\ncanvas 32 32 bg=#102030\n");
        assert_eq!(p.canvas.background, Color::parse("#102030").unwrap());
    }

    #[test]
    fn duplicate_canvas_rejected() {
        let e = fail("canvas 100 100\ncanvas 50 50");
        assert_eq!(e.line, 2);
        assert!(e.message.contains("duplicate canvas"), "{}", e.message);
    }

    #[test]
    fn empty_source_reports_missing_canvas() {
        let e = fail("");
        assert!(e.message.contains("missing canvas"), "{}", e.message);
        let e = fail("# only a comment\n");
        assert!(e.message.contains("missing canvas"), "{}", e.message);
    }

    #[test]
    fn rect_with_attributes() {
        let p = ok("canvas 100 100\nrect box 5 5 20 10 fill=#ff0000 stroke=#000000 sw=3");
        let el = p.element("box").unwrap();
        match &el.kind {
            ElementKind::Rect {
                x, w, fill, stroke_width, ..
            } => {
                assert_eq!(*x, 5.0);
                assert_eq!(*w, 20.0);
                assert_eq!(*fill, Color::parse("#ff0000"));
                assert_eq!(*stroke_width, 3);
            }
            other => panic!("wrong kind: {other:?}"),
        }
        assert_eq!(p.line_of(0), Some(2));
    }

    #[test]
    fn unknown_attribute_rejected() {
        let e = fail("canvas 100 100\nrect r 0 0 10 10 paint=#000000");
        assert_eq!(e.line, 2);
        assert!(e.message.contains("unknown attribute 'paint'"), "{}", e.message);
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let e = fail("canvas 100 100\nrect r 0 0 10 10 fill=#000000 fill=#ffffff");
        assert!(e.message.contains("duplicate attribute"), "{}", e.message);
    }

    #[test]
    fn attribute_order_does_not_matter() {
        let a = ok("canvas 100 100\nrect r 0 0 1 1 sw=2 fill=#102030");
        let b = ok("canvas 100 100\nrect r 0 0 1 1 fill=#102030 sw=2");
        assert_eq!(a, b);
    }

    #[test]
    fn text_statement_parses() {
        let p = ok("canvas 100 100\ntext t 50 20 16 middle #112233 \"hi there\"");
        match &p.element("t").unwrap().kind {
            ElementKind::Text {
                size,
                anchor,
                content,
                ..
            } => {
                assert_eq!(*size, 16.0);
                assert_eq!(*anchor, Anchor::Middle);
                assert_eq!(content, "hi there");
            }
            other => panic!("wrong kind: {other:?}"),
        }
    }

    #[test]
    fn string_escapes_decode() {
        let p = ok(r#"canvas 100 100
text t 0 0 8 start #000000 "a\"b\\c\nd""#);
        match &p.element("t").unwrap().kind {
            ElementKind::Text { content, .. } => {
                assert_eq!(content, "a\"b\\c\nd");
            }
            other => panic!("wrong kind: {other:?}"),
        }
    }

    #[test]
    fn bad_escape_rejected() {
        let e = fail("canvas 100 100\ntext t 0 0 8 start #000000 \"a\\tb\"");
        assert!(e.message.contains("unknown escape"), "{}", e.message);
    }

    #[test]
    fn unterminated_string_rejected() {
        let e = fail("canvas 100 100\ntext t 0 0 8 start #000000 \"oops");
        assert!(e.message.contains("unterminated"), "{}", e.message);
    }

    #[test]
    fn bad_anchor_rejected() {
        let e = fail("canvas 100 100\ntext t 0 0 8 center #000000 \"x\"");
        assert!(e.message.contains("ANCHOR"), "{}", e.message);
    }

    #[test]
    fn polyline_needs_even_and_enough_points() {
        ok("canvas 100 100\npolyline p 0 0 10 10 20 5");
        let e = fail("canvas 100 100\npolyline p 0 0 10");
        assert!(e.message.contains("pair"), "{}", e.message);
        let e = fail("canvas 100 100\npolyline p 0 0");
        assert!(e.message.contains("two points"), "{}", e.message);
    }

    #[test]
    fn plot_parses_expression() {
        let p = ok("canvas 100 100\naxes a 0 0 50 50 0 1 0 1\nplot f a \"x^2\" samples=10");
        match &p.element("f").unwrap().kind {
            ElementKind::Plot { samples, expr, .. } => {
                assert_eq!(*samples, 10);
                assert_eq!(expr.eval(3.0), 9.0);
            }
            other => panic!("wrong kind: {other:?}"),
        }
    }

    #[test]
    fn plot_expression_error_points_into_the_string() {
        let e = fail("canvas 100 100\naxes a 0 0 50 50 0 1 0 1\nplot f a \"x+\"");
        assert_eq!(e.line, 3);
        assert!(e.message.contains("in expression"), "{}", e.message);
        assert_eq!(e.col, 13);
    }

    #[test]
    fn default_samples_is_256() {
        let p = ok("canvas 100 100\naxes a 0 0 50 50 0 1 0 1\nplot f a \"x\"");
        match &p.element("f").unwrap().kind {
            ElementKind::Plot { samples, .. } => assert_eq!(*samples, 256),
            other => panic!("wrong kind: {other:?}"),
        }
    }

    #[test]
    fn cells_fold_into_their_table() {
        let p = ok(concat!(
            "canvas 200 200\n",
            "table tb 10 10 2 2 40 20\n",
            "cell tb 0 0 \"a\"\n",
            "cell tb 1 1 \"b\"\n",
            "cell tb 0 0 \"c\"\n",
        ));
        match &p.element("tb").unwrap().kind {
            ElementKind::Table { cells, .. } => {
                assert_eq!(cells.len(), 2);
                assert_eq!(cells[0].content, "c");
                assert_eq!(cells[1].content, "b");
            }
            other => panic!("wrong kind: {other:?}"),
        }
    }

    #[test]
    fn cell_without_table_rejected() {
        let e = fail("canvas 100 100\ncell tb 0 0 \"a\"");
        assert!(e.message.contains("unknown table"), "{}", e.message);
        let e = fail("canvas 100 100\nrect tb 0 0 5 5\ncell tb 0 0 \"a\"");
        assert!(e.message.contains("not a table"), "{}", e.message);
    }

    #[test]
    fn cell_before_its_table_rejected() {
        let e = fail("canvas 100 100\ncell tb 0 0 \"a\"\ntable tb 0 0 2 2 10 10");
        assert_eq!(e.line, 2);
    }

    #[test]
    fn unknown_statement_rejected() {
        let e = fail("canvas 100 100\nblob b 1 2 3");
        assert!(e.message.contains("unknown statement 'blob'"), "{}", e.message);
    }

    #[test]
    fn numbers_reject_exponents_and_infinities() {
        fail("canvas 100 100\nrect r 1e3 0 10 10");
        fail("canvas 100 100\nrect r inf 0 10 10");
        fail("canvas 100 100\nrect r nan 0 10 10");
        let huge = "9".repeat(400);
        fail(&format!("canvas 100 100\nrect r {huge} 0 10 10"));
    }

    #[test]
    fn numeric_literals_are_canonicalized() {
        let p = ok("canvas 100 100\nrect r 0.1234567 0 10 10");
        match &p.element("r").unwrap().kind {
            ElementKind::Rect { x, .. } => assert_eq!(*x, 0.123457),
            other => panic!("wrong kind: {other:?}"),
        }
    }

    #[test]
    fn error_position_is_one_based() {
        let e = fail("canvas 100 100\nrect r zz 0 10 10");
        assert_eq!((e.line, e.col), (2, 8));
    }

    #[test]
    fn crlf_input_is_tolerated() {
        let p = ok("canvas 100 100\r\nrect r 0 0 10 10\r\n");
        assert_eq!(p.elements.len(), 1);
    }

    #[test]
    fn non_ascii_strings_pass_through() {
        let p = ok("canvas 100 100\ntext t 0 0 8 start #000000 \"春节 2024\"");
        match &p.element("t").unwrap().kind {
            ElementKind::Text { content, .. } => assert_eq!(content, "春节 2024"),
            other => panic!("wrong kind: {other:?}"),
        }
    }

    #[test]
    fn tabs_separate_tokens() {
        let p = ok("canvas\t100\t100\nrect\tr\t0\t0\t10\t10\tfill=#000000");
        assert_eq!(p.elements.len(), 1);
    }
}
