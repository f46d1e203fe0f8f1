//! Canonical text for a parsed program.
//!
//! One statement per line, single spaces, attributes in declaration order
//! with defaults left out, lowercase hex colors, canonical numbers, LF
//! endings and a trailing newline. Formatting then reparsing gives back a
//! structurally identical program, and formatting is idempotent, so this
//! text is a usable identity for a scene.

use crate::numfmt::format_number;
use crate::scene::{Anchor, Color, Element, ElementKind, SceneProgram};

/// Renders the canonical text of `program`.
pub fn format(program: &SceneProgram) -> String {
    let mut out = String::new();

    let c = &program.canvas;
    out.push_str(&format!("canvas {} {}", c.width, c.height));
    if c.background != Color::WHITE {
        out.push_str(&format!(" bg={}", c.background));
    }
    out.push('\n');

    for el in &program.elements {
        write_element(el, &mut out);
    }
    out
}

fn write_element(el: &Element, out: &mut String) {
    let id = &el.id;
    match &el.kind {
        ElementKind::Rect {
            x,
            y,
            w,
            h,
            fill,
            stroke,
            stroke_width,
        } => {
            out.push_str(&format!(
                "rect {id} {} {} {} {}",
                num(*x),
                num(*y),
                num(*w),
                num(*h)
            ));
            push_opt_color(out, "fill", *fill);
            push_opt_color(out, "stroke", *stroke);
            push_sw(out, *stroke_width);
            out.push('\n');
        }
        ElementKind::Circle {
            cx,
            cy,
            r,
            fill,
            stroke,
            stroke_width,
        } => {
            out.push_str(&format!(
                "circle {id} {} {} {}",
                num(*cx),
                num(*cy),
                num(*r)
            ));
            push_opt_color(out, "fill", *fill);
            push_opt_color(out, "stroke", *stroke);
            push_sw(out, *stroke_width);
            out.push('\n');
        }
        ElementKind::Line {
            x1,
            y1,
            x2,
            y2,
            stroke,
            stroke_width,
        } => {
            out.push_str(&format!(
                "line {id} {} {} {} {}",
                num(*x1),
                num(*y1),
                num(*x2),
                num(*y2)
            ));
            push_nondefault_color(out, "stroke", *stroke, Color::BLACK);
            push_sw(out, *stroke_width);
            out.push('\n');
        }
        ElementKind::Polyline {
            points,
            stroke,
            stroke_width,
        } => {
            out.push_str(&format!("polyline {id}"));
            for (x, y) in points {
                out.push_str(&format!(" {} {}", num(*x), num(*y)));
            }
            push_nondefault_color(out, "stroke", *stroke, Color::BLACK);
            push_sw(out, *stroke_width);
            out.push('\n');
        }
        ElementKind::Text {
            x,
            y,
            size,
            anchor,
            color,
            content,
        } => {
            out.push_str(&format!(
                "text {id} {} {} {} {} {} ",
                num(*x),
                num(*y),
                num(*size),
                anchor_name(*anchor),
                color
            ));
            quote(content, out);
            out.push('\n');
        }
        ElementKind::Axes {
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
        } => {
            out.push_str(&format!(
                "axes {id} {} {} {} {} {} {} {} {}",
                num(*x),
                num(*y),
                num(*w),
                num(*h),
                num(*xmin),
                num(*xmax),
                num(*ymin),
                num(*ymax)
            ));
            push_opt_string(out, "xlabel", xlabel.as_deref());
            push_opt_string(out, "ylabel", ylabel.as_deref());
            out.push('\n');
        }
        ElementKind::Plot {
            axes_id,
            expr,
            samples,
            stroke,
        } => {
            out.push_str(&format!("plot {id} {axes_id} "));
            quote(&expr.to_string(), out);
            if *samples != 256 {
                out.push_str(&format!(" samples={samples}"));
            }
            push_nondefault_color(out, "stroke", *stroke, Color::BLACK);
            out.push('\n');
        }
        ElementKind::Bar {
            axes_id,
            xcenter,
            width,
            value,
            fill,
            label,
        } => {
            out.push_str(&format!(
                "bar {id} {axes_id} {} {} {}",
                num(*xcenter),
                num(*width),
                num(*value)
            ));
            push_nondefault_color(out, "fill", *fill, Color::BLACK);
            push_opt_string(out, "label", label.as_deref());
            out.push('\n');
        }
        ElementKind::Table {
            x,
            y,
            rows,
            cols,
            cell_w,
            cell_h,
            stroke,
            cells,
        } => {
            out.push_str(&format!(
                "table {id} {} {} {rows} {cols} {} {}",
                num(*x),
                num(*y),
                num(*cell_w),
                num(*cell_h)
            ));
            push_nondefault_color(out, "stroke", *stroke, Color::BLACK);
            out.push('\n');
            for cell in cells {
                out.push_str(&format!("cell {id} {} {} ", cell.row, cell.col));
                quote(&cell.content, out);
                out.push('\n');
            }
        }
        ElementKind::Grid {
            x,
            y,
            w,
            h,
            nx,
            ny,
            stroke,
        } => {
            out.push_str(&format!(
                "grid {id} {} {} {} {} {nx} {ny}",
                num(*x),
                num(*y),
                num(*w),
                num(*h)
            ));
            push_nondefault_color(out, "stroke", *stroke, Color::BLACK);
            out.push('\n');
        }
    }
}

fn num(v: f64) -> String {
    format_number(v)
}

fn anchor_name(a: Anchor) -> &'static str {
    a.as_str()
}

fn push_opt_color(out: &mut String, key: &str, c: Option<Color>) {
    if let Some(c) = c {
        out.push_str(&format!(" {key}={c}"));
    }
}

fn push_nondefault_color(out: &mut String, key: &str, c: Color, default: Color) {
    if c != default {
        out.push_str(&format!(" {key}={c}"));
    }
}

fn push_sw(out: &mut String, sw: u32) {
    if sw != 1 {
        out.push_str(&format!(" sw={sw}"));
    }
}

fn push_opt_string(out: &mut String, key: &str, s: Option<&str>) {
    if let Some(s) = s {
        out.push_str(&format!(" {key}="));
        quote(s, out);
    }
}

fn quote(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
}
