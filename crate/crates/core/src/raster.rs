//! Deterministic software rasterizer.
//!
//! Output is RGBA8, row major, alpha pinned to 255. There is no
//! antialiasing and no blending: later elements overwrite earlier pixels.
//! Every float-to-pixel conversion goes through [`round_half_up`], and all
//! transcendental math in expressions goes through libm, so a program
//! renders to the same bytes on every platform and every run. Drawing
//! outside the canvas clips silently.
//!
//! Rendering accepts an optional wall clock deadline, checked before each
//! element, every 256 plot samples, every glyph and periodically inside
//! long line walks. A render that overruns aborts with [`RenderTimeout`]
//! and yields no image.

use std::fmt;
use std::io::Cursor;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::expr::Expr;
use crate::font;
use crate::scene::{Anchor, Color, Element, ElementKind};
use crate::validate::ValidatedProgram;

/// Pixel rounding used everywhere: floor(v + 0.5), so .5 goes up.
pub fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// The render exceeded its wall clock budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderTimeout;

impl fmt::Display for RenderTimeout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("render deadline exceeded")
    }
}

impl std::error::Error for RenderTimeout {}

/// An RGBA8 image with value semantics and a content digest.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, background: Color) -> RasterImage {
        assert!(width > 0 && height > 0, "empty raster");
        let mut row = Vec::with_capacity(width as usize * 4);
        for _ in 0..width {
            row.extend_from_slice(&[background.r, background.g, background.b, 255]);
        }
        let mut pixels = Vec::with_capacity(row.len() * height as usize);
        for _ in 0..height {
            pixels.extend_from_slice(&row);
        }
        RasterImage {
            width,
            height,
            pixels,
        }
    }

    /// Reconstructs an image from raw RGBA8 bytes. Alpha is forced to 255.
    pub fn from_rgba8(width: u32, height: u32, mut pixels: Vec<u8>) -> Result<RasterImage, String> {
        if width == 0 || height == 0 {
            return Err("empty raster".to_string());
        }
        let expect = width as usize * height as usize * 4;
        if pixels.len() != expect {
            return Err(format!(
                "pixel buffer is {} bytes, expected {expect}",
                pixels.len()
            ));
        }
        for a in pixels.iter_mut().skip(3).step_by(4) {
            *a = 255;
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Color at (x, y). Panics outside the canvas; tests only.
    pub fn color_at(&self, x: u32, y: u32) -> Color {
        assert!(x < self.width && y < self.height);
        let o = (y as usize * self.width as usize + x as usize) * 4;
        Color {
            r: self.pixels[o],
            g: self.pixels[o + 1],
            b: self.pixels[o + 2],
        }
    }

    /// SHA-256 over width and height as 4-byte big endian words followed
    /// by the RGBA bytes, in lowercase hex. This is the image's identity
    /// everywhere: manifests, the service, determinism checks.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.width.to_be_bytes());
        hasher.update(self.height.to_be_bytes());
        hasher.update(&self.pixels);
        let out = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in out {
            use std::fmt::Write;
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }

    /// Binary PPM (P6) with the alpha channel dropped. Byte exact for a
    /// given image, so PPM files can be digested and compared directly.
    pub fn to_ppm(&self) -> Vec<u8> {
        let header = format!("P6\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len() / 4 * 3);
        out.extend_from_slice(header.as_bytes());
        for px in self.pixels.chunks_exact(4) {
            out.extend_from_slice(&px[..3]);
        }
        out
    }

    /// Parses binary PPM (P6, maxval 255). Alpha comes back as 255.
    pub fn from_ppm(bytes: &[u8]) -> Result<RasterImage, String> {
        let mut pos = 0usize;
        let mut token = || -> Result<String, String> {
            loop {
                match bytes.get(pos) {
                    None => return Err("truncated ppm header".to_string()),
                    Some(b'#') => {
                        while !matches!(bytes.get(pos), None | Some(b'\n')) {
                            pos += 1;
                        }
                    }
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(_) => break,
                }
            }
            let start = pos;
            while matches!(bytes.get(pos), Some(b) if !b.is_ascii_whitespace()) {
                pos += 1;
            }
            String::from_utf8(bytes[start..pos].to_vec())
                .map_err(|_| "bad ppm header".to_string())
        };

        if token()? != "P6" {
            return Err("not a P6 ppm".to_string());
        }
        let width: u32 = token()?.parse().map_err(|_| "bad ppm width")?;
        let height: u32 = token()?.parse().map_err(|_| "bad ppm height")?;
        let maxval: u32 = token()?.parse().map_err(|_| "bad ppm maxval")?;
        if maxval != 255 {
            return Err(format!("unsupported ppm maxval {maxval}"));
        }
        if width == 0 || height == 0 {
            return Err("empty ppm".to_string());
        }
        pos += 1;
        let need = width as usize * height as usize * 3;
        let body = bytes
            .get(pos..pos + need)
            .ok_or_else(|| "truncated ppm body".to_string())?;
        let mut pixels = Vec::with_capacity(need / 3 * 4);
        for px in body.chunks_exact(3) {
            pixels.extend_from_slice(&[px[0], px[1], px[2], 255]);
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    /// PNG bytes, for humans and external tools. PPM stays the canonical
    /// interchange form because its bytes are fixed by this module alone.
    pub fn to_png(&self) -> Vec<u8> {
        let img: image::RgbaImage =
            image::RgbaImage::from_raw(self.width, self.height, self.pixels.clone())
                .expect("buffer size matches dimensions");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png)
            .expect("png encoding to memory");
        out.into_inner()
    }

    /// Decodes any common image format (PNG in practice), flattening to
    /// opaque RGBA.
    pub fn decode(bytes: &[u8]) -> Result<RasterImage, String> {
        let img = image::load_from_memory(bytes).map_err(|e| e.to_string())?;
        let rgba = img.to_rgba8();
        RasterImage::from_rgba8(rgba.width(), rgba.height(), rgba.into_raw())
    }

    fn wi(&self) -> i64 {
        self.width as i64
    }

    fn hi(&self) -> i64 {
        self.height as i64
    }

    /// Fills the half-open pixel box, clipped to the canvas.
    fn fill_rect_px(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Color) {
        let x0 = x0.max(0);
        let y0 = y0.max(0);
        let x1 = x1.min(self.wi());
        let y1 = y1.min(self.hi());
        if x0 >= x1 || y0 >= y1 {
            return;
        }
        let px = [c.r, c.g, c.b, 255];
        let w = self.width as usize;
        for y in y0..y1 {
            let start = (y as usize * w + x0 as usize) * 4;
            let end = (y as usize * w + x1 as usize) * 4;
            for cell in self.pixels[start..end].chunks_exact_mut(4) {
                cell.copy_from_slice(&px);
            }
        }
    }

    /// Square brush of side `sw` centered on the point, biased up-left
    /// for even widths.
    fn brush(&mut self, x: i64, y: i64, c: Color, sw: u32) {
        let sw = sw as i64;
        let lo = (sw - 1) / 2;
        self.fill_rect_px(x - lo, y - lo, x - lo + sw, y - lo + sw, c);
    }
}

/// The data-to-pixel frame of an axes element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxesView {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl AxesView {
    pub fn from_kind(kind: &ElementKind) -> Option<AxesView> {
        match kind {
            ElementKind::Axes {
                x,
                y,
                w,
                h,
                xmin,
                xmax,
                ymin,
                ymax,
                ..
            } => Some(AxesView {
                x: *x,
                y: *y,
                w: *w,
                h: *h,
                xmin: *xmin,
                xmax: *xmax,
                ymin: *ymin,
                ymax: *ymax,
            }),
            _ => None,
        }
    }
}

/// Maps a data point into pixels: x interpolates left to right, y flips so
/// larger values sit higher on screen.
pub fn map_point(a: &AxesView, x: f64, y: f64) -> (i64, i64) {
    let px = a.x + (x - a.xmin) / (a.xmax - a.xmin) * a.w;
    let py = a.y + (1.0 - (y - a.ymin) / (a.ymax - a.ymin)) * a.h;
    (round_half_up(px), round_half_up(py))
}

/// Samples an expression over the x range of `a` at `n` evenly spaced
/// points and maps the survivors to pixels. Samples that evaluate to a
/// non-finite value or land outside [ymin, ymax] are dropped and split the
/// curve into separate segments.
pub fn sample_plot(a: &AxesView, expr: &Expr, n: u32) -> Vec<Vec<(i64, i64)>> {
    sample_plot_with(a, expr, n, &mut || Ok(()))
        .expect("sampling without a deadline cannot time out")
}

fn sample_plot_with(
    a: &AxesView,
    expr: &Expr,
    n: u32,
    check: &mut dyn FnMut() -> Result<(), RenderTimeout>,
) -> Result<Vec<Vec<(i64, i64)>>, RenderTimeout> {
    let mut segments = Vec::new();
    let mut current: Vec<(i64, i64)> = Vec::new();
    let last = (n - 1) as f64;
    for i in 0..n {
        if i % 256 == 0 {
            check()?;
        }
        let x = a.xmin + (i as f64) * (a.xmax - a.xmin) / last;
        let y = expr.eval(x);
        if !y.is_finite() || y < a.ymin || y > a.ymax {
            if !current.is_empty() {
                segments.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(map_point(a, x, y));
    }
    if !current.is_empty() {
        segments.push(current);
    }
    Ok(segments)
}

/// Renders with no time budget.
pub fn render(program: &ValidatedProgram) -> RasterImage {
    render_with_deadline(program, None).expect("render without a deadline cannot time out")
}

/// Renders, giving up with [`RenderTimeout`] once `deadline` passes.
pub fn render_with_deadline(
    program: &ValidatedProgram,
    deadline: Option<Instant>,
) -> Result<RasterImage, RenderTimeout> {
    let canvas = &program.canvas;
    let mut r = Renderer {
        img: RasterImage::new(canvas.width, canvas.height, canvas.background),
        deadline,
        line_steps: 0,
    };
    r.check()?;
    for el in &program.elements {
        r.check()?;
        r.draw(el, program)?;
    }
    Ok(r.img)
}

/// Coordinates further out than this get a coarse geometric pre-clip so
/// that walking a line stays proportional to the canvas, not the input.
const FAR: i64 = 1 << 20;

struct Renderer {
    img: RasterImage,
    deadline: Option<Instant>,
    line_steps: u32,
}

impl Renderer {
    fn check(&self) -> Result<(), RenderTimeout> {
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                return Err(RenderTimeout);
            }
        }
        Ok(())
    }

    fn draw(&mut self, el: &Element, program: &ValidatedProgram) -> Result<(), RenderTimeout> {
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
                let x0 = round_half_up(*x);
                let y0 = round_half_up(*y);
                let x1 = round_half_up(x + w);
                let y1 = round_half_up(y + h);
                if let Some(c) = fill {
                    self.img.fill_rect_px(x0, y0, x1, y1, *c);
                }
                if let Some(c) = stroke {
                    self.rect_outline(x0, y0, x1, y1, *c, *stroke_width)?;
                }
            }
            ElementKind::Circle {
                cx,
                cy,
                r,
                fill,
                stroke,
                stroke_width,
            } => {
                let cx = round_half_up(*cx);
                let cy = round_half_up(*cy);
                let rr = round_half_up(*r);
                if let Some(c) = fill {
                    self.circle_fill(cx, cy, rr, *c);
                }
                if let Some(c) = stroke {
                    self.circle_outline(cx, cy, rr, *c, *stroke_width);
                }
            }
            ElementKind::Line {
                x1,
                y1,
                x2,
                y2,
                stroke,
                stroke_width,
            } => {
                self.line(
                    round_half_up(*x1),
                    round_half_up(*y1),
                    round_half_up(*x2),
                    round_half_up(*y2),
                    *stroke,
                    *stroke_width,
                )?;
            }
            ElementKind::Polyline {
                points,
                stroke,
                stroke_width,
            } => {
                for pair in points.windows(2) {
                    self.line(
                        round_half_up(pair[0].0),
                        round_half_up(pair[0].1),
                        round_half_up(pair[1].0),
                        round_half_up(pair[1].1),
                        *stroke,
                        *stroke_width,
                    )?;
                }
            }
            ElementKind::Text {
                x,
                y,
                size,
                anchor,
                color,
                content,
            } => {
                self.text(*x, *y, *size, *anchor, *color, content)?;
            }
            ElementKind::Axes {
                x,
                y,
                w,
                h,
                xlabel,
                ylabel,
                ..
            } => {
                let x0 = round_half_up(*x);
                let y0 = round_half_up(*y);
                let x1 = round_half_up(x + w);
                let y1 = round_half_up(y + h);
                self.rect_outline(x0, y0, x1, y1, Color::BLACK, 1)?;
                if let Some(label) = xlabel {
                    self.text(
                        x + w / 2.0,
                        y + h + 12.0,
                        8.0,
                        Anchor::Middle,
                        Color::BLACK,
                        label,
                    )?;
                }
                if let Some(label) = ylabel {
                    self.text(x - 2.0, *y, 8.0, Anchor::End, Color::BLACK, label)?;
                }
            }
            ElementKind::Plot {
                axes_id,
                expr,
                samples,
                stroke,
            } => {
                let a = lookup_axes(program, axes_id);
                let mut check = || self.check_for_sampling();
                let segments = sample_plot_with(&a, expr, *samples, &mut check)?;
                for seg in segments {
                    if seg.len() == 1 {
                        self.img.brush(seg[0].0, seg[0].1, *stroke, 1);
                        continue;
                    }
                    for pair in seg.windows(2) {
                        self.line(pair[0].0, pair[0].1, pair[1].0, pair[1].1, *stroke, 1)?;
                    }
                }
            }
            ElementKind::Bar {
                axes_id,
                xcenter,
                width,
                value,
                fill,
                label,
            } => {
                let a = lookup_axes(program, axes_id);
                let base = 0.0f64.clamp(a.ymin, a.ymax);
                let (px1, py1) = map_point(&a, xcenter - width / 2.0, *value);
                let (px2, py2) = map_point(&a, xcenter + width / 2.0, base);
                let (lo_x, hi_x) = (px1.min(px2), px1.max(px2));
                let (lo_y, hi_y) = (py1.min(py2), py1.max(py2));
                self.img.fill_rect_px(lo_x, lo_y, hi_x + 1, hi_y + 1, *fill);
                if let Some(label) = label {
                    let (cx, _) = map_point(&a, *xcenter, base);
                    self.text(
                        cx as f64,
                        (hi_y + 4) as f64,
                        8.0,
                        Anchor::Middle,
                        Color::BLACK,
                        label,
                    )?;
                }
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
                let top = round_half_up(*y);
                let bottom = round_half_up(y + *rows as f64 * cell_h);
                let left = round_half_up(*x);
                let right = round_half_up(x + *cols as f64 * cell_w);
                for j in 0..=*cols {
                    let px = round_half_up(x + j as f64 * cell_w);
                    self.img.fill_rect_px(px, top, px + 1, bottom + 1, *stroke);
                }
                for i in 0..=*rows {
                    let py = round_half_up(y + i as f64 * cell_h);
                    self.img.fill_rect_px(left, py, right + 1, py + 1, *stroke);
                }
                for cell in cells {
                    self.text(
                        x + cell.col as f64 * cell_w + 2.0,
                        y + cell.row as f64 * cell_h + 2.0,
                        8.0,
                        Anchor::Start,
                        Color::BLACK,
                        &cell.content,
                    )?;
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
                let top = round_half_up(*y);
                let bottom = round_half_up(y + h);
                let left = round_half_up(*x);
                let right = round_half_up(x + w);
                for j in 0..=*nx {
                    let px = round_half_up(x + j as f64 * w / *nx as f64);
                    self.img.fill_rect_px(px, top, px + 1, bottom + 1, *stroke);
                }
                for i in 0..=*ny {
                    let py = round_half_up(y + i as f64 * h / *ny as f64);
                    self.img.fill_rect_px(left, py, right + 1, py + 1, *stroke);
                }
            }
        }
        Ok(())
    }

    fn check_for_sampling(&self) -> Result<(), RenderTimeout> {
        self.check()
    }

    /// One pixel frame on the inclusive box [x0..x1] x [y0..y1], drawn as
    /// four brushed lines. Degenerate boxes collapse to a line or point.
    fn rect_outline(
        &mut self,
        x0: i64,
        y0: i64,
        x1: i64,
        y1: i64,
        c: Color,
        sw: u32,
    ) -> Result<(), RenderTimeout> {
        if x1 < x0 || y1 < y0 {
            return Ok(());
        }
        self.line(x0, y0, x1, y0, c, sw)?;
        self.line(x0, y1, x1, y1, c, sw)?;
        self.line(x0, y0, x0, y1, c, sw)?;
        self.line(x1, y0, x1, y1, c, sw)?;
        Ok(())
    }

    fn circle_fill(&mut self, cx: i64, cy: i64, rr: i64, c: Color) {
        if rr < 0 {
            return;
        }
        let y_lo = (cy - rr).max(0);
        let y_hi = (cy + rr).min(self.img.hi() - 1);
        let rr2 = rr as i128 * rr as i128;
        for py in y_lo..=y_hi {
            let dy = py - cy;
            let dx = isqrt(rr2 - dy as i128 * dy as i128);
            self.img.fill_rect_px(cx - dx, py, cx + dx + 1, py + 1, c);
        }
    }

    /// Circle outline as the row and column extremes of the disc. Bounded
    /// by the canvas perimeter regardless of radius.
    fn circle_outline(&mut self, cx: i64, cy: i64, rr: i64, c: Color, sw: u32) {
        if rr < 0 {
            return;
        }
        let margin = 80i64;
        let rr2 = rr as i128 * rr as i128;
        let y_lo = (cy - rr).max(-margin);
        let y_hi = (cy + rr).min(self.img.hi() + margin);
        for py in y_lo..=y_hi {
            let dy = py - cy;
            let dx = isqrt(rr2 - dy as i128 * dy as i128);
            self.img.brush(cx - dx, py, c, sw);
            self.img.brush(cx + dx, py, c, sw);
        }
        let x_lo = (cx - rr).max(-margin);
        let x_hi = (cx + rr).min(self.img.wi() + margin);
        for px in x_lo..=x_hi {
            let dx = px - cx;
            let dy = isqrt(rr2 - dx as i128 * dx as i128);
            self.img.brush(px, cy - dy, c, sw);
            self.img.brush(px, cy + dy, c, sw);
        }
    }

    /// Bresenham walk with a square brush. Segments with far endpoints are
    /// first clipped to a margin box around the canvas; the walk itself is
    /// then bounded by canvas size.
    fn line(
        &mut self,
        mut x0: i64,
        mut y0: i64,
        mut x1: i64,
        mut y1: i64,
        c: Color,
        sw: u32,
    ) -> Result<(), RenderTimeout> {
        let far = [x0, y0, x1, y1].into_iter().any(|v| v.abs() > FAR);
        if far {
            let margin = 80.0;
            match clip_segment(
                x0 as f64,
                y0 as f64,
                x1 as f64,
                y1 as f64,
                -margin,
                -margin,
                self.img.wi() as f64 + margin,
                self.img.hi() as f64 + margin,
            ) {
                None => return Ok(()),
                Some((ax, ay, bx, by)) => {
                    x0 = round_half_up(ax);
                    y0 = round_half_up(ay);
                    x1 = round_half_up(bx);
                    y1 = round_half_up(by);
                }
            }
        }
        let dx = (x1 - x0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let dy = -(y1 - y0).abs();
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        let (mut x, mut y) = (x0, y0);
        loop {
            self.img.brush(x, y, c, sw);
            if x == x1 && y == y1 {
                return Ok(());
            }
            self.line_steps = self.line_steps.wrapping_add(1);
            if self.line_steps % 65536 == 0 {
                self.check()?;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Glyph-cell text. `y` is the top of the cell row; the scale is
    /// round(size / 8), at least 1. One deadline check per glyph.
    fn text(
        &mut self,
        x: f64,
        y: f64,
        size: f64,
        anchor: Anchor,
        color: Color,
        content: &str,
    ) -> Result<(), RenderTimeout> {
        let scale = round_half_up(size / 8.0).clamp(1, 1 << 20);
        let advance = font::GLYPH_SIZE * scale;
        let count = content.chars().count() as i64;
        let total = advance * count;
        let x0 = round_half_up(x);
        let top = round_half_up(y);
        let mut pen = match anchor {
            Anchor::Start => x0,
            Anchor::Middle => x0 - total / 2,
            Anchor::End => x0 - total,
        };
        for ch in content.chars() {
            self.check()?;
            if pen >= self.img.wi() {
                break;
            }
            if pen + advance <= 0 || top >= self.img.hi() || top + advance <= 0 {
                pen += advance;
                continue;
            }
            let rows = font::glyph(ch);
            for (ry, bits) in rows.iter().enumerate() {
                if *bits == 0 {
                    continue;
                }
                let py = top + ry as i64 * scale;
                for col in 0..8 {
                    if bits & (1 << col) != 0 {
                        let px = pen + col as i64 * scale;
                        self.img
                            .fill_rect_px(px, py, px + scale, py + scale, color);
                    }
                }
            }
            pen += advance;
        }
        Ok(())
    }
}

fn lookup_axes(program: &ValidatedProgram, axes_id: &str) -> AxesView {
    program
        .elements
        .iter()
        .find(|e| e.id == axes_id)
        .and_then(|e| AxesView::from_kind(&e.kind))
        .expect("validation guarantees the axes reference")
}

/// Integer square root, rounding down. Negative inputs yield 0, which the
/// circle routines rely on for the row just past the radius.
fn isqrt(v: i128) -> i64 {
    if v <= 0 {
        return 0;
    }
    let mut guess = (v as f64).sqrt() as i128;
    while guess > 0 && guess * guess > v {
        guess -= 1;
    }
    while (guess + 1) * (guess + 1) <= v {
        guess += 1;
    }
    guess as i64
}

/// Liang-Barsky style parametric clip of a segment to a box. Returns the
/// clipped endpoints or None when the segment misses the box entirely.
#[allow(clippy::too_many_arguments)]
fn clip_segment(
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
) -> Option<(f64, f64, f64, f64)> {
    let dx = x1 - x0;
    let dy = y1 - y0;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-dx, x0 - xmin),
        (dx, xmax - x0),
        (-dy, y0 - ymin),
        (dy, ymax - y0),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
            continue;
        }
        let r = q / p;
        if p < 0.0 {
            if r > t1 {
                return None;
            }
            if r > t0 {
                t0 = r;
            }
        } else {
            if r < t0 {
                return None;
            }
            if r < t1 {
                t1 = r;
            }
        }
    }
    Some((x0 + t0 * dx, y0 + t0 * dy, x0 + t1 * dx, y0 + t1 * dy))
}
