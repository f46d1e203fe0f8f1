//! Seeded random generator of valid programs. Feeds the round-trip
//! property, golden-corpus rendering and QA oracle checks with inputs far
//! stranger than the prompt templates produce, while staying inside every
//! validator rule by construction.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::expr::{BinOp, Expr, Func};
use crate::numfmt::{canon_number, format_number};

const FUNCS: [Func; 9] = [
    Func::Sin,
    Func::Cos,
    Func::Tan,
    Func::Sqrt,
    Func::Exp,
    Func::Log,
    Func::Abs,
    Func::Floor,
    Func::Ceil,
];

const OPS: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow];

const WORDS: [&str; 18] = [
    "alpha", "energy", "total", "Q3", "draft", "émission", "租税", "mix", "offset", "beat",
    "NORTH", "µ-wave", "cells", "поле", "seven", "glyph", "Ωmega", "tide",
];

/// Random expression tree of bounded height. Literals are canonical and
/// non-negative, matching what the expression parser itself produces.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, max_depth: u32) -> Expr {
    if max_depth <= 1 || rng.random_bool(0.3) {
        return if rng.random_bool(0.4) {
            Expr::Var
        } else {
            let v = canon_number(rng.random_range(0..400) as f64 / 8.0);
            Expr::Num(v)
        };
    }
    match rng.random_range(0..8) {
        0 | 1 | 2 => Expr::Bin(
            *OPS.choose(rng).expect("ops"),
            Box::new(random_expr(rng, max_depth - 1)),
            Box::new(random_expr(rng, max_depth - 1)),
        ),
        3 | 4 => Expr::Call(
            *FUNCS.choose(rng).expect("funcs"),
            Box::new(random_expr(rng, max_depth - 1)),
        ),
        5 => Expr::Neg(Box::new(random_expr(rng, max_depth - 1))),
        _ => {
            if rng.random_bool(0.5) {
                Expr::Var
            } else {
                Expr::Num(canon_number(rng.random_range(0..100) as f64))
            }
        }
    }
}

struct Gen<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    next_id: u32,
    axes: Vec<String>,
    tables: Vec<(String, u32, u32)>,
    out: String,
}

impl<'a, R: Rng + ?Sized> Gen<'a, R> {
    fn id(&mut self, prefix: &str) -> String {
        self.next_id += 1;
        format!("{prefix}{}", self.next_id)
    }

    fn num(&mut self, lo: f64, hi: f64) -> String {
        let v = self.rng.random_range(lo..=hi);
        let v = (v * 4.0).round() / 4.0;
        format_number(v)
    }

    fn coord(&mut self) -> String {
        self.num(-64.0, 600.0)
    }

    fn magnitude(&mut self) -> String {
        self.num(0.25, 300.0)
    }

    fn color(&mut self) -> String {
        format!("#{:06x}", self.rng.random_range(0u32..0x1000000))
    }

    fn stroke_width(&mut self) -> u32 {
        if self.rng.random_bool(0.8) {
            self.rng.random_range(1..=8)
        } else {
            self.rng.random_range(1..=64)
        }
    }

    fn paint_attrs(&mut self, fillable: bool) -> String {
        let mut s = String::new();
        if fillable && self.rng.random_bool(0.6) {
            s.push_str(&format!(" fill={}", self.color()));
        }
        if self.rng.random_bool(0.6) {
            s.push_str(&format!(" stroke={}", self.color()));
        }
        if self.rng.random_bool(0.4) {
            s.push_str(&format!(" sw={}", self.stroke_width()));
        }
        s
    }

    fn string(&mut self, max_words: usize) -> String {
        let n = self.rng.random_range(1..=max_words);
        let mut parts = Vec::with_capacity(n);
        for _ in 0..n {
            parts.push((*WORDS.choose(self.rng).expect("words")).to_string());
        }
        let mut s = parts.join(" ");
        if self.rng.random_bool(0.15) {
            let extra = ['"', '\\', '\n', '\t'];
            s.push(*extra.choose(self.rng).expect("extras"));
            s.push('x');
        }
        s
    }

    fn quoted(&mut self, max_words: usize) -> String {
        let raw = self.string(max_words);
        let mut s = String::with_capacity(raw.len() + 2);
        s.push('"');
        for c in raw.chars() {
            match c {
                '"' => s.push_str("\\\""),
                '\\' => s.push_str("\\\\"),
                '\n' => s.push_str("\\n"),
                c => s.push(c),
            }
        }
        s.push('"');
        s
    }

    fn line(&mut self, text: String) {
        self.out.push_str(&text);
        self.out.push('\n');
    }

    fn emit_statement(&mut self) {
        let can_plot = !self.axes.is_empty();
        let can_cell = !self.tables.is_empty();
        loop {
            match self.rng.random_range(0..12) {
                0 => {
                    let id = self.id("r");
                    let (x, y) = (self.coord(), self.coord());
                    let (w, h) = (self.magnitude(), self.magnitude());
                    let attrs = self.paint_attrs(true);
                    self.line(format!("rect {id} {x} {y} {w} {h}{attrs}"));
                }
                1 => {
                    let id = self.id("c");
                    let (cx, cy) = (self.coord(), self.coord());
                    let r = self.num(0.25, 120.0);
                    let attrs = self.paint_attrs(true);
                    self.line(format!("circle {id} {cx} {cy} {r}{attrs}"));
                }
                2 => {
                    let id = self.id("l");
                    let pts = [self.coord(), self.coord(), self.coord(), self.coord()];
                    let attrs = self.paint_attrs(false);
                    self.line(format!(
                        "line {id} {} {} {} {}{attrs}",
                        pts[0], pts[1], pts[2], pts[3]
                    ));
                }
                3 => {
                    let id = self.id("pl");
                    let n = self.rng.random_range(2..=6);
                    let mut pts = Vec::with_capacity(n * 2);
                    for _ in 0..n * 2 {
                        pts.push(self.coord());
                    }
                    let attrs = self.paint_attrs(false);
                    self.line(format!("polyline {id} {}{attrs}", pts.join(" ")));
                }
                4 => {
                    let id = self.id("t");
                    let (x, y) = (self.coord(), self.coord());
                    let size = self.num(1.0, 40.0);
                    let anchor = ["start", "middle", "end"]
                        .choose(self.rng)
                        .expect("anchors");
                    let color = self.color();
                    let text = self.quoted(4);
                    self.line(format!("text {id} {x} {y} {size} {anchor} {color} {text}"));
                }
                5 => {
                    let id = self.id("ax");
                    let (x, y) = (self.coord(), self.coord());
                    let (w, h) = (self.magnitude(), self.magnitude());
                    let x0 = self.num(-50.0, 50.0);
                    let x1 = format_number(x0.parse::<f64>().expect("num") + 1.0
                        + self.rng.random_range(0.0..40.0f64).floor());
                    let y0 = self.num(-50.0, 50.0);
                    let y1 = format_number(y0.parse::<f64>().expect("num") + 1.0
                        + self.rng.random_range(0.0..40.0f64).floor());
                    let mut stmt =
                        format!("axes {id} {x} {y} {w} {h} {x0} {x1} {y0} {y1}");
                    if self.rng.random_bool(0.5) {
                        stmt.push_str(&format!(" xlabel={}", self.quoted(2)));
                    }
                    if self.rng.random_bool(0.5) {
                        stmt.push_str(&format!(" ylabel={}", self.quoted(2)));
                    }
                    self.axes.push(id);
                    self.line(stmt);
                }
                6 if can_plot => {
                    let id = self.id("p");
                    let axes = self.axes.choose(self.rng).expect("axes").clone();
                    let expr = random_expr(self.rng, 5);
                    let mut stmt = format!("plot {id} {axes} \"{expr}\"");
                    if self.rng.random_bool(0.5) {
                        stmt.push_str(&format!(
                            " samples={}",
                            self.rng.random_range(2..=1024)
                        ));
                    }
                    if self.rng.random_bool(0.5) {
                        stmt.push_str(&format!(" stroke={}", self.color()));
                    }
                    self.line(stmt);
                }
                7 if can_plot => {
                    let id = self.id("b");
                    let axes = self.axes.choose(self.rng).expect("axes").clone();
                    let xc = self.num(-50.0, 90.0);
                    let w = self.num(0.25, 10.0);
                    let v = self.num(-40.0, 40.0);
                    let mut stmt = format!("bar {id} {axes} {xc} {w} {v}");
                    if self.rng.random_bool(0.6) {
                        stmt.push_str(&format!(" fill={}", self.color()));
                    }
                    if self.rng.random_bool(0.6) {
                        stmt.push_str(&format!(" label={}", self.quoted(1)));
                    }
                    self.line(stmt);
                }
                8 => {
                    let id = self.id("tb");
                    let (x, y) = (self.coord(), self.coord());
                    let rows = self.rng.random_range(1..=6);
                    let cols = self.rng.random_range(1..=6);
                    let cw = self.num(4.0, 90.0);
                    let ch = self.num(4.0, 40.0);
                    let mut stmt = format!("table {id} {x} {y} {rows} {cols} {cw} {ch}");
                    if self.rng.random_bool(0.4) {
                        stmt.push_str(&format!(" stroke={}", self.color()));
                    }
                    self.tables.push((id, rows, cols));
                    self.line(stmt);
                }
                9 if can_cell => {
                    let (table, rows, cols) =
                        self.tables.choose(self.rng).expect("tables").clone();
                    let r = self.rng.random_range(0..rows);
                    let c = self.rng.random_range(0..cols);
                    let text = self.quoted(2);
                    self.line(format!("cell {table} {r} {c} {text}"));
                }
                10 => {
                    let id = self.id("g");
                    let (x, y) = (self.coord(), self.coord());
                    let (w, h) = (self.magnitude(), self.magnitude());
                    let nx = self.rng.random_range(1..=12);
                    let ny = self.rng.random_range(1..=12);
                    let mut stmt = format!("grid {id} {x} {y} {w} {h} {nx} {ny}");
                    if self.rng.random_bool(0.4) {
                        stmt.push_str(&format!(" stroke={}", self.color()));
                    }
                    self.line(stmt);
                }
                11 => {
                    if self.rng.random_bool(0.5) {
                        let note = self.string(3).replace('\n', " ");
                        self.line(format!("# {note}"));
                        continue;
                    }
                    self.line(String::new());
                    continue;
                }
                _ => continue,
            }
            return;
        }
    }
}

/// One valid program with at most `max_statements` statements after the
/// canvas line. Rendering cost is kept modest: canvases up to 512 square,
/// plots up to 1024 samples.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, max_statements: usize) -> String {
    let mut gen = Gen {
        rng,
        next_id: 0,
        axes: Vec::new(),
        tables: Vec::new(),
        out: String::new(),
    };
    let w = gen.rng.random_range(16..=512u32);
    let h = gen.rng.random_range(16..=512u32);
    if gen.rng.random_bool(0.4) {
        let bg = gen.color();
        gen.line(format!("canvas {w} {h} bg={bg}"));
    } else {
        gen.line(format!("canvas {w} {h}"));
    }
    let n = gen.rng.random_range(0..=max_statements);
    for _ in 0..n {
        gen.emit_statement();
    }
    gen.out
}

/// Deterministic corpus: `n` programs from one seed.
pub fn random_corpus(seed: u64, n: usize, max_statements: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| random_program(&mut rng, max_statements))
        .collect()
}
