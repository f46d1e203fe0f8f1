//! Static checks between parsing and rendering.
//!
//! Two failure families: [`ValidationError`] for programs that are wrong in
//! themselves (duplicate ids, empty ranges, impossible geometry) and
//! [`LimitExceeded`] for programs that are merely too big for the
//! configured [`Limits`]. Raising limits never turns a valid program
//! invalid; every check here compares against a cap from one side only.
//!
//! A [`ValidatedProgram`] is the proof the rasterizer demands: it can only
//! be produced here, so `render` never sees an unchecked scene.

use std::collections::HashSet;
use std::fmt;
use std::ops::Deref;

use crate::limits::Limits;
use crate::scene::{ElementKind, SceneProgram};

/// The program is wrong regardless of configured limits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    /// Offending element id; `None` means the canvas.
    pub element: Option<String>,
    /// Position of the offending element, for source line lookup.
    pub index: Option<usize>,
    pub rule: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.element {
            Some(id) => write!(f, "element '{id}': {}", self.rule),
            None => write!(f, "canvas: {}", self.rule),
        }
    }
}

impl std::error::Error for ValidationError {}

/// The program oversteps one configured resource cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitExceeded {
    pub limit: &'static str,
    pub cap: u64,
    pub actual: u64,
}

impl fmt::Display for LimitExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} exceeds cap {}", self.limit, self.actual, self.cap)
    }
}

impl std::error::Error for LimitExceeded {}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidateError {
    Invalid(ValidationError),
    Limit(LimitExceeded),
}

impl fmt::Display for ValidateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidateError::Invalid(e) => e.fmt(f),
            ValidateError::Limit(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for ValidateError {}

/// A scene that passed validation. The only way to get one is
/// [`validate`], which is what lets the rasterizer skip re-checking.
#[derive(Debug, Clone)]
pub struct ValidatedProgram(SceneProgram);

impl ValidatedProgram {
    pub fn program(&self) -> &SceneProgram {
        &self.0
    }

    pub fn into_inner(self) -> SceneProgram {
        self.0
    }

    /// Wraps a program that [`check_program`] has already cleared, so
    /// callers that validate by reference can avoid a second pass.
    pub fn assume_checked(program: SceneProgram) -> ValidatedProgram {
        ValidatedProgram(program)
    }
}

impl Deref for ValidatedProgram {
    type Target = SceneProgram;

    fn deref(&self) -> &SceneProgram {
        &self.0
    }
}

fn invalid(
    element: Option<&str>,
    index: Option<usize>,
    rule: impl Into<String>,
) -> ValidateError {
    ValidateError::Invalid(ValidationError {
        element: element.map(str::to_string),
        index,
        rule: rule.into(),
    })
}

fn limit(name: &'static str, cap: u64, actual: u64) -> ValidateError {
    ValidateError::Limit(LimitExceeded {
        limit: name,
        cap,
        actual,
    })
}

/// Checks the program against language rules and `limits`. Errors report
/// the first offense in document order, statement budget first.
pub fn validate(
    program: SceneProgram,
    limits: &Limits,
) -> Result<ValidatedProgram, ValidateError> {
    check_program(&program, limits)?;
    Ok(ValidatedProgram(program))
}

/// The borrowing body of [`validate`], usable when the caller wants to
/// keep the program on failure.
pub fn check_program(program: &SceneProgram, limits: &Limits) -> Result<(), ValidateError> {
    let statements: usize = 1
        + program.elements.len()
        + program
            .elements
            .iter()
            .map(|e| match &e.kind {
                ElementKind::Table { cells, .. } => cells.len(),
                _ => 0,
            })
            .sum::<usize>();
    if statements > limits.max_statements {
        return Err(limit(
            "max_statements",
            limits.max_statements as u64,
            statements as u64,
        ));
    }

    let canvas = &program.canvas;
    for (side, v) in [("width", canvas.width), ("height", canvas.height)] {
        if v < 16 {
            return Err(invalid(None, None, format!("{side} must be at least 16")));
        }
        if v > limits.max_canvas_dim {
            return Err(limit("max_canvas_dim", limits.max_canvas_dim as u64, v as u64));
        }
    }

    let mut seen: HashSet<&str> = HashSet::new();
    let mut axes_ids: HashSet<&str> = HashSet::new();

    for (idx, el) in program.elements.iter().enumerate() {
        let id = el.id.as_str();
        let at = Some(idx);
        if !seen.insert(id) {
            return Err(invalid(Some(id), at, "duplicate id"));
        }

        let string_cap = |s: &str| -> Result<(), ValidateError> {
            let n = s.chars().count();
            if n > limits.max_string_chars {
                return Err(limit(
                    "max_string_chars",
                    limits.max_string_chars as u64,
                    n as u64,
                ));
            }
            Ok(())
        };
        let positive = |name: &str, v: f64| -> Result<(), ValidateError> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(invalid(Some(id), at, format!("{name} must be positive")))
            }
        };
        let sw_range = |sw: u32| -> Result<(), ValidateError> {
            if (1..=64).contains(&sw) {
                Ok(())
            } else {
                Err(invalid(Some(id), at, "sw must be between 1 and 64"))
            }
        };
        let axes_ref = |axes_id: &str| -> Result<(), ValidateError> {
            if axes_ids.contains(axes_id) {
                Ok(())
            } else {
                Err(invalid(Some(id), at, format!("unknown axes id '{axes_id}'")))
            }
        };

        match &el.kind {
            ElementKind::Rect {
                w, h, stroke_width, ..
            } => {
                positive("w", *w)?;
                positive("h", *h)?;
                sw_range(*stroke_width)?;
            }
            ElementKind::Circle {
                r, stroke_width, ..
            } => {
                positive("r", *r)?;
                sw_range(*stroke_width)?;
            }
            ElementKind::Line { stroke_width, .. } => {
                sw_range(*stroke_width)?;
            }
            ElementKind::Polyline { stroke_width, .. } => {
                sw_range(*stroke_width)?;
            }
            ElementKind::Text { content, .. } => {
                string_cap(content)?;
            }
            ElementKind::Axes {
                w,
                h,
                xmin,
                xmax,
                ymin,
                ymax,
                xlabel,
                ylabel,
                ..
            } => {
                positive("w", *w)?;
                positive("h", *h)?;
                if !(xmin < xmax) {
                    return Err(invalid(Some(id), at, "xmin must be less than xmax"));
                }
                if !(ymin < ymax) {
                    return Err(invalid(Some(id), at, "ymin must be less than ymax"));
                }
                for label in [xlabel, ylabel].into_iter().flatten() {
                    string_cap(label)?;
                }
                axes_ids.insert(id);
            }
            ElementKind::Plot {
                axes_id,
                expr,
                samples,
                ..
            } => {
                axes_ref(axes_id)?;
                if *samples < 2 {
                    return Err(invalid(Some(id), at, "samples must be at least 2"));
                }
                if *samples > limits.max_plot_samples {
                    return Err(limit(
                        "max_plot_samples",
                        limits.max_plot_samples as u64,
                        *samples as u64,
                    ));
                }
                let depth = expr.depth();
                if depth > limits.max_expr_depth {
                    return Err(limit(
                        "max_expr_depth",
                        limits.max_expr_depth as u64,
                        depth as u64,
                    ));
                }
            }
            ElementKind::Bar {
                axes_id,
                width,
                label,
                ..
            } => {
                axes_ref(axes_id)?;
                positive("width", *width)?;
                if let Some(label) = label {
                    string_cap(label)?;
                }
            }
            ElementKind::Table {
                rows,
                cols,
                cell_w,
                cell_h,
                cells,
                ..
            } => {
                if *rows == 0 {
                    return Err(invalid(Some(id), at, "rows must be positive"));
                }
                if *cols == 0 {
                    return Err(invalid(Some(id), at, "cols must be positive"));
                }
                positive("cellw", *cell_w)?;
                positive("cellh", *cell_h)?;
                for cell in cells {
                    if cell.row >= *rows || cell.col >= *cols {
                        return Err(invalid(
                            Some(id),
                            at,
                            format!(
                                "cell ({},{}) outside a {}x{} table",
                                cell.row, cell.col, rows, cols
                            ),
                        ));
                    }
                    string_cap(&cell.content)?;
                }
            }
            ElementKind::Grid { w, h, nx, ny, .. } => {
                positive("w", *w)?;
                positive("h", *h)?;
                if *nx == 0 {
                    return Err(invalid(Some(id), at, "nx must be positive"));
                }
                if *ny == 0 {
                    return Err(invalid(Some(id), at, "ny must be positive"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn validated(src: &str) -> Result<ValidatedProgram, ValidateError> {
        validate(parse(src).expect("test source must parse"), &Limits::default())
    }

    fn rule_of(r: Result<ValidatedProgram, ValidateError>) -> String {
        match r {
            Err(ValidateError::Invalid(e)) => e.rule,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    fn limit_of(r: Result<ValidatedProgram, ValidateError>) -> &'static str {
        match r {
            Err(ValidateError::Limit(e)) => e.limit,
            other => panic!("expected a limit error, got {other:?}"),
        }
    }

    #[test]
    fn canvas_bounds() {
        assert!(validated("canvas 16 16").is_ok());
        assert!(validated("canvas 4096 4096").is_ok());
        assert!(rule_of(validated("canvas 15 100")).contains("at least 16"));
        assert_eq!(limit_of(validated("canvas 4097 100")), "max_canvas_dim");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = validated("canvas 100 100\nrect a 0 0 5 5\ncircle a 10 10 3");
        assert_eq!(rule_of(r), "duplicate id");
    }

    #[test]
    fn magnitudes_must_be_positive() {
        assert!(rule_of(validated("canvas 100 100\nrect r 0 0 0 5")).contains("w must"));
        assert!(rule_of(validated("canvas 100 100\nrect r 0 0 5 -1")).contains("h must"));
        assert!(rule_of(validated("canvas 100 100\ncircle c 0 0 0")).contains("r must"));
        assert!(
            rule_of(validated("canvas 100 100\ntable t 0 0 2 0 10 10")).contains("cols")
        );
        assert!(
            rule_of(validated("canvas 100 100\ngrid g 0 0 50 50 0 2")).contains("nx")
        );
    }

    #[test]
    fn stroke_width_range() {
        assert!(validated("canvas 100 100\nline l 0 0 9 9 sw=64").is_ok());
        assert!(rule_of(validated("canvas 100 100\nline l 0 0 9 9 sw=0")).contains("sw"));
        assert!(rule_of(validated("canvas 100 100\nline l 0 0 9 9 sw=65")).contains("sw"));
    }

    #[test]
    fn axes_ranges_must_be_ordered() {
        assert!(
            rule_of(validated("canvas 100 100\naxes a 0 0 50 50 1 1 0 1")).contains("xmin")
        );
        assert!(
            rule_of(validated("canvas 100 100\naxes a 0 0 50 50 0 1 2 1")).contains("ymin")
        );
    }

    #[test]
    fn plot_needs_an_earlier_axes() {
        let r = validated("canvas 100 100\nplot p a \"x\"\naxes a 0 0 50 50 0 1 0 1");
        assert!(rule_of(r).contains("unknown axes id 'a'"));
        let r = validated("canvas 100 100\nrect a 0 0 5 5\nbar b a 0.5 0.2 3");
        assert!(rule_of(r).contains("unknown axes id"));
    }

    #[test]
    fn plot_sample_bounds() {
        let base = "canvas 100 100\naxes a 0 0 50 50 0 1 0 1\n";
        assert!(validated(&format!("{base}plot p a \"x\" samples=2")).is_ok());
        assert!(
            rule_of(validated(&format!("{base}plot p a \"x\" samples=1")))
                .contains("samples")
        );
        assert_eq!(
            limit_of(validated(&format!("{base}plot p a \"x\" samples=4097"))),
            "max_plot_samples"
        );
    }

    #[test]
    fn expression_depth_cap() {
        let deep = format!("((((((((((((((((x{}", ")".repeat(16));
        let base = "canvas 100 100\naxes a 0 0 50 50 0 1 0 1\n";
        assert!(validated(&format!("{base}plot p a \"{deep}\"")).is_ok());

        let mut e = "x".to_string();
        for _ in 0..70 {
            e = format!("sin({e})");
        }
        assert_eq!(
            limit_of(validated(&format!("{base}plot p a \"{e}\""))),
            "max_expr_depth"
        );
    }

    #[test]
    fn string_length_cap() {
        let long = "a".repeat(1025);
        assert_eq!(
            limit_of(validated(&format!(
                "canvas 100 100\ntext t 0 0 8 start #000000 \"{long}\""
            ))),
            "max_string_chars"
        );
        let edge = "b".repeat(1024);
        assert!(validated(&format!(
            "canvas 100 100\ntext t 0 0 8 start #000000 \"{edge}\""
        ))
        .is_ok());
    }

    #[test]
    fn string_cap_counts_chars_not_bytes() {
        let long = "春".repeat(1024);
        assert!(validated(&format!(
            "canvas 100 100\ntext t 0 0 8 start #000000 \"{long}\""
        ))
        .is_ok());
    }

    #[test]
    fn cell_bounds_checked() {
        let r = validated("canvas 100 100\ntable t 0 0 2 2 10 10\ncell t 2 0 \"x\"");
        assert!(rule_of(r).contains("outside"));
    }

    #[test]
    fn statement_budget_counts_cells_and_canvas() {
        let mut src = String::from("canvas 100 100\ntable t 0 0 100 100 1 1\n");
        for i in 0..9998 {
            src.push_str(&format!("cell t {} {} \"v\"\n", i / 100, i % 100));
        }
        assert!(validated(&src).is_ok());
        src.push_str("cell t 99 99 \"one too many\"\n");
        let e = match validate(parse(&src).unwrap(), &Limits::default()) {
            Err(ValidateError::Limit(e)) => e,
            other => panic!("expected limit error, got {other:?}"),
        };
        assert_eq!(e.limit, "max_statements");
        assert_eq!(e.actual, 10_001);
    }

    #[test]
    fn raising_limits_never_invalidates() {
        let src = "canvas 100 100\naxes a 0 0 50 50 0 1 0 1\nplot p a \"sin(x)\" samples=100";
        let p = parse(src).unwrap();
        assert!(check_program(&p, &Limits::default()).is_ok());
        let roomy = Limits {
            max_statements: 1_000_000,
            max_string_chars: 1 << 16,
            max_canvas_dim: 1 << 14,
            max_plot_samples: 1 << 16,
            max_expr_depth: 256,
            ..Limits::default()
        };
        assert!(check_program(&p, &roomy).is_ok());
    }

    #[test]
    fn error_reports_element_index() {
        let src = "canvas 100 100\nrect ok 0 0 5 5\nrect bad 0 0 0 5";
        match validate(parse(src).unwrap(), &Limits::default()) {
            Err(ValidateError::Invalid(e)) => {
                assert_eq!(e.element.as_deref(), Some("bad"));
                assert_eq!(e.index, Some(1));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn revalidation_is_stable() {
        let src = "canvas 100 100\nrect r 0 0 5 5";
        let vp = validated(src).unwrap();
        let again = validate(vp.into_inner(), &Limits::default());
        assert!(again.is_ok());
    }
}
