//! Resource budgets enforced on untrusted programs.
//!
//! Validation applies the static caps, the rasterizer honors the wall
//! clock budget. The defaults accept any program a well-behaved generator
//! produces while keeping a hostile one cheap to reject.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Source size ceiling in bytes, checked before parsing.
    pub max_source_bytes: usize,
    /// Statement ceiling, counting the canvas line and every cell.
    pub max_statements: usize,
    /// Per-string ceiling in Unicode scalar values.
    pub max_string_chars: usize,
    /// Widest canvas edge allowed, in pixels.
    pub max_canvas_dim: u32,
    /// Sample ceiling for one plot statement.
    pub max_plot_samples: u32,
    /// Expression tree height ceiling.
    pub max_expr_depth: u32,
    /// Rendering budget. Exceeding it aborts the render, not the process.
    pub wall_timeout_ms: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_source_bytes: 1 << 20,
            max_statements: 10_000,
            max_string_chars: 1024,
            max_canvas_dim: 4096,
            max_plot_samples: 4096,
            max_expr_depth: 64,
            wall_timeout_ms: 2000,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_hold_the_documented_values() {
        let l = Limits::default();
        assert_eq!(l.max_source_bytes, 1_048_576);
        assert_eq!(l.max_statements, 10_000);
        assert_eq!(l.max_string_chars, 1024);
        assert_eq!(l.max_canvas_dim, 4096);
        assert_eq!(l.max_plot_samples, 4096);
        assert_eq!(l.max_expr_depth, 64);
        assert_eq!(l.wall_timeout_ms, 2000);
    }

    #[test]
    fn partial_json_overrides_fill_from_defaults() {
        let l: Limits = serde_json::from_str(r#"{"max_statements": 50}"#).unwrap();
        assert_eq!(l.max_statements, 50);
        assert_eq!(l.max_canvas_dim, 4096);
    }
}
