//! Canonical text form for the numbers that appear in DraftScript source.
//!
//! Every numeric literal is snapped to a canonical value when parsed, so a
//! program, its formatted text and any answer derived from it all agree on
//! one spelling per value.
//!
//! The canonical grid is six fractional digits. That snap is only a fixed
//! point while half an ulp stays below half the 1e-6 grid step, which holds
//! for |v| < 2^32. Larger magnitudes snap to whole numbers instead, where
//! doubles are either exact or denser than the grid.

const SIX_DIGIT_LIMIT: f64 = 4294967296.0;

/// Snaps a finite value to its canonical spelling's exact value. Non-finite
/// inputs pass through; callers reject those separately.
pub fn canon_number(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format_number(v).parse().unwrap_or(v)
}

/// Renders a value the way the formatter and the QA engine spell it:
/// integers bare, otherwise up to six fractional digits with trailing zeros
/// trimmed, and negative zero collapsed to `0`.
pub fn format_number(v: f64) -> String {
    let mut s = if v.abs() < SIX_DIGIT_LIMIT {
        format!("{:.6}", v)
    } else {
        format!("{:.0}", v)
    };
    if let Some(dot) = s.find('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.len() == dot + 1 {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
