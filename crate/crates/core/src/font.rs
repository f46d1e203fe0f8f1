//! Glyph data for the rasterizer's fixed-cell text.
//!
//! Every glyph is an 8x8 bitmap: eight rows top to bottom, least
//! significant bit leftmost. Printable ASCII comes from the public domain
//! font8x8 set; every other code point renders as a hollow box so that
//! non-Latin text still occupies its cells and the output stays platform
//! independent.

use font8x8::legacy::BASIC_LEGACY;

/// Side of the glyph cell in pixels before scaling.
pub const GLYPH_SIZE: i64 = 8;

/// Stand-in for code points outside printable ASCII.
pub const BOX_GLYPH: [u8; 8] = [0xff, 0x81, 0x81, 0x81, 0x81, 0x81, 0x81, 0xff];

/// Rows for one code point. Total: any `char` yields a drawable bitmap.
pub fn glyph(c: char) -> [u8; 8] {
    let cp = c as u32;
    if (0x20..=0x7e).contains(&cp) {
        BASIC_LEGACY[cp as usize]
    } else {
        BOX_GLYPH
    }
}
