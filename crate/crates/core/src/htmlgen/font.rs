//! 3x5 bitmap glyphs for tick labels.

/// Rows top to bottom, bit 2 is the leftmost pixel.
fn glyph(c: char) -> Option<[u8; 5]> {
    Some(match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        _ => return None,
    })
}

pub const SCALE: u32 = 2;
pub const ADVANCE: u32 = 4 * SCALE;
pub const HEIGHT: u32 = 5 * SCALE;

pub fn text_width(text: &str) -> u32 {
    (text.chars().count() as u32 * ADVANCE).saturating_sub(SCALE)
}

/// Pixels covered by `text` with its top-left corner at `(x, y)`.
pub fn pixels(text: &str, x: i64, y: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for (k, c) in text.chars().enumerate() {
        let Some(rows) = glyph(c) else { continue };
        let gx = x + (k as u32 * ADVANCE) as i64;
        for (r, bits) in rows.iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    for dy in 0..SCALE as i64 {
                        for dx in 0..SCALE as i64 {
                            out.push((gx + col * SCALE as i64 + dx, y + r as i64 * SCALE as i64 + dy));
                        }
                    }
                }
            }
        }
    }
    out
}
