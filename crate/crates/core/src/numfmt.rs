//! Canonical number formatting and decimal rounding shared by every text
//! producer in the crate (CLOZE strings, interpolation, tables).

/// Significant digits kept by [`format_number`].
pub const MAX_SIGNIFICANT_DIGITS: usize = 12;

/// Fixed-point rendering with at most 12 significant digits, no exponent,
/// no thousands separators and no trailing zeros. `-0` prints as `0`.
pub fn format_number(x: f64) -> String {
    format_significant(x, MAX_SIGNIFICANT_DIGITS)
}

/// Like [`format_number`] with a caller-chosen number of significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".to_string()
        } else if x > 0.0 {
            "Inf".to_string()
        } else {
            "-Inf".to_string()
        };
    }
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    // `{:.Ne}` gives a correctly rounded mantissa of N+1 significant digits.
    let sci = format!("{:.*e}", digits - 1, x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let raw: String = mantissa.chars().filter(|c| *c != '.').collect();
    let raw = raw.trim_end_matches('0');
    let raw = if raw.is_empty() { "0" } else { raw };
    let point = exp + 1; // position of the decimal point relative to raw digits
    let mut out = String::new();
    if x < 0.0 {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(raw);
    } else {
        let point = point as usize;
        if raw.len() <= point {
            out.push_str(raw);
            for _ in raw.len()..point {
                out.push('0');
            }
        } else {
            out.push_str(&raw[..point]);
            out.push('.');
            out.push_str(&raw[point..]);
        }
    }
    out
}

/// Round to `digits` decimal places, halves away from zero. Negative `digits`
/// rounds to tens, hundreds, ...
///
/// Rounding works on the shortest decimal form of `x`, so literals such as
/// `2.675` round the way they read rather than the way their binary
/// approximation falls.
pub fn round_half_away(x: f64, digits: i32) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let digits = digits.clamp(-300, 300);
    let out = round_decimal(x, digits).unwrap_or_else(|| round_binary(x, digits));
    if out == 0.0 {
        0.0
    } else {
        out
    }
}

fn round_decimal(x: f64, digits: i32) -> Option<f64> {
    use rust_decimal::{Decimal, RoundingStrategy};
    let d = Decimal::from_str_exact(&x.to_string()).ok()?;
    let rounded = if digits >= 0 {
        if digits as u32 >= d.scale() {
            return Some(x);
        }
        d.round_dp_with_strategy(digits as u32, RoundingStrategy::MidpointAwayFromZero)
    } else {
        let p = Decimal::from_i128_with_scale(10i128.checked_pow(digits.unsigned_abs())?, 0);
        d.checked_div(p)?.round_dp_with_strategy(0, RoundingStrategy::MidpointAwayFromZero).checked_mul(p)?
    };
    rounded.to_string().parse().ok()
}

/// Fallback for magnitudes outside the decimal type's range.
fn round_binary(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits.abs());
    let scaled = if digits >= 0 { x * scale } else { x / scale };
    if !scaled.is_finite() || scaled.abs() >= 4.5e15 {
        return x;
    }
    let floor = scaled.abs().floor();
    let frac = scaled.abs() - floor;
    let near_half = (frac - 0.5).abs() <= 4.0 * f64::EPSILON * scaled.abs().max(1.0);
    let magnitude = if near_half || frac > 0.5 { floor + 1.0 } else { floor };
    let rounded = magnitude.copysign(x);
    if digits >= 0 {
        rounded / scale
    } else {
        rounded * scale
    }
}

/// Round to `digits` significant digits (R's `signif`).
pub fn signif(x: f64, digits: i32) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let digits = digits.max(1);
    let magnitude = x.abs().log10().floor() as i32;
    round_half_away(x, digits - 1 - magnitude)
}

/// Parse a plain decimal literal as a student or a copied table would write
/// it: optional sign, digits with an optional `.` fraction, optional exponent.
/// Rejects `inf`, `nan`, hex, `,` decimals and embedded whitespace.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let body = t.strip_prefix(['+', '-']).unwrap_or(t);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let mut digits = 0;
    let mut dots = 0;
    for c in mantissa.chars() {
        match c {
            '0'..='9' => digits += 1,
            '.' => dots += 1,
            _ => return None,
        }
    }
    if digits == 0 || dots > 1 {
        return None;
    }
    if let Some(e) = exponent {
        let e = e.strip_prefix(['+', '-']).unwrap_or(e);
        if e.is_empty() || !e.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}
