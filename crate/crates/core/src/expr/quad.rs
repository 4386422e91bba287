//! Adaptive Simpson quadrature.

use thiserror::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_DEPTH: u32 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError<E> {
    #[error("integration bounds must be finite")]
    InfiniteBounds,
    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),
    #[error("no convergence to {tolerance} within depth {depth} near x = {at}")]
    NoConvergence { tolerance: f64, depth: u32, at: f64 },
    #[error(transparent)]
    Integrand(E),
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`. Swapped bounds
/// give the negated integral.
pub fn adaptive_simpson<F, E>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64, QuadError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(QuadError::InfiniteBounds);
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return adaptive_simpson(f, b, a, tol, max_depth).map(|v| -v);
    }
    let mut eval = |x: f64| -> Result<f64, QuadError<E>> {
        let y = f(x).map_err(QuadError::Integrand)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite(x))
        }
    };
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(&mut eval, Panel { a, b, fa, fm, fb, whole }, tol, max_depth, max_depth)
}

fn refine<E>(
    eval: &mut impl FnMut(f64) -> Result<f64, QuadError<E>>,
    p: Panel,
    tol: f64,
    depth: u32,
    max_depth: u32,
) -> Result<f64, QuadError<E>> {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= p.a || m >= p.b {
        return Err(QuadError::NoConvergence { tolerance: tol, depth: max_depth, at: m });
    }
    let l = refine(eval, Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left }, tol / 2.0, depth - 1, max_depth)?;
    let r = refine(eval, Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right }, tol / 2.0, depth - 1, max_depth)?;
    Ok(l + r)
}
