//! Adaptive Simpson quadrature with mixed absolute/relative tolerance.

use crate::{Error, Result};

/// Stopping tolerances for [`adaptive_simpson`]. The effective tolerance is
/// `max(absolute, relative * |estimate|)`.
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self {
            absolute: 1e-6,
            relative: 1e-9,
        }
    }
}

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` by adaptive Simpson subdivision with
/// Richardson extrapolation. Returns 0 for an empty interval (`a >= b`).
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: QuadTol) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter("non-finite integration limit".into()));
    }
    if a >= b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let budget = tol.absolute.max(tol.relative * whole.abs());
    recurse(&f, a, b, fa, fm, fb, whole, budget, MAX_DEPTH)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || b <= m {
        return Err(Error::QuadratureNonConvergence { a, b });
    }
    let half_tol = 0.5 * tol;
    Ok(recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // Simpson is exact on cubics
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, QuadTol::default())
            .unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn sqrt_log_integrand() {
        // same family as the entropy integrand: decreasing, steep near 0
        let v = adaptive_simpson(|x| (1.0 / x).ln().sqrt(), 1e-8, 1.0, QuadTol::default()).unwrap();
        // oracle: 1e6-point midpoint rule
        let (a, b) = (1e-8, 1.0);
        let k = 1_000_000;
        let h = (b - a) / k as f64;
        let riemann: f64 = (0..k)
            .map(|i| {
                let x = a + (i as f64 + 0.5) * h;
                (1.0 / x).ln().sqrt()
            })
            .sum::<f64>()
            * h;
        assert!((v - riemann).abs() / riemann < 1e-5, "{v} vs {riemann}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(
            adaptive_simpson(|x| x, 2.0, 1.0, QuadTol::default()).unwrap(),
            0.0
        );
    }
}
