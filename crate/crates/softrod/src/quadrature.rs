//! Adaptive Simpson quadrature for the tube-wall integrals.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance {tol:.1e} within depth {max_depth}")]
    QuadratureFailure { tol: f64, max_depth: usize },
}

const MAX_DEPTH: usize = 48;

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol` by adaptive
/// Simpson subdivision. The tolerance is taken relative to the running
/// estimate, with an absolute floor so near-zero integrals terminate.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(1e-30);
    adaptive(f, a, b, fa, fm, fb, whole, rel_tol * scale, rel_tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    rel_tol: f64,
    depth: usize,
) -> Result<f64, QuadratureError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadratureError::QuadratureFailure {
            tol: rel_tol,
            max_depth: MAX_DEPTH,
        });
    }
    let l = adaptive(f, a, m, fa, flm, fm, left, 0.5 * eps, rel_tol, depth - 1)?;
    let r = adaptive(f, m, b, fm, frm, fb, right, 0.5 * eps, rel_tol, depth - 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomial_exactly() {
        // Simpson is exact on cubics.
        let v = integrate(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn integrates_transcendental() {
        let v = integrate(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
    }

    #[test]
    fn reciprocal_over_tube_wall_range() {
        let v = integrate(&|x: f64| 1.0 / x, 0.0095, 0.014, 1e-10).unwrap();
        assert_relative_eq!(v, (0.014f64 / 0.0095).ln(), epsilon = 1e-11);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(&|x: f64| x, 1.0, 1.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn divergent_integrand_exhausts_subdivision() {
        let r = integrate(&|x: f64| 1.0 / (x - 0.3).abs(), 0.0, 1.0, 1e-9);
        assert!(matches!(r, Err(QuadratureError::QuadratureFailure { .. })));
    }
}
