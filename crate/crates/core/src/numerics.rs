//! Scalar kernels the capacity formulas are built on: the exponential
//! integral E1, adaptive quadrature on the unit interval, and a bracketed
//! root finder for monotone objectives.
//!
//! Everything here is deterministic: the same inputs produce bit-identical
//! outputs, which the reproducibility contract of the rest of the crate
//! relies on.

use thiserror::Error;

/// Convergence targets shared by the iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute tolerance, load bearing where the target may sit near zero.
    pub abs: f64,
    /// Relative tolerance.
    pub rel: f64,
    /// Iteration or refinement budget.
    pub max_iter: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("{name} is outside the domain: {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("did not converge within budget: best estimate {best:e}, residual {residual:e}")]
    NoConvergence { best: f64, residual: f64 },
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Branch point between the power series and the continued fraction.
const E1_SERIES_CUTOFF: f64 = 1.0;

/// Exponential integral E1(x) = integral over [x, inf) of t^-1 e^-t dt.
///
/// Power series below x = 1, Lentz-free descending continued fraction above;
/// both branches agree with high precision references to about 1e-15
/// relative error, including across the seam.
///
/// # Errors
///
/// [`NumericsError::Domain`] unless `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64, NumericsError> {
    if !(x > 0.0) {
        return Err(NumericsError::Domain {
            name: "exp_integral_e1 argument",
            value: x,
        });
    }
    if x <= E1_SERIES_CUTOFF {
        Ok(e1_series(x))
    } else {
        Ok((-x).exp() * e1_cf_scaled(x))
    }
}

/// Scaled exponential integral e^x E1(x), finite for arbitrarily large `x`.
///
/// E1 itself underflows past x ~ 700; the capacity formulas only ever need
/// products of the form e^-a E1(a + u), which this evaluates stably as
/// e^-(a+u) * (e^(a+u) E1(a + u)).
///
/// # Errors
///
/// [`NumericsError::Domain`] unless `x > 0`.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64, NumericsError> {
    if !(x > 0.0) {
        return Err(NumericsError::Domain {
            name: "exp_integral_e1_scaled argument",
            value: x,
        });
    }
    if x <= E1_SERIES_CUTOFF {
        // e^x <= e here, so the direct product cannot overflow.
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_cf_scaled(x))
    }
}

/// E1 by its alternating series, accurate for 0 < x <= 1.
fn e1_series(x: f64) -> f64 {
    // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^(k+1) x^k / (k k!)
    let mut term = 1.0; // (-x)^k / k!
    let mut sum = 0.0;
    for k in 1..=40u32 {
        term *= -x / f64::from(k);
        let delta = -term / f64::from(k);
        sum += delta;
        if delta.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// e^x E1(x) by the descending continued fraction, accurate for x >= 1.
fn e1_cf_scaled(x: f64) -> f64 {
    // e^x E1(x) = 1 / (x + t) with t built backwards from
    // t_m = 0, t_(k-1) = k / (1 + k / (x + t_k)).
    // The term count shrinks as x grows; 20 + 80/x keeps the truncation
    // error below 1e-16 down to the series handoff at x = 1.
    let m = 20 + (80.0 / x) as u32;
    let mut t = 0.0;
    for k in (1..=m).rev() {
        let k = f64::from(k);
        t = k / (1.0 + k / (x + t));
    }
    1.0 / (x + t)
}

/// Adaptive Simpson integral of `f` over [0, 1].
///
/// Panels are accepted on the standard Richardson comparison of one and two
/// Simpson steps and contribute the extrapolated value, so the result is
/// normally well inside `tol.abs`. Non-finite integrand values force
/// refinement and eventually an error, never a silent NaN.
///
/// # Errors
///
/// [`NumericsError::NoConvergence`] when the depth budget runs out before
/// the error budget is met; the error carries the best estimate assembled
/// from all panels and the unmet part of the budget as the residual.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F, tol: &Tolerance) -> Result<f64, NumericsError> {
    const MAX_DEPTH: u32 = 48;
    let fa = f(0.0);
    let fm = f(0.5);
    let fb = f(1.0);
    let whole = simpson(1.0, fa, fm, fb);
    adapt(&f, 0.0, 1.0, fa, fm, fb, whole, tol.abs, MAX_DEPTH)
}

fn simpson(width: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    width / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    budget: f64,
    depth: u32,
) -> Result<f64, NumericsError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(m - a, fa, flm, fm);
    let right = simpson(b - m, fm, frm, fb);
    let delta = left + right - whole;
    let refined = left + right + delta / 15.0;
    if delta.abs() <= 15.0 * budget && delta.is_finite() {
        return Ok(refined);
    }
    if depth == 0 {
        return Err(NumericsError::NoConvergence {
            best: refined,
            residual: delta.abs() / 15.0,
        });
    }
    let l = adapt(f, a, m, fa, flm, fm, left, 0.5 * budget, depth - 1);
    let r = adapt(f, m, b, fm, frm, fb, right, 0.5 * budget, depth - 1);
    match (l, r) {
        (Ok(l), Ok(r)) => Ok(l + r),
        (l, r) => {
            // Assemble the best whole-interval estimate even when one side
            // failed, so the error is still informative.
            let (lb, lr) = unpack(l);
            let (rb, rr) = unpack(r);
            Err(NumericsError::NoConvergence {
                best: lb + rb,
                residual: lr + rr,
            })
        }
    }
}

/// Estimate and residual of a finished panel, converged or not.
fn unpack(r: Result<f64, NumericsError>) -> (f64, f64) {
    match r {
        Ok(v) => (v, 0.0),
        Err(NumericsError::NoConvergence { best, residual }) => (best, residual),
        Err(_) => unreachable!("adapt only fails with NoConvergence"),
    }
}

/// Root of `f` on the bracket [lo, hi] by regula falsi with the Illinois
/// weighting, falling back to bisection whenever the secant step leaves the
/// bracket.
///
/// The objective is expected to be monotone across the bracket, which makes
/// the root unique; only the sign change is actually relied on. The same
/// inputs always produce the same root to the last bit.
///
/// # Panics
///
/// If `lo >= hi`.
///
/// # Errors
///
/// [`NumericsError::NoSignChange`] when `f(lo)` and `f(hi)` have the same
/// nonzero sign, [`NumericsError::NoConvergence`] when `tol.max_iter`
/// iterations fail to shrink the bracket to `tol.abs + tol.rel * |root|`,
/// or when `f` returns a non-finite value inside the bracket.
pub fn solve_monotone<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError> {
    assert!(lo < hi, "invalid bracket: lo = {lo}, hi = {hi}");
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !fa.is_finite() || !fb.is_finite() || fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    // side tracks which endpoint was kept last; two retentions in a row
    // halve that endpoint's weight, which is what stops regula falsi from
    // stalling against one end of the bracket.
    let mut side = 0i8;
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol.abs + tol.rel * mid.abs() {
            return Ok(if fa.abs() <= fb.abs() { a } else { b });
        }
        let secant = (a * fb - b * fa) / (fb - fa);
        let x = if secant > a && secant < b {
            secant
        } else {
            mid
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            return Err(NumericsError::NoConvergence {
                best: x,
                residual: f64::NAN,
            });
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Err(NumericsError::NoConvergence {
        best: 0.5 * (a + b),
        residual: (b - a).abs(),
    })
}

#[cfg(test)]
// Pinned reference values keep their full oracle digits.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Reference values computed with 40-digit arithmetic.
    const E1_TABLE: [(f64, f64); 15] = [
        (1e-6, 13.238295893062491),
        (1e-5, 10.935719800043696),
        (1e-4, 8.6332247045747054),
        (8.506944444444446e-4, 6.4930923972302042),
        (0.01, 4.0379295765381138),
        (0.1, 1.8229239584193906),
        (0.5, 0.55977359477616081),
        (1.0, 0.21938393439552027),
        (2.0, 0.04890051070806112),
        (5.0, 0.0011482955912753258),
        (6.125, 0.00031202737145098952),
        (10.0, 4.1569689296853243e-6),
        (30.0, 3.0215520106888125e-15),
        (43.0, 4.8094965569500179e-21),
        (50.0, 3.783264029550459e-24),
    ];

    #[test]
    fn e1_matches_reference_values() {
        for (x, want) in E1_TABLE {
            let got = exp_integral_e1(x).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn e1_scaled_matches_unscaled_in_overlap() {
        for (x, want) in E1_TABLE {
            let got = exp_integral_e1_scaled(x).unwrap();
            assert_relative_eq!(got, x.exp() * want, max_relative = 1e-12);
        }
    }

    #[test]
    fn e1_scaled_is_finite_where_e1_underflows() {
        let v = exp_integral_e1_scaled(1e9).unwrap();
        // e^x E1(x) ~ 1/x for large x.
        assert_relative_eq!(v, 1e-9, max_relative = 1e-6);
        assert!(exp_integral_e1_scaled(1e15).unwrap() > 0.0);
    }

    #[test]
    fn e1_bounded_by_classic_envelope() {
        // 0.5 e^-x ln(1 + 2/x) < E1(x) < e^-x ln(1 + 1/x)
        for x in [0.03, 0.7, 1.3, 4.0, 20.0] {
            let e1 = exp_integral_e1(x).unwrap();
            assert!(e1 < (-x).exp() * (1.0 + 1.0 / x).ln());
            assert!(e1 > 0.5 * (-x).exp() * (1.0 + 2.0 / x).ln());
        }
    }

    #[test]
    fn e1_rejects_nonpositive_arguments() {
        for x in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                exp_integral_e1(x),
                Err(NumericsError::Domain { .. })
            ));
            assert!(matches!(
                exp_integral_e1_scaled(x),
                Err(NumericsError::Domain { .. })
            ));
        }
    }

    #[test]
    fn integrates_exponential_to_e_minus_one() {
        let tol = Tolerance::default();
        let got = integrate_unit(|x| x.exp(), &tol).unwrap();
        assert_relative_eq!(got, std::f64::consts::E - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn integrates_polynomials_inside_budget() {
        // integral of x^d over [0,1] is 1/(d+1)
        let tol = Tolerance::default();
        for d in 0..=6 {
            let got = integrate_unit(|x| x.powi(d), &tol).unwrap();
            assert_relative_eq!(got, 1.0 / f64::from(d + 1), epsilon = 1e-12);
        }
    }

    #[test]
    fn integrable_singularity_reports_nonconvergence() {
        // f(0) is infinite, so the leftmost panel can never settle.
        let tol = Tolerance::default();
        let err = integrate_unit(|x| x.powf(-0.5), &tol).unwrap_err();
        assert!(matches!(err, NumericsError::NoConvergence { .. }));
    }

    #[test]
    fn finds_cube_root_of_two() {
        let tol = Tolerance::default();
        let root = solve_monotone(|x| x * x * x - 2.0, 0.0, 2.0, &tol).unwrap();
        assert_relative_eq!(root, 1.2599210498948732, max_relative = 1e-10);
    }

    #[test]
    fn root_finder_is_bit_stable() {
        let tol = Tolerance::default();
        let f = |x: f64| x.exp() - 3.0;
        let a = solve_monotone(f, 0.0, 4.0, &tol).unwrap();
        let b = solve_monotone(f, 0.0, 4.0, &tol).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        let tol = Tolerance::default();
        let err = solve_monotone(|x| x * x + 1.0, -1.0, 1.0, &tol).unwrap_err();
        assert!(matches!(err, NumericsError::NoSignChange { .. }));
    }

    #[test]
    fn nonfinite_objective_is_an_error() {
        let tol = Tolerance::default();
        let err = solve_monotone(|x| if x < 0.5 { -1.0 } else { f64::NAN }, 0.0, 1.0, &tol);
        assert!(err.is_err());
    }

    #[test]
    fn exact_endpoint_roots_are_returned() {
        let tol = Tolerance::default();
        assert_eq!(solve_monotone(|x| x, 0.0, 1.0, &tol).unwrap(), 0.0);
        assert_eq!(solve_monotone(|x| x - 1.0, 0.0, 1.0, &tol).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn e1_is_strictly_decreasing(x in 1e-6..50.0f64, y in 1e-6..50.0f64) {
            prop_assume!(x < y);
            prop_assert!(exp_integral_e1(x).unwrap() > exp_integral_e1(y).unwrap());
        }

        #[test]
        fn scaled_e1_consistent_with_plain(x in 1e-3..250.0f64) {
            let plain = exp_integral_e1(x).unwrap();
            let scaled = exp_integral_e1_scaled(x).unwrap();
            prop_assert!((scaled * (-x).exp() - plain).abs() <= 1e-12 * plain);
        }

        #[test]
        fn linear_roots_are_recovered(r in -5.0..5.0f64, slope in 0.1..10.0f64) {
            let tol = Tolerance::default();
            let root = solve_monotone(|x| slope * (x - r), -6.0, 6.0, &tol).unwrap();
            prop_assert!((root - r).abs() <= 1e-9 * (1.0 + r.abs()));
        }
    }
}
