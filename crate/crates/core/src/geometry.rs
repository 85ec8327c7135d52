//! Geometry of a square deployment region: the law of the distance between
//! two uniformly placed nodes, the free-space link gain it induces, and the
//! conversions between link probability, gain threshold, and range.
//!
//! Two distance models are carried side by side. `Exact` is the closed-form
//! CDF of the distance between two independent uniform points in a b x b
//! square. `Gaussian` is the Rayleigh-shaped approximation
//! 1 - exp(-k^2 y^2 / (4 b^2)) whose constant k = 3.5 keeps the two within
//! about 0.052 everywhere; it is the one that makes the gain law, and with
//! it the whole capacity analysis, analytically invertible.

use std::f64::consts::{PI, SQRT_2};

use crate::numerics::{self, NumericsError, Tolerance};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("arena needs lambda < sqrt(2) b, got lambda = {lambda}, b = {b}")]
    DegenerateArena { b: f64, lambda: f64 },
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    ProbabilityRange(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which distance law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceModel {
    /// Exact polynomial CDF for a uniform square.
    Exact,
    /// Invertible approximation 1 - exp(-k^2 y^2 / (4 b^2)).
    Gaussian,
}

/// Square deployment region together with its radio constants.
///
/// `b` is the side length, `lambda` the carrier wavelength (both in the
/// same length unit), `k` the shape constant of the approximate distance
/// law. Links shorter than one wavelength sit in the antenna near field:
/// their gain is clamped to 1 when they interfere and they are excluded as
/// direct links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    b: f64,
    lambda: f64,
    k: f64,
    /// Cached gain-law constant C = k^2 lambda^2 / (4 b^2).
    c: f64,
}

impl Arena {
    /// Shape constant calibrated against the exact square law.
    pub const DEFAULT_K: f64 = 3.5;

    /// # Errors
    ///
    /// Rejects non-positive or non-finite parameters, and arenas so small
    /// that the wavelength does not fit under the diagonal (the gain model
    /// would have empty support).
    pub fn new(b: f64, lambda: f64, k: f64) -> Result<Self, GeometryError> {
        for (name, value) in [
            ("arena side", b),
            ("wavelength", lambda),
            ("shape constant", k),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(GeometryError::NonPositive { name, value });
            }
        }
        if lambda >= SQRT_2 * b {
            return Err(GeometryError::DegenerateArena { b, lambda });
        }
        let c = k * k * lambda * lambda / (4.0 * b * b);
        Ok(Arena { b, lambda, k, c })
    }

    pub fn side(&self) -> f64 {
        self.b
    }

    pub fn wavelength(&self) -> f64 {
        self.lambda
    }

    pub fn shape_k(&self) -> f64 {
        self.k
    }

    /// Gain-law constant C = k^2 lambda^2 / (4 b^2); P(H <= h) = e^(-C/h).
    pub fn gain_constant(&self) -> f64 {
        self.c
    }

    /// Shortest receivable link distance, one wavelength.
    pub fn min_distance(&self) -> f64 {
        self.lambda
    }

    /// Longest possible distance, the arena diagonal.
    pub fn max_distance(&self) -> f64 {
        SQRT_2 * self.b
    }

    /// Distance bounds in wavelengths: (1, sqrt(2) b / lambda).
    pub fn delta_bounds(&self) -> (f64, f64) {
        (1.0, SQRT_2 * self.b / self.lambda)
    }

    /// Exponents truncating the gain law, (C 1^2, C (sqrt(2) b / lambda)^2).
    /// The upper one collapses to k^2/2, independent of b and lambda, and is
    /// returned in that form so the identity holds exactly in floats.
    pub fn xi_bounds(&self) -> (f64, f64) {
        (self.c, 0.5 * self.k * self.k)
    }

    /// Free-space power gain lambda^2/d^2 of a link of length `d`, clamped
    /// to 1 inside the near field d < lambda. The clamp is how sub-wavelength
    /// interferers are counted; such a pair is never a usable direct link and
    /// is excluded at the graph stage instead.
    ///
    /// # Errors
    ///
    /// Rejects `d <= 0` and non-finite `d`.
    pub fn gain_from_distance(&self, d: f64) -> Result<f64, GeometryError> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(GeometryError::NonPositive {
                name: "link distance",
                value: d,
            });
        }
        if d < self.lambda {
            return Ok(1.0);
        }
        let r = self.lambda / d;
        Ok(r * r)
    }

    /// P(distance <= d) under the chosen model. Zero below 0, one beyond the
    /// diagonal; the exact branch is the piecewise polynomial square law.
    pub fn distance_cdf(&self, model: DistanceModel, d: f64) -> f64 {
        match model {
            DistanceModel::Exact => exact_square_cdf(d / self.b),
            DistanceModel::Gaussian => {
                if d <= 0.0 {
                    0.0
                } else {
                    let z = self.k * d / (2.0 * self.b);
                    -(-z * z).exp_m1()
                }
            }
        }
    }

    /// P(gain <= h) under the approximate law, e^(-C/h).
    ///
    /// # Errors
    ///
    /// Rejects `h <= 0` and non-finite `h`.
    pub fn gain_cdf(&self, h: f64) -> Result<f64, GeometryError> {
        self.check_gain(h)?;
        Ok((-self.c / h).exp())
    }

    /// Density of the approximate gain law, (C/h^2) e^(-C/h).
    ///
    /// # Errors
    ///
    /// Rejects `h <= 0` and non-finite `h`.
    pub fn gain_pdf(&self, h: f64) -> Result<f64, GeometryError> {
        self.check_gain(h)?;
        Ok(self.c / (h * h) * (-self.c / h).exp())
    }

    fn check_gain(&self, h: f64) -> Result<(), GeometryError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GeometryError::NonPositive {
                name: "link gain",
                value: h,
            });
        }
        Ok(())
    }

    /// Mean link gain over the supported distance window,
    /// C [E1(xi_min) - E1(xi_max)].
    pub fn mean_gain(&self) -> f64 {
        let (xi_min, xi_max) = self.xi_bounds();
        // Both exponents are positive by construction, so E1 cannot fail.
        let e = |x| numerics::exp_integral_e1(x).expect("positive exponent");
        self.c * (e(xi_min) - e(xi_max))
    }

    /// Mean effective interferer gain seen by a link of gain `h` once every
    /// user sits at the SIR target `gamma`: each interferer of gain g then
    /// weighs g h / (h + g gamma), and this is that weight averaged over the
    /// gain law,
    ///
    ///   C e^u [E1(xi_min + u) - E1(xi_max + u)],  u = C gamma / h.
    ///
    /// Evaluated through the scaled form e^x E1(x) so tiny `h` (huge u)
    /// cannot overflow.
    ///
    /// # Panics
    ///
    /// If `gamma <= 0` or `h <= 0`.
    pub fn cond_mean_gain(&self, gamma: f64, h: f64) -> f64 {
        assert!(
            gamma > 0.0 && h > 0.0,
            "cond_mean_gain needs gamma > 0 and h > 0, got gamma = {gamma}, h = {h}"
        );
        self.offset_term(gamma, h, 1.0)
    }

    /// Offset-averaged variant of [`Self::cond_mean_gain`] for symbol
    /// asynchronous interferers: a relative offset tau splits each interferer
    /// into two effective ones weighted tau and 1 - tau, and tau is averaged
    /// uniformly over [0, 1].
    ///
    /// # Panics
    ///
    /// If `gamma <= 0` or `h <= 0`.
    ///
    /// # Errors
    ///
    /// Propagates quadrature failure (the integrand is smooth, so this only
    /// happens under a hostile `tol`).
    pub fn async_cond_mean_gain(
        &self,
        gamma: f64,
        h: f64,
        tol: &Tolerance,
    ) -> Result<f64, GeometryError> {
        assert!(
            gamma > 0.0 && h > 0.0,
            "async_cond_mean_gain needs gamma > 0 and h > 0, got gamma = {gamma}, h = {h}"
        );
        let integrand =
            |tau: f64| self.offset_term(gamma, h, tau) + self.offset_term(gamma, h, 1.0 - tau);
        Ok(numerics::integrate_unit(integrand, tol)?)
    }

    /// tau-weighted interferer copy: tau times the conditional mean gain at
    /// the reduced target gamma tau. Zero weight at tau = 0 by continuity.
    fn offset_term(&self, gamma: f64, h: f64, tau: f64) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        let (xi_min, xi_max) = self.xi_bounds();
        let u = self.c * gamma * tau / h;
        let e = |x| numerics::exp_integral_e1_scaled(x).expect("positive exponent");
        self.c * tau * ((-xi_min).exp() * e(xi_min + u) - (-xi_max).exp() * e(xi_max + u))
    }

    /// Fraction of links whose gain clears `threshold`,
    /// 1 - e^(-C/threshold).
    ///
    /// # Errors
    ///
    /// Rejects `threshold <= 0` and non-finite thresholds.
    pub fn prob_from_threshold(&self, threshold: f64) -> Result<f64, GeometryError> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(GeometryError::NonPositive {
                name: "gain threshold",
                value: threshold,
            });
        }
        Ok(-(-self.c / threshold).exp_m1())
    }

    /// Gain threshold cleared by exactly the fraction `p` of links,
    /// C / ln(1 / (1 - p)). Inverse of [`Self::prob_from_threshold`].
    ///
    /// # Errors
    ///
    /// Rejects probabilities outside the open interval (0, 1).
    pub fn threshold_from_prob(&self, p: f64) -> Result<f64, GeometryError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(GeometryError::ProbabilityRange(p));
        }
        Ok(self.c / -(-p).ln_1p())
    }

    /// Fraction of links no longer than `range` under the invertible law,
    /// 1 - exp(-k^2 range^2 / (4 b^2)).
    ///
    /// # Panics
    ///
    /// If `range <= 0`.
    pub fn prob_from_range(&self, range: f64) -> f64 {
        assert!(range > 0.0, "prob_from_range needs range > 0, got {range}");
        let z = self.k * range / (2.0 * self.b);
        -(-z * z).exp_m1()
    }
}

/// CDF of the distance between two uniform points in the unit square,
/// evaluated at x (distances normalized by the side).
fn exact_square_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x * x >= 2.0 {
        return 1.0;
    }
    let x2 = x * x;
    let cdf = if x <= 1.0 {
        x2 * (0.5 * x2 - 8.0 / 3.0 * x + PI)
    } else {
        let s = (x2 - 1.0).sqrt();
        4.0 / 3.0 * s * (2.0 * x2 + 1.0) - (0.5 * x2 * x2 + 2.0 * x2 - 1.0 / 3.0)
            + 2.0 * x2 * ((1.0 / x).asin() - (1.0 / x).acos())
    };
    cdf.clamp(0.0, 1.0)
}

/// Antenna geometry that locates the boundaries of the free-space regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// Largest physical antenna dimension.
    pub largest_dimension: f64,
    pub tx_height: f64,
    pub rx_height: f64,
}

impl PathLossModel {
    /// (far-field start, two-ray crossover) for the arena's wavelength:
    /// 2 D^2 / lambda and 4 h_t h_r / lambda. The lambda^2/d^2 gain model is
    /// trusted between the two; beyond the second the decay steepens to
    /// fourth power and the model is conservative.
    pub fn free_space_window(&self, arena: &Arena) -> (f64, f64) {
        let lambda = arena.wavelength();
        (
            2.0 * self.largest_dimension * self.largest_dimension / lambda,
            4.0 * self.tx_height * self.rx_height / lambda,
        )
    }
}
