//! Large-system capacity of a spread-spectrum ad hoc network: how many
//! users per unit of spreading bandwidth can transmit at once while a target
//! fraction of links still clears a SIR threshold.
//!
//! All results live in the regime where the user count N and the spreading
//! gain L grow together with the load alpha = N/L held fixed. In that limit
//! the SIR of a link of gain h collapses to a deterministic function of
//! alpha, h, and the mean behavior of the interferer population, which turns
//! "a fraction p of links reach the SIR target gamma" into a closed relation
//! between alpha, p, and the transmit SNR. This module evaluates that
//! relation in every direction: load from probability, probability from
//! load, SNR from both, and the network-diameter and throughput maps built
//! on top.

use std::cell::Cell;

use crate::geometry::{Arena, GeometryError};
use crate::numerics::{self, NumericsError, Tolerance};
use thiserror::Error;

/// Linear front end each receiver applies to the chip stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    /// Correlates against the desired signature only.
    MatchedFilter,
    /// Projects interference away at the cost of dimensions.
    Decorrelator,
    /// Minimum mean square error filter, the optimal linear trade.
    Mmse,
}

impl ReceiverKind {
    pub fn label(self) -> &'static str {
        match self {
            ReceiverKind::MatchedFilter => "matched-filter",
            ReceiverKind::Decorrelator => "decorrelator",
            ReceiverKind::Mmse => "mmse",
        }
    }
}

/// Symbol timing across users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimingMode {
    Synchronous,
    /// Independent uniform symbol offsets; each interferer acts as two
    /// fractional ones. Matched filter capacity is offset-invariant, the
    /// decorrelator pays a factor two in dimensions, the MMSE averages its
    /// interferer weight over the offset.
    Asynchronous,
}

impl TimingMode {
    pub fn label(self) -> &'static str {
        match self {
            TimingMode::Synchronous => "sync",
            TimingMode::Asynchronous => "async",
        }
    }

    /// Effective interferer multiplicity.
    fn multiplicity(self) -> f64 {
        match self {
            TimingMode::Synchronous => 1.0,
            TimingMode::Asynchronous => 2.0,
        }
    }
}

/// Transmit power regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerBudget {
    /// Power control may request any level; only interference limits SIR.
    Unlimited,
    /// Per-node transmit SNR cap, the ratio of maximum received power at
    /// unit gain to the noise level.
    MaxSnr(f64),
}

impl PowerBudget {
    /// Inverse cap, zero when unlimited; the capacity relations only ever
    /// consume the budget in this form.
    fn snr_inv(self) -> f64 {
        match self {
            PowerBudget::Unlimited => 0.0,
            PowerBudget::MaxSnr(s) => 1.0 / s,
        }
    }
}

/// A complete large-system scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub arena: Arena,
    pub receiver: ReceiverKind,
    pub timing: TimingMode,
    pub power: PowerBudget,
    /// Target SIR each accepted link must reach.
    pub gamma: f64,
    pub tol: Tolerance,
}

/// Outcome of a maximum-load query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    /// Supremum of feasible loads alpha = N/L; any load strictly below is
    /// achievable, zero when even a vanishing load misses the target.
    pub alpha_max: f64,
    pub feasible: bool,
    /// Link fraction this sizing targets.
    pub link_prob: f64,
    /// Gain threshold equivalent to `link_prob`.
    pub threshold: f64,
    /// The transmit SNR cap in force, when one is set.
    pub required_snr: Option<f64>,
}

/// Outcome of a link-probability query at fixed load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AchievableProb {
    /// Fraction of links that reach the SIR target.
    pub p: f64,
    /// Gain threshold of the weakest link that still makes it.
    pub threshold: f64,
    /// True when power control alone carries every link, so p = 1 and the
    /// threshold collapses to zero.
    pub saturated: bool,
}

/// Network diameter implied by a load, in relay hops across the arena
/// diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkDiameter {
    Finite {
        /// Raw diagonal-to-range ratio before rounding up.
        continuous: f64,
        /// Hop count, at least 1.
        hops: u32,
    },
    /// The load exceeds the receiver's structural limit, so no threshold,
    /// however lax, accommodates it.
    Unbounded,
}

/// Link sizing a hop budget forces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterMap {
    pub hops: u32,
    /// Required per-hop range, diagonal / hops.
    pub range: f64,
    /// Fraction of links within that range under the invertible law.
    pub link_prob: f64,
    /// Equivalent gain threshold.
    pub threshold: f64,
}

/// One row of a throughput scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputPoint {
    pub n: u32,
    /// Single-link rate, normalized to 1.
    pub rate: f64,
    pub diameter_sync: f64,
    /// None when the sync diameter is unbounded.
    pub hops_sync: Option<u32>,
    pub diameter_async: f64,
    pub hops_async: Option<u32>,
    /// End-to-end throughput rate/hops, zero when unbounded.
    pub cdma_sync: f64,
    pub cdma_async: f64,
    /// Unit-constant interference-avoidance reference, rate/sqrt(n ln n).
    pub gupta_kumar: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapacityError {
    #[error("target SIR must be positive and finite, got {0}")]
    NonPositiveGamma(f64),
    #[error("SNR cap must be positive and finite, got {0}")]
    NonPositiveSnrCap(f64),
    #[error("load alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("load alpha = {alpha} is at or above the {receiver} {timing} limit {limit}")]
    AlphaExceedsLimit {
        alpha: f64,
        limit: f64,
        receiver: &'static str,
        timing: &'static str,
    },
    #[error(
        "required SNR is unbounded: interference floor {floor:e} reaches the gain threshold {threshold:e}"
    )]
    SnrUnbounded { threshold: f64, floor: f64 },
    #[error("hop budget must be at least 1")]
    InvalidHopCount,
    #[error("network size must be at least 2 nodes, got {0}")]
    InvalidNodeCount(u32),
    #[error("spreading gain must be positive")]
    InvalidSpreadingGain,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl SystemConfig {
    fn validate(&self) -> Result<(), CapacityError> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(CapacityError::NonPositiveGamma(self.gamma));
        }
        if let PowerBudget::MaxSnr(s) = self.power {
            if !(s > 0.0) || !s.is_finite() {
                return Err(CapacityError::NonPositiveSnrCap(s));
            }
        }
        Ok(())
    }

    /// Structural load limit of the receiver, above which no gain threshold
    /// helps: dimension counting for the decorrelator, the interference
    /// balance point for the unlimited-power MMSE, none for the rest.
    fn load_limit(&self) -> Option<f64> {
        match self.receiver {
            ReceiverKind::Decorrelator => Some(1.0 / self.timing.multiplicity()),
            _ => None,
        }
    }

    /// Load below which unlimited power carries every link for the MMSE:
    /// the h -> 0 limit of h / (gamma E[H|h]) over the timing multiplicity.
    fn mmse_critical_load(&self) -> f64 {
        let (xi_min, xi_max) = self.arena.xi_bounds();
        let span = (-xi_min).exp() - (-xi_max).exp();
        1.0 / (self.timing.multiplicity() * span)
    }

    /// Mean effective interferer weight at threshold gain `h` for the MMSE
    /// front end under the configured timing.
    fn mmse_mean_weight(&self, h: f64) -> Result<f64, GeometryError> {
        match self.timing {
            TimingMode::Synchronous => Ok(self.arena.cond_mean_gain(self.gamma, h)),
            TimingMode::Asynchronous => self.arena.async_cond_mean_gain(self.gamma, h, &self.tol),
        }
    }

    /// Largest load at which at least the fraction `p` of links can reach
    /// the SIR target.
    ///
    /// # Errors
    ///
    /// Rejects probabilities outside (0, 1) and invalid configurations;
    /// propagates quadrature failure from the asynchronous MMSE weight.
    pub fn max_load(&self, p: f64) -> Result<CapacityResult, CapacityError> {
        self.validate()?;
        let t = self.arena.threshold_from_prob(p)?;
        let snr_inv = self.power.snr_inv();
        let gamma = self.gamma;
        let alpha_sup = match self.receiver {
            ReceiverKind::MatchedFilter => {
                let e = self.arena.mean_gain();
                (t - gamma * snr_inv) / (gamma * e)
            }
            ReceiverKind::Decorrelator => (1.0 - gamma * snr_inv / t) / self.timing.multiplicity(),
            ReceiverKind::Mmse => {
                // The timing multiplicity is already baked into the weight:
                // the asynchronous one averages both fractional copies.
                let e = self.mmse_mean_weight(t)?;
                (t - gamma * snr_inv) / (gamma * e)
            }
        };
        Ok(CapacityResult {
            alpha_max: alpha_sup.max(0.0),
            feasible: alpha_sup > 0.0,
            link_prob: p,
            threshold: t,
            required_snr: match self.power {
                PowerBudget::Unlimited => None,
                PowerBudget::MaxSnr(s) => Some(s),
            },
        })
    }

    /// Fraction of links that reach the SIR target at load `alpha`.
    ///
    /// # Errors
    ///
    /// [`CapacityError::AlphaExceedsLimit`] at or above a structural load
    /// limit; otherwise input validation and quadrature propagation.
    pub fn achievable_prob(&self, alpha: f64) -> Result<AchievableProb, CapacityError> {
        self.validate()?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CapacityError::InvalidAlpha(alpha));
        }
        if let Some(limit) = self.load_limit() {
            if alpha >= limit {
                return Err(CapacityError::AlphaExceedsLimit {
                    alpha,
                    limit,
                    receiver: self.receiver.label(),
                    timing: self.timing.label(),
                });
            }
        }
        let snr_inv = self.power.snr_inv();
        let gamma = self.gamma;
        let threshold = match self.receiver {
            ReceiverKind::MatchedFilter => gamma * snr_inv + alpha * gamma * self.arena.mean_gain(),
            ReceiverKind::Decorrelator => {
                if snr_inv == 0.0 {
                    return Ok(saturated());
                }
                gamma * snr_inv / (1.0 - self.timing.multiplicity() * alpha)
            }
            ReceiverKind::Mmse => {
                if snr_inv == 0.0 && alpha <= self.mmse_critical_load() {
                    return Ok(saturated());
                }
                self.solve_mmse_threshold(alpha)?
            }
        };
        Ok(AchievableProb {
            p: self.arena.prob_from_threshold(threshold)?,
            threshold,
            saturated: false,
        })
    }

    /// Root of h = gamma/SNR + alpha gamma E[H|h] in h, the gain of the
    /// weakest link that still meets the SIR target under the MMSE.
    fn solve_mmse_threshold(&self, alpha: f64) -> Result<f64, CapacityError> {
        let snr_inv = self.power.snr_inv();
        let gamma = self.gamma;
        // Quadrature failure inside the objective is parked here so the
        // root finder can stay a plain f64 -> f64 map.
        let quad_err: Cell<Option<GeometryError>> = Cell::new(None);
        let objective = |h: f64| match self.mmse_mean_weight(h) {
            Ok(w) => h - gamma * snr_inv - alpha * gamma * w,
            Err(e) => {
                quad_err.set(Some(e));
                f64::NAN
            }
        };
        // Both weights stay strictly below E[H]: the sync one by the SIR
        // discount, the offset-averaged one because its two copies carry
        // weights tau and 1 - tau. So this bounds the root from above; the
        // slack factor keeps the endpoint sign strict.
        let hi = gamma * snr_inv + alpha * gamma * self.arena.mean_gain() * (1.0 + 1e-9);
        let lo = if snr_inv > 0.0 {
            // objective(gamma/SNR) = -alpha gamma m E[H|.] < 0
            gamma * snr_inv
        } else {
            // Geometric descent: above the critical load the objective turns
            // negative as h falls, since E[H|h]/h climbs to its h -> 0 limit.
            let mut probe = 0.25 * hi;
            loop {
                if probe < 1e-280 {
                    // Only reachable within float resolution of the critical
                    // load itself; the saturated outcome is exact there.
                    return Ok(0.0);
                }
                if objective(probe) < 0.0 {
                    break probe;
                }
                probe *= 0.25;
            }
        };
        let tol = Tolerance {
            // The absolute band scales with the bracket, which has the same
            // unit as the threshold itself.
            abs: self.tol.abs * hi,
            ..self.tol
        };
        match numerics::solve_monotone(objective, lo, hi, &tol) {
            Ok(root) => Ok(root),
            Err(e) => Err(match quad_err.take() {
                Some(geo) => CapacityError::Geometry(geo),
                None => CapacityError::Numerics(e),
            }),
        }
    }

    /// Transmit SNR that makes load `alpha` and link fraction `p` meet
    /// exactly.
    ///
    /// # Errors
    ///
    /// [`CapacityError::SnrUnbounded`] when interference alone swallows the
    /// whole threshold, [`CapacityError::AlphaExceedsLimit`] past a
    /// structural limit, plus input validation.
    pub fn required_snr(&self, alpha: f64, p: f64) -> Result<f64, CapacityError> {
        self.validate()?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CapacityError::InvalidAlpha(alpha));
        }
        let t = self.arena.threshold_from_prob(p)?;
        if let Some(limit) = self.load_limit() {
            if alpha >= limit {
                return Err(CapacityError::AlphaExceedsLimit {
                    alpha,
                    limit,
                    receiver: self.receiver.label(),
                    timing: self.timing.label(),
                });
            }
        }
        let gamma = self.gamma;
        let (headroom, floor) = match self.receiver {
            ReceiverKind::MatchedFilter => {
                let floor = alpha * gamma * self.arena.mean_gain();
                (t - floor, floor)
            }
            ReceiverKind::Decorrelator => {
                let floor = t * self.timing.multiplicity() * alpha;
                (t - floor, floor)
            }
            ReceiverKind::Mmse => {
                let floor = alpha * gamma * self.mmse_mean_weight(t)?;
                (t - floor, floor)
            }
        };
        if headroom <= 0.0 {
            return Err(CapacityError::SnrUnbounded {
                threshold: t,
                floor,
            });
        }
        Ok(gamma / headroom)
    }

    /// Network diameter the load `alpha` forces: the weakest surviving link
    /// sets the per-hop range, whose diagonal coverage rounds up to a hop
    /// count. A saturated system reaches everything in one hop; a load past
    /// a structural limit has no finite diameter.
    pub fn achievable_diameter(&self, alpha: f64) -> Result<NetworkDiameter, CapacityError> {
        match self.achievable_prob(alpha) {
            Ok(res) => {
                let continuous =
                    self.arena.side() / self.arena.wavelength() * (2.0 * res.threshold).sqrt();
                let hops = (continuous.ceil() as u32).max(1);
                Ok(NetworkDiameter::Finite { continuous, hops })
            }
            Err(CapacityError::AlphaExceedsLimit { .. }) => Ok(NetworkDiameter::Unbounded),
            Err(e) => Err(e),
        }
    }

    /// [`diameter_map`] composed with [`Self::max_load`]: the capacity left
    /// once the hop budget fixes the link sizing.
    pub fn capacity_for_diameter(
        &self,
        hops: u32,
    ) -> Result<(DiameterMap, CapacityResult), CapacityError> {
        let map = diameter_map(&self.arena, hops)?;
        let capacity = self.max_load(map.link_prob)?;
        Ok((map, capacity))
    }

    /// End-to-end throughput scan over network sizes at spreading gain
    /// `spreading_gain`, against the unit-constant interference-avoidance
    /// reference. Each relay hop divides the normalized link rate.
    ///
    /// # Errors
    ///
    /// Rejects a zero spreading gain and sizes below 2 nodes.
    pub fn throughput_curves(
        &self,
        sizes: &[u32],
        spreading_gain: u32,
    ) -> Result<Vec<ThroughputPoint>, CapacityError> {
        if spreading_gain == 0 {
            return Err(CapacityError::InvalidSpreadingGain);
        }
        let l = f64::from(spreading_gain);
        let rate = 1.0;
        sizes
            .iter()
            .map(|&n| {
                if n < 2 {
                    return Err(CapacityError::InvalidNodeCount(n));
                }
                let alpha = f64::from(n) / l;
                let sync = SystemConfig {
                    timing: TimingMode::Synchronous,
                    ..*self
                }
                .achievable_diameter(alpha)?;
                let offset = SystemConfig {
                    timing: TimingMode::Asynchronous,
                    ..*self
                }
                .achievable_diameter(alpha)?;
                let (diameter_sync, hops_sync, cdma_sync) = throughput_leg(rate, sync);
                let (diameter_async, hops_async, cdma_async) = throughput_leg(rate, offset);
                let nf = f64::from(n);
                Ok(ThroughputPoint {
                    n,
                    rate,
                    diameter_sync,
                    hops_sync,
                    diameter_async,
                    hops_async,
                    cdma_sync,
                    cdma_async,
                    gupta_kumar: rate / (nf * nf.ln()).sqrt(),
                })
            })
            .collect()
    }
}

fn saturated() -> AchievableProb {
    AchievableProb {
        p: 1.0,
        threshold: 0.0,
        saturated: true,
    }
}

fn throughput_leg(rate: f64, diameter: NetworkDiameter) -> (f64, Option<u32>, f64) {
    match diameter {
        NetworkDiameter::Finite { continuous, hops } => {
            (continuous, Some(hops), rate / f64::from(hops))
        }
        NetworkDiameter::Unbounded => (f64::INFINITY, None, 0.0),
    }
}

/// Link sizing a hop budget forces, independent of receiver and power: the
/// per-hop range diagonal/hops, and the link fraction and gain threshold
/// that range corresponds to under the invertible distance law.
///
/// # Errors
///
/// Rejects a zero hop budget.
pub fn diameter_map(arena: &Arena, hops: u32) -> Result<DiameterMap, CapacityError> {
    if hops == 0 {
        return Err(CapacityError::InvalidHopCount);
    }
    let d = f64::from(hops);
    let range = arena.max_distance() / d;
    let k = arena.shape_k();
    // prob_from_range(range) with the b-dependence cancelled.
    let link_prob = -(-k * k / (2.0 * d * d)).exp_m1();
    let lambda_over_b = arena.wavelength() / arena.side();
    let threshold = 0.5 * lambda_over_b * lambda_over_b * d * d;
    Ok(DiameterMap {
        hops,
        range,
        link_prob,
        threshold,
    })
}

#[cfg(test)]
// Pinned reference values keep their full oracle digits.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn arena() -> Arena {
        Arena::new(6.0, 0.1, Arena::DEFAULT_K).unwrap()
    }

    fn config(receiver: ReceiverKind, timing: TimingMode, power: PowerBudget) -> SystemConfig {
        SystemConfig {
            arena: arena(),
            receiver,
            timing,
            power,
            gamma: 5.0,
            tol: Tolerance::default(),
        }
    }

    #[test]
    fn decorrelator_sync_reaches_published_operating_point() {
        let cfg = config(
            ReceiverKind::Decorrelator,
            TimingMode::Synchronous,
            PowerBudget::MaxSnr(1e4),
        );
        let cap = cfg.max_load(0.7773).unwrap();
        assert!(cap.feasible);
        assert!((cap.alpha_max - 60.0 / 512.0).abs() < 1e-4);
        assert_eq!(cap.required_snr, Some(1e4));
    }

    #[test]
    fn decorrelator_async_matches_reference_value() {
        let cfg = config(
            ReceiverKind::Decorrelator,
            TimingMode::Asynchronous,
            PowerBudget::MaxSnr(1e4),
        );
        let cap = cfg.max_load(0.6160).unwrap();
        assert_relative_eq!(cap.alpha_max, 0.21872605591674482, max_relative = 1e-12);
    }

    #[test]
    fn decorrelator_unlimited_saturates_below_its_limit() {
        for (timing, limit) in [
            (TimingMode::Synchronous, 1.0),
            (TimingMode::Asynchronous, 0.5),
        ] {
            let cfg = config(ReceiverKind::Decorrelator, timing, PowerBudget::Unlimited);
            let cap = cfg.max_load(0.9).unwrap();
            assert_eq!(cap.alpha_max, limit);
            let res = cfg.achievable_prob(limit * 0.999).unwrap();
            assert!(res.saturated && res.p == 1.0 && res.threshold == 0.0);
            let err = cfg.achievable_prob(limit).unwrap_err();
            assert!(matches!(
                err,
                CapacityError::AlphaExceedsLimit { limit: l, .. } if l == limit
            ));
        }
    }

    #[test]
    fn matched_filter_is_timing_invariant() {
        let alpha = 144.0 / 512.0;
        let sync = config(
            ReceiverKind::MatchedFilter,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        )
        .achievable_prob(alpha)
        .unwrap();
        let offset = config(
            ReceiverKind::MatchedFilter,
            TimingMode::Asynchronous,
            PowerBudget::Unlimited,
        )
        .achievable_prob(alpha)
        .unwrap();
        assert_eq!(sync.p.to_bits(), offset.p.to_bits());
        assert_eq!(sync.threshold.to_bits(), offset.threshold.to_bits());
    }

    #[test]
    fn matched_filter_roundtrips_through_max_load() {
        let cfg = config(
            ReceiverKind::MatchedFilter,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        for alpha in [0.05, 144.0 / 512.0, 1.5] {
            let res = cfg.achievable_prob(alpha).unwrap();
            // threshold = alpha gamma E_H under unlimited power
            assert_relative_eq!(
                res.threshold,
                alpha * cfg.gamma * cfg.arena.mean_gain(),
                max_relative = 1e-14
            );
            let cap = cfg.max_load(res.p).unwrap();
            assert_relative_eq!(cap.alpha_max, alpha, max_relative = 1e-10);
        }
    }

    #[test]
    fn mmse_sync_unlimited_matches_reference_threshold() {
        let cfg = config(
            ReceiverKind::Mmse,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        let res = cfg.achievable_prob(38.0 / 32.0).unwrap();
        assert!(!res.saturated);
        assert_relative_eq!(res.threshold, 0.00091427396100342586, max_relative = 1e-9);
        assert_relative_eq!(res.p, 0.605627352092, max_relative = 1e-9);
    }

    #[test]
    fn mmse_async_unlimited_matches_reference_threshold() {
        let cfg = config(
            ReceiverKind::Mmse,
            TimingMode::Asynchronous,
            PowerBudget::Unlimited,
        );
        let res = cfg.achievable_prob(38.0 / 32.0).unwrap();
        assert_relative_eq!(res.threshold, 0.0042717049906930225, max_relative = 1e-8);
        assert_relative_eq!(res.p, 0.1805700366, max_relative = 1e-8);
    }

    #[test]
    fn mmse_unlimited_saturates_below_the_critical_load() {
        // Critical loads: 1/(e^-xi_min - e^-xi_max), halved for async.
        let sync = config(
            ReceiverKind::Mmse,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        assert_relative_eq!(
            sync.mmse_critical_load(),
            1.0030470803178772,
            max_relative = 1e-14
        );
        assert!(sync.achievable_prob(1.002).unwrap().saturated);
        // Just past the boundary the threshold is positive but so small
        // that p rounds to 1; a little further out p visibly drops.
        let just_above = sync.achievable_prob(1.004).unwrap();
        assert!(!just_above.saturated && just_above.threshold > 0.0);
        let further = sync.achievable_prob(1.02).unwrap();
        assert!(!further.saturated && further.p < 1.0 && further.threshold > just_above.threshold);

        let offset = config(
            ReceiverKind::Mmse,
            TimingMode::Asynchronous,
            PowerBudget::Unlimited,
        );
        assert_relative_eq!(
            offset.mmse_critical_load(),
            0.50152354015893862,
            max_relative = 1e-14
        );
        assert!(offset.achievable_prob(0.5).unwrap().saturated);
        assert!(!offset.achievable_prob(0.52).unwrap().saturated);
    }

    #[test]
    fn mmse_roundtrips_through_max_load() {
        for power in [PowerBudget::Unlimited, PowerBudget::MaxSnr(1e4)] {
            for timing in [TimingMode::Synchronous, TimingMode::Asynchronous] {
                let cfg = config(ReceiverKind::Mmse, timing, power);
                let alpha = 38.0 / 32.0;
                let res = cfg.achievable_prob(alpha).unwrap();
                let cap = cfg.max_load(res.p).unwrap();
                assert_relative_eq!(cap.alpha_max, alpha, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn required_snr_matches_reference_and_closes_the_loop() {
        let cfg = config(
            ReceiverKind::Decorrelator,
            TimingMode::Synchronous,
            PowerBudget::MaxSnr(1e4),
        );
        let snr = cfg.required_snr(60.0 / 512.0, 0.7773).unwrap();
        assert_relative_eq!(snr, 9999.48286703, max_relative = 1e-8);
        // Feeding the answer back as the cap reproduces the load exactly.
        let back = SystemConfig {
            power: PowerBudget::MaxSnr(snr),
            ..cfg
        };
        let cap = back.max_load(0.7773).unwrap();
        assert_relative_eq!(cap.alpha_max, 60.0 / 512.0, max_relative = 1e-9);
    }

    #[test]
    fn required_snr_diverges_at_the_interference_floor() {
        let cfg = config(
            ReceiverKind::MatchedFilter,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        // p = 0.1037 corresponds to alpha_crit = 0.28125 under unlimited
        // power; just above it the floor swallows the threshold.
        let res = cfg.achievable_prob(144.0 / 512.0).unwrap();
        assert!(cfg.required_snr(0.29, res.p).is_err());
        let err = cfg.required_snr(0.29, res.p).unwrap_err();
        assert!(matches!(err, CapacityError::SnrUnbounded { .. }));
    }

    #[test]
    fn receiver_ordering_holds_at_a_capped_operating_point() {
        let p = 0.5;
        let snr = PowerBudget::MaxSnr(1e4);
        let mf = config(ReceiverKind::MatchedFilter, TimingMode::Synchronous, snr)
            .max_load(p)
            .unwrap();
        let dec = config(ReceiverKind::Decorrelator, TimingMode::Synchronous, snr)
            .max_load(p)
            .unwrap();
        let mmse = config(ReceiverKind::Mmse, TimingMode::Synchronous, snr)
            .max_load(p)
            .unwrap();
        assert!(mmse.alpha_max > dec.alpha_max);
        assert!(dec.alpha_max > mf.alpha_max);
    }

    #[test]
    fn capacity_grows_with_the_power_budget() {
        // p is low enough that even the smallest cap stays feasible.
        let p = 0.1;
        let mut prev = 0.0;
        for power in [
            PowerBudget::MaxSnr(1e3),
            PowerBudget::MaxSnr(1e4),
            PowerBudget::MaxSnr(1e5),
            PowerBudget::Unlimited,
        ] {
            let cap = config(ReceiverKind::MatchedFilter, TimingMode::Synchronous, power)
                .max_load(p)
                .unwrap();
            assert!(cap.alpha_max > prev);
            prev = cap.alpha_max;
        }
    }

    #[test]
    fn async_never_beats_sync() {
        let snr = PowerBudget::MaxSnr(1e5);
        for receiver in [ReceiverKind::Decorrelator, ReceiverKind::Mmse] {
            for p in [0.2, 0.5, 0.78373483317] {
                let sync = config(receiver, TimingMode::Synchronous, snr)
                    .max_load(p)
                    .unwrap();
                let offset = config(receiver, TimingMode::Asynchronous, snr)
                    .max_load(p)
                    .unwrap();
                assert!(
                    offset.alpha_max <= sync.alpha_max,
                    "{} at p = {p}",
                    receiver.label()
                );
            }
        }
    }

    #[test]
    fn diameter_map_matches_reference_values() {
        let a = arena();
        let two = diameter_map(&a, 2).unwrap();
        assert_relative_eq!(two.link_prob, 0.78373483317, max_relative = 1e-9);
        assert_relative_eq!(two.threshold, 5.55555555556e-4, max_relative = 1e-9);
        assert_relative_eq!(two.range, 4.24264068712, max_relative = 1e-9);
        let one = diameter_map(&a, 1).unwrap();
        assert_relative_eq!(one.link_prob, 0.997812508882, max_relative = 1e-9);
        assert!(matches!(
            diameter_map(&a, 0),
            Err(CapacityError::InvalidHopCount)
        ));
    }

    #[test]
    fn diameter_map_agrees_with_the_range_law() {
        let a = arena();
        for hops in 1..=10 {
            let map = diameter_map(&a, hops).unwrap();
            assert_relative_eq!(
                map.link_prob,
                a.prob_from_range(map.range),
                max_relative = 1e-10
            );
            assert_relative_eq!(
                map.threshold,
                a.threshold_from_prob(map.link_prob).unwrap(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn two_hop_capacity_matches_reference_values() {
        let snr = PowerBudget::MaxSnr(1e5);
        let mmse = config(ReceiverKind::Mmse, TimingMode::Synchronous, snr);
        let (map, cap) = mmse.capacity_for_diameter(2).unwrap();
        assert_relative_eq!(cap.alpha_max, 1.0196091331363404, max_relative = 1e-9);
        // The composition is exactly max_load at the mapped probability.
        let direct = mmse.max_load(map.link_prob).unwrap();
        assert_eq!(cap.alpha_max.to_bits(), direct.alpha_max.to_bits());

        let dec = config(ReceiverKind::Decorrelator, TimingMode::Synchronous, snr);
        assert_relative_eq!(
            dec.capacity_for_diameter(2).unwrap().1.alpha_max,
            0.91,
            max_relative = 1e-9
        );
        let mf = config(ReceiverKind::MatchedFilter, TimingMode::Synchronous, snr);
        assert_relative_eq!(
            mf.capacity_for_diameter(2).unwrap().1.alpha_max,
            0.0183060470379,
            max_relative = 1e-9
        );
    }

    #[test]
    fn achievable_diameter_covers_all_regimes() {
        let mmse = config(
            ReceiverKind::Mmse,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        match mmse.achievable_diameter(38.0 / 32.0).unwrap() {
            NetworkDiameter::Finite { continuous, hops } => {
                assert!((2.56..2.57).contains(&continuous));
                assert_eq!(hops, 3);
            }
            NetworkDiameter::Unbounded => panic!("finite load must give a finite diameter"),
        }
        // Saturated: everything is one hop.
        match mmse.achievable_diameter(0.5).unwrap() {
            NetworkDiameter::Finite { continuous, hops } => {
                assert_eq!(continuous, 0.0);
                assert_eq!(hops, 1);
            }
            NetworkDiameter::Unbounded => panic!("saturated load must give one hop"),
        }
        // Past a structural limit there is no diameter at all.
        let dec = config(
            ReceiverKind::Decorrelator,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        assert_eq!(
            dec.achievable_diameter(1.2).unwrap(),
            NetworkDiameter::Unbounded
        );
    }

    #[test]
    fn throughput_scan_finds_the_single_hop_plateau() {
        // Unit square: the single-hop boundary is side-invariant, and the
        // throughput comparison is defined on normalized area.
        let cfg = SystemConfig {
            arena: Arena::new(1.0, 0.1, Arena::DEFAULT_K).unwrap(),
            receiver: ReceiverKind::Mmse,
            timing: TimingMode::Synchronous,
            power: PowerBudget::Unlimited,
            gamma: 5.0,
            tol: Tolerance::default(),
        };
        let sizes: Vec<u32> = (2..=100).collect();
        let points = cfg.throughput_curves(&sizes, 32).unwrap();
        let plateau_end = points
            .iter()
            .filter(|pt| pt.hops_sync == Some(1))
            .map(|pt| pt.n)
            .max()
            .unwrap();
        assert_eq!(plateau_end, 34);
        for pt in &points {
            assert_eq!(pt.rate, 1.0);
            if pt.n <= plateau_end {
                assert_eq!(pt.cdma_sync, 1.0);
            } else {
                assert!(pt.cdma_sync < 1.0);
            }
            assert!(
                pt.cdma_sync > pt.gupta_kumar,
                "sync dominance at n = {}",
                pt.n
            );
            assert!(
                pt.cdma_async > pt.gupta_kumar,
                "async dominance at n = {}",
                pt.n
            );
            assert!(pt.cdma_async <= pt.cdma_sync);
        }
        let n40 = &points[38];
        assert_eq!(n40.n, 40);
        assert_eq!(n40.hops_sync, Some(3));
        assert_relative_eq!(n40.cdma_sync, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(
            n40.gupta_kumar,
            1.0 / (40.0 * 40.0f64.ln()).sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn throughput_scan_rejects_tiny_networks() {
        let cfg = config(
            ReceiverKind::Mmse,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        assert!(matches!(
            cfg.throughput_curves(&[1], 32),
            Err(CapacityError::InvalidNodeCount(1))
        ));
        assert!(matches!(
            cfg.throughput_curves(&[10], 0),
            Err(CapacityError::InvalidSpreadingGain)
        ));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let cfg = config(
            ReceiverKind::Mmse,
            TimingMode::Synchronous,
            PowerBudget::Unlimited,
        );
        assert!(matches!(
            cfg.achievable_prob(0.0),
            Err(CapacityError::InvalidAlpha(_))
        ));
        assert!(matches!(
            cfg.achievable_prob(f64::NAN),
            Err(CapacityError::InvalidAlpha(_))
        ));
        assert!(cfg.max_load(0.0).is_err());
        assert!(cfg.max_load(1.0).is_err());
        let bad_gamma = SystemConfig { gamma: 0.0, ..cfg };
        assert!(matches!(
            bad_gamma.max_load(0.5),
            Err(CapacityError::NonPositiveGamma(_))
        ));
        let bad_cap = SystemConfig {
            power: PowerBudget::MaxSnr(0.0),
            ..cfg
        };
        assert!(matches!(
            bad_cap.max_load(0.5),
            Err(CapacityError::NonPositiveSnrCap(_))
        ));
    }

    proptest! {
        #[test]
        fn max_load_and_achievable_prob_are_inverse(
            p in 0.05..0.95f64,
            receiver_ix in 0usize..3,
            capped in proptest::bool::ANY,
        ) {
            let receiver = [
                ReceiverKind::MatchedFilter,
                ReceiverKind::Decorrelator,
                ReceiverKind::Mmse,
            ][receiver_ix];
            let power = if capped {
                PowerBudget::MaxSnr(1e4)
            } else {
                PowerBudget::Unlimited
            };
            let cfg = config(receiver, TimingMode::Synchronous, power);
            let cap = cfg.max_load(p).unwrap();
            prop_assume!(cap.feasible);
            // Unlimited decorrelator saturates anywhere below its limit, so
            // the inverse direction is only defined through the threshold.
            prop_assume!(!(receiver == ReceiverKind::Decorrelator && !capped));
            let back = cfg.achievable_prob(cap.alpha_max);
            if let Ok(res) = back {
                prop_assert!((res.p - p).abs() <= 1e-8 * p.max(1e-2));
            }
        }

        #[test]
        fn feasible_loads_shrink_with_stricter_targets(
            receiver_ix in 0usize..3,
            lo in 0.1..0.85f64,
            gap in 0.05..0.14f64,
        ) {
            let receiver = [
                ReceiverKind::MatchedFilter,
                ReceiverKind::Decorrelator,
                ReceiverKind::Mmse,
            ][receiver_ix];
            let cfg = config(receiver, TimingMode::Synchronous, PowerBudget::MaxSnr(1e4));
            let easy = cfg.max_load(lo).unwrap();
            let strict = cfg.max_load(lo + gap).unwrap();
            prop_assert!(strict.alpha_max <= easy.alpha_max);
        }
    }
}
