//! Capacity analysis for spread-spectrum ad hoc networks under a relay
//! delay budget.
//!
//! The crate answers two dual questions about a population of nodes
//! scattered uniformly over a square, all sharing one spreading bandwidth:
//! how many users per unit of spreading can coexist while a target fraction
//! of links still clears a SIR threshold ([`asymptotic`]), and what those
//! closed-form answers look like for concrete random placements
//! ([`simulator`]). A hop budget on the network diameter converts into a
//! minimum per-link range ([`asymptotic::diameter_map`]), which is what
//! couples delay tolerance to capacity. The distance and gain laws feeding
//! both live in [`geometry`], and the scalar kernels in [`numerics`].
//!
//! ```
//! use adcap_core::{Arena, PowerBudget, ReceiverKind, SystemConfig, TimingMode, Tolerance};
//!
//! let cfg = SystemConfig {
//!     arena: Arena::new(6.0, 0.1, Arena::DEFAULT_K)?,
//!     receiver: ReceiverKind::Decorrelator,
//!     timing: TimingMode::Synchronous,
//!     power: PowerBudget::MaxSnr(1e4),
//!     gamma: 5.0,
//!     tol: Tolerance::default(),
//! };
//! // How much load keeps 77.73% of links above the SIR target?
//! let cap = cfg.max_load(0.7773)?;
//! assert!(cap.feasible);
//! assert!((cap.alpha_max - 60.0 / 512.0).abs() < 1e-4);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

// `!(x > 0.0)` rejects NaN along with nonpositive values; the sanctioned
// spelling would need a second clause for that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod geometry;
pub mod numerics;
pub mod simulator;

pub use asymptotic::{
    diameter_map, AchievableProb, CapacityError, CapacityResult, DiameterMap, NetworkDiameter,
    PowerBudget, ReceiverKind, SystemConfig, ThroughputPoint, TimingMode,
};
pub use geometry::{Arena, DistanceModel, GeometryError, PathLossModel};
pub use numerics::{NumericsError, Tolerance};
pub use simulator::{
    Adjacency, Diameter, GainMatrix, InterfererPolicy, Placement, SimConfig, SimError, SimSummary,
    SirMatrix, TrialOutcome,
};
