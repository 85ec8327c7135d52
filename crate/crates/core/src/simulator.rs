//! Placement-level check of the capacity analysis: drop N nodes uniformly
//! in the arena, push every ordered pair through the chosen front end, and
//! measure which links clear the SIR target and how many hops the resulting
//! graph needs to span the network.
//!
//! Runs are reproducible by construction. Each trial draws from its own
//! counter-derived stream of a seeded generator, so trial t sees the same
//! placement no matter how many trials run or in what order, and the
//! summary aggregates outcomes in trial order regardless of scheduling.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::asymptotic::{PowerBudget, ReceiverKind};
use crate::geometry::Arena;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Whether the receiving node of the link under test also counts as an
/// interferer. A node cannot receive while transmitting, so excluding it is
/// the physical default; including it reproduces accounting that charges
/// every other signature regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfererPolicy {
    #[default]
    ExcludeReceiver,
    IncludeReceiver,
}

impl InterfererPolicy {
    pub fn label(self) -> &'static str {
        match self {
            InterfererPolicy::ExcludeReceiver => "exclude-receiver",
            InterfererPolicy::IncludeReceiver => "include-receiver",
        }
    }
}

/// A complete simulation scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub arena: Arena,
    pub receiver: ReceiverKind,
    pub power: PowerBudget,
    /// Target SIR a feasible link must reach.
    pub gamma: f64,
    pub spreading_gain: u32,
    pub nodes: u32,
    pub trials: u32,
    pub master_seed: u64,
    pub policy: InterfererPolicy,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("simulation needs at least 2 nodes, got {0}")]
    TooFewNodes(u32),
    #[error("simulation needs at least 1 trial")]
    NoTrials,
    #[error("spreading gain must be positive")]
    ZeroSpreadingGain,
    #[error("target SIR must be positive and finite, got {0}")]
    NonPositiveGamma(f64),
    #[error("SNR cap must be positive and finite, got {0}")]
    NonPositiveSnrCap(f64),
    #[error(
        "SIR fixed point stalled for link {tx} -> {rx}: last step {step:e} after {iters} iterations"
    )]
    FixedPointStall {
        tx: usize,
        rx: usize,
        iters: u32,
        step: f64,
    },
}

impl SimConfig {
    fn validate(&self) -> Result<(), SimError> {
        if self.nodes < 2 {
            return Err(SimError::TooFewNodes(self.nodes));
        }
        if self.trials == 0 {
            return Err(SimError::NoTrials);
        }
        if self.spreading_gain == 0 {
            return Err(SimError::ZeroSpreadingGain);
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(SimError::NonPositiveGamma(self.gamma));
        }
        if let PowerBudget::MaxSnr(s) = self.power {
            if !(s > 0.0) || !s.is_finite() {
                return Err(SimError::NonPositiveSnrCap(s));
            }
        }
        Ok(())
    }
}

/// Node coordinates of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub points: Vec<[f64; 2]>,
}

impl Placement {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [xi, yi] = self.points[i];
        let [xj, yj] = self.points[j];
        let dx = xi - xj;
        let dy = yi - yj;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Symmetric pairwise gain matrix; the diagonal carries the near-field
/// clamp value 1 so the include-receiver policy has a number to charge.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    n: usize,
    g: Vec<f64>,
}

impl GainMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }
}

/// SIR of every ordered pair (transmitter, receiver); the diagonal is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SirMatrix {
    n: usize,
    s: Vec<f64>,
}

impl SirMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, tx: usize, rx: usize) -> f64 {
        self.s[tx * self.n + rx]
    }
}

/// Directed feasibility graph over the placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    n: usize,
    edges: Vec<bool>,
}

impl Adjacency {
    pub fn from_edges(n: usize, edge: impl Fn(usize, usize) -> bool) -> Self {
        let mut edges = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges[i * n + j] = edge(i, j);
                }
            }
        }
        Adjacency { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge(&self, from: usize, to: usize) -> bool {
        self.edges[from * self.n + to]
    }

    /// Count of directed edges.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    /// AND-symmetrized version: an edge survives only if both directions do.
    pub fn mutual(&self) -> Adjacency {
        Adjacency::from_edges(self.n, |i, j| self.edge(i, j) && self.edge(j, i))
    }
}

/// Hop diameter of a directed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Diameter {
    Hops(u32),
    /// Some ordered pair has no path at all.
    Disconnected,
}

impl fmt::Display for Diameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diameter::Hops(h) => write!(f, "{h}"),
            Diameter::Disconnected => write!(f, "disconnected"),
        }
    }
}

/// Measurements of a single trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub trial: u32,
    /// Fraction of ordered pairs whose link is feasible.
    pub link_prob_hat: f64,
    pub feasible_links: u32,
    /// Hop diameter of the directed feasibility graph.
    pub diameter: Diameter,
    /// Hop diameter after AND-symmetrization.
    pub mutual_diameter: Diameter,
}

/// Aggregate over all trials, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub trials: u32,
    pub mean_link_prob: f64,
    /// Fraction of trials per directed diameter value.
    pub diameter_hist: BTreeMap<Diameter, f64>,
    pub mutual_diameter_hist: BTreeMap<Diameter, f64>,
    pub outcomes: Vec<TrialOutcome>,
}

/// Uniform placement of `cfg.nodes` points for the given trial index.
///
/// Every trial gets its own stream of the master-seeded generator, so the
/// placement depends only on (master_seed, trial).
pub fn place_nodes(cfg: &SimConfig, trial: u32) -> Placement {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(u64::from(trial));
    let b = cfg.arena.side();
    let points = (0..cfg.nodes)
        .map(|_| {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            [x * b, y * b]
        })
        .collect();
    Placement { points }
}

/// Pairwise free-space gains with the sub-wavelength clamp.
pub fn gain_matrix(arena: &Arena, placement: &Placement) -> GainMatrix {
    let n = placement.len();
    let lambda = arena.wavelength();
    // vec of 1s so the diagonal is already the clamp value
    let mut g = vec![1.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = placement.distance(i, j);
            let v = if d < lambda {
                1.0
            } else {
                let r = lambda / d;
                r * r
            };
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    GainMatrix { n, g }
}

/// SIR of every ordered pair under the configured front end.
///
/// # Errors
///
/// Configuration validation, plus [`SimError::FixedPointStall`] should the
/// MMSE iteration fail to settle (it converges monotonically for all
/// physical inputs, so this marks a genuinely pathological matrix).
pub fn sir_matrix(cfg: &SimConfig, gains: &GainMatrix) -> Result<SirMatrix, SimError> {
    cfg.validate()?;
    let n = gains.n();
    let l = f64::from(cfg.spreading_gain);
    let snr_inv = match cfg.power {
        PowerBudget::Unlimited => 0.0,
        PowerBudget::MaxSnr(s) => 1.0 / s,
    };
    let mut s = vec![0.0; n * n];
    match cfg.receiver {
        ReceiverKind::Decorrelator => {
            // Projecting away the other users' signatures costs a fixed
            // dimension fraction, so the SIR is interference-free scaled by
            // the leftover margin.
            let margin = 1.0 - n as f64 / l;
            for tx in 0..n {
                for rx in 0..n {
                    if tx == rx {
                        continue;
                    }
                    s[tx * n + rx] = if margin <= 0.0 {
                        0.0
                    } else {
                        match cfg.power {
                            PowerBudget::Unlimited => f64::INFINITY,
                            PowerBudget::MaxSnr(snr) => snr * gains.get(tx, rx) * margin,
                        }
                    };
                }
            }
        }
        ReceiverKind::MatchedFilter => {
            // Column sums make the per-pair interferer total an O(1) lookup.
            let mut col = vec![0.0; n];
            for (rx, total) in col.iter_mut().enumerate() {
                for tx in 0..n {
                    if tx != rx {
                        *total += gains.get(tx, rx);
                    }
                }
            }
            for tx in 0..n {
                for rx in 0..n {
                    if tx == rx {
                        continue;
                    }
                    let mut interference = col[rx] - gains.get(tx, rx);
                    if cfg.policy == InterfererPolicy::IncludeReceiver {
                        interference += gains.get(rx, rx);
                    }
                    let denom = snr_inv + interference / l;
                    s[tx * n + rx] = if denom == 0.0 {
                        f64::INFINITY
                    } else {
                        gains.get(tx, rx) / denom
                    };
                }
            }
        }
        ReceiverKind::Mmse => {
            let mut others = Vec::with_capacity(n);
            for rx in 0..n {
                for tx in 0..n {
                    if tx == rx {
                        continue;
                    }
                    others.clear();
                    for j in 0..n {
                        let skip =
                            j == tx || (j == rx && cfg.policy == InterfererPolicy::ExcludeReceiver);
                        if !skip {
                            others.push(gains.get(j, rx));
                        }
                    }
                    s[tx * n + rx] = mmse_sir(gains.get(tx, rx), &others, l, snr_inv).map_err(
                        |(iters, step)| SimError::FixedPointStall {
                            tx,
                            rx,
                            iters,
                            step,
                        },
                    )?;
                }
            }
        }
    }
    Ok(SirMatrix { n, s })
}

/// SIR of one link under the MMSE front end: the fixed point of
///
///   x = h / (eta + (1/L) sum_j h g_j / (h + g_j x)),
///
/// which the iteration approaches monotonically, downward from the
/// interference-free value when power is capped, upward from the matched
/// filter value when it is not.
fn mmse_sir(h: f64, interferers: &[f64], l: f64, snr_inv: f64) -> Result<f64, (u32, f64)> {
    const MAX_ITER: u32 = 500;
    const REL_STEP: f64 = 1e-12;
    if snr_inv == 0.0 && interferers.len() as f64 <= l {
        // With enough dimensions per interferer and no noise, the filter
        // suppresses everything: no finite fixed point exists.
        return Ok(f64::INFINITY);
    }
    let map = |x: f64| {
        let mut acc = 0.0;
        for &g in interferers {
            acc += h * g / (h + g * x);
        }
        h / (snr_inv + acc / l)
    };
    let mut x = if snr_inv > 0.0 { h / snr_inv } else { map(0.0) };
    let mut step = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let next = map(x);
        step = (next - x).abs();
        x = next;
        if step <= REL_STEP * x {
            return Ok(x);
        }
    }
    Err((MAX_ITER, step))
}

/// Directed feasibility graph: the link (tx, rx) exists when its SIR clears
/// `gamma` and the pair is outside the antenna near field.
///
/// `gamma` is taken explicitly (rather than from a config) so the graph of
/// the same SIR field can be sliced at several targets; zero keeps every
/// pair except near-field ones.
pub fn feasibility_graph(
    arena: &Arena,
    placement: &Placement,
    sirs: &SirMatrix,
    gamma: f64,
) -> Adjacency {
    assert!(gamma >= 0.0, "feasibility needs gamma >= 0, got {gamma}");
    let d_min = arena.min_distance();
    Adjacency::from_edges(sirs.n(), |tx, rx| {
        sirs.get(tx, rx) >= gamma && placement.distance(tx, rx) >= d_min
    })
}

/// Hop diameter of a directed graph: the largest shortest-path length over
/// all ordered pairs, by breadth-first search from every node.
///
/// # Panics
///
/// If the graph has fewer than 2 nodes.
pub fn hop_diameter(adj: &Adjacency) -> Diameter {
    let n = adj.n();
    assert!(n >= 2, "hop diameter needs at least 2 nodes, got {n}");
    let mut worst = 0u32;
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        dist.fill(u32::MAX);
        dist[src] = 0;
        queue.clear();
        queue.push_back(src);
        let mut reached = 1usize;
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if adj.edge(v, w) && dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    worst = worst.max(dist[w]);
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        if reached < n {
            return Diameter::Disconnected;
        }
    }
    Diameter::Hops(worst)
}

/// One full trial: place, compute gains and SIRs, grade links, measure.
///
/// # Errors
///
/// Validation and fixed-point failures from [`sir_matrix`].
pub fn run_trial(cfg: &SimConfig, trial: u32) -> Result<TrialOutcome, SimError> {
    cfg.validate()?;
    let placement = place_nodes(cfg, trial);
    let gains = gain_matrix(&cfg.arena, &placement);
    let sirs = sir_matrix(cfg, &gains)?;
    let adj = feasibility_graph(&cfg.arena, &placement, &sirs, cfg.gamma);
    let n = placement.len();
    let feasible = adj.edge_count();
    Ok(TrialOutcome {
        trial,
        link_prob_hat: feasible as f64 / (n * (n - 1)) as f64,
        feasible_links: feasible as u32,
        diameter: hop_diameter(&adj),
        mutual_diameter: hop_diameter(&adj.mutual()),
    })
}

/// All trials of the scenario, in parallel, aggregated in trial order so
/// the summary is bit-identical however the work was scheduled.
///
/// # Errors
///
/// Validation and fixed-point failures from the first failing trial.
pub fn run_monte_carlo(cfg: &SimConfig) -> Result<SimSummary, SimError> {
    cfg.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, trial))
        .collect::<Result<_, _>>()?;
    let trials = f64::from(cfg.trials);
    let mean_link_prob = outcomes.iter().map(|o| o.link_prob_hat).sum::<f64>() / trials;
    let mut diameter_hist = BTreeMap::new();
    let mut mutual_diameter_hist = BTreeMap::new();
    for o in &outcomes {
        *diameter_hist.entry(o.diameter).or_insert(0.0) += 1.0 / trials;
        *mutual_diameter_hist.entry(o.mutual_diameter).or_insert(0.0) += 1.0 / trials;
    }
    Ok(SimSummary {
        trials: cfg.trials,
        mean_link_prob,
        diameter_hist,
        mutual_diameter_hist,
        outcomes,
    })
}
