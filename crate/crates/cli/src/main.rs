//! Batch front end over the capacity library: parameter sweeps, seeded
//! Monte Carlo runs, and canned reference scenarios, all emitted as CSV
//! with a manifest that records every resolved parameter.

mod commands;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use adcap_core::{Arena, InterfererPolicy, PowerBudget, ReceiverKind, TimingMode};

#[derive(Parser)]
#[command(
    name = "adcap",
    version,
    about = "Capacity analysis for delay constrained spread-spectrum ad hoc networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Largest supportable load for each requested link fraction.
    Capacity(CapacityArgs),
    /// Link fraction achieved at a load, or within a per-hop range.
    LinkProb(LinkProbArgs),
    /// Link sizing a hop budget forces, before any receiver choice.
    DiameterMap(DiameterMapArgs),
    /// Seeded Monte Carlo over random placements of a finite network.
    Simulate(SimulateArgs),
    /// End-to-end throughput scan against the interference-avoidance
    /// reference curve.
    Throughput(ThroughputArgs),
    /// Regenerate a canned reference scenario with fixed grids.
    Reproduce(ReproduceArgs),
}

/// Arena geometry shared by every command.
#[derive(Args, Clone)]
struct SceneArgs {
    /// Square arena side.
    #[arg(long, default_value_t = 6.0)]
    b: f64,
    /// Carrier wavelength, also the near-field clamp distance.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Shape constant of the invertible distance law.
    #[arg(long, default_value_t = Arena::DEFAULT_K)]
    k: f64,
}

impl SceneArgs {
    fn arena(&self) -> Result<Arena, adcap_core::GeometryError> {
        Arena::new(self.b, self.lambda, self.k)
    }
}

/// Receiver chain options for the asymptotic commands.
#[derive(Args, Clone)]
struct LinkArgs {
    /// Receiver front end.
    #[arg(long, value_enum, default_value_t = ReceiverArg::Mmse)]
    receiver: ReceiverArg,
    /// Symbol timing across users.
    #[arg(long, value_enum, default_value_t = TimingArg::Sync)]
    timing: TimingArg,
    /// Transmit SNR budget: "inf" or a positive ratio like 1e4.
    #[arg(long, default_value = "inf", value_parser = parse_power)]
    power: PowerBudget,
    /// SIR target a usable link must reach.
    #[arg(long, default_value_t = 5.0)]
    gamma: f64,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    link: LinkArgs,
    /// Link fraction targets to sweep, each in (0, 1).
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    p: Vec<f64>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("query")
    .required(true)
    .multiple(false)
    .args(["alpha", "n", "range"]))]
struct LinkProbArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    link: LinkArgs,
    /// Loads (users per dimension) to grade.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Node count, combined with --l into a load.
    #[arg(long, requires = "l")]
    n: Option<u32>,
    /// Spreading gain accompanying --n.
    #[arg(long)]
    l: Option<u32>,
    /// Per-hop ranges to grade under the distance law instead of loads.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    range: Vec<f64>,
    /// Distance law for --range queries.
    #[arg(long, value_enum, default_value_t = ModelArg::Exact, requires = "range")]
    model: ModelArg,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiameterMapArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Hop budgets (network diameters) to size links for.
    #[arg(long = "D", required = true, num_args = 1.., value_delimiter = ',')]
    hops: Vec<u32>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Receiver front end.
    #[arg(long, value_enum, default_value_t = ReceiverArg::Mmse)]
    receiver: ReceiverArg,
    /// Transmit SNR budget: "inf" or a positive ratio like 1e4.
    #[arg(long, default_value = "inf", value_parser = parse_power)]
    power: PowerBudget,
    /// SIR target a usable link must reach.
    #[arg(long, default_value_t = 5.0)]
    gamma: f64,
    /// Spreading gain.
    #[arg(long)]
    l: u32,
    /// Number of nodes placed per trial.
    #[arg(long)]
    n: u32,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100)]
    trials: u32,
    /// Master seed; trial t reads stream t of a generator seeded with it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Whether the graded pair's receiver also counts as an interferer.
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    interferers: PolicyArg,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThroughputArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Receiver front end.
    #[arg(long, value_enum, default_value_t = ReceiverArg::Mmse)]
    receiver: ReceiverArg,
    /// Transmit SNR budget: "inf" or a positive ratio like 1e4.
    #[arg(long, default_value = "inf", value_parser = parse_power)]
    power: PowerBudget,
    /// SIR target a usable link must reach.
    #[arg(long, default_value_t = 5.0)]
    gamma: f64,
    /// Spreading gain.
    #[arg(long, default_value_t = 32)]
    l: u32,
    /// Smallest network size in the scan.
    #[arg(long, default_value_t = 2)]
    n_min: u32,
    /// Largest network size in the scan.
    #[arg(long, default_value_t = 100)]
    n_max: u32,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Scenario to regenerate.
    #[arg(value_enum)]
    target: Target,
    /// Master seed for the simulated columns.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Trials behind each simulated column.
    #[arg(long, default_value_t = 100)]
    trials: u32,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Canned scenarios the `reproduce` command can regenerate.
#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    Table1,
    Table2,
    Table3,
    Fig6,
    Fig8,
    Fig9a,
    Fig9b,
    Fig10,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReceiverArg {
    Mf,
    Dec,
    Mmse,
}

impl From<ReceiverArg> for ReceiverKind {
    fn from(arg: ReceiverArg) -> Self {
        match arg {
            ReceiverArg::Mf => ReceiverKind::MatchedFilter,
            ReceiverArg::Dec => ReceiverKind::Decorrelator,
            ReceiverArg::Mmse => ReceiverKind::Mmse,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TimingArg {
    Sync,
    Async,
}

impl From<TimingArg> for TimingMode {
    fn from(arg: TimingArg) -> Self {
        match arg {
            TimingArg::Sync => TimingMode::Synchronous,
            TimingArg::Async => TimingMode::Asynchronous,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Exact,
    Gaussian,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Exclude,
    Include,
}

impl From<PolicyArg> for InterfererPolicy {
    fn from(arg: PolicyArg) -> Self {
        match arg {
            PolicyArg::Exclude => InterfererPolicy::ExcludeReceiver,
            PolicyArg::Include => InterfererPolicy::IncludeReceiver,
        }
    }
}

fn parse_power(s: &str) -> Result<PowerBudget, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(PowerBudget::Unlimited);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected \"inf\" or a positive ratio, got \"{s}\""))?;
    if v > 0.0 && v.is_finite() {
        Ok(PowerBudget::MaxSnr(v))
    } else {
        Err(format!("SNR budget must be positive and finite, got {v}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Capacity(args) => commands::capacity(args),
        Command::LinkProb(args) => commands::link_prob(args),
        Command::DiameterMap(args) => commands::diameter_map(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Throughput(args) => commands::throughput(args),
        Command::Reproduce(args) => reproduce::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
