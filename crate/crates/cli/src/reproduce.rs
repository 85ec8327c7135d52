//! Canned reference scenarios: fixed arena, fixed grids, seeded simulation
//! columns. Each target regenerates one regression artifact end to end.

use anyhow::Result;
use serde_json::json;

use adcap_core::simulator::run_monte_carlo;
use adcap_core::{
    Arena, Diameter, InterfererPolicy, NetworkDiameter, PowerBudget, ReceiverKind, SimConfig,
    SimSummary, SystemConfig, TimingMode, Tolerance,
};

use crate::commands::{
    power_json, power_label, snr_column, throughput_rows, GK_NOTE, THROUGHPUT_HEADER,
};
use crate::output::{emit, int, num, Csv, RunManifest};
use crate::{ReproduceArgs, Target};

const RECEIVERS: [ReceiverKind; 3] = [
    ReceiverKind::MatchedFilter,
    ReceiverKind::Decorrelator,
    ReceiverKind::Mmse,
];

fn reference_arena() -> Arena {
    Arena::new(6.0, 0.1, Arena::DEFAULT_K).expect("reference arena is valid")
}

fn reference_system(receiver: ReceiverKind, power: PowerBudget) -> SystemConfig {
    SystemConfig {
        arena: reference_arena(),
        receiver,
        timing: TimingMode::Synchronous,
        power,
        gamma: 5.0,
        tol: Tolerance::default(),
    }
}

pub fn run(args: &ReproduceArgs) -> Result<()> {
    match args.target {
        Target::Table1 => table(
            args,
            "table1",
            ReceiverKind::Decorrelator,
            PowerBudget::MaxSnr(1e4),
            &[
                (512, 60),
                (1024, 120),
                (64, 28),
                (128, 92),
                (128, 96),
                (128, 100),
                (64, 57),
            ],
        ),
        Target::Table2 => table(
            args,
            "table2",
            ReceiverKind::Mmse,
            PowerBudget::Unlimited,
            &[
                (32, 38),
                (32, 39),
                (32, 42),
                (32, 45),
                (32, 46),
                (32, 48),
                (32, 57),
                (64, 78),
                (64, 74),
            ],
        ),
        Target::Table3 => table(
            args,
            "table3",
            ReceiverKind::MatchedFilter,
            PowerBudget::Unlimited,
            &[(1024, 44), (256, 31), (512, 144)],
        ),
        Target::Fig6 => fig6(args),
        Target::Fig8 => fig8(args),
        Target::Fig9a => fig9(args, "fig9a", 2),
        Target::Fig9b => fig9(args, "fig9b", 3),
        Target::Fig10 => fig10(args),
    }
}

fn modal_diameter(summary: &SimSummary) -> Diameter {
    summary
        .diameter_hist
        .iter()
        .max_by(|a, b| {
            a.1.partial_cmp(b.1)
                .expect("histogram fractions are finite")
        })
        .map(|(d, _)| *d)
        .expect("at least one trial")
}

/// Analysis and simulated link fractions side by side for fixed (L, N)
/// operating points, with the diameter the analysis predicts and the modal
/// simulated one.
fn table(
    args: &ReproduceArgs,
    name: &str,
    receiver: ReceiverKind,
    power: PowerBudget,
    rows: &[(u32, u32)],
) -> Result<()> {
    let cfg = reference_system(receiver, power);
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap reproduce {name} receiver={} timing=sync power={} gamma=5 b=6 lambda=0.1 \
         k=3.5 trials={} seed={}",
        receiver.label(),
        power_label(power),
        args.trials,
        args.seed,
    ));
    csv.header(
        "l[chips],n[users],alpha[users/dim],p_analysis[1],p_sim[1],d_cont[hops],\
         d_ceil[hops],d_sim_modal[hops]",
    );
    for &(l, n) in rows {
        let alpha = f64::from(n) / f64::from(l);
        let analysis = cfg.achievable_prob(alpha)?;
        let (d_cont, d_ceil) = match cfg.achievable_diameter(alpha)? {
            NetworkDiameter::Finite { continuous, hops } => (continuous, int(hops)),
            NetworkDiameter::Unbounded => (f64::INFINITY, "inf".into()),
        };
        let sim = run_monte_carlo(&SimConfig {
            arena: cfg.arena,
            receiver,
            power,
            gamma: cfg.gamma,
            spreading_gain: l,
            nodes: n,
            trials: args.trials,
            master_seed: args.seed,
            policy: InterfererPolicy::ExcludeReceiver,
        })?;
        csv.row([
            int(l),
            int(n),
            num(alpha),
            num(analysis.p),
            num(sim.mean_link_prob),
            num(d_cont),
            d_ceil,
            modal_diameter(&sim).to_string(),
        ]);
    }
    let manifest = RunManifest::new(
        &format!("reproduce {name}"),
        json!({
            "receiver": receiver.label(),
            "timing": "sync",
            "power": power_json(power),
            "gamma": 5.0,
            "scene": { "b": 6.0, "lambda": 0.1, "k": 3.5 },
            "rows": rows,
            "trials": args.trials,
        }),
    )
    .seeded(args.seed);
    emit(csv, manifest, args.out.as_deref())
}

/// Synchronous capacity against the link fraction constraint for all three
/// receivers, with and without a transmit power cap.
fn fig6(args: &ReproduceArgs) -> Result<()> {
    let grid: Vec<f64> = (1..=19).map(|i| f64::from(i) * 0.05).collect();
    let budgets = [PowerBudget::Unlimited, PowerBudget::MaxSnr(1e4)];
    let mut csv = Csv::new();
    csv.comment("adcap reproduce fig6 timing=sync gamma=5 b=6 lambda=0.1 k=3.5");
    csv.comment("rows with alpha_max=0 are infeasible under the capped budget");
    csv.header(
        "receiver,power,p[1],alpha_max[users/dim],link_prob[1],threshold[1],required_snr[1]",
    );
    for receiver in RECEIVERS {
        for power in budgets {
            let cfg = reference_system(receiver, power);
            for &p in &grid {
                let res = cfg.max_load(p)?;
                let snr = snr_column(&cfg, &res)?;
                csv.row([
                    receiver.label().into(),
                    power_label(power),
                    num(p),
                    num(res.alpha_max),
                    num(res.link_prob),
                    num(res.threshold),
                    num(snr),
                ]);
            }
        }
    }
    let manifest = RunManifest::new(
        "reproduce fig6",
        json!({
            "timing": "sync",
            "gamma": 5.0,
            "scene": { "b": 6.0, "lambda": 0.1, "k": 3.5 },
            "p_grid": grid,
            "budgets": ["inf", 1e4],
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}

/// Link fraction a hop budget demands, for budgets 1 through 8.
fn fig8(args: &ReproduceArgs) -> Result<()> {
    let arena = reference_arena();
    let mut csv = Csv::new();
    csv.comment("adcap reproduce fig8 b=6 lambda=0.1 k=3.5");
    csv.header("hops[1],range[len],link_prob[1],threshold[1]");
    for hops in 1..=8 {
        let map = adcap_core::diameter_map(&arena, hops)?;
        csv.row([
            int(map.hops),
            num(map.range),
            num(map.link_prob),
            num(map.threshold),
        ]);
    }
    let manifest = RunManifest::new(
        "reproduce fig8",
        json!({
            "scene": { "b": 6.0, "lambda": 0.1, "k": 3.5 },
            "hops": [1, 2, 3, 4, 5, 6, 7, 8],
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}

/// Capacity under a fixed hop budget as the transmit power cap sweeps a log
/// grid, for all three receivers.
fn fig9(args: &ReproduceArgs, name: &str, hops: u32) -> Result<()> {
    let map = adcap_core::diameter_map(&reference_arena(), hops)?;
    let snrs: Vec<f64> = (0..25)
        .map(|i| 10f64.powf(2.0 + 4.0 * f64::from(i) / 24.0))
        .collect();
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap reproduce {name} timing=sync gamma=5 b=6 lambda=0.1 k=3.5 hop_budget={hops} \
         induced_link_prob={}",
        num(map.link_prob),
    ));
    csv.comment("rows with alpha_max=0 are infeasible under that power cap");
    csv.header("receiver,snr_c[1],alpha_max[users/dim],link_prob[1],threshold[1],required_snr[1]");
    for receiver in RECEIVERS {
        for &snr in &snrs {
            let cfg = reference_system(receiver, PowerBudget::MaxSnr(snr));
            let res = cfg.max_load(map.link_prob)?;
            let required = snr_column(&cfg, &res)?;
            csv.row([
                receiver.label().into(),
                num(snr),
                num(res.alpha_max),
                num(res.link_prob),
                num(res.threshold),
                num(required),
            ]);
        }
    }
    let manifest = RunManifest::new(
        &format!("reproduce {name}"),
        json!({
            "timing": "sync",
            "gamma": 5.0,
            "scene": { "b": 6.0, "lambda": 0.1, "k": 3.5 },
            "hop_budget": hops,
            "induced_link_prob": map.link_prob,
            "snr_grid": snrs,
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}

/// Throughput scan on the unit square against the interference-avoidance
/// reference, MMSE receivers, unlimited power, L=32.
fn fig10(args: &ReproduceArgs) -> Result<()> {
    let cfg = SystemConfig {
        arena: Arena::new(1.0, 0.1, Arena::DEFAULT_K).expect("unit arena is valid"),
        receiver: ReceiverKind::Mmse,
        timing: TimingMode::Synchronous,
        power: PowerBudget::Unlimited,
        gamma: 5.0,
        tol: Tolerance::default(),
    };
    let sizes: Vec<u32> = (2..=100).collect();
    let points = cfg.throughput_curves(&sizes, 32)?;
    let mut csv = Csv::new();
    csv.comment(
        "adcap reproduce fig10 receiver=mmse timing=sync power=inf gamma=5 l=32 \
         b=1 lambda=0.1 k=3.5",
    );
    csv.comment(GK_NOTE);
    csv.header(THROUGHPUT_HEADER);
    throughput_rows(&mut csv, &points);
    let manifest = RunManifest::new(
        "reproduce fig10",
        json!({
            "receiver": "mmse",
            "timing": "sync",
            "power": "inf",
            "gamma": 5.0,
            "scene": { "b": 1.0, "lambda": 0.1, "k": 3.5 },
            "l": 32,
            "n_min": 2,
            "n_max": 100,
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}
