//! Handlers for the direct sweep commands.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use serde_json::json;

use adcap_core::simulator::run_monte_carlo;
use adcap_core::{
    CapacityError, CapacityResult, Diameter, DistanceModel, PowerBudget, ReceiverKind, SimConfig,
    SystemConfig, TimingMode, Tolerance,
};

use crate::output::{emit, int, num, Csv, RunManifest};
use crate::{
    CapacityArgs, DiameterMapArgs, LinkProbArgs, ModelArg, SceneArgs, SimulateArgs, ThroughputArgs,
};

pub fn system(
    scene: &SceneArgs,
    receiver: ReceiverKind,
    timing: TimingMode,
    power: PowerBudget,
    gamma: f64,
) -> Result<SystemConfig> {
    Ok(SystemConfig {
        arena: scene.arena()?,
        receiver,
        timing,
        power,
        gamma,
        tol: Tolerance::default(),
    })
}

pub fn power_label(power: PowerBudget) -> String {
    match power {
        PowerBudget::Unlimited => "inf".into(),
        PowerBudget::MaxSnr(s) => num(s),
    }
}

pub fn power_json(power: PowerBudget) -> serde_json::Value {
    match power {
        PowerBudget::Unlimited => json!("inf"),
        PowerBudget::MaxSnr(s) => json!(s),
    }
}

pub fn scene_json(scene: &SceneArgs) -> serde_json::Value {
    json!({ "b": scene.b, "lambda": scene.lambda, "k": scene.k })
}

/// Transmit SNR the emitted operating point itself requires: the single-link
/// floor when the budget already fell short, unbounded when the point sits on
/// the zero-headroom boundary of an uncapped system.
pub fn snr_column(cfg: &SystemConfig, res: &CapacityResult) -> Result<f64> {
    if !res.feasible {
        return Ok(cfg.gamma / res.threshold);
    }
    match cfg.required_snr(res.alpha_max, res.link_prob) {
        Ok(s) => Ok(s),
        Err(CapacityError::SnrUnbounded { .. } | CapacityError::AlphaExceedsLimit { .. }) => {
            Ok(f64::INFINITY)
        }
        Err(e) => Err(e.into()),
    }
}

pub const CAPACITY_HEADER: &str =
    "p[1],alpha_max[users/dim],link_prob[1],threshold[1],required_snr[1]";

pub fn capacity(args: &CapacityArgs) -> Result<()> {
    let cfg = system(
        &args.scene,
        args.link.receiver.into(),
        args.link.timing.into(),
        args.link.power,
        args.link.gamma,
    )?;
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap capacity receiver={} timing={} power={} gamma={} b={} lambda={} k={}",
        cfg.receiver.label(),
        cfg.timing.label(),
        power_label(cfg.power),
        cfg.gamma,
        args.scene.b,
        args.scene.lambda,
        args.scene.k,
    ));
    csv.header(CAPACITY_HEADER);
    let mut first_infeasible = None;
    for &p in &args.p {
        let res = cfg.max_load(p)?;
        let snr = snr_column(&cfg, &res)?;
        csv.row([
            num(p),
            num(res.alpha_max),
            num(res.link_prob),
            num(res.threshold),
            num(snr),
        ]);
        if !res.feasible && first_infeasible.is_none() {
            first_infeasible = Some((p, snr));
        }
    }
    let manifest = RunManifest::new(
        "capacity",
        json!({
            "scene": scene_json(&args.scene),
            "receiver": cfg.receiver.label(),
            "timing": cfg.timing.label(),
            "power": power_json(cfg.power),
            "gamma": cfg.gamma,
            "p": args.p,
        }),
    );
    emit(csv, manifest, args.out.as_deref())?;
    if let Some((p, floor)) = first_infeasible {
        bail!(
            "link fraction {p} is infeasible: a lone link already needs transmit snr {}, \
             above the budget {}",
            num(floor),
            power_label(cfg.power)
        );
    }
    Ok(())
}

pub fn link_prob(args: &LinkProbArgs) -> Result<()> {
    if !args.range.is_empty() {
        return range_prob(args);
    }
    let cfg = system(
        &args.scene,
        args.link.receiver.into(),
        args.link.timing.into(),
        args.link.power,
        args.link.gamma,
    )?;
    let loads: Vec<f64> = if let Some(n) = args.n {
        let l = args.l.expect("clap enforces --l alongside --n");
        if l == 0 {
            bail!("spreading gain must be positive");
        }
        vec![f64::from(n) / f64::from(l)]
    } else {
        args.alpha.clone()
    };
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap link-prob receiver={} timing={} power={} gamma={} b={} lambda={} k={}",
        cfg.receiver.label(),
        cfg.timing.label(),
        power_label(cfg.power),
        cfg.gamma,
        args.scene.b,
        args.scene.lambda,
        args.scene.k,
    ));
    csv.header("alpha[users/dim],link_prob[1],threshold[1]");
    for &alpha in &loads {
        let res = cfg.achievable_prob(alpha)?;
        csv.row([num(alpha), num(res.p), num(res.threshold)]);
    }
    let manifest = RunManifest::new(
        "link-prob",
        json!({
            "scene": scene_json(&args.scene),
            "receiver": cfg.receiver.label(),
            "timing": cfg.timing.label(),
            "power": power_json(cfg.power),
            "gamma": cfg.gamma,
            "alpha": loads,
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}

fn model_label(model: ModelArg) -> &'static str {
    match model {
        ModelArg::Exact => "exact",
        ModelArg::Gaussian => "gaussian",
    }
}

fn range_prob(args: &LinkProbArgs) -> Result<()> {
    let arena = args.scene.arena()?;
    let model = match args.model {
        ModelArg::Exact => DistanceModel::Exact,
        ModelArg::Gaussian => DistanceModel::Gaussian,
    };
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap link-prob model={} b={} lambda={} k={}",
        model_label(args.model),
        args.scene.b,
        args.scene.lambda,
        args.scene.k,
    ));
    csv.header("range[len],link_prob[1],gain_threshold[1]");
    for &d in &args.range {
        if d <= 0.0 || !d.is_finite() {
            bail!("range must be positive and finite, got {d}");
        }
        let p = arena.distance_cdf(model, d);
        let gain = arena.gain_from_distance(d)?;
        csv.row([num(d), num(p), num(gain)]);
    }
    let manifest = RunManifest::new(
        "link-prob",
        json!({
            "scene": scene_json(&args.scene),
            "model": model_label(args.model),
            "range": args.range,
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}

pub fn diameter_map(args: &DiameterMapArgs) -> Result<()> {
    let arena = args.scene.arena()?;
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap diameter-map b={} lambda={} k={}",
        args.scene.b, args.scene.lambda, args.scene.k,
    ));
    csv.header("hops[1],range[len],link_prob[1],threshold[1]");
    for &hops in &args.hops {
        let map = adcap_core::diameter_map(&arena, hops)?;
        csv.row([
            int(map.hops),
            num(map.range),
            num(map.link_prob),
            num(map.threshold),
        ]);
    }
    let manifest = RunManifest::new(
        "diameter-map",
        json!({
            "scene": scene_json(&args.scene),
            "hops": args.hops,
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}

pub fn hist_line(hist: &BTreeMap<Diameter, f64>) -> String {
    hist.iter()
        .map(|(d, frac)| format!("{d}:{}", num(*frac)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = SimConfig {
        arena: args.scene.arena()?,
        receiver: args.receiver.into(),
        power: args.power,
        gamma: args.gamma,
        spreading_gain: args.l,
        nodes: args.n,
        trials: args.trials,
        master_seed: args.seed,
        policy: args.interferers.into(),
    };
    let summary = run_monte_carlo(&cfg)?;
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap simulate receiver={} power={} gamma={} l={} n={} trials={} seed={} \
         interferers={} b={} lambda={} k={}",
        cfg.receiver.label(),
        power_label(cfg.power),
        cfg.gamma,
        cfg.spreading_gain,
        cfg.nodes,
        cfg.trials,
        cfg.master_seed,
        cfg.policy.label(),
        args.scene.b,
        args.scene.lambda,
        args.scene.k,
    ));
    csv.header("trial,link_prob_hat[1],diameter[hops]");
    for outcome in &summary.outcomes {
        csv.row([
            int(outcome.trial),
            num(outcome.link_prob_hat),
            outcome.diameter.to_string(),
        ]);
    }
    csv.comment(&format!("mean_link_prob={}", num(summary.mean_link_prob)));
    csv.comment(&format!(
        "diameter_hist={}",
        hist_line(&summary.diameter_hist)
    ));
    csv.comment(&format!(
        "mutual_diameter_hist={}",
        hist_line(&summary.mutual_diameter_hist)
    ));
    let manifest = RunManifest::new(
        "simulate",
        json!({
            "scene": scene_json(&args.scene),
            "receiver": cfg.receiver.label(),
            "power": power_json(cfg.power),
            "gamma": cfg.gamma,
            "l": cfg.spreading_gain,
            "n": cfg.nodes,
            "trials": cfg.trials,
            "interferers": cfg.policy.label(),
        }),
    )
    .seeded(args.seed);
    emit(csv, manifest, args.out.as_deref())
}

pub const THROUGHPUT_HEADER: &str =
    "n[users],d_cont[hops],d_ceil[hops],thr_cdma_sync[R],thr_cdma_async[R],thr_gk[R]";

/// The reference curve carries an order-of-growth constant only; stated on
/// every emission so nobody reads absolute levels into it.
pub const GK_NOTE: &str =
    "thr_gk = R/sqrt(n ln n) with proportionality constant 1: an order-of-growth \
     reference, not an absolute bound";

pub fn throughput_rows(csv: &mut Csv, points: &[adcap_core::ThroughputPoint]) {
    for pt in points {
        csv.row([
            int(pt.n),
            num(pt.diameter_sync),
            pt.hops_sync.map(int).unwrap_or_else(|| "inf".into()),
            num(pt.cdma_sync),
            num(pt.cdma_async),
            num(pt.gupta_kumar),
        ]);
    }
}

pub fn throughput(args: &ThroughputArgs) -> Result<()> {
    if args.n_min > args.n_max {
        bail!(
            "empty size range: --n-min {} > --n-max {}",
            args.n_min,
            args.n_max
        );
    }
    let cfg = system(
        &args.scene,
        args.receiver.into(),
        TimingMode::Synchronous,
        args.power,
        args.gamma,
    )?;
    let sizes: Vec<u32> = (args.n_min..=args.n_max).collect();
    let points = cfg.throughput_curves(&sizes, args.l)?;
    let mut csv = Csv::new();
    csv.comment(&format!(
        "adcap throughput receiver={} power={} gamma={} l={} b={} lambda={} k={}",
        cfg.receiver.label(),
        power_label(cfg.power),
        cfg.gamma,
        args.l,
        args.scene.b,
        args.scene.lambda,
        args.scene.k,
    ));
    csv.comment(GK_NOTE);
    csv.header(THROUGHPUT_HEADER);
    throughput_rows(&mut csv, &points);
    let manifest = RunManifest::new(
        "throughput",
        json!({
            "scene": scene_json(&args.scene),
            "receiver": cfg.receiver.label(),
            "power": power_json(cfg.power),
            "gamma": cfg.gamma,
            "l": args.l,
            "n_min": args.n_min,
            "n_max": args.n_max,
        }),
    );
    emit(csv, manifest, args.out.as_deref())
}
