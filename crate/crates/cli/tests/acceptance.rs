//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test -p tsch-cli --test acceptance -- 1 2 3`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsch_cli::pipeline::{self, PipelineSummary};
use tsch_cli::{Cli, Command};
use tsch_core::analysis::{autocorrelation, confusion, energy, metrics, ConfusionMatrix, EnergyProfile};
use tsch_core::dataset::{split, windows, LinkTrace, WindowSet, WindowSpec};
use tsch_core::network::{Edge, Flow, NetworkConfig, NodeId, ScheduledCell, SimParams, SlotframeSchedule, Topology};
use tsch_core::predictor::{classify, evaluate_scores, train, MlpModel, TrainConfig};
use tsch_core::sim::{run, trace_of};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Results table of the reference study: (TP, FN, FP, TN) per level.
const REFERENCE_CM: [(u64, u64, u64, u64); 4] = [
    (48444, 13631, 0, 2937035),
    (92363, 32017, 17034, 2857696),
    (167481, 81728, 52643, 2697258),
    (312544, 186919, 163289, 2336358),
];
/// Accuracy, precision, recall, F1 as printed (3 decimals).
const REFERENCE_METRICS: [[&str; 4]; 4] = [
    ["0.995", "1.000", "0.780", "0.877"],
    ["0.984", "0.844", "0.743", "0.790"],
    ["0.955", "0.761", "0.672", "0.714"],
    ["0.883", "0.657", "0.626", "0.641"],
];
/// P_tx, P_rx, P_listen, P_listen without prediction, in microwatts.
const REFERENCE_POWER_UW: [[f64; 4]; 4] = [
    [2.73, 2.91, 0.00, 66.88],
    [5.46, 5.83, 0.39, 65.46],
    [10.94, 11.68, 1.20, 62.62],
    [21.92, 23.41, 3.72, 56.92],
];
const REFERENCE_TEST_WINDOWS: u64 = 2_999_110;
const REFERENCE_TEST_SAMPLES: u64 = 3_000_000;
const T_MATRIX_S: f64 = 2.02;

fn cm_of(c: (u64, u64, u64, u64)) -> ConfusionMatrix {
    ConfusionMatrix {
        tp: c.0,
        fn_: c.1,
        fp: c.2,
        tn: c.3,
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    if elapsed > limit {
        Err(format!("{what} took {elapsed:.1?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn metric_reproduction() -> Check {
    let t0 = Instant::now();
    for (l, (&c, want)) in REFERENCE_CM.iter().zip(&REFERENCE_METRICS).enumerate() {
        let m = metrics(&cm_of(c)).map_err(|e| e.to_string())?;
        let got = [
            Some(m.accuracy),
            m.precision,
            m.recall,
            m.f1,
        ]
        .map(|v| v.map_or("undefined".to_string(), |x| format!("{x:.3}")));
        ensure!(got == *want, "level {}: got {got:?}, want {want:?}", l + 1);
    }
    within(t0.elapsed(), Duration::from_secs(1), "metrics")?;
    Ok("all 16 ratios match at 3 decimals".into())
}

fn energy_reproduction() -> Check {
    let t0 = Instant::now();
    let profile = EnergyProfile::from_microjoules(266.0, 284.0, 138.0);
    let mut worst: f64 = 0.0;
    for (l, (&c, want)) in REFERENCE_CM.iter().zip(&REFERENCE_POWER_UW).enumerate() {
        let r = energy(&cm_of(c), &profile, REFERENCE_TEST_SAMPLES, T_MATRIX_S).map_err(|e| e.to_string())?;
        for (g, w) in r.microwatts().iter().zip(want) {
            let d = (g - w).abs();
            worst = worst.max(d);
            ensure!(d <= 0.01 + 1e-12, "level {}: got {g:.4} uW, want {w:.2} uW", l + 1);
        }
    }
    within(t0.elapsed(), Duration::from_secs(1), "energy")?;
    Ok(format!("16 cells within 0.01 uW (worst {worst:.4})"))
}

fn internal_consistency() -> Check {
    for (l, &c) in REFERENCE_CM.iter().enumerate() {
        let total = cm_of(c).total();
        ensure!(
            total == REFERENCE_TEST_WINDOWS && total == REFERENCE_TEST_SAMPLES - 890,
            "level {}: matrix sums to {total}",
            l + 1
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    for i in 0..300 {
        let n_p = if i % 10 == 0 { 890 } else { rng.random_range(1..=200) };
        let n = match i % 3 {
            0 => n_p + 1,
            _ => n_p + 1 + rng.random_range(0..3000),
        };
        let density: f64 = rng.random();
        let trace = LinkTrace::from_bits(Edge::new(1, 2), 1, (0..n).map(|_| rng.random_bool(density)));
        let spec = WindowSpec::new(n_p).map_err(|e| e.to_string())?;
        let it = windows(&trace, spec).map_err(|e| e.to_string())?;
        ensure!(it.len() == n - n_p, "N={n}, n_p={n_p}: iterator reports {}", it.len());
        let count = it.count();
        ensure!(count == n - n_p, "N={n}, n_p={n_p}: {count} windows");
        let set = WindowSet::new(&trace, spec).map_err(|e| e.to_string())?;
        ensure!(set.len() == n - n_p, "N={n}, n_p={n_p}: set of {}", set.len());
        let short = trace.slice(0, n_p).map_err(|e| e.to_string())?;
        ensure!(windows(&short, spec).is_err(), "N = n_p = {n_p} must be rejected");
        cases += 1;
    }
    Ok(format!("4 matrices sum to {REFERENCE_TEST_WINDOWS}; {cases} synthetic traces give N - n_p windows"))
}

/// `R_k` for `k = 0..=max_lag` by AND-ing the packed sequence with its own shift.
fn shifted_popcounts(bits: &[bool], max_lag: usize) -> Vec<u64> {
    let n = bits.len();
    let words = n.div_ceil(64);
    let mut w = vec![0u64; words + 2];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        w[i / 64] |= 1 << (i % 64);
    }
    (0..=max_lag)
        .map(|k| {
            let (q, r) = (k / 64, k % 64);
            let mut sum = 0u64;
            for i in 0..words.saturating_sub(q) {
                let hi = if r == 0 { 0 } else { w[i + q + 1] << (64 - r) };
                let shifted = (w[i + q] >> r) | hi;
                sum += (w[i] & shifted).count_ones() as u64;
            }
            sum
        })
        .collect()
}

fn naive_lag(bits: &[bool], k: i64) -> u64 {
    let n = bits.len() as i64;
    (0..n)
        .filter(|&i| (0..n).contains(&(i + k)) && bits[i as usize] && bits[(i + k) as usize])
        .count() as u64
}

fn autocorrelation_oracle() -> Check {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (lo, hi) = (2f64.ln(), 1e5f64.ln());
    let mut longest = 0;
    let mut naive_checked = 0;
    for case in 0..1000 {
        let n = (rng.random_range(lo..=hi).exp().round() as usize).clamp(2, 100_000);
        longest = longest.max(n);
        let density = 10f64.powf(rng.random_range(-3.0..0.0));
        let mut bits: Vec<bool> = (0..n).map(|_| rng.random_bool(density)).collect();
        let forced = rng.random_range(0..n);
        bits[forced] = true;
        let trace = LinkTrace::from_bits(Edge::new(1, 2), 1, bits.iter().copied());
        let got = autocorrelation(&trace).map_err(|e| format!("case {case}: {e}"))?;
        let max_lag = n / 2;
        ensure!(got.max_lag() == max_lag, "case {case}: max lag {} for N={n}", got.max_lag());
        let want = shifted_popcounts(&bits, max_lag);
        if n <= 3000 {
            for k in 0..=max_lag as i64 {
                let (pos, neg) = (naive_lag(&bits, k), naive_lag(&bits, -k));
                ensure!(pos == want[k as usize] && neg == pos, "case {case}: oracle disagrees at lag {k}");
            }
            naive_checked += 1;
        }
        let r0 = want[0] as f64;
        ensure!(got.rho_at(0) == Some(1.0), "case {case}: rho_0 = {:?}", got.rho_at(0));
        let mut best: Option<f64> = None;
        for k in 0..=max_lag {
            let expect = want[k] as f64 / r0;
            let rho = got.rho_at(k as i64).unwrap();
            ensure!(
                (rho - expect).abs() <= 1e-9 * expect.abs() || (expect == 0.0 && rho == 0.0),
                "case {case}: N={n} lag {k}: {rho} vs {expect}"
            );
            ensure!((0.0..=1.0).contains(&rho), "case {case}: rho_{k} = {rho}");
            ensure!(got.rho_at(-(k as i64)) == Some(rho), "case {case}: asymmetric at lag {k}");
            if k > 0 {
                best = Some(best.map_or(expect, |b: f64| b.max(expect)));
            }
        }
        ensure!(
            got.rho_max == best,
            "case {case}: rho_max {:?}, expected {best:?}",
            got.rho_max
        );
    }
    within(t0.elapsed(), Duration::from_secs(120), "autocorrelation")?;
    Ok(format!(
        "1000 sequences (N up to {longest}, {naive_checked} also against the naive sum) in {:.1?}",
        t0.elapsed()
    ))
}

/// Hidden pre-activations of `model` for `x`, from the flat parameter layout.
fn pre_activations(params: &[f64], n_in: usize, n_hidden: usize, x: &[f64]) -> Vec<f64> {
    (0..n_hidden)
        .map(|j| params[n_in * n_hidden + j] + (0..n_in).map(|i| x[i] * params[i * n_hidden + j]).sum::<f64>())
        .collect()
}

fn gradient_check() -> Check {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut models = 0;
    while models < 100 {
        let n_in = rng.random_range(1..=24);
        let n_hidden = rng.random_range(1..=8);
        let n_samples = rng.random_range(1..=8);
        let n_params = n_in * n_hidden + 2 * n_hidden + 1;
        let params: Vec<f64> = (0..n_params).map(|_| rng.random_range(-1.0..1.0)).collect();
        let binary = rng.random_bool(0.5);
        let inputs: Vec<Vec<f64>> = (0..n_samples)
            .map(|_| {
                (0..n_in)
                    .map(|_| if binary { f64::from(rng.random_bool(0.3)) } else { rng.random_range(-1.0..1.0) })
                    .collect()
            })
            .collect();
        let targets: Vec<f64> = (0..n_samples).map(|_| f64::from(rng.random_bool(0.5))).collect();
        // A perturbation of h moves any pre-activation by at most h, so keeping
        // them away from zero keeps every ReLU on the same side.
        let near_kink = inputs
            .iter()
            .any(|x| pre_activations(&params, n_in, n_hidden, x).iter().any(|z| z.abs() < 1e-3));
        if near_kink {
            continue;
        }
        let model = MlpModel::from_params(n_in, n_hidden, &params).map_err(|e| e.to_string())?;
        let (_, analytic) = model.dense_gradient(&inputs, &targets);
        for (i, &a) in analytic.values.iter().enumerate() {
            let mut plus = params.clone();
            plus[i] += h;
            let mut minus = params.clone();
            minus[i] -= h;
            let lp = MlpModel::from_params(n_in, n_hidden, &plus).unwrap().dense_loss(&inputs, &targets);
            let lm = MlpModel::from_params(n_in, n_hidden, &minus).unwrap().dense_loss(&inputs, &targets);
            let numeric = (lp - lm) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            ensure!(
                rel < 1e-5,
                "model {models} ({n_in}->{n_hidden}->1) parameter {i}: analytic {a:e}, numeric {numeric:e}"
            );
        }
        models += 1;
    }
    within(t0.elapsed(), Duration::from_secs(60), "gradient check")?;
    Ok(format!("100 models, worst relative error {worst:.2e}"))
}

/// Two-node network: one cell at slot 10 carrying a single flow.
fn single_link(period: u64, eps: (f64, f64), n_try: u32, frames: u64, seed: u64) -> (NetworkConfig, SimParams) {
    let mut cfg = NetworkConfig::reference_tree();
    cfg.topology = Topology::new(NodeId(2), [(NodeId(1), NodeId(2))]).unwrap();
    cfg.schedule = SlotframeSchedule::new(101, 16, vec![ScheduledCell::new(10, 0, 1, 2)]);
    cfg.set_flows(vec![Flow::new(period, 0, vec![NodeId(1), NodeId(2)]).unwrap()]);
    cfg.analysis_links.clear();
    let params = SimParams {
        eps_frame: eps.0,
        eps_ack: eps.1,
        n_try,
        duration_slots: frames * 101,
        seed,
        ..SimParams::default()
    };
    (cfg, params)
}

fn simulator_statistics() -> Check {
    let t0 = Instant::now();
    let mut runs = 0;
    let mut flows_checked = 0;
    let mut dropped_total = 0;
    let mut check = |cfg: &NetworkConfig, params: &SimParams| -> Result<(), String> {
        let out = run(cfg, params).map_err(|e| e.to_string())?;
        for (i, f) in out.flows.iter().enumerate() {
            ensure!(
                f.generated == f.delivered + f.dropped + f.in_flight,
                "seed {} flow {i}: {} != {} + {} + {}",
                params.seed,
                f.generated,
                f.delivered,
                f.dropped,
                f.in_flight
            );
            dropped_total += f.dropped;
            flows_checked += 1;
        }
        runs += 1;
        Ok(())
    };
    for seed in 1..=5 {
        let mut cfg = NetworkConfig::reference_tree();
        cfg.set_seed(seed).map_err(|e| e.to_string())?;
        let params = SimParams {
            duration_slots: 200_000 * 101 + seed * 37,
            seed,
            ..cfg.params.clone()
        };
        check(&cfg, &params)?;
        let harsh = SimParams {
            eps_frame: 0.5,
            eps_ack: 0.6,
            n_try: 2,
            ..params
        };
        check(&cfg, &harsh)?;
    }
    for seed in 1..=5 {
        let (cfg, params) = single_link(150, (0.6, 0.7), 3, 50_000, seed);
        check(&cfg, &params)?;
    }
    ensure!(dropped_total > 0, "no run exercised the drop path");

    let (cfg, params) = single_link(202, (0.874, 0.92), 16, 200_400, 1);
    let out = run(&cfg, &params).map_err(|e| e.to_string())?;
    let f = &out.flows[0];
    ensure!(f.delivered >= 100_000, "only {} deliveries", f.delivered);
    let mean = f.transmissions as f64 / f.delivered as f64;
    ensure!(
        (mean / 1.2437 - 1.0).abs() <= 0.01,
        "mean transmissions per delivery {mean:.4}, expected 1.2437 +- 1%"
    );
    within(t0.elapsed(), Duration::from_secs(120), "simulator checks")?;
    Ok(format!(
        "{flows_checked} flows over {runs} runs conserve packets ({dropped_total} drops); {mean:.4} transmissions per delivery over {} deliveries",
        f.delivered
    ))
}

fn noise_free_learnability() -> Check {
    let t0 = Instant::now();
    let (train_len, test_len) = (100_000 + 890, 30_000);
    let (cfg, params) = single_link(297 * 101, (1.0, 1.0), 16, (train_len + test_len) as u64, 1);
    let out = run(&cfg, &params).map_err(|e| e.to_string())?;
    let trace = trace_of(&out, Edge::new(1, 2)).map_err(|e| e.to_string())?;
    let (tr, te) = split(trace, train_len, test_len).map_err(|e| e.to_string())?;
    let spec = WindowSpec::default();
    let train_set = WindowSet::new(&tr, spec).map_err(|e| e.to_string())?;
    ensure!(train_set.len() == 100_000, "{} training samples", train_set.len());
    let model = train(&train_set, &TrainConfig::default()).map_err(|e| e.to_string())?.model;
    let test_set = WindowSet::new(&te, spec).map_err(|e| e.to_string())?;
    let scores = evaluate_scores(&model, &test_set).map_err(|e| e.to_string())?;
    let flags: Vec<bool> = scores.iter().map(|&s| classify(s, 0.5)).collect();
    let targets: Vec<bool> = (0..test_set.len()).map(|j| test_set.target(j)).collect();
    let cm = confusion(&flags, &targets).map_err(|e| e.to_string())?;
    let acc = metrics(&cm).map_err(|e| e.to_string())?.accuracy;
    ensure!(acc >= 0.999, "held-out accuracy {acc:.5} ({cm:?})");
    within(t0.elapsed(), Duration::from_secs(300), "learnability run")?;
    Ok(format!(
        "held-out accuracy {acc:.5} over {} windows (tp {}, fn {}, fp {}) in {:.1?}",
        cm.total(),
        cm.tp,
        cm.fn_,
        cm.fp,
        t0.elapsed()
    ))
}

fn run_pipeline(out: &Path) -> Result<(PipelineSummary, Duration), String> {
    let args = [
        "tschml",
        "pipeline",
        "--duration-days",
        "60",
        "--seed",
        "1",
        "--train-fraction",
        "0.8",
        "--out",
        out.to_str().unwrap(),
    ];
    let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
    let Command::Pipeline(p) = cli.command else {
        unreachable!()
    };
    let t0 = Instant::now();
    let summary = pipeline::run(&p).map_err(|e| e.to_string())?;
    Ok((summary, t0.elapsed()))
}

fn non_increasing(name: &str, values: &[Option<f64>]) -> Result<(), String> {
    let v: Vec<f64> = values
        .iter()
        .map(|x| x.ok_or_else(|| format!("{name} undefined at some level")))
        .collect::<Result<_, _>>()?;
    ensure!(v.windows(2).all(|w| w[1] <= w[0]), "{name} not non-increasing with level: {v:.4?}");
    Ok(())
}

fn trend_reproduction(summary: &PipelineSummary, elapsed: Duration) -> Check {
    let r = &summary.reports;
    let links: Vec<(Edge, Option<usize>)> = r.iter().map(|x| (x.edge, x.level)).collect();
    let expected = vec![
        (Edge::new(16, 24), Some(1)),
        (Edge::new(24, 28), Some(2)),
        (Edge::new(28, 30), Some(3)),
        (Edge::new(30, 31), Some(4)),
    ];
    ensure!(links == expected, "analyzed links {links:?}");
    non_increasing("rho_max", &r.iter().map(|x| x.rho_max).collect::<Vec<_>>())?;
    non_increasing("accuracy", &r.iter().map(|x| Some(x.metrics.accuracy)).collect::<Vec<_>>())?;
    non_increasing("F1", &r.iter().map(|x| x.metrics.f1).collect::<Vec<_>>())?;
    non_increasing("AUC", &r.iter().map(|x| x.auc).collect::<Vec<_>>())?;
    let p1 = r[0].metrics.precision.ok_or("level-1 precision undefined")?;
    ensure!(p1 >= 0.95, "level-1 precision {p1:.4}");
    for x in r {
        let p = &x.power_uw;
        ensure!(
            p.p_listen < 0.15 * p.p_listen_no_ml,
            "level {:?}: P_listen {:.3} uW vs {:.3} uW without prediction",
            x.level,
            p.p_listen,
            p.p_listen_no_ml
        );
    }
    within(elapsed, Duration::from_secs(3600), "60-day pipeline")?;
    let row = |f: &dyn Fn(&tsch_cli::report::LinkReport) -> Option<f64>| {
        r.iter()
            .map(|x| f(x).map_or("-".into(), |v| format!("{v:.3}")))
            .collect::<Vec<_>>()
            .join("/")
    };
    Ok(format!(
        "rho_max {} acc {} F1 {} AUC {} precision(l=1) {p1:.3} in {elapsed:.0?}",
        row(&|x| x.rho_max),
        row(&|x| Some(x.metrics.accuracy)),
        row(&|x| x.metrics.f1),
        row(&|x| x.auc),
    ))
}

fn artifact_hashes(root: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != tsch_cli::manifest::MANIFEST_FILE) {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, tsch_cli::manifest::sha256_file(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn determinism(a: &PipelineSummary, b: &PipelineSummary) -> Check {
    a.manifest.verify(&a.out).map_err(|e| e.to_string())?;
    b.manifest.verify(&b.out).map_err(|e| e.to_string())?;
    let (ha, hb) = (artifact_hashes(&a.out)?, artifact_hashes(&b.out)?);
    ensure!(
        ha.keys().eq(hb.keys()),
        "artifact sets differ: {:?} vs {:?}",
        ha.keys().collect::<Vec<_>>(),
        hb.keys().collect::<Vec<_>>()
    );
    let differing: Vec<&String> = ha.keys().filter(|k| ha[*k] != hb[*k]).collect();
    ensure!(differing.is_empty(), "differing artifacts: {differing:?}");
    for kind in [".tslt", ".tsmc", "report.json"] {
        ensure!(ha.keys().any(|k| k.ends_with(kind)), "no {kind} artifact compared");
    }
    Ok(format!("{} artifacts byte-identical across two runs", ha.len()))
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut failed = 0;
    let mut report = |n: u32, name: &str, t: Instant, result: Check| {
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS criterion {n} {name}: {msg} [{secs:.2}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {n} {name}: {msg} [{secs:.2}s]");
            }
        }
    };
    let simple: [(u32, &str, fn() -> Check); 7] = [
        (1, "metric reproduction", metric_reproduction),
        (2, "energy reproduction", energy_reproduction),
        (3, "internal consistency", internal_consistency),
        (4, "autocorrelation oracle", autocorrelation_oracle),
        (5, "gradient check", gradient_check),
        (6, "simulator conservation and retries", simulator_statistics),
        (7, "noise-free learnability", noise_free_learnability),
    ];
    for (n, name, f) in simple {
        if wanted(n) {
            let t = Instant::now();
            report(n, name, t, f());
        }
    }
    if wanted(8) || wanted(9) {
        let dir = tempfile::tempdir().expect("temporary directory");
        let t = Instant::now();
        let first = run_pipeline(&dir.path().join("a"));
        if wanted(8) {
            let result = first.as_ref().map_err(Clone::clone).and_then(|(s, d)| trend_reproduction(s, *d));
            report(8, "trend reproduction", t, result);
        }
        if wanted(9) {
            let t = Instant::now();
            let result = first.as_ref().map_err(Clone::clone).and_then(|(a, _)| {
                let (b, _) = run_pipeline(&dir.path().join("b"))?;
                determinism(a, &b)
            });
            report(9, "determinism", t, result);
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
