//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use ddrb::baselines::log_barrier_omd;
use ddrb::harness::{preset, run_experiment, run_repetition_observed, ExperimentConfig, MetaSpec, Selector, PRESET_NAMES};
use ddrb::meta::{conc_width, BalanceAudit, BalancingParams, Variant};
use ddrb::metrics::{monotonic_coefficient, regret_coefficient};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn config(name: &str, meta: &str, reps: usize) -> ExperimentConfig {
    let mut cfg = preset(name).expect("preset");
    cfg.repetitions = reps;
    cfg.meta = MetaSpec::from_override(meta, cfg.horizon).expect("meta");
    cfg.resolve().expect("config")
}

fn mean_final(name: &str, meta: &str, reps: usize) -> f64 {
    let traces = run_experiment(&config(name, meta, reps), None).expect("run");
    traces.iter().map(|t| t.final_regret()).sum::<f64>() / traces.len() as f64
}

fn criterion_1() -> Outcome {
    let ed2rb = mean_final("exp4", "ed2rb", 100);
    let d3rb = mean_final("exp4", "d3rb", 100);
    let corral = mean_final("exp4", "corral", 100);
    Outcome {
        pass: ed2rb < 0.6 * corral && d3rb < 0.6 * corral,
        detail: format!("exp4 T=1000 R=100: ED2RB {ed2rb:.1}, D3RB {d3rb:.1}, 0.6 x Corral {:.1}", 0.6 * corral),
    }
}

fn criterion_2() -> Outcome {
    let d3rb = mean_final("exp1", "d3rb", 50);
    let ed2rb = mean_final("exp1", "ed2rb", 50);
    let exp3 = mean_final("exp1", "exp3", 50);
    Outcome {
        pass: d3rb < 0.25 * exp3 && ed2rb < 0.25 * exp3,
        detail: format!("exp1 T=20000 R=50: D3RB {d3rb:.1}, ED2RB {ed2rb:.1}, 0.25 x EXP3 {:.1}", 0.25 * exp3),
    }
}

fn criterion_3() -> Outcome {
    let ucb = mean_final("exp2", "ucb", 50);
    let corral = mean_final("exp2", "corral", 50);
    let ed2rb = mean_final("exp2", "ed2rb", 50);
    let grid = mean_final("exp2", "rb-grid", 50);
    Outcome {
        pass: ucb < corral && ed2rb < grid,
        detail: format!("exp2 T=10000 R=50: UCB {ucb:.1} vs Corral {corral:.1}; ED2RB {ed2rb:.1} vs RB-Grid {grid:.1}"),
    }
}

fn criterion_4() -> Outcome {
    let ed2rb = mean_final("fig1", "ed2rb", 100);
    let c3 = mean_final("fig1", "single:0", 100);
    let c4 = mean_final("fig1", "single:1", 100);
    let bound = 1.25 * c3.min(c4);
    Outcome {
        pass: ed2rb <= bound,
        detail: format!("fig1 T=10000 R=100: ED2RB {ed2rb:.1}, UCB c=3 {c3:.1}, UCB c=4 {c4:.1}, bound {bound:.1}"),
    }
}

/// Presets whose ambient dimension is 100 run a reduced sweep: LinTS costs
/// O(d³) per action there.
fn sweep(cfg: &mut ExperimentConfig) -> bool {
    if cfg.environment.is_linear() && cfg.environment.width() >= 100 {
        cfg.repetitions = 5;
        cfg.horizon = 2_000;
        true
    } else {
        false
    }
}

fn criterion_5() -> Outcome {
    let mut violations = Vec::new();
    let mut runs = 0usize;
    let mut reduced = Vec::new();
    for name in PRESET_NAMES {
        for meta in ["d3rb", "ed2rb"] {
            let mut cfg = preset(name).expect("preset");
            if sweep(&mut cfg) && meta == "d3rb" {
                reduced.push(name);
            }
            cfg.meta = MetaSpec::from_override(meta, cfg.horizon).expect("meta");
            let cfg = cfg.resolve().expect("config");
            let found: Vec<String> = (0..cfg.repetitions)
                .into_par_iter()
                .flat_map_iter(|rep| {
                    let mut audit = BalanceAudit::new(cfg.learner_count());
                    run_repetition_observed(&cfg, rep, |rec| {
                        if let (Selector::Balancing(state), Some(step)) = (rec.selector, rec.step) {
                            audit.observe(state, step);
                        }
                    })
                    .expect("run");
                    audit
                        .violations()
                        .iter()
                        .map(|v| format!("{name}/{meta} rep {rep} round {} learner {}: {}", v.round, v.learner, v.what))
                        .collect::<Vec<_>>()
                })
                .collect();
            runs += cfg.repetitions;
            violations.extend(found);
        }
    }
    for v in violations.iter().take(10) {
        println!("    {v}");
    }
    Outcome {
        pass: violations.is_empty(),
        detail: format!(
            "{runs} runs over {} presets x {{D3RB, ED2RB}} ({} reduced to R=5, T=2000): {} violations",
            PRESET_NAMES.len(),
            reduced.join(", "),
            violations.len()
        ),
    }
}

#[derive(Default)]
struct OracleReport {
    covered: usize,
    violations: Vec<String>,
}

/// Runs `variant` on the expA environment and checks the oracle bounds on
/// every repetition where the concentration event holds.
fn oracle_bounds(variant: Variant, reps: usize) -> OracleReport {
    let mut cfg = preset("expA").expect("preset");
    cfg.repetitions = reps;
    let params = BalancingParams { d_min: 1.0, delta: 0.1, c: 1.0 };
    cfg.meta = match variant {
        Variant::D3rb => MetaSpec::D3rb { d_min: params.d_min, delta: params.delta, c: params.c },
        Variant::Ed2rb => MetaSpec::Ed2rb { d_min: params.d_min, delta: params.delta, c: params.c },
    };
    let cfg = cfg.resolve().expect("config");
    let m = cfg.learner_count();
    let per_rep: Vec<(bool, Vec<String>)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut realized = vec![0.0; m];
            let mut expected = vec![0.0; m];
            let mut regrets: Vec<Vec<f64>> = vec![Vec::new(); m];
            // d_hat of learner i right after each of its plays
            let mut estimates: Vec<Vec<f64>> = vec![Vec::new(); m];
            let mut event = true;
            run_repetition_observed(&cfg, rep, |rec| {
                let i = rec.learner;
                realized[i] += rec.outcome.reward;
                expected[i] += rec.outcome.value;
                regrets[i].push(rec.outcome.inst_regret);
                let n = regrets[i].len();
                let slack = n as f64 * conc_width(n as u64, m, params.delta, params.c);
                if (realized[i] - expected[i]).abs() > slack {
                    event = false;
                }
                let Selector::Balancing(state) = rec.selector else { unreachable!() };
                estimates[i].push(state.d_hat()[i]);
            })
            .expect("run");
            let mut bad = Vec::new();
            for i in 0..m {
                let d = regret_coefficient(&regrets[i], params.d_min);
                let bounds = match variant {
                    Variant::D3rb => monotonic_coefficient(&d).iter().map(|x| 2.0 * x).collect(),
                    Variant::Ed2rb => d,
                };
                for (k, (d_hat, bound)) in estimates[i].iter().zip(&bounds).enumerate() {
                    if *d_hat > bound + 1e-9 {
                        bad.push(format!("rep {rep} learner {i} play {}: d_hat {d_hat} > bound {bound}", k + 1));
                    }
                }
            }
            (event, bad)
        })
        .collect();
    let mut report = OracleReport::default();
    for (event, bad) in per_rep {
        if event {
            report.covered += 1;
            report.violations.extend(bad);
        }
    }
    report
}

fn criterion_6() -> Outcome {
    let reps = 500;
    let d3 = oracle_bounds(Variant::D3rb, reps);
    let ed = oracle_bounds(Variant::Ed2rb, reps);
    for v in d3.violations.iter().chain(&ed.violations).take(10) {
        println!("    {v}");
    }
    let enough = |r: &OracleReport| r.covered as f64 >= 0.9 * reps as f64;
    Outcome {
        pass: enough(&d3) && enough(&ed) && d3.violations.is_empty() && ed.violations.is_empty(),
        detail: format!(
            "expA R={reps}: event holds on {}/{reps} (D3RB), {}/{reps} (ED2RB); violations on covered reps: {} / {}",
            d3.covered,
            ed.covered,
            d3.violations.len(),
            ed.violations.len()
        ),
    }
}

/// Root of `Σ 1/(1/p_j + η_j(ℓ_j − λ)) = 1` by successively refined grid scans
/// down to a 1e−6 cell; beyond a pole the sum counts as too large.
fn grid_scan_root(p: &[f64], loss: &[f64], eta: &[f64]) -> f64 {
    let excess = |lambda: f64| -> f64 {
        let mut s = 0.0;
        for j in 0..p.len() {
            let denom = 1.0 / p[j] + eta[j] * (loss[j] - lambda);
            if denom <= 0.0 {
                return f64::INFINITY;
            }
            s += 1.0 / denom;
        }
        s - 1.0
    };
    let mut lo = loss.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = loss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if excess(lo) >= 0.0 {
        return lo;
    }
    let cells = 100;
    while hi - lo > 1e-6 {
        let step = (hi - lo) / cells as f64;
        let k = (1..=cells)
            .find(|&k| excess(lo + k as f64 * step) >= 0.0)
            .unwrap_or(cells);
        hi = lo + k as f64 * step;
        lo = hi - step;
    }
    0.5 * (lo + hi)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_lambda: f64 = 0.0;
    let mut worst_simplex: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.random_range(1..=5);
        let raw: Vec<f64> = (0..m).map(|_| 0.05 + rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let loss: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let eta: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..2.0)).collect();
        let step = log_barrier_omd(&p, &loss, &eta).expect("omd");
        worst_lambda = worst_lambda.max((step.lambda - grid_scan_root(&p, &loss, &eta)).abs());
        let sum: f64 = step.p.iter().sum();
        let negative = step.p.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max);
        worst_simplex = worst_simplex.max((sum - 1.0).abs()).max(negative);
    }
    let closed = log_barrier_omd(&[0.5, 0.5], &[4.0, 0.0], &[1.0, 1.0]).expect("omd");
    let closed_err = (closed.lambda - (3.0 - 5f64.sqrt())).abs();
    Outcome {
        pass: worst_lambda <= 1e-6 && worst_simplex <= 1e-10 && closed_err <= 1e-9,
        detail: format!(
            "1000 instances: max |lambda - grid root| {worst_lambda:.2e}, max simplex error {worst_simplex:.2e}; closed form error {closed_err:.2e}"
        ),
    }
}

fn criterion_8() -> Outcome {
    let d = regret_coefficient(&[0.9, 0.9, 0.9], 1.0);
    let expect = [1.0, 1.8 / 2f64.sqrt(), 2.7 / 3f64.sqrt()];
    let mut examples = d.iter().zip(expect).all(|(a, b)| (a - b).abs() <= 1e-9);
    examples &= regret_coefficient(&[0.0; 5], 1.0).iter().all(|x| *x == 1.0);
    examples &= regret_coefficient(&[2.0], 1.0) == vec![2.0];

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(1..100);
        let d_min = rng.random_range(0.01..3.0);
        let regrets: Vec<f64> = (0..len).map(|_| rng.random_range(-0.5..3.0)).collect();
        let d = regret_coefficient(&regrets, d_min);
        let mut total = 0.0;
        for (k, r) in regrets.iter().enumerate() {
            total += r;
            let bound = d[k] * ((k + 1) as f64).sqrt();
            let tight = d[k] <= d_min || (total - bound).abs() <= 1e-9;
            if total > bound + 1e-9 || !tight {
                failures += 1;
                break;
            }
        }
    }
    Outcome {
        pass: examples && failures == 0,
        detail: format!("examples reproduce: {examples}; 10000 random sequences, {failures} failures"),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exp4 ordering vs Corral", criterion_1),
        ("exp1 self-selection vs EXP3", criterion_2),
        ("exp2 sanity", criterion_3),
        ("fig1 meta beats base learners", criterion_4),
        ("balance invariants", criterion_5),
        ("oracle coefficient bounds", criterion_6),
        ("log-barrier OMD oracle", criterion_7),
        ("regret coefficient definition", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{verdict}] {name}: {} ({:.1?})",
            k + 1,
            outcome.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
