//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Tolerances and time budgets are pinned in the constants of each check.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hyperwalk::increments::{zero_drift_check, IncrementLaw, RadialProfile};
use hyperwalk::lamperti::{
    classify_constant_curvature, classify_pinched, estimate_moments, heavytail_bounds, DRIFT_BAND_SIGMAS,
};
use hyperwalk::simulator::{run_ensemble, run_walk, Mode, WalkConfig};
use hyperwalk::stats::{ks_two_sample, ks_two_sample_critical, SampleStats};
use hyperwalk_cli::commands::walk_config_for;
use hyperwalk_cli::parse_config;
use hyperwalk_cli::validate::{coupling_suite, exact_increment_suite, sandwich_suite, Fault, ValidateOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn constant(c: f64) -> RadialProfile {
    RadialProfile::Constant(c)
}

fn elliptic(a: f64, b: f64, d: usize) -> IncrementLaw {
    IncrementLaw::elliptic(constant(a), constant(b), d).unwrap()
}

fn options(tuples: usize) -> ValidateOptions {
    ValidateOptions { tuples, samples: 1000, seed: 2024, fault: Fault::None }
}

fn exact_increment() -> Outcome {
    let s = exact_increment_suite(&options(10_000));
    outcome(s.passed, format!("worst relative error {:.2e} < 1e-9 over {} tuples ({})", s.worst, s.checked, s.worst_input))
}

fn sandwich() -> Outcome {
    let s = sandwich_suite();
    outcome(s.passed, format!("worst violation {:.2e} <= 1e-12 over {} points; {}", s.worst, s.checked, s.detail))
}

fn elliptic_moments() -> Outcome {
    let law = elliptic(2.0, 1.0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut tot, mut rad) = (SampleStats::new(), SampleStats::new());
    for _ in 0..1_000_000 {
        let dec = law.sample(10.0, &mut rng).decomposition;
        tot.push(dec.d_tot().powi(2));
        rad.push(dec.d_rad().powi(2));
    }
    let (t, r) = (tot.estimate(), rad.estimate());
    let zt = (t.value - 6.0).abs() / t.std_err;
    let zr = (r.value - 4.0).abs() / r.std_err;
    outcome(
        zt <= 3.0 && zr <= 3.0,
        format!("E[d_tot^2] = {:.6} ± {:.4} SE ({zt:.3} SE from 6), E[d_rad^2] = {:.6} ± {:.4} SE ({zr:.3} SE from 4)", t.value, t.std_err, r.value, r.std_err),
    )
}

fn heavy_tail() -> Outcome {
    let law = IncrementLaw::heavy_tail(4.0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = heavytail_bounds(&law, 1.0, 100.0, 1_000_000, &mut rng).unwrap();
    let lambda = 100f64.cbrt();
    let first_bound = 3.0 / (8.0 * lambda * lambda);
    let star = b.transverse.value <= 2.0 * 4.0 * (-lambda).exp() + 3.0 * b.transverse.std_err;
    let star2 = b.first.value >= first_bound - 3.0 * b.first.std_err;
    let drift = zero_drift_check(&law, 100.0, 1_000_000, &mut rng).unwrap();
    let zero = drift.within_band(DRIFT_BAND_SIGMAS);
    outcome(
        star && star2 && zero,
        format!(
            "upper bound E[d_tot^2(1-phi^2)] = {:.3e} <= 2m e^-lambda = {:.3e}; lower bound E[F] = {:.3e} >= 3/(8 lambda^2) = {:.3e} (r = 100, 3 SE slack); zero drift {}",
            b.transverse.value,
            b.transverse_bound,
            b.first.value,
            first_bound,
            if zero { "ok" } else { "rejected" }
        ),
    )
}

fn ensemble(text: &str) -> hyperwalk::simulator::EnsembleStats {
    let cfg = parse_config(text, Path::new(".")).unwrap();
    run_ensemble(&walk_config_for(&cfg).unwrap(), None).unwrap().1
}

fn walk_ensembles() -> Outcome {
    // (a) transient ensemble: final R > 100 and no returns after burn-in.
    let cfg = parse_config("law.a = const:1\nlaw.b = const:1\nwalk.steps = 5000\nwalk.walks = 200\nseed = 51\n", Path::new("."))
        .unwrap();
    let (records, _) = run_ensemble(&walk_config_for(&cfg).unwrap(), None).unwrap();
    let good = records.iter().filter(|t| t.final_r > 100.0 && t.returns == 0).count() as f64 / records.len() as f64;
    // (b) recurrent ensemble.
    let rec = ensemble("law.a = const:1\nlaw.b = powerdecay:1,1\nwalk.steps = 100000\nwalk.walks = 50\nseed = 52\n");
    // (c) flat against hyperbolic with the same law and seed.
    let flat = ensemble("curvature.kind = euclidean\nlaw.a = const:1.2\nwalk.steps = 5000\nwalk.walks = 200\nseed = 53\n");
    let hyp = ensemble("law.a = const:1.2\nwalk.steps = 5000\nwalk.walks = 200\nseed = 53\n");
    let gap = flat.returned.p() - hyp.returned.p();
    let bands = flat.returned.half_width() + hyp.returned.half_width();
    let (a, b, c) = (good >= 0.95, rec.median_returns >= 10.0, gap > bands);
    outcome(
        a && b && c,
        format!(
            "(a) {:.1}% escaped without return [{}]; (b) median returns {} [{}]; (c) return fraction {:.3} vs {:.3}, gap {:.3} > {:.3} [{}]",
            100.0 * good,
            pf(a),
            rec.median_returns,
            pf(b),
            flat.returned.p(),
            hyp.returned.p(),
            gap,
            bands,
            pf(c)
        ),
    )
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn classify_exit(text: &str, dir: &Path, name: &str) -> i32 {
    let cfg = dir.join(format!("{name}.conf"));
    fs::write(&cfg, text).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hyperwalk"))
        .env_remove("HYPERWALK_SEED")
        .args(["classify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(name))
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn classifier_agreement() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let inward = classify_exit(
        "law.kind = inward\nlaw.n = 1\ngrid.start = 10\ngrid.stop = 1000\ngrid.count = 12\nseed = 61\n",
        tmp.path(),
        "inward",
    );
    let heavy = classify_exit(
        "law.kind = heavytail\nlaw.m = 4\ngrid.start = 100\ngrid.stop = 1000\ngrid.count = 6\nmc.samples = 1000000\nseed = 62\n",
        tmp.path(),
        "heavy",
    );
    let decaying = classify_exit("law.b = powerdecay:1,1\nseed = 63\n", tmp.path(), "decaying");
    let stated = inward == 1 && heavy == 1 && decaying == 0;

    let laws = [
        elliptic(1.0, 1.0, 2),
        IncrementLaw::elliptic(constant(1.0), RadialProfile::PowerDecay { c: 1.0, p: 1.0 }, 2).unwrap(),
        elliptic(2.0, 1.0, 3),
        elliptic(1.2, 1.0, 2),
        IncrementLaw::boxed(constant(1.0), constant(1.0), 2).unwrap(),
        IncrementLaw::inward_biased(1.0, 2).unwrap(),
        IncrementLaw::heavy_tail(4.0, 2).unwrap(),
    ];
    let grid: Vec<f64> = (0..8).map(|i| 10.0 * 100f64.powf(i as f64 / 7.0)).collect();
    let mut conflicts = Vec::new();
    let mut compared = 0;
    for (i, law) in laws.iter().enumerate() {
        for k in [0.5, 1.0, 2.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + i as u64);
            let m = estimate_moments(law, k, &grid, 50_000, &mut rng).unwrap();
            let c = classify_constant_curvature(&m, 0.5, 10.0).unwrap().verdict;
            let mut rng = ChaCha8Rng::seed_from_u64(700 + i as u64);
            let p = classify_pinched(law, &constant(k), &constant(k), &grid, 0.5, 10.0, 50_000, &mut rng).unwrap().verdict;
            compared += 1;
            if p.contradicts(c) {
                conflicts.push(format!("{} at k = {k}: pinched {p}, constant {c}", law.name()));
            }
        }
    }
    outcome(
        stated && conflicts.is_empty(),
        format!(
            "exit codes inward {inward}, heavy tail {heavy}, decaying b {decaying} (want 1, 1, 0); {} contradictions in {compared} pinched/constant pairs{}",
            conflicts.len(),
            if conflicts.is_empty() { String::new() } else { format!(": {}", conflicts.join("; ")) }
        ),
    )
}

fn mode_equivalence() -> Outcome {
    let coupled = coupling_suite(&options(0));
    let law = elliptic(1.0, 1.0, 2);
    let model = hyperwalk::geometry::CurvatureModel::hyperbolic(1.0, 2).unwrap();
    let mut cfg = WalkConfig::new(model, law, 200, 10_000, 71);
    let (radial, _) = run_ensemble(&cfg, None).unwrap();
    cfg.mode = Mode::Ambient;
    cfg.seed = 72;
    let (ambient, _) = run_ensemble(&cfg, None).unwrap();
    let a: Vec<f64> = radial.iter().map(|t| t.final_r).collect();
    let b: Vec<f64> = ambient.iter().map(|t| t.final_r).collect();
    let ks = ks_two_sample(&a, &b);
    let crit = ks_two_sample_critical(a.len(), b.len(), 0.01);
    // One more coupled walk far out, where the ambient integrator works hardest.
    let mut far = WalkConfig::new(
        hyperwalk::geometry::CurvatureModel::hyperbolic(1.0, 3).unwrap(),
        elliptic(1.0, 1.0, 3),
        100,
        1,
        73,
    );
    far.start_radius = 150.0;
    far.record_stride = 1;
    let x = run_walk(&far, 0).unwrap();
    far.mode = Mode::Ambient;
    let y = run_walk(&far, 0).unwrap();
    let far_err = x.radii.iter().zip(&y.radii).map(|((_, p), (_, q))| (p - q).abs() / p.max(1.0)).fold(0.0, f64::max);
    outcome(
        coupled.passed && far_err <= 1e-8 && ks < crit,
        format!(
            "coupled worst {:.2e} (far start {far_err:.2e}) <= 1e-8; KS {ks:.4} < {crit:.4} over 2 x 10^4 walks",
            coupled.worst
        ),
    )
}

fn run_cli(args: &[&str], config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_hyperwalk"))
        .env_remove("HYPERWALK_SEED")
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("d.conf");
    fs::write(
        &cfg,
        "dim = 3\nlaw.kind = heavytail\nlaw.m = 4.5\nwalk.steps = 2000\nwalk.walks = 64\nwalk.mode = ambient\n\
         walk.escape_radius = 40\ngrid.start = 20\ngrid.stop = 500\ngrid.count = 5\nmc.samples = 50000\n\
         validate.tuples = 2000\nvalidate.samples = 100000\nseed = 81\n",
    )
    .unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    for cmd in ["simulate", "classify", "moments", "validate"] {
        let runs: Vec<_> = [None, Some("1"), Some("3")]
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let out = tmp.path().join(format!("{cmd}{i}"));
                let mut args = vec![cmd];
                if let Some(w) = w {
                    args.extend(["--workers", w]);
                }
                run_cli(&args, &cfg, &out);
                snapshot(&out)
            })
            .collect();
        files += runs[0].len();
        if runs[0].is_empty() || runs.iter().any(|r| *r != runs[0]) {
            differing.push(cmd);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{files} output files identical across default, 1 and 3 workers{}", if differing.is_empty() {
            String::new()
        } else {
            format!("; differing: {}", differing.join(", "))
        }),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("exact increment vs multiprecision oracle", Duration::from_secs(5), exact_increment),
        ("J sandwich and monotone G", Duration::from_secs(10), sandwich),
        ("elliptic second moments", Duration::from_secs(30), elliptic_moments),
        ("heavy-tail displayed bounds", Duration::from_secs(60), heavy_tail),
        ("transient, recurrent and flat ensembles", Duration::from_secs(300), walk_ensembles),
        ("classifier agreement", Duration::from_secs(120), classifier_agreement),
        ("ambient and radial-only equivalence", Duration::from_secs(60), mode_equivalence),
        ("determinism across reruns and workers", Duration::from_secs(300), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let ok = o.passed && in_time;
        failed += usize::from(!ok);
        println!(
            "criterion {}: {} {name}: {} [{:.1}s, budget {}s{}]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
