//! The four subcommands. Each returns its exit code; errors become exit 3 in `main`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hyperwalk::increments::{zero_drift_check, IncrementLaw, LawKind};
use hyperwalk::lamperti::{
    classify_constant_curvature, classify_euclidean, classify_pinched, elliptic_chain_classify, estimate_moments,
    heavytail_bounds, uniform_ellipticity_transience_check, ClassificationReport, Criterion, MarginRow, Verdict,
    DRIFT_BAND_SIGMAS,
};
use hyperwalk::simulator::{run_ensemble, summary_csv, trajectory_csv, EnsembleStats, WalkConfig};
use hyperwalk::stats::{Estimate, SampleStats};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{load_config, Command, CurvatureSpec, RunConfig};
use crate::validate::{run_all, validate_csv, Fault, ValidateOptions};

/// Exit code for configuration, I/O and numerical errors.
pub const EXIT_ERROR: i32 = 3;
/// Exit code of `validate` when a suite fails.
pub const EXIT_VALIDATION_FAILED: i32 = 1;

/// Everything needed to run one command.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    /// Test hook for `validate`; the binary always passes `Fault::None`.
    pub fault: Fault,
}

/// Loads the config, applies overrides and runs the command, inside a pool
/// of `workers` threads when given.
pub fn execute(inv: &Invocation) -> Result<i32> {
    let mut cfg = load_config(&inv.config)?;
    if let Some(c) = cfg.command {
        if c != inv.command {
            bail!("config sets command = {} but {} was invoked", c.name(), inv.command.name());
        }
    }
    if let Some(s) = inv.seed {
        cfg.seed = s;
    }
    let run = || dispatch(inv, &cfg);
    match inv.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .context("cannot start worker pool")?
            .install(run),
        None => run(),
    }
}

fn dispatch(inv: &Invocation, cfg: &RunConfig) -> Result<i32> {
    fs::create_dir_all(&inv.out).with_context(|| format!("cannot create output directory {}", inv.out.display()))?;
    match inv.command {
        Command::Simulate => simulate(cfg, &inv.out),
        Command::Classify => classify(cfg, &inv.out),
        Command::Validate => validate(cfg, &inv.out, inv.fault),
        Command::Moments => moments(cfg, &inv.out),
    }
}

fn write_output(out: &Path, name: &str, header: &str, body: &str) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, format!("{header}{body}")).with_context(|| format!("cannot write {}", path.display()))
}

fn constant_k(cfg: &RunConfig, what: &str) -> Result<Option<f64>> {
    match cfg.curvature {
        CurvatureSpec::Hyperbolic(k) => Ok(Some(k)),
        CurvatureSpec::Euclidean => Ok(None),
        CurvatureSpec::Pinched { .. } => bail!("curvature.kind: {what} needs constant curvature (hyperbolic or euclidean)"),
    }
}

/// The simulator configuration described by a run config.
pub fn walk_config_for(cfg: &RunConfig) -> Result<WalkConfig> {
    constant_k(cfg, "simulate")?;
    let model = cfg.model().context("curvature: cannot build the model")?;
    let w = &cfg.walk;
    let mut wc = WalkConfig::new(model, cfg.law.clone(), w.steps, w.walks, cfg.seed);
    wc.mode = w.mode;
    wc.record_stride = w.stride;
    wc.ball_radius = w.ball_radius;
    wc.burn_in = w.burn_in;
    wc.escape_radius = w.escape_radius;
    wc.start_radius = w.start_radius;
    Ok(wc)
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let wc = walk_config_for(cfg)?;
    let (records, stats) = run_ensemble(&wc, None)?;
    let header = cfg.header(Command::Simulate);
    write_output(out, &cfg.outputs.trajectory, &header, &trajectory_csv(&records))?;
    write_output(out, &cfg.outputs.summary, &header, &summary_csv(&stats))?;
    print!("{}", stats_table(&stats));
    Ok(0)
}

fn stats_table(s: &EnsembleStats) -> String {
    let q = s.final_r_quantiles;
    let mut t = String::new();
    let _ = writeln!(t, "walks                 {}", s.walks);
    let _ = writeln!(t, "final R q05/q50/q95   {:.4} / {:.4} / {:.4}", q[0], q[2], q[4]);
    let _ = writeln!(t, "final R q25/q75       {:.4} / {:.4}", q[1], q[3]);
    let _ = writeln!(t, "returns mean/median   {:.4} / {}", s.mean_returns, s.median_returns);
    for (name, p) in [("escaped", &s.escaped), ("returned", &s.returned), ("transient proxy", &s.transient_proxy)] {
        let _ = writeln!(t, "{name:<22}{:.4} ± {:.4}", p.p(), p.half_width());
    }
    let _ = writeln!(t, "tail drift            {:.6} ± {:.6}", s.drift.value, s.drift.half_width);
    t
}

pub fn classify(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let report = classify_report(cfg)?;
    write_output(out, &cfg.outputs.margins, &cfg.header(Command::Classify), &report.to_csv())?;
    print!("{report}");
    Ok(report.verdict.exit_code())
}

/// Picks the criterion: the flat-space rule for Euclidean models; otherwise
/// the analytic elliptic bounds when they apply, then the
/// uniform-ellipticity screen, then the Monte Carlo moment criterion
/// (constant or pinched curvature). Every stage's margins are kept.
pub fn classify_report(cfg: &RunConfig) -> Result<ClassificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let Some((k_min, k_max)) = cfg.curvature.bounds() else {
        return classify_flat(cfg, &mut rng);
    };
    let mut margins = Vec::new();
    let mut notes = Vec::new();

    if let LawKind::Elliptic { a, b } = cfg.law.kind() {
        if a.sup().is_some() && b.sup().is_some() {
            let rep = elliptic_chain_classify(a, b, &k_min, &k_max, cfg.dim, &cfg.grid, cfg.theta, cfg.r0)?;
            if rep.verdict != Verdict::Inconclusive {
                return Ok(rep);
            }
            margins.extend(rep.margins);
            notes.extend(rep.notes);
            notes.push("analytic elliptic bounds are inconclusive; falling back to Monte Carlo".into());
        }
    }

    if matches!(cfg.law.kind(), LawKind::HeavyTail { .. }) {
        notes.extend(heavytail_notes(cfg, &mut rng)?);
    }

    let screen = uniform_ellipticity_transience_check(
        &cfg.law,
        k_min.inf(),
        cfg.epsilon,
        cfg.r0,
        &cfg.grid,
        cfg.samples,
        &mut rng,
    )?;
    margins.extend(screen.margins);
    notes.extend(screen.notes);
    if screen.verdict == Verdict::Transient {
        return Ok(ClassificationReport {
            verdict: Verdict::Transient,
            criterion: Criterion::UniformEllipticity,
            margins,
            theta: cfg.theta,
            r0: cfg.r0,
            notes,
        });
    }

    let rep = match cfg.curvature {
        CurvatureSpec::Hyperbolic(k) => {
            let m = estimate_moments(&cfg.law, k, &cfg.grid, cfg.samples, &mut rng)?;
            classify_constant_curvature(&m, cfg.theta, cfg.r0)?
        }
        _ => classify_pinched(&cfg.law, &k_min, &k_max, &cfg.grid, cfg.theta, cfg.r0, cfg.samples, &mut rng)?,
    };
    margins.extend(rep.margins);
    notes.extend(rep.notes);
    Ok(ClassificationReport { margins, notes, ..rep })
}

fn heavytail_notes(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<String>> {
    let k = match cfg.curvature {
        CurvatureSpec::Hyperbolic(k) => k,
        _ => return Ok(vec!["heavy-tail bounds are only reported at constant curvature".into()]),
    };
    let mut notes = Vec::new();
    if k != 1.0 {
        notes.push(format!("heavy-tail bounds are derived at k = 1; evaluating F at k = {k}"));
    }
    for &r in cfg.grid.iter().filter(|r| **r >= cfg.r0 && **r > 0.0) {
        let b = heavytail_bounds(&cfg.law, k, r, cfg.samples, rng)?;
        notes.push(format!(
            "heavy tail r = {r}: E[d_tot^2-d_rad^2] = {:.4e} ± {:.2e} vs 2m*exp(-lambda) = {:.4e} ({}); E[F] = {:.4e} ± {:.2e} vs (m-1)/(4(m-2))*lambda^-(m-2) = {:.4e} ({})",
            b.transverse.value,
            b.transverse.half_width,
            b.transverse_bound,
            if b.transverse_holds(3.0) { "holds" } else { "fails" },
            b.first.value,
            b.first.half_width,
            b.first_bound,
            if b.first_holds(3.0) { "holds" } else { "fails" },
        ));
    }
    Ok(notes)
}

/// `2U` against `V` in flat space, with `U = lim E[d_rad²]` and
/// `V = lim E[d_tot²]` read off the last grid radius (closed forms where the
/// law has them). Needs a zero-drift law.
fn classify_flat(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<ClassificationReport> {
    let r_last = *cfg.grid.last().expect("grid is nonempty");
    let drift = zero_drift_check(&cfg.law, r_last.max(1.0), cfg.samples, rng)?;
    let mut notes = Vec::new();
    let mut margins = Vec::new();
    let zero_drift = drift.within_band(DRIFT_BAND_SIGMAS);
    margins.push(MarginRow {
        r: drift.r,
        quantity: "E[d_rad]".into(),
        estimate: drift.radial().value,
        half_width: drift.radial().half_width,
        margin: DRIFT_BAND_SIGMAS * drift.radial().std_err - drift.radial().value.abs(),
        criterion: Criterion::EuclideanSecondMoment,
    });
    let mut last = (0.0, 0.0, 0.0);
    for &r in &cfg.grid {
        let (u, v) = flat_second_moments(&cfg.law, r, cfg.samples, cfg.seed);
        let diff = 2.0 * u.value - v.value;
        let hw = 2.0 * u.half_width + v.half_width;
        margins.push(MarginRow {
            r,
            quantity: "2U-V".into(),
            estimate: diff,
            half_width: hw,
            margin: diff.abs() - hw,
            criterion: Criterion::EuclideanSecondMoment,
        });
        last = (u.value, v.value, hw);
    }
    let (u, v, hw) = last;
    let verdict = if !zero_drift {
        notes.push("law fails the zero-drift screen; the flat-space rule does not apply".into());
        Verdict::Inconclusive
    } else if (2.0 * u - v).abs() <= hw {
        notes.push(format!("2U - V = {} is within its half-width {hw} at the last radius", 2.0 * u - v));
        Verdict::Inconclusive
    } else {
        classify_euclidean(u.min(v), v)?
    };
    notes.push(format!("U = {u}, V = {v} at r = {r_last}"));
    Ok(ClassificationReport {
        verdict,
        criterion: Criterion::EuclideanSecondMoment,
        margins,
        theta: cfg.theta,
        r0: cfg.r0,
        notes,
    })
}

/// `(E[d_rad²], E[d_tot²])` at `r`: exact when the law has closed forms,
/// otherwise sampled.
fn flat_second_moments(law: &IncrementLaw, r: f64, n: usize, seed: u64) -> (Estimate, Estimate) {
    let am = law.analytic_moments(r);
    if let (Some(u), Some(v)) = (am.e_drad2, am.e_dtot2) {
        return (Estimate::exact(u), Estimate::exact(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut u, mut v) = (SampleStats::new(), SampleStats::new());
    for _ in 0..n {
        let d = law.draw_conditional(r, &mut rng);
        u.push(d.expect(|dr, _| dr * dr));
        v.push(d.d_tot * d.d_tot);
    }
    (u.estimate(), v.estimate())
}

pub fn validate(cfg: &RunConfig, out: &Path, fault: Fault) -> Result<i32> {
    let opts = ValidateOptions {
        tuples: cfg.validate_tuples,
        samples: cfg.validate_samples,
        seed: cfg.seed,
        fault,
    };
    let results = run_all(&opts);
    write_output(out, &cfg.outputs.validate, &cfg.header(Command::Validate), &validate_csv(&results))?;
    for s in &results {
        println!(
            "{} {:<16} worst {:.3e} (tolerance {:.1e}) over {} checks",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.worst,
            s.tolerance,
            s.checked
        );
        if !s.passed {
            println!("     worst input: {}", s.worst_input);
        }
        println!("     {}", s.detail);
    }
    Ok(if results.iter().all(|s| s.passed) { 0 } else { EXIT_VALIDATION_FAILED })
}

pub const MOMENTS_CSV_HEADER: &str = "r,e_dtot2_exact,e_dtot2,e_dtot2_se,e_drad2_exact,e_drad2,e_drad2_se,e_drad_exact,e_drad,e_drad_se,nu1,nu1_se,nu2,nu2_se,transverse,transverse_se,transverse_bound,first_bound";

/// Closed-form against sampled moments on the grid, plus `ν₁, ν₂` in
/// hyperbolic space and the heavy-tail bound columns for that law.
pub fn moments(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let k = constant_k(cfg, "moments")?;
    let law = &cfg.law;
    let n = cfg.samples;
    let sampled: Vec<[Estimate; 3]> = cfg
        .grid
        .par_iter()
        .map(|&r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut acc = [SampleStats::new(), SampleStats::new(), SampleStats::new()];
            for _ in 0..n {
                let dec = law.sample(r, &mut rng).decomposition;
                acc[0].push(dec.d_tot().powi(2));
                acc[1].push(dec.d_rad().powi(2));
                acc[2].push(dec.d_rad());
            }
            acc.map(|s| s.estimate())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let nu = match k {
        Some(k) => Some(estimate_moments(law, k, &cfg.grid, n, &mut rng)?),
        None => None,
    };
    let heavy = matches!(law.kind(), LawKind::HeavyTail { .. });
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();

    let mut body = format!("{MOMENTS_CSV_HEADER}\n");
    for (i, &r) in cfg.grid.iter().enumerate() {
        let am = law.analytic_moments(r);
        let [t2, r2, r1] = &sampled[i];
        let _ = write!(
            body,
            "{r},{},{},{},{},{},{},{},{},{}",
            opt(am.e_dtot2),
            t2.value,
            t2.std_err,
            opt(am.e_drad2),
            r2.value,
            r2.std_err,
            opt(am.e_drad),
            r1.value,
            r1.std_err
        );
        match &nu {
            Some(m) => {
                let p = &m.points()[i];
                let _ = write!(body, ",{},{},{},{}", p.nu1_lower.value, p.nu1_lower.std_err, p.nu2_lower.value, p.nu2_lower.std_err);
            }
            None => body.push_str(",,,,"),
        }
        match (heavy, k) {
            (true, Some(k)) if r > 0.0 => {
                let b = heavytail_bounds(law, k, r, n, &mut rng)?;
                let _ = writeln!(
                    body,
                    ",{},{},{},{}",
                    b.transverse.value, b.transverse.std_err, b.transverse_bound, b.first_bound
                );
            }
            _ => body.push_str(",,,,\n"),
        }
    }
    write_output(out, &cfg.outputs.moments, &cfg.header(Command::Moments), &body)?;
    if let Some(m) = &nu {
        for w in &m.warnings {
            eprintln!("warning: {w}");
        }
    }
    print!("{body}");
    Ok(0)
}
