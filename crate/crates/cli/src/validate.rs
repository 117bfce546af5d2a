//! Oracle suites run by `hyperwalk validate`.
//!
//! Each suite draws its inputs from its own stream of the run seed, so a
//! suite's result does not depend on which other suites ran.

use std::fmt::Write as _;

use astro_float::{BigFloat, Consts, RoundingMode};
use hyperwalk::geometry::{exp_map, log_map, radial_increment_exact, CurvatureModel, LorentzPoint};
use hyperwalk::increments::{IncrementLaw, RadialProfile};
use hyperwalk::lamperti::{f_value, g_value, j_max, j_min};
use hyperwalk::simulator::{run_walk, walk_rng, Mode, WalkConfig};
use hyperwalk::stats::SampleStats;
use rand::Rng;
use rayon::prelude::*;

/// Deliberate defects used to check that a suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Replaces the exact increment with its positive-curvature counterpart,
    /// as if the sign of the curvature had been flipped.
    CurvatureSign,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub tuples: usize,
    pub samples: usize,
    pub seed: u64,
    pub fault: Fault,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub worst_input: String,
    pub detail: String,
}

pub const VALIDATE_CSV_HEADER: &str = "suite,passed,checked,worst,tolerance,worst_input";

/// Tolerance on the exact increment against the multiprecision oracle.
pub const EXACT_TOL: f64 = 1e-9;
/// Allowed violation of the J sandwich.
pub const SANDWICH_TOL: f64 = 1e-12;
/// exp∘log error, relative to the largest ambient coordinate involved.
pub const ROUND_TRIP_TOL: f64 = 1e-8;
/// Coupled radial and ambient walks, relative to `max(R, 1)`.
pub const COUPLING_TOL: f64 = 1e-8;
/// Moment checks, in standard errors.
pub const MOMENT_SIGMAS: f64 = 3.0;

const PREC: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, PREC)
}

fn small(x: &BigFloat) -> f64 {
    x.to_string().parse().unwrap_or(f64::NAN)
}

/// `ΔR` for the step `v = d_tot·(φ·e_rad + √(1−φ²)·e_⊥)` from the axis point
/// at distance `R`, computed in 320-bit arithmetic straight from the ambient
/// coordinates: `y = cosh(k d)·x + sinh(k d)/(k d)·v`, then
/// `R' = arccosh(k·y₀)/k`. Only the time coordinate of `y` is needed.
pub fn coordinate_oracle(r: f64, d_tot: f64, phi: f64, k: f64, cc: &mut Consts) -> f64 {
    let (kb, rb, db, pb) = (big(k), big(r), big(d_tot), big(phi));
    let kr = kb.mul(&rb, PREC, RM);
    let x0 = kr.cosh(PREC, RM, cc).div(&kb, PREC, RM);
    let y0 = if d_tot == 0.0 {
        x0
    } else {
        let kd = kb.mul(&db, PREC, RM);
        // The time component of v: d·φ times that of the outward unit vector, sinh(kR).
        let v0 = db.mul(&pb, PREC, RM).mul(&kr.sinh(PREC, RM, cc), PREC, RM);
        let along = kd.sinh(PREC, RM, cc).div(&kd, PREC, RM).mul(&v0, PREC, RM);
        kd.cosh(PREC, RM, cc).mul(&x0, PREC, RM).add(&along, PREC, RM)
    };
    let r_next = kb.mul(&y0, PREC, RM).acosh(PREC, RM, cc).div(&kb, PREC, RM);
    small(&r_next.sub(&rb, PREC, RM))
}

fn increment_under_test(r: f64, d_tot: f64, phi: f64, k: f64, fault: Fault) -> f64 {
    match fault {
        Fault::None => radial_increment_exact(r, d_tot, phi, k).unwrap_or(f64::NAN),
        Fault::CurvatureSign => {
            let c = (k * r).cos() * (k * d_tot).cos() - phi * (k * r).sin() * (k * d_tot).sin();
            c.clamp(-1.0, 1.0).acos() / k - r
        }
    }
}

fn suite_rng(opts: &ValidateOptions, stream: u64) -> rand_chacha::ChaCha8Rng {
    walk_rng(opts.seed, stream)
}

fn finish(name: &'static str, checked: usize, worst: f64, tolerance: f64, worst_input: String, detail: String) -> SuiteResult {
    SuiteResult {
        name,
        passed: worst.is_finite() && worst <= tolerance,
        checked,
        worst,
        tolerance,
        worst_input,
        detail,
    }
}

/// Exact increment against [`coordinate_oracle`] on random tuples with
/// `k ∈ [0.25, 4]`, `R ∈ [0, 20]`, `d_tot ∈ [0, 10]`, `φ ∈ [−1, 1]`.
///
/// The error is `|ΔR − ΔR*| / max(|ΔR*|, 1e-6)`. The floor only matters when
/// the true increment nearly vanishes, where the subtraction of `R` leaves no
/// relative accuracy to measure.
pub fn exact_increment_suite(opts: &ValidateOptions) -> SuiteResult {
    let mut rng = suite_rng(opts, 1);
    let tuples: Vec<[f64; 4]> = (0..opts.tuples)
        .map(|_| {
            [
                rng.random_range(0.25..=4.0),
                rng.random_range(0.0..=20.0),
                rng.random_range(0.0..=10.0),
                rng.random_range(-1.0..=1.0),
            ]
        })
        .collect();
    let errors: Vec<f64> = tuples
        .par_iter()
        .map_init(
            || Consts::new().expect("multiprecision constants"),
            |cc, &[k, r, d, phi]| {
                let exact = coordinate_oracle(r, d, phi, k, cc);
                let got = increment_under_test(r, d, phi, k, opts.fault);
                let err = (got - exact).abs() / exact.abs().max(1e-6);
                if err.is_nan() { f64::INFINITY } else { err }
            },
        )
        .collect();
    let (i, worst) = argmax(&errors);
    let [k, r, d, phi] = tuples[i];
    finish(
        "exact-increment",
        tuples.len(),
        worst,
        EXACT_TOL,
        format!("k={k} R={r} d_tot={d} phi={phi}"),
        "relative error against a 320-bit coordinate oracle".into(),
    )
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best })
}

/// The J sandwich `φd + J_min·d²(1−φ²) ≤ F ≤ φd + J_max·d²(1−φ²)` on a grid
/// of 10⁵ points (`k ∈ {0.5, 1, 2}`, `d ∈ (0, 10]`, `φ ∈ (−1, 1)`), plus
/// monotonicity of `G` along each line of constant `d`.
pub fn sandwich_suite() -> SuiteResult {
    const D_LINES: usize = 200;
    const PHIS: usize = 167;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_input = String::new();
    let mut checked = 0;
    let mut g_breaks = 0;
    for k in [0.5, 1.0, 2.0] {
        for i in 1..=D_LINES {
            let d = 10.0 * i as f64 / D_LINES as f64;
            let (lo_j, hi_j) = (j_min(k, d).unwrap(), j_max(k, d).unwrap());
            let mut prev_g = f64::INFINITY;
            for j in 0..PHIS {
                let phi = -1.0 + 2.0 * (j as f64 + 0.5) / PHIS as f64;
                let f = f_value(k, phi * d, d).unwrap();
                let t = d * d * (1.0 - phi * phi);
                let violation = (phi * d + lo_j * t - f).max(f - phi * d - hi_j * t);
                if violation > worst {
                    worst = violation;
                    worst_input = format!("k={k} d_tot={d} phi={phi}");
                }
                let g = g_value(phi, k, d).unwrap();
                if g > prev_g * (1.0 + 1e-12) {
                    g_breaks += 1;
                    worst = f64::INFINITY;
                    worst_input = format!("G increases at k={k} d_tot={d} phi={phi}");
                }
                prev_g = g;
                checked += 1;
            }
        }
    }
    finish(
        "sandwich",
        checked,
        worst.max(0.0),
        SANDWICH_TOL,
        worst_input,
        format!("largest violation of the J bounds; G increased on {g_breaks} grid steps"),
    )
}

fn axis_free_point<R: Rng>(d: usize, k: f64, kr_max: f64, rng: &mut R) -> LorentzPoint {
    let dir = unit_vector(d, rng);
    let r = rng.random_range(0.0..=kr_max) / k;
    let s = (k * r).sinh() / k;
    LorentzPoint::from_spatial(&dir.iter().map(|u| u * s).collect::<Vec<_>>(), k).unwrap()
}

fn unit_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// `exp_x(log_x y) = y` for random pairs with `kR ≤ 8` for both points.
/// Beyond that the endpoint error grows like `ε·sinh(kD)/k` in f64.
pub fn round_trip_suite(opts: &ValidateOptions) -> SuiteResult {
    let mut rng = suite_rng(opts, 3);
    let (mut worst, mut worst_input) = (0.0f64, String::new());
    for _ in 0..opts.tuples {
        let d = [2, 3, 5][rng.random_range(0..3usize)];
        let k = rng.random_range(0.25..=4.0);
        let x = axis_free_point(d, k, 8.0, &mut rng);
        let y = axis_free_point(d, k, 8.0, &mut rng);
        let err = match log_map(&x, &y, k).and_then(|v| exp_map(&x, &v, k)) {
            Ok(back) => {
                let scale = x.coords().iter().chain(y.coords()).fold(0.0f64, |m, c| m.max(c.abs()));
                let e = back.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                e / scale
            }
            Err(_) => f64::INFINITY,
        };
        if !(err <= worst) {
            worst = err;
            worst_input = format!("d={d} k={k} x={:?} y={:?}", x.spatial(), y.spatial());
        }
    }
    finish(
        "round-trip",
        opts.tuples,
        worst,
        ROUND_TRIP_TOL,
        worst_input,
        "max coordinate error of exp(log) relative to the largest coordinate".into(),
    )
}

/// Radial-only and ambient walks driven by the same random numbers agree
/// step by step over `T = 100`. Parameters keep `k·R` below 320 after 100
/// steps of maximal length, inside the range where ambient coordinates fit
/// in f64.
pub fn coupling_suite(opts: &ValidateOptions) -> SuiteResult {
    const WALKS: u64 = 64;
    let mut rng = suite_rng(opts, 4);
    let (mut worst, mut worst_input) = (0.0f64, String::new());
    let mut checked = 0;
    for id in 0..WALKS {
        let d = [2, 3][rng.random_range(0..2usize)];
        let k = rng.random_range(0.25..=1.5);
        let a = rng.random_range(0.2..=1.2);
        let b = rng.random_range(0.2..=1.2);
        let law = IncrementLaw::elliptic(RadialProfile::Constant(a), RadialProfile::Constant(b), d).unwrap();
        let mut cfg = WalkConfig::new(CurvatureModel::hyperbolic(k, d).unwrap(), law, 100, 1, rng.random());
        cfg.record_stride = 1;
        let radial = run_walk(&cfg, id);
        cfg.mode = Mode::Ambient;
        let ambient = run_walk(&cfg, id);
        let err = match (radial, ambient) {
            (Ok(x), Ok(y)) => x
                .radii
                .iter()
                .zip(&y.radii)
                .map(|((_, p), (_, q))| (p - q).abs() / p.max(1.0))
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        };
        checked += 100;
        if !(err <= worst) {
            worst = err;
            worst_input = format!("d={d} k={k} a={a} b={b} seed={} walk={id}", cfg.seed);
        }
    }
    finish(
        "mode-coupling",
        checked,
        worst,
        COUPLING_TOL,
        worst_input,
        "largest step-wise radius difference relative to max(R, 1)".into(),
    )
}

/// Sampled moments against closed forms: the elliptic law with `a = 2`,
/// `b = 1`, `d = 3` (`E[d_tot²] = 6`, `E[d_rad²] = 4`) and the inward-biased
/// law with `N = 1` (`E[d_rad] = −1`). The figure of merit is the largest
/// `|estimate − exact|` in standard errors.
pub fn moments_suite(opts: &ValidateOptions) -> SuiteResult {
    let mut rng = suite_rng(opts, 5);
    let elliptic = IncrementLaw::elliptic(RadialProfile::Constant(2.0), RadialProfile::Constant(1.0), 3).unwrap();
    let inward = IncrementLaw::inward_biased(1.0, 2).unwrap();
    let (mut tot2, mut rad2, mut rad) = (SampleStats::new(), SampleStats::new(), SampleStats::new());
    for _ in 0..opts.samples {
        let dec = elliptic.sample(10.0, &mut rng).decomposition;
        tot2.push(dec.d_tot().powi(2));
        rad2.push(dec.d_rad().powi(2));
        rad.push(inward.sample(10.0, &mut rng).decomposition.d_rad());
    }
    let mut worst = 0.0f64;
    let mut worst_input = String::new();
    let mut detail = String::new();
    for (name, s, exact) in [("elliptic E[d_tot^2]", &tot2, 6.0), ("elliptic E[d_rad^2]", &rad2, 4.0), ("inward E[d_rad]", &rad, -1.0)] {
        let e = s.estimate();
        let z = (e.value - exact).abs() / e.std_err;
        let _ = write!(detail, "{name} = {:.6} (exact {exact}, {z:.2} SE); ", e.value);
        if !(z <= worst) {
            worst = z;
            worst_input = name.into();
        }
    }
    finish("moments", opts.samples, worst, MOMENT_SIGMAS, worst_input, detail.trim_end_matches("; ").into())
}

pub fn run_all(opts: &ValidateOptions) -> Vec<SuiteResult> {
    vec![
        exact_increment_suite(opts),
        sandwich_suite(),
        round_trip_suite(opts),
        coupling_suite(opts),
        moments_suite(opts),
    ]
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn validate_csv(results: &[SuiteResult]) -> String {
    let mut out = format!("{VALIDATE_CSV_HEADER}\n");
    for s in results {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{}",
            s.name,
            s.passed,
            s.checked,
            s.worst,
            s.tolerance,
            csv_field(&s.worst_input)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_closed_form_on_simple_cases() {
        let mut cc = Consts::new().unwrap();
        // From the origin every step is radial.
        assert!((coordinate_oracle(0.0, 2.5, 0.3, 1.0, &mut cc) - 2.5).abs() < 1e-15);
        // Straight outward and straight back in.
        assert!((coordinate_oracle(3.0, 1.0, 1.0, 2.0, &mut cc) - 1.0).abs() < 1e-14);
        assert!((coordinate_oracle(3.0, 1.0, -1.0, 2.0, &mut cc) + 1.0).abs() < 1e-14);
        assert!((coordinate_oracle(1.0, 3.0, -1.0, 1.0, &mut cc) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn injected_sign_error_is_caught() {
        let opts = ValidateOptions { tuples: 200, samples: 1000, seed: 1, fault: Fault::CurvatureSign };
        assert!(!exact_increment_suite(&opts).passed);
        let healthy = ValidateOptions { fault: Fault::None, ..opts };
        assert!(exact_increment_suite(&healthy).passed);
    }
}
