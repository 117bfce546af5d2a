//! Drift functionals and recurrence/transience criteria.
//!
//! Everything here is built on
//! `F(k, d_rad, d_tot) = (1/k)·log(cosh k d_tot + φ sinh k d_tot)`, the
//! large-radius limit of the radial increment, and its quadratic sandwich
//! `d_rad + J_min·(d_tot² − d_rad²) ≤ F ≤ d_rad + J_max·(d_tot² − d_rad²)`.
//!
//! Monte Carlo criteria decide limits on a finite tail of a radius grid. A
//! verdict is only returned when the relevant inequality holds at every tail
//! radius with the 99% confidence half-width counted against it; the margins
//! are kept in the report so a reader can judge the evidence.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, usage, Error, Result};
use crate::increments::{law_dmax, IncrementLaw, LawKind, RadialProfile};
use crate::stats::{Estimate, SampleStats};

/// Below this value of `k·d_tot` the J bounds use their Taylor series.
pub const J_SERIES_THRESHOLD: f64 = 1e-2;

/// Excess kurtosis above which a second-moment estimate is flagged as
/// unreliable.
pub const KURTOSIS_WARNING: f64 = 1e3;

/// Default recurrence slack `θ`.
pub const DEFAULT_THETA: f64 = 0.5;

/// Width of the zero-drift band, in standard errors.
pub const DRIFT_BAND_SIGMAS: f64 = 4.0;

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("curvature parameter k must be positive, got {k}")))
    }
}

/// `ln((1+φ)/2 + (1−φ)/2·e^{−2x})` for `x ≥ 0`, `φ ∈ [−1, 1]`.
fn log_mix(phi: f64, x: f64) -> f64 {
    let w = -(-2.0 * x).exp_m1();
    let q = 0.5 * (1.0 - phi) * w;
    if q < 0.5 {
        (-q).ln_1p()
    } else {
        let a = 0.5 * (1.0 + phi);
        let log_b = (0.5 * (1.0 - phi)).ln() - 2.0 * x;
        if a == 0.0 {
            return log_b;
        }
        let log_a = a.ln();
        let (hi, lo) = if log_a >= log_b { (log_a, log_b) } else { (log_b, log_a) };
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `F(k, d_rad, d_tot)`, zero when `d_tot = 0`.
pub fn f_value(k: f64, d_rad: f64, d_tot: f64) -> Result<f64> {
    check_k(k)?;
    if !(d_tot.is_finite() && d_tot >= 0.0) {
        return Err(domain(format!("d_tot must be finite and nonnegative, got {d_tot}")));
    }
    if !d_rad.is_finite() || d_rad.abs() > d_tot {
        return Err(domain(format!("|d_rad| = {} exceeds d_tot = {d_tot}", d_rad.abs())));
    }
    Ok(f_unchecked(k, d_rad, d_tot))
}

pub(crate) fn f_unchecked(k: f64, d_rad: f64, d_tot: f64) -> f64 {
    if d_tot == 0.0 {
        return 0.0;
    }
    let phi = (d_rad / d_tot).clamp(-1.0, 1.0);
    d_tot + log_mix(phi, k * d_tot) / k
}

fn check_positive_length(d_tot: f64) -> Result<()> {
    if d_tot.is_finite() && d_tot > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("d_tot must be positive, got {d_tot}")))
    }
}

/// `Σ_{j<8} (2s·x)^j/(j+2)!`, which is `J_min/k` for `s = −1` and `J_max/k` for `s = +1`.
fn j_series(x: f64, sign: f64) -> f64 {
    let mut term = 0.5;
    let mut sum = term;
    for j in 1..8 {
        term *= 2.0 * sign * x / (j + 2) as f64;
        sum += term;
    }
    sum
}

/// `J_min(k, d) = k(2x − 1 + e^{−2x})/(4x²)` with `x = k·d`.
pub fn j_min(k: f64, d_tot: f64) -> Result<f64> {
    check_k(k)?;
    check_positive_length(d_tot)?;
    let x = k * d_tot;
    if x < J_SERIES_THRESHOLD {
        return Ok(k * j_series(x, -1.0));
    }
    Ok(k * (2.0 * x + (-2.0 * x).exp_m1()) / (4.0 * x * x))
}

/// `J_max(k, d) = k(e^{2x} − 1 − 2x)/(4x²)` with `x = k·d`; infinite once
/// `e^{2x}` overflows (see [`log_j_max`]).
pub fn j_max(k: f64, d_tot: f64) -> Result<f64> {
    check_k(k)?;
    check_positive_length(d_tot)?;
    let x = k * d_tot;
    if x < J_SERIES_THRESHOLD {
        return Ok(k * j_series(x, 1.0));
    }
    Ok(k * ((2.0 * x).exp_m1() - 2.0 * x) / (4.0 * x * x))
}

/// `ln J_max(k, d)`, finite for all positive arguments.
pub fn log_j_max(k: f64, d_tot: f64) -> Result<f64> {
    check_k(k)?;
    check_positive_length(d_tot)?;
    let x = k * d_tot;
    if x < 20.0 {
        return Ok(j_max(k, d_tot)?.ln());
    }
    let log_num = 2.0 * x + (-(1.0 + 2.0 * x) * (-2.0 * x).exp()).ln_1p();
    Ok(k.ln() + log_num - (4.0 * x * x).ln())
}

/// `G(φ) = (F(k, φd, d) − φd)/(1 − φ²)` on the open interval `|φ| < 1`.
pub fn g_value(phi: f64, k: f64, d_tot: f64) -> Result<f64> {
    check_k(k)?;
    check_positive_length(d_tot)?;
    if !(phi.abs() < 1.0) {
        return Err(domain(format!(
            "G is defined for |phi| < 1, got {phi}; use g_limit at the endpoints"
        )));
    }
    let numer = (1.0 - phi) * d_tot + log_mix(phi, k * d_tot) / k;
    Ok(numer / ((1.0 - phi) * (1.0 + phi)))
}

/// Endpoint limits of `G`: `d²·J_min` at `φ = +1` and `d²·J_max` at `φ = −1`.
pub fn g_limit(at_plus_one: bool, k: f64, d_tot: f64) -> Result<f64> {
    let j = if at_plus_one { j_min(k, d_tot)? } else { j_max(k, d_tot)? };
    Ok(d_tot * d_tot * j)
}

/// A Monte Carlo estimate together with any reliability warning.
#[derive(Debug, Clone, PartialEq)]
pub struct NuEstimate {
    pub estimate: Estimate,
    pub warning: Option<String>,
}

fn kurtosis_warning(stats: &SampleStats, what: &str) -> Option<String> {
    let kurt = stats.excess_kurtosis();
    (kurt > KURTOSIS_WARNING).then(|| {
        format!("{what}: sample excess kurtosis {kurt:.3e} suggests unbounded variance; half-width unreliable")
    })
}

/// `ν_i(r) = E[F^i]` at radius `r`, estimated by conditional Monte Carlo:
/// each draw of `d_tot` contributes the exact conditional expectation over
/// `d_rad`.
pub fn nu_estimate<R: Rng + ?Sized>(
    law: &IncrementLaw,
    k: f64,
    r: f64,
    i: u32,
    n_samples: usize,
    rng: &mut R,
) -> Result<NuEstimate> {
    check_k(k)?;
    if !(i == 1 || i == 2) {
        return Err(usage(format!("moment order must be 1 or 2, got {i}")));
    }
    if n_samples < 2 {
        return Err(usage("need at least two samples for a confidence band"));
    }
    let mut stats = SampleStats::new();
    for _ in 0..n_samples {
        let draw = law.draw_conditional(r, rng);
        stats.push(draw.expect(|dr, dt| f_unchecked(k, dr, dt).powi(i as i32)));
    }
    Ok(NuEstimate {
        estimate: stats.estimate(),
        warning: kurtosis_warning(&stats, &format!("nu_{i}(r = {r})")),
    })
}

/// Estimated `ν̲ᵢ, ν̄ᵢ` (and optionally the flat-space `U, V`) at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPoint {
    pub r: f64,
    pub nu1_lower: Estimate,
    pub nu1_upper: Estimate,
    pub nu2_lower: Estimate,
    pub nu2_upper: Estimate,
    pub euclid_u: Option<Estimate>,
    pub euclid_v: Option<Estimate>,
}

/// Moment functions tabulated on an ascending radius grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentFunctions {
    points: Vec<MomentPoint>,
    pub warnings: Vec<String>,
}

impl MomentFunctions {
    /// Wraps externally computed bounds, e.g. the inf/sup over a sphere for a
    /// law that is not radially symmetric.
    pub fn from_points(mut points: Vec<MomentPoint>) -> Result<Self> {
        points.sort_by(|a, b| a.r.total_cmp(&b.r));
        for p in &points {
            if p.nu1_lower.value > p.nu1_upper.value || p.nu2_lower.value > p.nu2_upper.value {
                return Err(Error::Invariant(format!("lower moment bound exceeds upper bound at r = {}", p.r)));
            }
            if p.nu2_lower.value < 0.0 {
                return Err(Error::Invariant(format!("negative second moment at r = {}", p.r)));
            }
        }
        Ok(Self {
            points,
            warnings: Vec::new(),
        })
    }

    pub fn points(&self) -> &[MomentPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Seed for per-radius generators, drawn once from the caller's generator.
/// Every radius reuses the same stream (common random numbers), which keeps
/// the comparison between neighbouring radii smooth and makes the result
/// independent of how the grid is scheduled.
fn grid_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random()
}

fn map_grid<T, F>(grid: &[f64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(|&r| f(r)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(|&r| f(r)).collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(usage("radius grid is empty"));
    }
    if grid.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(usage("radius grid must contain finite nonnegative radii"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("radius grid must be strictly increasing"));
    }
    Ok(())
}

/// Tabulates `ν₁, ν₂` (and `U = E[d_rad²]`, `V = E[d_tot²]`) on a grid for a
/// radially symmetric law at constant curvature `−k²`.
///
/// `|F| ≤ d_tot`, so where `E[d_tot²]` is known in closed form it caps `ν̄₂`.
pub fn estimate_moments<R: Rng + ?Sized>(
    law: &IncrementLaw,
    k: f64,
    grid: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<MomentFunctions> {
    check_k(k)?;
    check_grid(grid)?;
    if !law.radially_symmetric() {
        return Err(usage(
            "moment tabulation needs a radially symmetric law; supply sphere bounds via MomentFunctions::from_points",
        ));
    }
    if n_samples < 2 {
        return Err(usage("need at least two samples per radius"));
    }
    let seed = grid_seed(rng);
    let rows = map_grid(grid, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut nu1, mut nu2, mut u, mut v) =
            (SampleStats::new(), SampleStats::new(), SampleStats::new(), SampleStats::new());
        for _ in 0..n_samples {
            let draw = law.draw_conditional(r, &mut rng);
            nu1.push(draw.expect(|dr, dt| f_unchecked(k, dr, dt)));
            nu2.push(draw.expect(|dr, dt| f_unchecked(k, dr, dt).powi(2)));
            u.push(draw.expect(|dr, _| dr * dr));
            v.push(draw.d_tot * draw.d_tot);
        }
        let mut warnings = Vec::new();
        warnings.extend(kurtosis_warning(&nu2, &format!("nu_2(r = {r})")));
        let nu2_est = nu2.estimate();
        let mut nu2_upper = nu2_est;
        if let Some(cap) = law.analytic_moments(r).e_dtot2 {
            if cap < nu2_est.upper() && cap >= nu2_est.value {
                nu2_upper = Estimate::exact(cap);
            }
        }
        let point = MomentPoint {
            r,
            nu1_lower: nu1.estimate(),
            nu1_upper: nu1.estimate(),
            nu2_lower: nu2_est,
            nu2_upper,
            euclid_u: Some(u.estimate()),
            euclid_v: Some(v.estimate()),
        };
        (point, warnings)
    });
    let mut out = MomentFunctions::default();
    for (p, w) in rows {
        out.points.push(p);
        out.warnings.extend(w);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Transient,
    Recurrent,
    Inconclusive,
}

impl Verdict {
    /// Process exit code: 0 recurrent, 1 transient, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Recurrent => 0,
            Self::Transient => 1,
            Self::Inconclusive => 2,
        }
    }

    /// Whether two verdicts assert opposite conclusions.
    pub fn contradicts(self, other: Self) -> bool {
        matches!(
            (self, other),
            (Self::Transient, Self::Recurrent) | (Self::Recurrent, Self::Transient)
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Transient => "transient",
            Self::Recurrent => "recurrent",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// `limsup ν̄₂ < ∞` and `liminf (2r·ν̲₁ − ν̄₂) > 0`.
    ConstantCurvatureTransience,
    /// `liminf ν̲₂ > 0` and `2r·ν̄₁ ≤ (1 + (1−θ)/log r)·ν̲₂`.
    ConstantCurvatureRecurrence,
    /// `r·E[log(cosh k_min d + φ sinh k_min d)] → ∞`.
    PinchedTransience,
    /// Second-moment lower bound split by the sign of the increment under
    /// `k_min` and `k_max`, first moment bounded with `k_max`.
    PinchedRecurrence,
    /// `E[d_tot² − d_rad²] ≥ ε` for a zero-drift law.
    UniformEllipticity,
    /// `2r·J_min(k_min, d_max)(d−1)b² − a² − (d−1)b²` has a positive limit.
    EllipticTransience,
    /// `2r·J_max(k_max, d_max)(d−1)b² ≤ ½(1 + (1−θ)/log r)·a²`.
    EllipticRecurrence,
    /// Flat-space rule: recurrent if `2U > V`, transient if `2U < V`.
    EuclideanSecondMoment,
    /// `E[d_rad] = 0` and `E[d_rad²] ≥ ε`.
    NonConfinement,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Self::ConstantCurvatureTransience => "constant-curvature-transience",
            Self::ConstantCurvatureRecurrence => "constant-curvature-recurrence",
            Self::PinchedTransience => "pinched-transience",
            Self::PinchedRecurrence => "pinched-recurrence",
            Self::UniformEllipticity => "uniform-ellipticity",
            Self::EllipticTransience => "elliptic-transience",
            Self::EllipticRecurrence => "elliptic-recurrence",
            Self::EuclideanSecondMoment => "euclidean-second-moment",
            Self::NonConfinement => "non-confinement",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One line of evidence: a quantity at radius `r`, and how far the inequality
/// it enters clears its threshold after the half-width is counted against it.
/// Positive margins support the criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginRow {
    pub r: f64,
    pub quantity: String,
    pub estimate: f64,
    pub half_width: f64,
    pub margin: f64,
    pub criterion: Criterion,
}

impl MarginRow {
    fn new(r: f64, quantity: &str, est: Estimate, margin: f64, criterion: Criterion) -> Self {
        Self {
            r,
            quantity: quantity.to_owned(),
            estimate: est.value,
            half_width: est.half_width,
            margin,
            criterion,
        }
    }
}

pub const MARGIN_CSV_HEADER: &str = "r,quantity,estimate,half_width,margin,criterion";

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    /// The criterion that decided the verdict, or the first one tried.
    pub criterion: Criterion,
    pub margins: Vec<MarginRow>,
    pub theta: f64,
    pub r0: f64,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn margins_for(&self, c: Criterion) -> impl Iterator<Item = &MarginRow> {
        self.margins.iter().filter(move |m| m.criterion == c)
    }

    /// CSV with columns `r,quantity,estimate,half_width,margin,criterion`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MARGIN_CSV_HEADER);
        out.push('\n');
        for m in &self.margins {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.r, m.quantity, m.estimate, m.half_width, m.margin, m.criterion
            ));
        }
        out
    }
}

impl fmt::Display for ClassificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict:   {}", self.verdict)?;
        writeln!(f, "criterion: {}", self.criterion)?;
        writeln!(f, "theta:     {}", self.theta)?;
        writeln!(f, "r0:        {}", self.r0)?;
        if self.verdict == Verdict::Recurrent {
            writeln!(
                f,
                "note:      some finite b with liminf R_n <= b exists; it is not computed"
            )?;
        }
        for n in &self.notes {
            writeln!(f, "note:      {n}")?;
        }
        writeln!(
            f,
            "{:>12} {:<28} {:>14} {:>12} {:>14}  criterion",
            "r", "quantity", "estimate", "half_width", "margin"
        )?;
        for m in &self.margins {
            writeln!(
                f,
                "{:>12.4} {:<28} {:>14.6e} {:>12.3e} {:>14.6e}  {}",
                m.r, m.quantity, m.estimate, m.half_width, m.margin, m.criterion
            )?;
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("theta must be positive, got {theta}")))
    }
}

/// `1 + (1−θ)/log r`.
fn recurrence_factor(r: f64, theta: f64) -> f64 {
    1.0 + (1.0 - theta) / r.ln()
}

/// A sequence of upper bounds looks bounded when every value is finite and
/// the last is no more than twice the median.
fn looks_bounded(values: &[f64]) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    values.last().is_some_and(|last| *last <= 2.0 * median.max(f64::MIN_POSITIVE))
}

/// Applies the constant-curvature criterion to tabulated moment functions.
pub fn classify_constant_curvature(
    moments: &MomentFunctions,
    theta: f64,
    r0: f64,
) -> Result<ClassificationReport> {
    check_theta(theta)?;
    let tail: Vec<&MomentPoint> = moments.points.iter().filter(|p| p.r >= r0).collect();
    if tail.is_empty() {
        return Err(usage(format!("no grid radius at or beyond r0 = {r0}")));
    }
    let mut margins = Vec::new();
    let mut notes = moments.warnings.clone();

    let mut transient = true;
    for p in &tail {
        let nu1 = p.nu1_lower;
        let lhs = 2.0 * p.r * nu1.lower();
        let margin = lhs - p.nu2_upper.upper();
        transient &= margin > 0.0;
        margins.push(MarginRow::new(p.r, "2r*nu1_lower", nu1, margin, Criterion::ConstantCurvatureTransience));
        margins.push(MarginRow::new(p.r, "nu2_upper", p.nu2_upper, margin, Criterion::ConstantCurvatureTransience));
    }
    let uppers: Vec<f64> = tail.iter().map(|p| p.nu2_upper.upper()).collect();
    if !looks_bounded(&uppers) {
        transient = false;
        notes.push("upper second moment does not look bounded along the grid tail".into());
    }

    let mut recurrent = true;
    let rec_tail: Vec<&&MomentPoint> = tail.iter().filter(|p| p.r > 1.0).collect();
    if rec_tail.is_empty() {
        recurrent = false;
        notes.push("recurrence test needs grid radii above 1".into());
    }
    for p in &rec_tail {
        let nu2_low = p.nu2_lower.lower();
        let bound = recurrence_factor(p.r, theta) * nu2_low;
        let margin = bound - 2.0 * p.r * p.nu1_upper.upper();
        recurrent &= nu2_low > 0.0 && margin >= 0.0;
        margins.push(MarginRow::new(p.r, "2r*nu1_upper", p.nu1_upper, margin, Criterion::ConstantCurvatureRecurrence));
        margins.push(MarginRow::new(p.r, "nu2_lower", p.nu2_lower, nu2_low, Criterion::ConstantCurvatureRecurrence));
    }

    let (verdict, criterion) = decide(
        transient,
        recurrent,
        Criterion::ConstantCurvatureTransience,
        Criterion::ConstantCurvatureRecurrence,
        &mut notes,
    );
    Ok(ClassificationReport {
        verdict,
        criterion,
        margins,
        theta,
        r0,
        notes,
    })
}

fn decide(
    transient: bool,
    recurrent: bool,
    t: Criterion,
    r: Criterion,
    notes: &mut Vec<String>,
) -> (Verdict, Criterion) {
    match (transient, recurrent) {
        (true, false) => (Verdict::Transient, t),
        (false, true) => (Verdict::Recurrent, r),
        (true, true) => {
            notes.push("both inequalities hold within the confidence bands; refusing to decide".into());
            (Verdict::Inconclusive, t)
        }
        (false, false) => (Verdict::Inconclusive, t),
    }
}

/// Monte Carlo classification on a manifold whose curvature at radius `r`
/// lies in `[−k_max(r)², −k_min(r)²]`.
///
/// Transience: `2r·ν̲₁(k_min)` must exceed the bound on `E[d_tot²]` (which
/// dominates `E[ΔR²]`) at every tail radius, with `r·ν̲₁(k_min)` showing no
/// significant decrease. Recurrence: with `μ̄₁ = E[F(k_max)]` and
/// `μ̲₂ = E[F(k_min)²·1{F(k_min) ≥ 0}] + E[F(k_max)²·1{F(k_max) < 0}]`,
/// require `μ̲₂ > 0` and `2r·μ̄₁ ≤ (1 + (1−θ)/log r)·μ̲₂` at every tail radius.
#[allow(clippy::too_many_arguments)]
pub fn classify_pinched<R: Rng + ?Sized>(
    law: &IncrementLaw,
    k_min: &RadialProfile,
    k_max: &RadialProfile,
    grid: &[f64],
    theta: f64,
    r0: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<ClassificationReport> {
    check_grid(grid)?;
    check_theta(theta)?;
    if n_samples < 2 {
        return Err(usage("need at least two samples per radius"));
    }
    for &r in grid {
        let (lo, hi) = (k_min.eval(r), k_max.eval(r));
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(usage(format!(
                "curvature profiles must satisfy 0 < k_min <= k_max on the grid; at r = {r} got k_min = {lo}, k_max = {hi}"
            )));
        }
    }
    if !law.radially_symmetric() {
        return Err(usage("pinched classification needs a radially symmetric law"));
    }
    let tail: Vec<f64> = grid.iter().copied().filter(|r| *r >= r0).collect();
    if tail.is_empty() {
        return Err(usage(format!("no grid radius at or beyond r0 = {r0}")));
    }
    let seed = grid_seed(rng);
    struct Row {
        r: f64,
        mu1_low: Estimate,
        mu1_up: Estimate,
        mu2_low: Estimate,
        dtot2: Estimate,
        literal: Estimate,
        literal_mu2: Estimate,
    }
    let rows: Vec<Row> = map_grid(&tail, |r| {
        let (kl, kh) = (k_min.eval(r), k_max.eval(r));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = [SampleStats::new(); 6];
        for _ in 0..n_samples {
            let draw = law.draw_conditional(r, &mut rng);
            s[0].push(draw.expect(|dr, dt| f_unchecked(kl, dr, dt)));
            s[1].push(draw.expect(|dr, dt| f_unchecked(kh, dr, dt)));
            let split = |wl: f64, wh: f64| {
                draw.expect(|dr, dt| {
                    let lo = f_unchecked(kl, dr, dt);
                    let hi = f_unchecked(kh, dr, dt);
                    let pos = if lo >= 0.0 { wl * lo * lo } else { 0.0 };
                    let neg = if hi < 0.0 { wh * hi * hi } else { 0.0 };
                    pos + neg
                })
            };
            s[2].push(split(1.0, 1.0));
            s[3].push(draw.d_tot * draw.d_tot);
            // Unscaled E[log(c + φs)] at k_min, as in the divergence-to-zero condition.
            s[4].push(draw.expect(|dr, dt| kl * f_unchecked(kl, dr, dt)));
            // Squared logs weighted by 1/k_min and 1/k_max instead of their squares.
            s[5].push(split(kl, kh));
        }
        let mut dtot2 = s[3].estimate();
        if let Some(cap) = law.analytic_moments(r).e_dtot2 {
            dtot2 = Estimate::exact(cap);
        }
        Row {
            r,
            mu1_low: s[0].estimate(),
            mu1_up: s[1].estimate(),
            mu2_low: s[2].estimate(),
            dtot2,
            literal: s[4].estimate(),
            literal_mu2: s[5].estimate(),
        }
    });

    let mut margins = Vec::new();
    let mut notes = Vec::new();

    let mut transient = true;
    let mut prev: Option<(f64, f64)> = None;
    for row in &rows {
        let lhs = 2.0 * row.r * row.mu1_low.lower();
        let margin = lhs - row.dtot2.upper();
        transient &= margin > 0.0;
        let scaled = (row.r * row.mu1_low.value, row.r * row.mu1_low.half_width);
        if let Some((v, hw)) = prev {
            if scaled.0 + scaled.1 < v - hw {
                transient = false;
                notes.push(format!("r*nu1(k_min) decreases significantly at r = {}", row.r));
            }
        }
        prev = Some(scaled);
        margins.push(MarginRow::new(row.r, "2r*mu1_lower(k_min)", row.mu1_low, margin, Criterion::PinchedTransience));
        margins.push(MarginRow::new(row.r, "E[d_tot^2]", row.dtot2, margin, Criterion::PinchedTransience));
    }
    if !looks_bounded(&rows.iter().map(|r| r.dtot2.upper()).collect::<Vec<_>>()) {
        transient = false;
        notes.push("E[d_tot^2] does not look bounded along the grid tail".into());
    }

    let mut recurrent = true;
    let rec_rows: Vec<&Row> = rows.iter().filter(|r| r.r > 1.0).collect();
    if rec_rows.is_empty() {
        recurrent = false;
        notes.push("recurrence test needs grid radii above 1".into());
    }
    for row in &rec_rows {
        let mu2 = row.mu2_low.lower();
        let margin = recurrence_factor(row.r, theta) * mu2 - 2.0 * row.r * row.mu1_up.upper();
        recurrent &= mu2 > 0.0 && margin >= 0.0;
        margins.push(MarginRow::new(row.r, "2r*mu1_upper(k_max)", row.mu1_up, margin, Criterion::PinchedRecurrence));
        margins.push(MarginRow::new(row.r, "mu2_lower(split)", row.mu2_low, mu2, Criterion::PinchedRecurrence));
    }
    // The displayed form of the pinched recurrence condition: a positive
    // second-moment term with 1/k prefactors and r·E[log(…)] at k_min tending
    // to zero. Reported next to the inequality actually used.
    if let (Some(first), Some(last)) = (rec_rows.first(), rec_rows.last()) {
        let second = rec_rows.iter().all(|row| row.literal_mu2.lower() > 0.0);
        let a = (first.r * first.literal.value).abs();
        let b = last.r * (last.literal.value.abs() + last.literal.half_width);
        let literal = second && b < a;
        notes.push(format!(
            "displayed-form reading: r*E[log(cosh k_min d + phi sinh k_min d)] goes from {a:.4e} at r = {} to {b:.4e} (upper) at r = {}; {} the inequality used",
            first.r,
            last.r,
            if literal == recurrent { "agrees with" } else { "disagrees with" }
        ));
    }

    let (verdict, criterion) = decide(
        transient,
        recurrent,
        Criterion::PinchedTransience,
        Criterion::PinchedRecurrence,
        &mut notes,
    );
    Ok(ClassificationReport {
        verdict,
        criterion,
        margins,
        theta,
        r0,
        notes,
    })
}

/// Zero-drift screen followed by `E[d_tot² − d_rad²] ≥ ε` at every grid
/// radius `≥ d_min`. Never returns `Recurrent`.
pub fn uniform_ellipticity_transience_check<R: Rng + ?Sized>(
    law: &IncrementLaw,
    k: f64,
    epsilon: f64,
    d_min: f64,
    grid: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<ClassificationReport> {
    check_k(k)?;
    check_grid(grid)?;
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if n_samples < 1000 {
        return Err(usage(format!("need at least 1000 samples per radius, got {n_samples}")));
    }
    let tail: Vec<f64> = grid.iter().copied().filter(|r| *r >= d_min).collect();
    if tail.is_empty() {
        return Err(usage(format!("no grid radius at or beyond D_min = {d_min}")));
    }
    let seed = grid_seed(rng);
    let rows = map_grid(&tail, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut comps = vec![SampleStats::new(); law.dim()];
        let mut transverse = SampleStats::new();
        for _ in 0..n_samples {
            let inc = law.sample(r, &mut rng);
            for (s, c) in comps.iter_mut().zip(&inc.coords) {
                s.push(*c);
            }
            let dec = inc.decomposition;
            transverse.push(dec.d_tot().powi(2) - dec.d_rad().powi(2));
        }
        (r, comps.iter().map(SampleStats::estimate).collect::<Vec<_>>(), transverse.estimate())
    });
    let mut margins = Vec::new();
    let mut notes = Vec::new();
    let mut zero_drift = true;
    let mut elliptic = true;
    for (r, comps, trans) in &rows {
        let worst = comps
            .iter()
            .map(|e| if e.std_err > 0.0 { e.value.abs() / e.std_err } else if e.value == 0.0 { 0.0 } else { f64::INFINITY })
            .fold(0.0, f64::max);
        let drift_ok = worst <= DRIFT_BAND_SIGMAS;
        zero_drift &= drift_ok;
        margins.push(MarginRow::new(
            *r,
            "max|mean|/se",
            Estimate::exact(worst),
            DRIFT_BAND_SIGMAS - worst,
            Criterion::UniformEllipticity,
        ));
        let margin = trans.lower() - epsilon;
        elliptic &= margin >= 0.0;
        margins.push(MarginRow::new(*r, "E[d_tot^2-d_rad^2]", *trans, margin, Criterion::UniformEllipticity));
    }
    if !zero_drift {
        notes.push("law fails the zero-drift screen; the uniform-ellipticity test does not apply".into());
    }
    let verdict = if zero_drift && elliptic {
        Verdict::Transient
    } else {
        Verdict::Inconclusive
    };
    Ok(ClassificationReport {
        verdict,
        criterion: Criterion::UniformEllipticity,
        margins,
        theta: f64::NAN,
        r0: d_min,
        notes,
    })
}

/// Flat-space rule for zero-drift chains with `E[d_rad²] → U`, `E[d_tot²] → V`.
pub fn classify_euclidean(u: f64, v: f64) -> Result<Verdict> {
    if !(u.is_finite() && v.is_finite() && u >= 0.0) {
        return Err(domain(format!("U and V must be finite with U >= 0, got U = {u}, V = {v}")));
    }
    if u > v {
        return Err(domain(format!("U = {u} cannot exceed V = {v} since |d_rad| <= d_tot")));
    }
    let two_u = 2.0 * u;
    Ok(if two_u > v {
        Verdict::Recurrent
    } else if two_u < v {
        Verdict::Transient
    } else {
        Verdict::Inconclusive
    })
}

/// Outcome of a statistical screen.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub rows: Vec<MarginRow>,
    pub notes: Vec<String>,
}

/// Checks `E[d_rad] = 0` (within the zero-drift band) and `E[d_rad²] ≥ ε`
/// (with margin) at every grid radius. A pass is statistical support for
/// non-confinement, not a proof of it. The origin is skipped, since there
/// `d_rad := d_tot` by convention.
pub fn nonconfinement_check<R: Rng + ?Sized>(
    law: &IncrementLaw,
    epsilon: f64,
    grid: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    check_grid(grid)?;
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if n_samples < 2 {
        return Err(usage("need at least two samples per radius"));
    }
    let radii: Vec<f64> = grid.iter().copied().filter(|r| *r > 0.0).collect();
    let mut notes = Vec::new();
    if radii.len() < grid.len() {
        notes.push("r = 0 skipped: d_rad equals d_tot at the origin by convention".into());
    }
    if radii.is_empty() {
        return Err(usage("non-confinement check needs a positive grid radius"));
    }
    let seed = grid_seed(rng);
    let rows = map_grid(&radii, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut m1, mut m2) = (SampleStats::new(), SampleStats::new());
        for _ in 0..n_samples {
            let d_rad = law.sample(r, &mut rng).decomposition.d_rad();
            m1.push(d_rad);
            m2.push(d_rad * d_rad);
        }
        (r, m1.estimate(), m2.estimate())
    });
    let mut passed = true;
    let mut out = Vec::new();
    for (r, m1, m2) in rows {
        let band = DRIFT_BAND_SIGMAS * m1.std_err;
        let drift_margin = band - m1.value.abs();
        let second_margin = m2.lower() - epsilon;
        passed &= drift_margin >= 0.0 && second_margin >= 0.0;
        out.push(MarginRow::new(r, "E[d_rad]", m1, drift_margin, Criterion::NonConfinement));
        out.push(MarginRow::new(r, "E[d_rad^2]", m2, second_margin, Criterion::NonConfinement));
    }
    notes.push("a pass supports non-confinement statistically; it does not prove it".into());
    Ok(CheckReport {
        passed,
        rows: out,
        notes,
    })
}

/// The two displayed estimates behind the heavy-tailed counterexample at one
/// radius, with `λ = λ(r)`: the transverse second moment against `2m·e^{−λ}`
/// and the first moment `E[F]` against `(m−1)/(4(m−2))·λ^{−(m−2)}`.
/// Both bounds are derived at `k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyTailBounds {
    pub r: f64,
    pub lambda: f64,
    pub transverse: Estimate,
    pub transverse_bound: f64,
    pub first: Estimate,
    pub first_bound: f64,
}

impl HeavyTailBounds {
    /// Transverse bound: the estimate does not exceed its bound by more than `sigmas` SE.
    pub fn transverse_holds(&self, sigmas: f64) -> bool {
        self.transverse.value <= self.transverse_bound + sigmas * self.transverse.std_err
    }

    /// First-moment bound: the estimate is not below its bound by more than `sigmas` SE.
    pub fn first_holds(&self, sigmas: f64) -> bool {
        self.first.value >= self.first_bound - sigmas * self.first.std_err
    }
}

pub fn heavytail_bounds<R: Rng + ?Sized>(
    law: &IncrementLaw,
    k: f64,
    r: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<HeavyTailBounds> {
    check_k(k)?;
    let LawKind::HeavyTail { m, lambda } = law.kind() else {
        return Err(usage("heavy-tail bounds need the heavy-tail law"));
    };
    if !(r > 0.0) {
        return Err(usage("heavy-tail bounds need a positive radius"));
    }
    if n_samples < 2 {
        return Err(usage("need at least two samples"));
    }
    let (mut trans, mut first) = (SampleStats::new(), SampleStats::new());
    for _ in 0..n_samples {
        let draw = law.draw_conditional(r, rng);
        trans.push(draw.expect(|dr, dt| dt * dt - dr * dr));
        first.push(draw.expect(|dr, dt| f_unchecked(k, dr, dt)));
    }
    let lam = lambda.eval(r);
    Ok(HeavyTailBounds {
        r,
        lambda: lam,
        transverse: trans.estimate(),
        transverse_bound: 2.0 * m * (-lam).exp(),
        first: first.estimate(),
        first_bound: (m - 1.0) / (4.0 * (m - 2.0)) * lam.powf(-(m - 2.0)),
    })
}

/// Analytic classification of the elliptic chain from its profiles, using
/// the step bound `d_max = √d·max(sup a, sup b)` and the J bounds.
///
/// Transience needs the margin `2r·J_min(k_min, d_max)(d−1)b² − a² − (d−1)b²`
/// positive and nondecreasing along the tail. Recurrence needs
/// `2r·J_max(k_max, d_max)(d−1)b² ≤ ½(1 + (1−θ)/log r)·a²` at every tail
/// radius above 1, checked in log-domain so huge `k_max` or tiny `b` cannot
/// overflow.
#[allow(clippy::too_many_arguments)]
pub fn elliptic_chain_classify(
    a: &RadialProfile,
    b: &RadialProfile,
    k_min: &RadialProfile,
    k_max: &RadialProfile,
    d: usize,
    grid: &[f64],
    theta: f64,
    r0: f64,
) -> Result<ClassificationReport> {
    check_grid(grid)?;
    check_theta(theta)?;
    if d < 2 {
        return Err(domain(format!("dimension must be at least 2, got {d}")));
    }
    let law = IncrementLaw::elliptic(a.clone(), b.clone(), d)?;
    let d_max = law_dmax(&law).ok_or_else(|| usage("elliptic classification needs bounded a and b"))?;
    if !(a.inf() > 0.0) {
        return Err(usage("elliptic classification needs a(r) bounded below by a positive constant"));
    }
    let tail: Vec<f64> = grid.iter().copied().filter(|r| *r >= r0).collect();
    if tail.is_empty() {
        return Err(usage(format!("no grid radius at or beyond r0 = {r0}")));
    }
    for &r in &tail {
        let (lo, hi) = (k_min.eval(r), k_max.eval(r));
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(usage(format!(
                "curvature profiles must satisfy 0 < k_min <= k_max; at r = {r} got k_min = {lo}, k_max = {hi}"
            )));
        }
    }
    let dm1 = (d - 1) as f64;
    let mut margins = Vec::new();
    let mut notes = vec![format!("d_max = {d_max}")];

    let mut transient = true;
    let mut prev = f64::NEG_INFINITY;
    for &r in &tail {
        let (av, bv) = (a.eval(r), b.eval(r));
        let jm = j_min(k_min.eval(r), d_max)?;
        let lhs = 2.0 * r * jm * dm1 * bv * bv;
        let margin = lhs - av * av - dm1 * bv * bv;
        transient &= margin > 0.0 && margin >= prev;
        prev = margin;
        margins.push(MarginRow::new(r, "2r*J_min*(d-1)b^2", Estimate::exact(lhs), margin, Criterion::EllipticTransience));
    }

    let mut recurrent = true;
    let rec: Vec<f64> = tail.iter().copied().filter(|r| *r > 1.0).collect();
    if rec.is_empty() {
        recurrent = false;
        notes.push("recurrence test needs grid radii above 1".into());
    }
    for &r in &rec {
        let ln_b = b.ln_eval(r);
        let ln_a = a.ln_eval(r);
        let ln_lhs = (2.0 * r * dm1).ln() + log_j_max(k_max.eval(r), d_max)? + 2.0 * ln_b;
        let factor = 0.5 * recurrence_factor(r, theta);
        let ln_rhs = factor.ln() + 2.0 * ln_a;
        let holds = ln_lhs <= ln_rhs;
        recurrent &= holds;
        // Margin as a log-ratio: ln(rhs/lhs), positive when the inequality holds.
        let margin = if ln_lhs == f64::NEG_INFINITY { f64::INFINITY } else { ln_rhs - ln_lhs };
        margins.push(MarginRow::new(r, "ln(2r*J_max*(d-1)b^2)", Estimate::exact(ln_lhs), margin, Criterion::EllipticRecurrence));
    }

    let (verdict, criterion) = decide(
        transient,
        recurrent,
        Criterion::EllipticTransience,
        Criterion::EllipticRecurrence,
        &mut notes,
    );
    Ok(ClassificationReport {
        verdict,
        criterion,
        margins,
        theta,
        r0,
        notes,
    })
}
