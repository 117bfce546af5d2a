//! Ensemble engine for geodesic random walks.
//!
//! Two integrators share one sampling path. `Ambient` carries the full
//! position (hyperboloid or flat coordinates) and applies the exponential
//! map; `RadialOnly` carries only `R` and applies the exact radial update,
//! which depends on nothing but `(R, d_tot, φ)`. Every built-in law draws a
//! fixed amount of randomness per step, so the two modes fed the same stream
//! produce the same walk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{usage, Error, Result};
use crate::geometry::{
    distance_unchecked, euclidean_next_radius, exp_with_norm, hyperbolic_next_radius, origin,
    Curvature, CurvatureModel, LorentzPoint, RadialFrame,
};
use crate::increments::{law_dmax, IncrementLaw, LawKind};
use crate::stats::{quantile_sorted, Estimate, ProbabilityEstimate, SampleStats};

/// Largest `k·R` an ambient walk may reach. Coordinates grow like `e^{kR}`
/// and the frame and norm computations square them, so f64 runs out near
/// `kR ≈ 355`.
pub const OVERFLOW_KR: f64 = 350.0;

/// Relative change in `x₀` tolerated when re-projecting onto the hyperboloid.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ambient,
    RadialOnly,
}

#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub model: CurvatureModel,
    pub law: IncrementLaw,
    pub steps: u64,
    pub walks: u64,
    pub seed: u64,
    pub mode: Mode,
    pub record_stride: u64,
    /// Radius of the ball `{R < ball_radius}` whose entries count as returns.
    pub ball_radius: f64,
    /// Returns before this step are not counted.
    pub burn_in: u64,
    pub escape_radius: Option<f64>,
    /// Initial distance from the origin, along the first axis.
    pub start_radius: f64,
}

impl WalkConfig {
    /// Defaults: radial-only mode, stride `max(1, T/1000)`, burn-in `T/10`,
    /// return ball of radius 5, start at the origin.
    pub fn new(model: CurvatureModel, law: IncrementLaw, steps: u64, walks: u64, seed: u64) -> Self {
        Self {
            model,
            law,
            steps,
            walks,
            seed,
            mode: Mode::RadialOnly,
            record_stride: (steps / 1000).max(1),
            ball_radius: 5.0,
            burn_in: steps / 10,
            escape_radius: None,
            start_radius: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.law.dim() != self.model.dim() {
            return Err(Error::Dimension {
                expected: self.model.dim(),
                actual: self.law.dim(),
            });
        }
        if self.walks == 0 {
            return Err(usage("an ensemble needs at least one walk"));
        }
        if self.record_stride == 0 {
            return Err(usage("record stride must be at least 1"));
        }
        if !(self.ball_radius.is_finite() && self.ball_radius > 0.0) {
            return Err(usage(format!("ball radius must be positive, got {}", self.ball_radius)));
        }
        if !(self.start_radius.is_finite() && self.start_radius >= 0.0) {
            return Err(usage(format!("start radius must be nonnegative, got {}", self.start_radius)));
        }
        if let Some(e) = self.escape_radius {
            if !(e.is_finite() && e > 0.0) {
                return Err(usage(format!("escape radius must be positive, got {e}")));
            }
        }
        if self.mode == Mode::RadialOnly && !self.law.radially_symmetric() {
            return Err(usage("radial-only mode needs a radially symmetric law"));
        }
        Ok(())
    }

    fn k(&self) -> Option<f64> {
        self.model.k()
    }
}

/// Generator for walk `walk_id`: the master seed selects the key, the walk
/// id selects an independent stream.
pub fn walk_rng(seed: u64, walk_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walk_id);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub walk_id: u64,
    /// `(step, R)` every `record_stride` steps, plus the final step.
    pub radii: Vec<(u64, f64)>,
    /// Entries into the return ball after burn-in.
    pub returns: u64,
    pub escape_step: Option<u64>,
    pub final_r: f64,
    /// Mean `ΔR` over the steps after burn-in, if there were any.
    pub tail_drift: Option<f64>,
}

/// Position of a walker under one of the integrators.
#[derive(Debug, Clone)]
enum State {
    Hyperbolic { x: LorentzPoint, k: f64 },
    Flat { x: Vec<f64> },
    Radial { r: f64, k: Option<f64> },
}

impl State {
    fn start(config: &WalkConfig, start: &[f64]) -> Self {
        match (config.mode, config.model.kind()) {
            (Mode::Ambient, Curvature::Hyperbolic { k }) => Self::Hyperbolic {
                x: LorentzPoint::lift(start, k),
                k,
            },
            (Mode::Ambient, Curvature::Euclidean) => Self::Flat { x: start.to_vec() },
            (Mode::RadialOnly, _) => {
                let rho = start.iter().map(|s| s * s).sum::<f64>().sqrt();
                let k = config.k();
                let r = match k {
                    Some(k) => (k * rho).asinh() / k,
                    None => rho,
                };
                Self::Radial { r, k }
            }
        }
    }

    fn radius(&self) -> f64 {
        match self {
            Self::Hyperbolic { x, k } => x.radius(*k),
            Self::Flat { x } => x.iter().map(|s| s * s).sum::<f64>().sqrt(),
            Self::Radial { r, .. } => *r,
        }
    }

    fn step<R: Rng + ?Sized>(&mut self, law: &IncrementLaw, r: f64, step: u64, rng: &mut R) -> Result<()> {
        let inc = law.sample(r, rng);
        match self {
            Self::Hyperbolic { x, k } => {
                let frame = RadialFrame::hyperbolic(x, *k);
                let v = frame.embed(&inc.coords);
                let n = inc.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
                let mut next = exp_with_norm(x, &v, n, *k);
                let kr = *k * next.radius(*k);
                if !(kr <= OVERFLOW_KR) {
                    return Err(Error::Overflow(format!(
                        "k*R = {kr:.1} exceeds {OVERFLOW_KR} at step {step}; use radial-only mode"
                    )));
                }
                let drift = next.reproject(*k);
                if !(drift <= DRIFT_TOLERANCE) {
                    return Err(Error::HyperboloidDrift { step, drift });
                }
                *x = next;
            }
            Self::Flat { x } => {
                let frame = RadialFrame::euclidean(x);
                for (xi, vi) in x.iter_mut().zip(frame.embed(&inc.coords)) {
                    *xi += vi;
                }
            }
            Self::Radial { r: radius, k } => {
                let dec = inc.decomposition;
                *radius = match k {
                    Some(k) => hyperbolic_next_radius(*radius, dec.d_tot(), dec.phi(), *k),
                    None => euclidean_next_radius(*radius, dec.d_tot(), dec.d_rad()),
                };
            }
        }
        Ok(())
    }
}

fn axis_point(d: usize, r: f64, k: Option<f64>) -> Vec<f64> {
    // Spatial coordinates of the point at distance r along the first axis.
    let mut s = vec![0.0; d];
    s[0] = match k {
        Some(k) => (k * r).sinh() / k,
        None => r,
    };
    s
}

/// Runs one walk of `config.steps` steps.
pub fn run_walk(config: &WalkConfig, walk_id: u64) -> Result<TrajectoryRecord> {
    config.validate()?;
    let mut rng = walk_rng(config.seed, walk_id);
    let start = axis_point(config.model.dim(), config.start_radius, config.k());
    let mut state = State::start(config, &start);
    let mut r = state.radius();
    let mut radii = vec![(0, r)];
    let mut returns = 0;
    let mut escape_step = None;
    let mut tail = SampleStats::new();
    for n in 1..=config.steps {
        state.step(&config.law, r, n, &mut rng)?;
        let next = state.radius();
        if n > config.burn_in {
            tail.push(next - r);
            if next < config.ball_radius && r >= config.ball_radius {
                returns += 1;
            }
        }
        if escape_step.is_none() && config.escape_radius.is_some_and(|e| next > e) {
            escape_step = Some(n);
        }
        r = next;
        if n % config.record_stride == 0 || n == config.steps {
            radii.push((n, r));
        }
    }
    Ok(TrajectoryRecord {
        walk_id,
        radii,
        returns,
        escape_step,
        final_r: r,
        tail_drift: (tail.count() > 0).then(|| tail.mean()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub walks: u64,
    /// 5%, 25%, 50%, 75% and 95% quantiles of the final radius.
    pub final_r_quantiles: [f64; 5],
    pub mean_returns: f64,
    pub median_returns: f64,
    /// Walks that exceeded the escape radius at some step.
    pub escaped: ProbabilityEstimate,
    /// Walks with at least one return after burn-in.
    pub returned: ProbabilityEstimate,
    /// Walks ending beyond the escape radius with no return after burn-in.
    pub transient_proxy: ProbabilityEstimate,
    /// Mean post-burn-in `ΔR` across walks.
    pub drift: Estimate,
}

impl EnsembleStats {
    pub fn fraction_escaped(&self) -> f64 {
        self.escaped.p()
    }

    pub fn fraction_returned(&self) -> f64 {
        self.returned.p()
    }

    pub fn from_records(records: &[TrajectoryRecord], escape_radius: Option<f64>) -> Self {
        let n = records.len() as u64;
        let mut finals: Vec<f64> = records.iter().map(|t| t.final_r).collect();
        finals.sort_by(f64::total_cmp);
        let mut returns: Vec<f64> = records.iter().map(|t| t.returns as f64).collect();
        returns.sort_by(f64::total_cmp);
        let q = [0.05, 0.25, 0.5, 0.75, 0.95].map(|p| quantile_sorted(&finals, p));
        let count = |f: &dyn Fn(&TrajectoryRecord) -> bool| ProbabilityEstimate {
            successes: records.iter().filter(|t| f(t)).count() as u64,
            trials: n,
        };
        let drift: SampleStats = records.iter().filter_map(|t| t.tail_drift).collect();
        Self {
            walks: n,
            final_r_quantiles: q,
            mean_returns: returns.iter().sum::<f64>() / n.max(1) as f64,
            median_returns: quantile_sorted(&returns, 0.5),
            escaped: count(&|t| t.escape_step.is_some()),
            returned: count(&|t| t.returns > 0),
            transient_proxy: count(&|t| t.returns == 0 && escape_radius.is_some_and(|e| t.final_r > e)),
            drift: drift.estimate(),
        }
    }
}

/// Runs `f` over walk ids, optionally inside a pool of `workers` threads.
/// Results are always returned in walk-id order.
fn map_walks<T, F>(count: u64, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
        match workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?
                .install(run),
            None => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..count).map(f).collect()
    }
}

/// Runs `config.walks` independent walks. Output is identical for any
/// number of workers.
pub fn run_ensemble(config: &WalkConfig, workers: Option<usize>) -> Result<(Vec<TrajectoryRecord>, EnsembleStats)> {
    config.validate()?;
    let records = map_walks(config.walks, workers, |id| run_walk(config, id))?;
    let stats = EnsembleStats::from_records(&records, config.escape_radius);
    Ok((records, stats))
}

/// Estimates `P[max_{m ≤ horizon} R_m ≥ r]` from `config.start_radius ≤ r`
/// over `config.walks` walks.
pub fn escape_probe(config: &WalkConfig, r: f64, horizon: u64, workers: Option<usize>) -> Result<ProbabilityEstimate> {
    config.validate()?;
    if horizon == 0 {
        return Err(usage("escape horizon must be at least 1"));
    }
    if !(config.start_radius <= r) {
        return Err(usage(format!(
            "start radius {} must not exceed the target radius {r}",
            config.start_radius
        )));
    }
    let start = axis_point(config.model.dim(), config.start_radius, config.k());
    let hits = map_walks(config.walks, workers, |id| {
        let mut rng = walk_rng(config.seed, id);
        let mut state = State::start(config, &start);
        let mut radius = state.radius();
        if radius >= r {
            return Ok(true);
        }
        for n in 1..=horizon {
            state.step(&config.law, radius, n, &mut rng)?;
            radius = state.radius();
            if radius >= r {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    Ok(ProbabilityEstimate {
        successes: hits.iter().filter(|h| **h).count() as u64,
        trials: config.walks,
    })
}

/// Uniform point of the ball of radius `radius` around the origin: distance
/// uniform in `[0, radius)`, direction uniform on the sphere.
fn start_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, k: Option<f64>, rng: &mut R) -> Vec<f64> {
    let dist = radius * rng.random::<f64>();
    let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = match k {
        Some(k) => (k * dist).sinh() / k,
        None => dist,
    };
    dir.iter_mut().for_each(|x| *x *= if n > 0.0 { scale / n } else { 0.0 });
    dir
}

/// Estimates `P[τ_N ≤ m]` for the ball `N` of radius `target_radius` centred
/// at distance `target_center_radius` along the first axis, with starts drawn
/// from the ball of radius `config.ball_radius` around the origin. Needs the
/// ambient integrator and a box law (whose support is solid).
pub fn neighborhood_return_probe(
    config: &WalkConfig,
    target_center_radius: f64,
    target_radius: f64,
    m: u64,
    workers: Option<usize>,
) -> Result<ProbabilityEstimate> {
    config.validate()?;
    if config.mode != Mode::Ambient {
        return Err(usage("neighbourhood probe needs ambient mode to track full positions"));
    }
    if !matches!(config.law.kind(), LawKind::Box { .. }) {
        return Err(usage("neighbourhood probe needs the box law"));
    }
    if !(target_radius > 0.0 && target_center_radius >= 0.0) {
        return Err(usage("target ball needs a positive radius and a nonnegative centre distance"));
    }
    let d = config.model.dim();
    let k = config.k();
    let center = axis_point(d, target_center_radius, k);
    let center_full: Vec<f64> = match k {
        Some(k) => LorentzPoint::lift(&center, k).into_coords(),
        None => center.clone(),
    };
    let inside = |state: &State| -> Result<bool> {
        Ok(match state {
            State::Hyperbolic { x, k } => distance_unchecked(x.coords(), &center_full, *k)? < target_radius,
            State::Flat { x } => {
                x.iter().zip(&center_full).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < target_radius
            }
            State::Radial { .. } => unreachable!("ambient mode checked above"),
        })
    };
    let hits = map_walks(config.walks, workers, |id| {
        let mut rng = walk_rng(config.seed, id);
        let start = start_in_ball(d, config.ball_radius, k, &mut rng);
        let mut state = State::start(config, &start);
        if inside(&state)? {
            return Ok(true);
        }
        for n in 1..=m {
            let r = state.radius();
            state.step(&config.law, r, n, &mut rng)?;
            if inside(&state)? {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    Ok(ProbabilityEstimate {
        successes: hits.iter().filter(|h| **h).count() as u64,
        trials: config.walks,
    })
}

/// Whether the target ball lies beyond `m` steps of maximal length from the
/// start ball, so that the probe must return 0.
pub fn target_unreachable(config: &WalkConfig, target_center_radius: f64, target_radius: f64, m: u64) -> bool {
    law_dmax(&config.law).is_some_and(|dmax| {
        target_center_radius - target_radius - config.ball_radius > m as f64 * dmax
    })
}

/// The canonical origin of the configured model, in ambient coordinates.
pub fn model_origin(model: &CurvatureModel) -> Result<Vec<f64>> {
    match model.kind() {
        Curvature::Hyperbolic { k } => Ok(origin(k, model.dim())?.into_coords()),
        Curvature::Euclidean => Ok(vec![0.0; model.dim()]),
    }
}

pub const TRAJECTORY_CSV_HEADER: &str = "walk_id,step,R";

pub const SUMMARY_CSV_HEADER: &str = "walks,q05,q25,q50,q75,q95,mean_returns,median_returns,fraction_escaped,fraction_returned,fraction_transient_proxy,drift,drift_half_width";

/// Rows `walk_id,step,R` for every recorded sample, in walk order.
pub fn trajectory_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = String::from(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for t in records {
        for (step, r) in &t.radii {
            out.push_str(&format!("{},{},{}\n", t.walk_id, step, r));
        }
    }
    out
}

pub fn summary_csv(stats: &EnsembleStats) -> String {
    let q = stats.final_r_quantiles;
    format!(
        "{SUMMARY_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        stats.walks,
        q[0],
        q[1],
        q[2],
        q[3],
        q[4],
        stats.mean_returns,
        stats.median_returns,
        stats.escaped.p(),
        stats.returned.p(),
        stats.transient_proxy.p(),
        stats.drift.value,
        stats.drift.half_width,
    )
}
