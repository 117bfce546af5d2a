//! Increment laws: samplers over the tangent space at a point, expressed in
//! its radial frame, plus the analytic moments where they are known.
//!
//! Samples are returned as frame coordinates: index 0 is the outward radial
//! component, indices `1..d` the transverse components. [`RadialFrame::embed`]
//! turns them into ambient vectors.
//!
//! [`RadialFrame::embed`]: crate::geometry::RadialFrame::embed

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{domain, usage, Result};
use crate::geometry::IncrementDecomposition;
use crate::stats::{Estimate, SampleStats};

/// A nonnegative function of the distance from the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    Constant(f64),
    /// `c · min(1, r^{-p})`
    PowerDecay { c: f64, p: f64 },
    /// `c · max(1, r)^p`
    PowerGrowth { c: f64, p: f64 },
    /// `intercept + slope · r`
    Affine { intercept: f64, slope: f64 },
    /// `c · e^{-rate · r}`
    ExpDecay { c: f64, rate: f64 },
    /// Piecewise-linear through `(r, value)` knots, constant beyond the ends.
    Table(Vec<(f64, f64)>),
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be a finite nonnegative number, got {v}")))
    }
}

impl RadialProfile {
    pub fn constant(c: f64) -> Result<Self> {
        nonneg("constant value", c)?;
        Ok(Self::Constant(c))
    }

    pub fn power_decay(c: f64, p: f64) -> Result<Self> {
        nonneg("scale", c)?;
        nonneg("decay exponent", p)?;
        Ok(Self::PowerDecay { c, p })
    }

    pub fn power_growth(c: f64, p: f64) -> Result<Self> {
        nonneg("scale", c)?;
        nonneg("growth exponent", p)?;
        Ok(Self::PowerGrowth { c, p })
    }

    pub fn affine(intercept: f64, slope: f64) -> Result<Self> {
        nonneg("intercept", intercept)?;
        nonneg("slope", slope)?;
        Ok(Self::Affine { intercept, slope })
    }

    pub fn exp_decay(c: f64, rate: f64) -> Result<Self> {
        nonneg("scale", c)?;
        nonneg("decay rate", rate)?;
        Ok(Self::ExpDecay { c, rate })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(domain("profile table is empty"));
        }
        for (r, v) in &points {
            nonneg("table radius", *r)?;
            nonneg("table value", *v)?;
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(domain("profile table radii must be strictly increasing"));
        }
        Ok(Self::Table(points))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::PowerDecay { c, p } => {
                if r <= 1.0 {
                    *c
                } else {
                    c * r.powf(-p)
                }
            }
            Self::PowerGrowth { c, p } => c * r.max(1.0).powf(*p),
            Self::Affine { intercept, slope } => intercept + slope * r,
            Self::ExpDecay { c, rate } => c * (-rate * r).exp(),
            Self::Table(points) => interpolate(points, r),
        }
    }

    /// `log` of the profile value, finite even where the value underflows.
    pub fn ln_eval(&self, r: f64) -> f64 {
        match self {
            Self::ExpDecay { c, rate } => c.ln() - rate * r,
            _ => self.eval(r).ln(),
        }
    }

    /// Supremum over `r ≥ 0`; `None` when unbounded.
    pub fn sup(&self) -> Option<f64> {
        match self {
            Self::Constant(c) | Self::PowerDecay { c, .. } | Self::ExpDecay { c, .. } => Some(*c),
            Self::PowerGrowth { c, p } => (*p == 0.0 || *c == 0.0).then_some(*c),
            Self::Affine { intercept, slope } => (*slope == 0.0).then_some(*intercept),
            Self::Table(points) => Some(points.iter().fold(0.0, |m, (_, v)| m.max(*v))),
        }
    }

    /// Infimum over `r ≥ 0`.
    pub fn inf(&self) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::PowerDecay { c, p } | Self::ExpDecay { c, rate: p } => {
                if *p == 0.0 {
                    *c
                } else {
                    0.0
                }
            }
            Self::PowerGrowth { c, .. } => *c,
            Self::Affine { intercept, .. } => *intercept,
            Self::Table(points) => points.iter().fold(f64::INFINITY, |m, (_, v)| m.min(*v)),
        }
    }

    /// The value if the profile does not depend on `r`.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            _ if self.sup() == Some(self.inf()) => Some(self.inf()),
            _ => None,
        }
    }
}

fn interpolate(points: &[(f64, f64)], r: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if r <= first.0 {
        return first.1;
    }
    if r >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|(x, _)| *x <= r);
    let (r0, v0) = points[i - 1];
    let (r1, v1) = points[i];
    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "const:{c}"),
            Self::PowerDecay { c, p } => write!(f, "powerdecay:{c},{p}"),
            Self::PowerGrowth { c, p } => write!(f, "powergrowth:{c},{p}"),
            Self::Affine { intercept, slope } => write!(f, "affine:{intercept},{slope}"),
            Self::ExpDecay { c, rate } => write!(f, "expdecay:{c},{rate}"),
            Self::Table(points) => {
                write!(f, "table:")?;
                for (i, (r, v)) in points.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{r}/{v}")?;
                }
                Ok(())
            }
        }
    }
}

/// A user-supplied increment law.
pub trait CustomLaw: Send + Sync + fmt::Debug {
    /// Frame coordinates (outward radial component first) of one increment
    /// drawn at distance `r` from the origin.
    fn sample(&self, r: f64, dim: usize, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Almost-sure bound on the step length, if any.
    fn d_max(&self) -> Option<f64> {
        None
    }

    /// Whether the law depends on the position only through `r`.
    fn radially_symmetric(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub enum LawKind {
    /// Uniform measure on an ellipsoid with radial semi-axis `a√d` and
    /// transverse semi-axes `b√d`.
    Elliptic { a: RadialProfile, b: RadialProfile },
    /// Independent `√3·U[-a, a]` radial and `√3·U[-b, b]` transverse coordinates.
    Box { a: RadialProfile, b: RadialProfile },
    /// Pareto step length with density `(m−1)/y^m` on `[1, ∞)` and a
    /// two-point law for `φ` that keeps `E[φ | d_tot] = 0`.
    HeavyTail { m: f64, lambda: RadialProfile },
    /// Steps of length `4N` with `d_rad ∈ {−2N, 0}` equally likely.
    InwardBiased { n: f64 },
    Custom(Arc<dyn CustomLaw>),
}

/// The step distribution of a radially symmetric chain in dimension `d`.
#[derive(Debug, Clone)]
pub struct IncrementLaw {
    kind: LawKind,
    dim: usize,
}

/// A sampled increment in frame coordinates together with its decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameIncrement {
    pub coords: Vec<f64>,
    pub decomposition: IncrementDecomposition,
}

impl FrameIncrement {
    /// Decomposes frame coordinates; at the origin `d_rad := d_tot`.
    pub fn from_coords(coords: Vec<f64>, at_origin: bool) -> Self {
        let d_tot = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        let d_rad = if at_origin { d_tot } else { coords[0] };
        Self {
            coords,
            decomposition: IncrementDecomposition::clamped(d_tot, d_rad),
        }
    }
}

/// One draw of `d_tot` with the exact conditional law of `d_rad` given it,
/// as at most two weighted atoms. Averaging a function over the atoms instead
/// of sampling `d_rad` is an unbiased conditional Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalDraw {
    pub d_tot: f64,
    atoms: [(f64, f64); 2],
    len: usize,
}

impl ConditionalDraw {
    fn single(d_tot: f64, d_rad: f64) -> Self {
        Self {
            d_tot,
            atoms: [(1.0, d_rad), (0.0, 0.0)],
            len: 1,
        }
    }

    fn pair(d_tot: f64, first: (f64, f64), second: (f64, f64)) -> Self {
        Self {
            d_tot,
            atoms: [first, second],
            len: 2,
        }
    }

    /// `(probability, d_rad)` pairs.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms[..self.len]
    }

    /// `E[f(d_rad, d_tot) | d_tot]`.
    pub fn expect<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> f64 {
        self.atoms().iter().map(|&(w, dr)| w * f(dr, self.d_tot)).sum()
    }
}

/// Closed-form moments of a law at a given radius, where available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMoments {
    pub e_dtot2: Option<f64>,
    pub e_drad2: Option<f64>,
    pub e_drad: Option<f64>,
}

impl IncrementLaw {
    pub fn elliptic(a: RadialProfile, b: RadialProfile, dim: usize) -> Result<Self> {
        Self::new(LawKind::Elliptic { a, b }, dim)
    }

    pub fn boxed(a: RadialProfile, b: RadialProfile, dim: usize) -> Result<Self> {
        Self::new(LawKind::Box { a, b }, dim)
    }

    /// Heavy-tailed law with the default threshold `λ(r) = max(1, r^{1/(m−1)})`.
    pub fn heavy_tail(m: f64, dim: usize) -> Result<Self> {
        check_tail_index(m)?;
        Self::heavy_tail_with(m, RadialProfile::PowerGrowth { c: 1.0, p: 1.0 / (m - 1.0) }, dim)
    }

    pub fn heavy_tail_with(m: f64, lambda: RadialProfile, dim: usize) -> Result<Self> {
        Self::new(LawKind::HeavyTail { m, lambda }, dim)
    }

    pub fn inward_biased(n: f64, dim: usize) -> Result<Self> {
        Self::new(LawKind::InwardBiased { n }, dim)
    }

    pub fn custom(law: Arc<dyn CustomLaw>, dim: usize) -> Result<Self> {
        Self::new(LawKind::Custom(law), dim)
    }

    /// The degenerate law that never moves.
    pub fn zero(dim: usize) -> Result<Self> {
        Self::elliptic(RadialProfile::Constant(0.0), RadialProfile::Constant(0.0), dim)
    }

    pub fn new(kind: LawKind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(domain(format!("dimension must be at least 2, got {dim}")));
        }
        match &kind {
            LawKind::HeavyTail { m, lambda } => {
                check_tail_index(*m)?;
                if lambda.inf() < 1.0 {
                    return Err(domain("heavy-tail threshold lambda(r) must be at least 1 for all r"));
                }
            }
            LawKind::InwardBiased { n } if !(n.is_finite() && *n > 0.0) => {
                return Err(domain(format!("inward-biased scale N must be positive, got {n}")));
            }
            _ => {}
        }
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LawKind::Elliptic { .. } => "elliptic",
            LawKind::Box { .. } => "box",
            LawKind::HeavyTail { .. } => "heavytail",
            LawKind::InwardBiased { .. } => "inward",
            LawKind::Custom(_) => "custom",
        }
    }

    pub fn radially_symmetric(&self) -> bool {
        match &self.kind {
            LawKind::Custom(c) => c.radially_symmetric(),
            _ => true,
        }
    }

    /// Draws one increment at distance `r` from the origin. Every built-in
    /// law consumes the same number of random values whatever `r` is, so two
    /// walks fed the same stream stay coupled.
    pub fn sample<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> FrameIncrement {
        let d = self.dim;
        match &self.kind {
            LawKind::Elliptic { a, b } => sample_elliptic(r, a.eval(r), b.eval(r), d, rng),
            LawKind::Box { a, b } => sample_box(r, a.eval(r), b.eval(r), d, rng),
            LawKind::HeavyTail { m, lambda } => sample_heavytail(r, *m, lambda.eval(r), d, rng),
            LawKind::InwardBiased { n } => sample_inward_biased(r, *n, d, rng),
            LawKind::Custom(c) => {
                let mut dyn_rng = DynRng(rng);
                let coords = c.sample(r, d, &mut dyn_rng);
                FrameIncrement::from_coords(coords, r == 0.0)
            }
        }
    }

    /// Draws `d_tot` and returns the exact conditional law of `d_rad`.
    pub fn draw_conditional<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> ConditionalDraw {
        let at_origin = r == 0.0;
        match &self.kind {
            LawKind::Elliptic { .. } | LawKind::Box { .. } => {
                // Both laws are invariant under reflecting the radial axis.
                let inc = self.sample(r, rng);
                let dec = inc.decomposition;
                if at_origin {
                    ConditionalDraw::single(dec.d_tot(), dec.d_tot())
                } else {
                    ConditionalDraw::pair(dec.d_tot(), (0.5, dec.d_rad()), (0.5, -dec.d_rad()))
                }
            }
            LawKind::HeavyTail { m, lambda } => {
                let y = pareto(*m, rng);
                if at_origin {
                    return ConditionalDraw::single(y, y);
                }
                let lam = lambda.eval(r);
                let alpha = heavytail_alpha(y, lam);
                let eps = heavytail_epsilon(y, lam);
                ConditionalDraw::pair(y, (alpha, y), (1.0 - alpha, (eps - 1.0) * y))
            }
            LawKind::InwardBiased { n } => {
                let d_tot = 4.0 * n;
                if at_origin {
                    ConditionalDraw::single(d_tot, d_tot)
                } else {
                    ConditionalDraw::pair(d_tot, (0.5, -2.0 * n), (0.5, 0.0))
                }
            }
            LawKind::Custom(_) => {
                let dec = self.sample(r, rng).decomposition;
                ConditionalDraw::single(dec.d_tot(), dec.d_rad())
            }
        }
    }

    pub fn analytic_moments(&self, r: f64) -> AnalyticMoments {
        match &self.kind {
            LawKind::Elliptic { a, b } | LawKind::Box { a, b } => {
                let (t, rad) = elliptic_moments(a.eval(r), b.eval(r), self.dim);
                AnalyticMoments {
                    e_dtot2: Some(t),
                    e_drad2: Some(rad),
                    e_drad: Some(0.0),
                }
            }
            LawKind::HeavyTail { m, .. } => AnalyticMoments {
                e_dtot2: Some((m - 1.0) / (m - 3.0)),
                e_drad2: None,
                e_drad: Some(0.0),
            },
            LawKind::InwardBiased { n } => AnalyticMoments {
                e_dtot2: Some(16.0 * n * n),
                e_drad2: Some(2.0 * n * n),
                e_drad: Some(-n),
            },
            LawKind::Custom(_) => AnalyticMoments {
                e_dtot2: None,
                e_drad2: None,
                e_drad: None,
            },
        }
    }
}

fn check_tail_index(m: f64) -> Result<()> {
    if m.is_finite() && m > 3.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "heavy-tail index m must exceed 3 so that the step length has more than two moments, got {m}"
        )))
    }
}

struct DynRng<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Second moments `(E[d_tot²], E[d_rad²]) = (a² + (d−1)b², a²)` of the
/// elliptic (and box) law.
pub fn elliptic_moments(a: f64, b: f64, d: usize) -> (f64, f64) {
    (a * a + (d as f64 - 1.0) * b * b, a * a)
}

/// Uniform point on the unit sphere of `R^n` by normalising Gaussians.
fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        v[0] = 1.0;
    }
    v
}

/// Elliptic law: `u` uniform on the unit sphere, radial axis scaled by `a√d`,
/// transverse axes by `b√d`.
pub fn sample_elliptic<R: Rng + ?Sized>(r: f64, a: f64, b: f64, d: usize, rng: &mut R) -> FrameIncrement {
    let scale = (d as f64).sqrt();
    let mut coords = unit_vector(d, rng);
    coords[0] *= a * scale;
    coords[1..].iter_mut().for_each(|c| *c *= b * scale);
    FrameIncrement::from_coords(coords, r == 0.0)
}

/// Box law: independent `√3·U[-a, a]` and `√3·U[-b, b]` coordinates.
pub fn sample_box<R: Rng + ?Sized>(r: f64, a: f64, b: f64, d: usize, rng: &mut R) -> FrameIncrement {
    let s3 = 3.0_f64.sqrt();
    let coords = (0..d)
        .map(|i| {
            let half = if i == 0 { a } else { b };
            s3 * half * (2.0 * rng.random::<f64>() - 1.0)
        })
        .collect();
    FrameIncrement::from_coords(coords, r == 0.0)
}

/// `ε(y) = (1 − cosh y + sinh y)/sinh y` for `y ≥ λ`, else 0.
pub fn heavytail_epsilon(y: f64, lambda_r: f64) -> f64 {
    if y < lambda_r {
        0.0
    } else {
        // (1 − e^{−y})/sinh y = 2/(e^y + 1)
        2.0 / (y.exp() + 1.0)
    }
}

/// `α(y) = (1 − ε)/(2 − ε)`: `(1 − cosh y + sinh y)/2` for `y ≥ λ`, else 1/2.
pub fn heavytail_alpha(y: f64, lambda_r: f64) -> f64 {
    if y < lambda_r {
        0.5
    } else {
        -0.5 * (-y).exp_m1()
    }
}

/// Inverse-CDF draw from the density `(m−1)/y^m` on `[1, ∞)`.
fn pareto<R: Rng + ?Sized>(m: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    u.powf(-1.0 / (m - 1.0))
}

/// Assembles frame coordinates from `(d_tot, φ)` and a transverse direction.
fn with_transverse(d_tot: f64, phi: f64, dir: &[f64], at_origin: bool) -> FrameIncrement {
    let transverse = d_tot * (1.0 - phi * phi).max(0.0).sqrt();
    let mut coords = Vec::with_capacity(dir.len() + 1);
    coords.push(phi * d_tot);
    coords.extend(dir.iter().map(|w| transverse * w));
    let d_rad = if at_origin { d_tot } else { phi * d_tot };
    FrameIncrement {
        coords,
        decomposition: IncrementDecomposition::clamped(d_tot, d_rad),
    }
}

pub fn sample_heavytail<R: Rng + ?Sized>(r: f64, m: f64, lambda_r: f64, d: usize, rng: &mut R) -> FrameIncrement {
    let y = pareto(m, rng);
    let alpha = heavytail_alpha(y, lambda_r);
    let phi = if rng.random::<f64>() < alpha {
        1.0
    } else {
        heavytail_epsilon(y, lambda_r) - 1.0
    };
    let dir = unit_vector(d - 1, rng);
    with_transverse(y, phi, &dir, r == 0.0)
}

pub fn sample_inward_biased<R: Rng + ?Sized>(r: f64, n: f64, d: usize, rng: &mut R) -> FrameIncrement {
    let d_tot = 4.0 * n;
    let phi = if rng.random::<f64>() < 0.5 { -0.5 } else { 0.0 };
    let dir = unit_vector(d - 1, rng);
    with_transverse(d_tot, phi, &dir, r == 0.0)
}

/// Almost-sure bound on the step length, `None` when unbounded.
pub fn law_dmax(law: &IncrementLaw) -> Option<f64> {
    let d = law.dim as f64;
    match &law.kind {
        LawKind::Elliptic { a, b } => Some(d.sqrt() * a.sup()?.max(b.sup()?)),
        LawKind::Box { a, b } => {
            let (a, b) = (a.sup()?, b.sup()?);
            Some((3.0 * (a * a + (d - 1.0) * b * b)).sqrt())
        }
        LawKind::HeavyTail { .. } => None,
        LawKind::InwardBiased { n } => Some(4.0 * n),
        LawKind::Custom(c) => c.d_max(),
    }
}

/// Component-wise sample mean of the frame coordinates at radius `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub r: f64,
    /// Outward radial component first.
    pub components: Vec<Estimate>,
}

impl DriftReport {
    /// Whether every component mean lies within `sigmas` standard errors of 0.
    pub fn within_band(&self, sigmas: f64) -> bool {
        self.components.iter().all(|e| e.within(0.0, sigmas))
    }

    pub fn radial(&self) -> &Estimate {
        &self.components[0]
    }
}

pub fn zero_drift_check<R: Rng + ?Sized>(
    law: &IncrementLaw,
    r: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<DriftReport> {
    if n_samples < 1000 {
        return Err(usage(format!("zero-drift check needs at least 1000 samples, got {n_samples}")));
    }
    let mut acc = vec![SampleStats::new(); law.dim];
    for _ in 0..n_samples {
        let inc = law.sample(r, rng);
        for (s, c) in acc.iter_mut().zip(&inc.coords) {
            s.push(*c);
        }
    }
    Ok(DriftReport {
        r,
        components: acc.iter().map(SampleStats::estimate).collect(),
    })
}
