//! Constant-curvature geometry.
//!
//! Hyperbolic space of curvature `-k²` is realised as the upper sheet of the
//! hyperboloid `B(x, x) = -1/k²` in Minkowski space `R^{d+1}`, where
//! `B(x, y) = -x₀y₀ + x₁y₁ + … + x_d y_d`. Tangent vectors at `x` are the
//! ambient vectors `v` with `B(x, v) = 0`; on them `B` is positive definite.
//!
//! The Euclidean baseline kernel is a separate closed-form code path
//! ([`euclidean_radial_increment`]) rather than a `k → 0` limit.

use crate::error::{domain, Error, Result};

/// Relative tolerance for the hyperboloid constraint of a [`LorentzPoint`].
pub const HYPERBOLOID_TOL: f64 = 1e-10;

/// Tolerance for tangent-space membership, scaled by the operand norms.
pub const TANGENT_TOL: f64 = 1e-10;

/// How far below 1 an arccosh argument may fall before it is treated as an
/// invariant violation rather than rounding noise.
pub const ACOSH_CLAMP_TOL: f64 = 1e-9;

/// Above `log(cosh(kR') - 1) > 30` the new radius is evaluated in log-domain.
const LOG_DOMAIN_THRESHOLD: f64 = 30.0;

/// Either hyperbolic with curvature parameter `k` (sectional curvature `-k²`)
/// or flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature {
    Hyperbolic { k: f64 },
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureModel {
    kind: Curvature,
    dim: usize,
}

impl CurvatureModel {
    pub fn hyperbolic(k: f64, dim: usize) -> Result<Self> {
        check_curvature(k)?;
        check_dim(dim)?;
        Ok(Self {
            kind: Curvature::Hyperbolic { k },
            dim,
        })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            kind: Curvature::Euclidean,
            dim,
        })
    }

    pub fn kind(&self) -> Curvature {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Curvature parameter, `None` for the flat model.
    pub fn k(&self) -> Option<f64> {
        match self.kind {
            Curvature::Hyperbolic { k } => Some(k),
            Curvature::Euclidean => None,
        }
    }
}

fn check_curvature(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("curvature parameter k must be positive, got {k}")))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim >= 2 {
        Ok(())
    } else {
        Err(domain(format!("dimension must be at least 2, got {dim}")))
    }
}

/// A point on the hyperboloid `𝓗_k`, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint {
    coords: Vec<f64>,
}

impl LorentzPoint {
    /// Validates `B(x,x) = -1/k²` (relative to the coordinate scale `x₀²`)
    /// and `x₀ > 0`.
    pub fn new(coords: Vec<f64>, k: f64) -> Result<Self> {
        check_curvature(k)?;
        check_dim(coords.len().saturating_sub(1))?;
        let p = Self { coords };
        p.check_on_hyperboloid(k)?;
        Ok(p)
    }

    /// Lifts spatial coordinates `(x₁, …, x_d)` onto the hyperboloid by
    /// solving for the time coordinate.
    pub fn from_spatial(spatial: &[f64], k: f64) -> Result<Self> {
        check_curvature(k)?;
        check_dim(spatial.len())?;
        Ok(Self::lift(spatial, k))
    }

    pub(crate) fn lift(spatial: &[f64], k: f64) -> Self {
        let s2: f64 = spatial.iter().map(|s| s * s).sum();
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push((1.0 / (k * k) + s2).sqrt());
        coords.extend_from_slice(spatial);
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Intrinsic dimension `d` (ambient length minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// `|B(x,x) + 1/k²| / x₀²`.
    pub fn hyperboloid_residual(&self, k: f64) -> f64 {
        let b = mdot(&self.coords, &self.coords);
        let x0 = self.coords[0];
        (b + 1.0 / (k * k)).abs() / (x0 * x0).max(f64::MIN_POSITIVE)
    }

    pub(crate) fn check_on_hyperboloid(&self, k: f64) -> Result<()> {
        if !self.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::Invariant("point has non-finite coordinates".into()));
        }
        if self.coords[0] <= 0.0 {
            return Err(Error::Invariant(format!(
                "time coordinate must be positive, got {}",
                self.coords[0]
            )));
        }
        let residual = self.hyperboloid_residual(k);
        if residual > HYPERBOLOID_TOL {
            return Err(Error::Invariant(format!(
                "point is off the hyperboloid for k = {k} (relative residual {residual:e})"
            )));
        }
        Ok(())
    }

    /// Distance to the canonical origin `(1/k, 0, …, 0)`, computed from the
    /// spatial part so that it stays accurate near the origin.
    pub fn radius(&self, k: f64) -> f64 {
        (k * norm2(self.spatial())).asinh() / k
    }

    /// Pulls the point back onto the hyperboloid by recomputing `x₀` from the
    /// spatial coordinates. Returns the relative change in `x₀`.
    pub fn reproject(&mut self, k: f64) -> f64 {
        let old = self.coords[0];
        let new = norm2(self.spatial()).hypot(1.0 / k);
        self.coords[0] = new;
        ((new - old) / new).abs()
    }
}

/// An ambient vector attached to a base point and Minkowski-orthogonal to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: LorentzPoint,
    components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: LorentzPoint, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.coords.len() {
            return Err(Error::Dimension {
                expected: base.coords.len(),
                actual: components.len(),
            });
        }
        let b = mdot(&base.coords, &components);
        let scale = norm2(&base.coords) * norm2(&components);
        if b.abs() > TANGENT_TOL * scale.max(1.0) {
            return Err(Error::Invariant(format!(
                "vector is not tangent at its base point (B(x, v) = {b:e})"
            )));
        }
        Ok(Self { base, components })
    }

    pub fn zero(base: LorentzPoint) -> Self {
        let components = vec![0.0; base.coords.len()];
        Self { base, components }
    }

    /// Orthogonal projection of an arbitrary ambient vector onto `T_x𝓗_k`.
    pub fn project(base: LorentzPoint, raw: &[f64], k: f64) -> Result<Self> {
        if raw.len() != base.coords.len() {
            return Err(Error::Dimension {
                expected: base.coords.len(),
                actual: raw.len(),
            });
        }
        let c = k * k * mdot(&base.coords, raw);
        let components = raw
            .iter()
            .zip(&base.coords)
            .map(|(v, x)| v + c * x)
            .collect();
        Ok(Self { base, components })
    }

    pub fn base(&self) -> &LorentzPoint {
        &self.base
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// Minkowski norm `√B(v, v)`, evaluated directly. Far from the origin
    /// this loses relative accuracy; [`decompose_increment`] and [`exp_map`]
    /// use a cancellation-free form instead.
    pub fn norm(&self) -> f64 {
        mdot(&self.components, &self.components).max(0.0).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            base: self.base.clone(),
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Step length, signed radial component (positive = outward) and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementDecomposition {
    d_tot: f64,
    d_rad: f64,
    phi: f64,
}

impl IncrementDecomposition {
    pub const ZERO: Self = Self {
        d_tot: 0.0,
        d_rad: 0.0,
        phi: 0.0,
    };

    pub fn new(d_tot: f64, d_rad: f64) -> Result<Self> {
        if !(d_tot.is_finite() && d_tot >= 0.0) {
            return Err(domain(format!("d_tot must be a nonnegative length, got {d_tot}")));
        }
        if !d_rad.is_finite() || d_rad.abs() > d_tot {
            return Err(domain(format!("|d_rad| = {} exceeds d_tot = {d_tot}", d_rad.abs())));
        }
        Ok(Self::clamped(d_tot, d_rad))
    }

    /// Builds from `(d_tot, φ)`, the form the radial kernels consume.
    pub fn from_phi(d_tot: f64, phi: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&phi) {
            return Err(domain(format!("phi must lie in [-1, 1], got {phi}")));
        }
        if !(d_tot.is_finite() && d_tot >= 0.0) {
            return Err(domain(format!("d_tot must be a nonnegative length, got {d_tot}")));
        }
        if d_tot == 0.0 {
            return Ok(Self::ZERO);
        }
        Ok(Self {
            d_tot,
            d_rad: phi * d_tot,
            phi,
        })
    }

    /// Clamps rounding noise in `d_rad` back into `[-d_tot, d_tot]`.
    pub(crate) fn clamped(d_tot: f64, d_rad: f64) -> Self {
        if d_tot <= 0.0 {
            return Self::ZERO;
        }
        let d_rad = d_rad.clamp(-d_tot, d_tot);
        Self {
            d_tot,
            d_rad,
            phi: (d_rad / d_tot).clamp(-1.0, 1.0),
        }
    }

    pub fn d_tot(&self) -> f64 {
        self.d_tot
    }

    pub fn d_rad(&self) -> f64 {
        self.d_rad
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

#[inline]
pub(crate) fn mdot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = -x[0] * y[0];
    for (a, b) in x[1..].iter().zip(&y[1..]) {
        acc += a * b;
    }
    acc
}

#[inline]
pub(crate) fn norm2(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum();
    if sum.is_finite() {
        return sum.sqrt();
    }
    // Rescale when the squares overflow.
    let top = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !top.is_finite() {
        return top;
    }
    top * x.iter().map(|v| (v / top) * (v / top)).sum::<f64>().sqrt()
}

/// Minkowski bilinear form `-x₀y₀ + Σ xᵢyᵢ`.
pub fn minkowski_form(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::Dimension {
            expected: 1,
            actual: 0,
        });
    }
    Ok(mdot(x, y))
}

/// The canonical origin `(1/k, 0, …, 0)`.
pub fn origin(k: f64, d: usize) -> Result<LorentzPoint> {
    check_curvature(k)?;
    check_dim(d)?;
    let mut coords = vec![0.0; d + 1];
    coords[0] = 1.0 / k;
    Ok(LorentzPoint { coords })
}

fn same_base(x: &LorentzPoint, v: &TangentVector) -> Result<()> {
    let scale = x.coords.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    let matches = x.coords.len() == v.base.coords.len()
        && x
            .coords
            .iter()
            .zip(&v.base.coords)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * scale);
    if matches {
        Ok(())
    } else {
        Err(Error::Contract(
            "tangent vector is attached to a different base point".into(),
        ))
    }
}

/// `exp_x(v) = cosh(k‖v‖)·x + sinh(k‖v‖)/(k‖v‖)·v`, with the `v = 0` limit `x`.
///
/// At distance `R` from the origin the ambient components of `v` are of size
/// `e^{kR}·‖v‖`, so its transverse part is only resolved to about
/// `ε·e^{kR}`. Past `kR ≈ 30` that exceeds typical step lengths; callers
/// that know `‖v‖` from frame coordinates should not rely on this function
/// out there.
pub fn exp_map(x: &LorentzPoint, v: &TangentVector, k: f64) -> Result<LorentzPoint> {
    check_curvature(k)?;
    same_base(x, v)?;
    Ok(exp_unchecked(x, v.components(), k))
}

pub(crate) fn exp_unchecked(x: &LorentzPoint, v: &[f64], k: f64) -> LorentzPoint {
    exp_with_norm(x, v, tangent_norm(&x.coords, v, k), k)
}

/// Exponential map when the Minkowski length `n` of `v` is already known.
pub(crate) fn exp_with_norm(x: &LorentzPoint, v: &[f64], n: f64, k: f64) -> LorentzPoint {
    if n == 0.0 {
        return x.clone();
    }
    let t = k * n;
    let c = t.cosh();
    let s = sinhc(t);
    let coords = x.coords.iter().zip(v).map(|(xi, vi)| c * xi + s * vi).collect();
    LorentzPoint { coords }
}

/// Minkowski length of `v ∈ T_x`, computed from the spatial parts only.
///
/// With `u = x_s/ρ` the tangent condition gives
/// `B(v, v) = |v_s − (u·v_s)u|² + (u·v_s)²/(1 + k²ρ²)`, a sum of nonnegative
/// terms. Evaluating `B(v, v)` directly cancels terms of size `e^{2kR}`.
pub(crate) fn tangent_norm(x: &[f64], v: &[f64], k: f64) -> f64 {
    let rho = norm2(&x[1..]);
    if rho == 0.0 {
        return norm2(&v[1..]);
    }
    let along: f64 = x[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>() / rho;
    let perp2: f64 = x[1..]
        .iter()
        .zip(&v[1..])
        .map(|(a, b)| {
            let p = b - along * a / rho;
            p * p
        })
        .sum();
    let kr = k * rho;
    (perp2 + along * along / (1.0 + kr * kr)).sqrt()
}

/// `sinh(t)/t` with its removable singularity filled.
fn sinhc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 + t * t / 6.0
    } else {
        t.sinh() / t
    }
}

/// `(1/k)·arccosh(-B(x,y)·k²)`.
///
/// Arguments that fall below 1 by at most [`ACOSH_CLAMP_TOL`] are clamped;
/// anything lower means the points are not on a common hyperboloid. Nearby
/// points go through `2·asinh(k‖x−y‖/2)/k`, which is the same quantity
/// without the loss of precision arccosh suffers near 1.
pub fn distance(x: &LorentzPoint, y: &LorentzPoint, k: f64) -> Result<f64> {
    check_curvature(k)?;
    if x.coords.len() != y.coords.len() {
        return Err(Error::Dimension {
            expected: x.coords.len(),
            actual: y.coords.len(),
        });
    }
    distance_unchecked(x.coords(), y.coords(), k)
}

pub(crate) fn distance_unchecked(x: &[f64], y: &[f64], k: f64) -> Result<f64> {
    let arg = -mdot(x, y) * k * k;
    if !(arg >= 1.0 - ACOSH_CLAMP_TOL) {
        return Err(Error::Invariant(format!(
            "arccosh argument {arg} is below 1; points are not on the same hyperboloid"
        )));
    }
    if arg < 2.0 {
        let mut q = -(x[0] - y[0]).powi(2);
        for (a, b) in x[1..].iter().zip(&y[1..]) {
            q += (a - b).powi(2);
        }
        Ok(2.0 * (0.5 * k * q.max(0.0).sqrt()).asinh() / k)
    } else {
        Ok(arg.acosh() / k)
    }
}

/// Inverse of [`exp_map`]: the tangent vector at `x` pointing at `y` with
/// length `distance(x, y)`. Coincident points give the zero vector.
pub fn log_map(x: &LorentzPoint, y: &LorentzPoint, k: f64) -> Result<TangentVector> {
    check_curvature(k)?;
    if x.coords.len() != y.coords.len() {
        return Err(Error::Dimension {
            expected: x.coords.len(),
            actual: y.coords.len(),
        });
    }
    x.check_on_hyperboloid(k)?;
    y.check_on_hyperboloid(k)?;
    let dist = distance_unchecked(&x.coords, &y.coords, k)?;
    if dist == 0.0 {
        return Ok(TangentVector::zero(x.clone()));
    }
    let kk = k * k;
    let arg = -mdot(&x.coords, &y.coords) * kk;
    // u = y + k²B(x,y)·x, written through Δ = y − x when the points are close.
    let u: Vec<f64> = if arg < 2.0 {
        let delta: Vec<f64> = y.coords.iter().zip(&x.coords).map(|(a, b)| a - b).collect();
        let q = mdot(&delta, &delta);
        delta
            .iter()
            .zip(&x.coords)
            .map(|(d, xi)| d - 0.5 * kk * q * xi)
            .collect()
    } else {
        let c = -arg;
        y.coords.iter().zip(&x.coords).map(|(yi, xi)| yi + c * xi).collect()
    };
    // ‖u‖ = sinh(kD)/k exactly on the hyperboloid, so D·u/‖u‖ = u·kD/sinh(kD).
    let scale = 1.0 / sinhc(k * dist);
    // u is tangent by construction; projecting again would reintroduce B(x, ·)
    // and its cancellation far from the origin.
    let components = u.iter().map(|ui| ui * scale).collect();
    Ok(TangentVector {
        base: x.clone(),
        components,
    })
}

/// Unit tangent vector at `p` pointing along the geodesic towards `origin`,
/// so that `d_rad = -⟨v, e_rad⟩` is positive for outward steps.
pub fn radial_direction(origin: &LorentzPoint, p: &LorentzPoint, k: f64) -> Result<TangentVector> {
    let dist = distance(p, origin, k)?;
    if dist == 0.0 {
        return Err(Error::UndefinedFrame);
    }
    let v = log_map(p, origin, k)?;
    Ok(v.scaled(1.0 / dist))
}

/// Splits `v ∈ T_x` into `(d_tot, d_rad, φ)` relative to `origin`.
pub fn decompose_increment(
    origin: &LorentzPoint,
    x: &LorentzPoint,
    v: &TangentVector,
    k: f64,
) -> Result<IncrementDecomposition> {
    check_curvature(k)?;
    same_base(x, v)?;
    let d_tot = tangent_norm(&x.coords, v.components(), k);
    if d_tot == 0.0 {
        return Ok(IncrementDecomposition::ZERO);
    }
    if origin.spatial().iter().all(|c| *c == 0.0) {
        origin.check_on_hyperboloid(k)?;
        let rho = norm2(x.spatial());
        if rho == 0.0 {
            return Ok(IncrementDecomposition::clamped(d_tot, d_tot));
        }
        // Against the canonical origin, B(v, outward) = (u·v_s)/cosh kR.
        let along: f64 = x.spatial().iter().zip(&v.components()[1..]).map(|(a, b)| a * b).sum::<f64>() / rho;
        let d_rad = along / (k * rho).hypot(1.0);
        return Ok(IncrementDecomposition::clamped(d_tot, d_rad));
    }
    let d_rad = match radial_direction(origin, x, k) {
        Ok(e_rad) => -mdot(v.components(), e_rad.components()),
        Err(Error::UndefinedFrame) => d_tot,
        Err(e) => return Err(e),
    };
    Ok(IncrementDecomposition::clamped(d_tot, d_rad))
}

fn check_radial_inputs(r: f64, d_tot: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(domain(format!("radius must be nonnegative, got {r}")));
    }
    if !(d_tot.is_finite() && d_tot >= 0.0) {
        return Err(domain(format!("d_tot must be nonnegative, got {d_tot}")));
    }
    Ok(())
}

/// `ΔR = (1/k)·arccosh(cosh kR·cosh k d_tot + φ·sinh kR·sinh k d_tot) − R`.
pub fn radial_increment_exact(r: f64, d_tot: f64, phi: f64, k: f64) -> Result<f64> {
    check_curvature(k)?;
    check_radial_inputs(r, d_tot)?;
    if !(-1.0..=1.0).contains(&phi) {
        return Err(domain(format!("phi must lie in [-1, 1], got {phi}")));
    }
    Ok(hyperbolic_next_radius(r, d_tot, phi, k) - r)
}

/// New distance from the origin after a step `(d_tot, φ)` taken at radius `r`.
///
/// The arccosh argument is rewritten as
/// `z = 1 + (1+φ)·sinh²(k(r+d)/2) + (1−φ)·sinh²(k|r−d|/2)`, a sum of
/// nonnegative terms, so no cancellation occurs even for inward steps from far
/// out. Large arguments go through `arccosh z = log z + log(1 + √(1 − z⁻²))`
/// with `log z` accumulated in log-domain.
pub(crate) fn hyperbolic_next_radius(r: f64, d_tot: f64, phi: f64, k: f64) -> f64 {
    let half_sum = 0.5 * k * (r + d_tot);
    let half_diff = 0.5 * k * (r - d_tot).abs();
    let w_plus = 1.0 + phi;
    let w_minus = 1.0 - phi;
    let acosh = if half_sum < 300.0 {
        let t = w_plus * half_sum.sinh().powi(2) + w_minus * half_diff.sinh().powi(2);
        if t.ln() > LOG_DOMAIN_THRESHOLD {
            acosh_from_log(t.ln() + (1.0 / t).ln_1p())
        } else {
            (t + (t * (t + 2.0)).sqrt()).ln_1p()
        }
    } else {
        let log_t = log_add(
            w_plus.ln() + 2.0 * ln_sinh(half_sum),
            w_minus.ln() + 2.0 * ln_sinh(half_diff),
        );
        acosh_from_log(log_t + (-log_t).exp().ln_1p())
    };
    acosh / k
}

/// `arccosh(z)` given `log z` with `z ≥ e^30`.
fn acosh_from_log(log_z: f64) -> f64 {
    log_z + (1.0 - (-2.0 * log_z).exp()).sqrt().ln_1p()
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Flat-space radial increment `√(R² + 2R·d_rad + d_tot²) − R`.
pub fn euclidean_radial_increment(r: f64, d_tot: f64, d_rad: f64) -> Result<f64> {
    check_radial_inputs(r, d_tot)?;
    if !d_rad.is_finite() || d_rad.abs() > d_tot {
        return Err(domain(format!("|d_rad| = {} exceeds d_tot = {d_tot}", d_rad.abs())));
    }
    Ok(euclidean_next_radius(r, d_tot, d_rad) - r)
}

pub(crate) fn euclidean_next_radius(r: f64, d_tot: f64, d_rad: f64) -> f64 {
    // (R + d_rad)² + (d_tot² − d_rad²) avoids a negative radicand from rounding.
    let transverse = (d_tot - d_rad.abs()) * (d_tot + d_rad.abs());
    ((r + d_rad).powi(2) + transverse.max(0.0)).sqrt()
}

/// Orthonormal frame of the tangent space at a point, with the outward radial
/// unit vector first (the negative of `e_rad`) and an orthonormal transverse
/// completion after it. Frames are taken relative to the canonical origin; at
/// the origin itself the first axis is a fixed direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFrame {
    basis: Vec<Vec<f64>>,
    at_origin: bool,
}

impl RadialFrame {
    /// Frame at a point of `𝓗_k`.
    pub fn hyperbolic(x: &LorentzPoint, k: f64) -> Self {
        let spatial = x.spatial();
        let rho = norm2(spatial);
        let d = spatial.len();
        let at_origin = rho == 0.0;
        let u = unit_or_first_axis(spatial, rho);
        // outward = (sinh kR, cosh kR · u) with sinh kR = kρ and cosh kR = k·x₀.
        let cosh_kr = (1.0 + (k * rho).powi(2)).sqrt();
        let mut outward = Vec::with_capacity(d + 1);
        outward.push(k * rho);
        outward.extend(u.iter().map(|ui| cosh_kr * ui));
        let mut basis = Vec::with_capacity(d);
        basis.push(outward);
        for w in orthonormal_complement(&u) {
            let mut col = Vec::with_capacity(d + 1);
            col.push(0.0);
            col.extend(w);
            basis.push(col);
        }
        Self { basis, at_origin }
    }

    /// Frame at a point of flat `R^d`.
    pub fn euclidean(x: &[f64]) -> Self {
        let rho = norm2(x);
        let u = unit_or_first_axis(x, rho);
        let mut basis = Vec::with_capacity(x.len());
        basis.push(u.clone());
        basis.extend(orthonormal_complement(&u));
        Self {
            basis,
            at_origin: rho == 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn at_origin(&self) -> bool {
        self.at_origin
    }

    /// Outward unit radial vector `-e_rad`.
    pub fn outward(&self) -> &[f64] {
        &self.basis[0]
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Ambient vector `Σ cᵢ·eᵢ` for frame coordinates `c`.
    pub fn embed(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.basis[0].len()];
        for (c, e) in coords.iter().zip(&self.basis) {
            for (o, ei) in out.iter_mut().zip(e) {
                *o += c * ei;
            }
        }
        out
    }
}

fn unit_or_first_axis(x: &[f64], norm: f64) -> Vec<f64> {
    if norm > 0.0 {
        x.iter().map(|v| v / norm).collect()
    } else {
        let mut e = vec![0.0; x.len()];
        e[0] = 1.0;
        e
    }
}

/// Orthonormal basis of `u^⊥ ⊂ R^d` for unit `u`, read off the columns of a
/// Householder reflection that maps `e₁` to `±u`.
fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let (sign, denom) = if u[0] >= 0.0 {
        (1.0, 1.0 + u[0])
    } else {
        (-1.0, 1.0 - u[0])
    };
    (1..d)
        .map(|j| {
            let f = u[j] / denom;
            (0..d)
                .map(|i| {
                    let w_i = u[i] + if i == 0 { sign } else { 0.0 };
                    let e = if i == j { 1.0 } else { 0.0 };
                    e - w_i * f
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_along_axis(k: f64, d: usize, t: f64) -> LorentzPoint {
        let o = origin(k, d).unwrap();
        let mut e1 = vec![0.0; d + 1];
        e1[1] = t;
        let v = TangentVector::new(o.clone(), e1).unwrap();
        exp_map(&o, &v, k).unwrap()
    }

    #[test]
    fn minkowski_form_examples() {
        assert_eq!(minkowski_form(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(minkowski_form(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        let o = origin(2.0, 2).unwrap();
        assert_eq!(minkowski_form(o.coords(), o.coords()).unwrap(), -0.25);
        assert!(matches!(
            minkowski_form(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn origin_examples() {
        assert_eq!(origin(1.0, 2).unwrap().coords(), &[1.0, 0.0, 0.0]);
        assert_eq!(origin(2.0, 3).unwrap().coords(), &[0.5, 0.0, 0.0, 0.0]);
        assert!(matches!(origin(0.0, 2), Err(Error::Domain(_))));
        assert!(matches!(origin(-1.0, 2), Err(Error::Domain(_))));
        assert!(matches!(origin(1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let x = point_along_axis(1.5, 3, 0.7);
        let v = TangentVector::zero(x.clone());
        assert_eq!(exp_map(&x, &v, 1.5).unwrap(), x);
    }

    #[test]
    fn exp_along_first_axis_matches_closed_form() {
        for &k in &[0.5, 1.0, 3.0] {
            for &t in &[0.1, 1.0, 4.0] {
                let p = point_along_axis(k, 3, t);
                let want = [(t * k).cosh() / k, (t * k).sinh() / k, 0.0, 0.0];
                for (a, b) in p.coords().iter().zip(&want) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn exp_rejects_foreign_base() {
        let x = point_along_axis(1.0, 2, 0.5);
        let o = origin(1.0, 2).unwrap();
        let v = TangentVector::new(o, vec![0.0, 0.3, 0.0]).unwrap();
        assert!(matches!(exp_map(&x, &v, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn distance_along_geodesic() {
        let o = origin(1.0, 2).unwrap();
        assert_eq!(distance(&o, &o, 1.0).unwrap(), 0.0);
        for &t in &[0.1, 1.0, 10.0] {
            let p = point_along_axis(1.0, 2, t);
            let d = distance(&o, &p, 1.0).unwrap();
            assert!((d - t).abs() <= 1e-12 * t, "{d} vs {t}");
        }
    }

    #[test]
    fn distance_rejects_points_off_common_hyperboloid() {
        let a = LorentzPoint { coords: vec![0.5, 0.0, 0.0] };
        let b = LorentzPoint { coords: vec![0.5, 0.0, 0.0] };
        assert!(matches!(distance(&a, &b, 1.0), Err(Error::Invariant(_))));
    }

    #[test]
    fn log_inverts_exp_on_axis() {
        let o = origin(1.0, 3).unwrap();
        assert_eq!(log_map(&o, &o, 1.0).unwrap().norm(), 0.0);
        let p = point_along_axis(1.0, 3, 2.5);
        let v = log_map(&o, &p, 1.0).unwrap();
        let want = [0.0, 2.5, 0.0, 0.0];
        for (a, b) in v.components().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_rejects_mixed_curvatures() {
        let p = point_along_axis(1.0, 2, 1.0);
        let q = point_along_axis(2.0, 2, 1.0);
        assert!(matches!(log_map(&p, &q, 1.0), Err(Error::Invariant(_))));
    }

    #[test]
    fn radial_direction_on_axis() {
        for &k in &[0.5, 1.0, 2.0] {
            let o = origin(k, 2).unwrap();
            let t = 1.3;
            let p = point_along_axis(k, 2, t);
            let e = radial_direction(&o, &p, k).unwrap();
            let want = [-(t * k).sinh(), -(t * k).cosh(), 0.0];
            for (a, b) in e.components().iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            assert!((e.norm() - 1.0).abs() < 1e-12);
            let inward = e.scaled(-t);
            let dec = decompose_increment(&o, &p, &inward, k).unwrap();
            assert!((dec.d_rad() - t).abs() < 1e-10);
            assert!((dec.phi() - 1.0).abs() < 1e-12);
        }
        let o = origin(1.0, 2).unwrap();
        assert!(matches!(radial_direction(&o, &o, 1.0), Err(Error::UndefinedFrame)));
    }

    #[test]
    fn decomposition_conventions() {
        let o = origin(1.0, 3).unwrap();
        let zero = TangentVector::zero(o.clone());
        assert_eq!(decompose_increment(&o, &o, &zero, 1.0).unwrap(), IncrementDecomposition::ZERO);

        let v = TangentVector::new(o.clone(), vec![0.0, 0.2, -0.4, 0.1]).unwrap();
        let dec = decompose_increment(&o, &o, &v, 1.0).unwrap();
        assert_eq!(dec.d_rad(), dec.d_tot());
        assert_eq!(dec.phi(), 1.0);

        let p = point_along_axis(1.0, 3, 2.0);
        let transverse = TangentVector::new(p.clone(), vec![0.0, 0.0, 0.3, -0.4]).unwrap();
        let dec = decompose_increment(&o, &p, &transverse, 1.0).unwrap();
        assert!((dec.d_tot() - 0.5).abs() < 1e-12);
        assert!(dec.d_rad().abs() < 1e-12);
        assert!(dec.phi().abs() < 1e-12);
    }

    #[test]
    fn radial_increment_special_cases() {
        for &k in &[0.25, 1.0, 4.0] {
            for &r in &[0.0, 0.5, 3.0, 20.0, 200.0] {
                for &d in &[0.0, 0.3, 2.0] {
                    let up = radial_increment_exact(r, d, 1.0, k).unwrap();
                    assert!((up - d).abs() <= 1e-9 * (r + d).max(1.0), "k={k} r={r} d={d}: {up}");
                    if d <= r {
                        let down = radial_increment_exact(r, d, -1.0, k).unwrap();
                        assert!((down + d).abs() <= 1e-9 * r.max(1.0), "{down}");
                    }
                }
                if r == 0.0 {
                    let out = radial_increment_exact(0.0, 1.7, -0.3, k).unwrap();
                    assert!((out - 1.7).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn radial_increment_domain_errors() {
        assert!(radial_increment_exact(1.0, 1.0, 1.5, 1.0).is_err());
        assert!(radial_increment_exact(-1.0, 1.0, 0.0, 1.0).is_err());
        assert!(radial_increment_exact(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(radial_increment_exact(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(euclidean_radial_increment(1.0, 1.0, 1.5).is_err());
        assert!(euclidean_radial_increment(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn radial_increment_survives_huge_radii() {
        // cosh(kR) overflows long before R = 1e4.
        let dr = radial_increment_exact(1e4, 2.0, 0.0, 1.0).unwrap();
        assert!(dr.is_finite());
        // Far out, ΔR → log(cosh d + φ sinh d)/k.
        let want = (2.0_f64.cosh()).ln();
        assert!((dr - want).abs() < 1e-9, "{dr} vs {want}");
        let back = radial_increment_exact(1e4, 2.0, -1.0, 1.0).unwrap();
        assert!((back + 2.0).abs() < 1e-9);
    }

    #[test]
    fn euclidean_increment_examples() {
        assert_eq!(euclidean_radial_increment(0.0, 1.3, 0.2).unwrap(), 1.3);
        assert!((euclidean_radial_increment(4.0, 1.3, 1.3).unwrap() - 1.3).abs() < 1e-15);
        let dr = euclidean_radial_increment(3.0, 4.0, 0.0).unwrap();
        assert!((dr - 2.0).abs() < 1e-15);
    }

    #[test]
    fn frames_are_orthonormal() {
        let k = 0.8;
        for spatial in [vec![0.0, 0.0, 0.0], vec![1.0, -2.0, 0.5], vec![-3.0, 0.1, 0.0]] {
            let x = LorentzPoint::from_spatial(&spatial, k).unwrap();
            let f = RadialFrame::hyperbolic(&x, k);
            for (i, a) in f.basis().iter().enumerate() {
                assert!(mdot(a, x.coords()).abs() < 1e-12);
                for (j, b) in f.basis().iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((mdot(a, b) - want).abs() < 1e-12);
                }
            }
            if !f.at_origin() {
                let o = origin(k, 3).unwrap();
                let e = radial_direction(&o, &x, k).unwrap();
                for (a, b) in f.outward().iter().zip(e.components()) {
                    assert!((a + b).abs() < 1e-10);
                }
            }
        }
        let f = RadialFrame::euclidean(&[0.0, -2.0]);
        assert_eq!(f.outward(), &[0.0, -1.0]);
        let dot: f64 = f.basis()[0].iter().zip(&f.basis()[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-15);
    }
}
