use hyperwalk::increments::{IncrementLaw, RadialProfile};
use hyperwalk::lamperti::{
    classify_constant_curvature, classify_pinched, elliptic_chain_classify, estimate_moments, f_value, g_value, j_max,
    heavytail_bounds, j_min, nu_estimate, uniform_ellipticity_transience_check, Criterion, Verdict,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn constant(c: f64) -> RadialProfile {
    RadialProfile::Constant(c)
}

fn elliptic(a: RadialProfile, b: RadialProfile, d: usize) -> IncrementLaw {
    IncrementLaw::elliptic(a, b, d).unwrap()
}

fn grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let (l0, l1) = (start.ln(), stop.ln());
    (0..count).map(|i| (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// `E[ln(c + s·u)]` for `u ~ U[−1, 1]`.
fn mean_log_uniform(c: f64, s: f64) -> f64 {
    let g = |t: f64| t * t.ln() - t;
    (g(c + s) - g(c - s)) / (2.0 * s)
}

proptest! {
    #[test]
    fn sandwich_and_flat_limit(k in 0.01f64..4.0, d in 1e-6f64..10.0, phi in -1.0f64..=1.0) {
        let f = f_value(k, phi * d, d).unwrap();
        let t = d * d * (1.0 - phi * phi);
        let lo = phi * d + j_min(k, d).unwrap() * t;
        let hi = phi * d + j_max(k, d).unwrap() * t;
        let slack = 1e-12 * d.max(1.0);
        prop_assert!(f >= lo - slack && f <= hi + slack, "{lo} <= {f} <= {hi}");
        // |F − d_rad| ≈ k·d²(1 − φ²)/2, so the flat limit is checked for d ≤ 4.
        let dd = d.min(4.0);
        let flat = f_value(1e-6, phi * dd, dd).unwrap();
        prop_assert!((flat - phi * dd).abs() < 1e-5);
    }

    #[test]
    fn g_is_nonincreasing(k in 0.1f64..3.0, d in 0.01f64..5.0, a in -0.999f64..0.999, b in -0.999f64..0.999) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let g_lo = g_value(lo, k, d).unwrap();
        let g_hi = g_value(hi, k, d).unwrap();
        prop_assert!(g_hi <= g_lo * (1.0 + 1e-9) + 1e-12, "G({hi}) = {g_hi} > G({lo}) = {g_lo}");
    }
}

#[test]
fn first_moment_of_planar_elliptic_law() {
    // d = 2, a = b = 1: the step has length √2 and a uniform angle, so at k = 1
    // ν₁ = E[ln(cosh √2 + cos θ · sinh √2)] = ln((cosh √2 + 1)/2).
    let law = elliptic(constant(1.0), constant(1.0), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let est = nu_estimate(&law, 1.0, 5.0, 1, 200_000, &mut rng).unwrap().estimate;
    assert!(est.within(0.4631626444166919, 4.0), "{est:?}");
}

#[test]
fn first_moment_of_spatial_elliptic_law() {
    // d = 3, a = b = 1: |step| = √3 and φ is uniform on [−1, 1].
    let d = 3.0_f64.sqrt();
    let exact = mean_log_uniform(d.cosh(), d.sinh());
    let law = elliptic(constant(1.0), constant(1.0), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let est = nu_estimate(&law, 1.0, 5.0, 1, 200_000, &mut rng).unwrap().estimate;
    assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
}

#[test]
fn inward_biased_moments_are_exact() {
    // Two atoms at d_tot = 4: φ = 0 and φ = −1/2.
    let (c, s) = (4.0_f64.cosh(), 4.0_f64.sinh());
    let (f0, f1) = (c.ln(), (c - 0.5 * s).ln());
    let nu1 = 0.5 * (f0 + f1);
    let nu2 = 0.5 * (f0 * f0 + f1 * f1);
    assert!((nu1 - 2.9610).abs() < 1e-4, "{nu1}");
    let law = IncrementLaw::inward_biased(1.0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let m = estimate_moments(&law, 1.0, &[3.0, 10.0], 100, &mut rng).unwrap();
    for p in m.points() {
        assert!((p.nu1_lower.value - nu1).abs() < 1e-12);
        assert!((p.nu2_lower.value - nu2).abs() < 1e-12);
    }
}

#[test]
fn inward_biased_chain_is_transient() {
    let law = IncrementLaw::inward_biased(1.0, 2).unwrap();
    let g = grid(10.0, 1000.0, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let m = estimate_moments(&law, 1.0, &g, 1000, &mut rng).unwrap();
    let report = classify_constant_curvature(&m, 0.5, 10.0).unwrap();
    assert_eq!(report.verdict, Verdict::Transient, "{report}");
    // It has negative radial drift, so the zero-drift screen must not call it transient.
    let screen = uniform_ellipticity_transience_check(&law, 1.0, 0.1, 10.0, &g[..3], 20_000, &mut rng).unwrap();
    assert_eq!(screen.verdict, Verdict::Inconclusive);
}

#[test]
fn heavy_tailed_chain_is_transient() {
    let law = IncrementLaw::heavy_tail(4.0, 2).unwrap();
    let g = grid(100.0, 1000.0, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let m = estimate_moments(&law, 1.0, &g, 1_000_000, &mut rng).unwrap();
    for p in m.points() {
        // ν₁ ≈ 3/(4λ²) with λ = r^{1/3}; the second moment is capped by E[d_tot²] = 3.
        let lambda = p.r.cbrt();
        let guide = 3.0 / (4.0 * lambda * lambda);
        assert!(p.nu1_lower.value > 0.5 * guide && p.nu1_lower.value < 2.0 * guide, "r = {}: {:?}", p.r, p.nu1_lower);
        assert!(p.nu2_upper.upper() <= 3.0);
    }
    let report = classify_constant_curvature(&m, 0.5, 100.0).unwrap();
    assert_eq!(report.verdict, Verdict::Transient, "{report}");
}

#[test]
fn elliptic_examples_classify_analytically() {
    let k = constant(1.0);
    let g = grid(10.0, 1e4, 40);
    let t = elliptic_chain_classify(&constant(1.0), &constant(1.0), &k, &k, 2, &g, 0.5, 10.0).unwrap();
    assert_eq!(t.verdict, Verdict::Transient);
    // margin = 2r·J_min(1, √2) − 2
    let jm = j_min(1.0, 2.0_f64.sqrt()).unwrap();
    for row in t.margins_for(Criterion::EllipticTransience) {
        assert!((row.margin - (2.0 * row.r * jm - 2.0)).abs() < 1e-12 * row.r);
    }
    let decaying = RadialProfile::power_decay(1.0, 1.0).unwrap();
    let r = elliptic_chain_classify(&constant(1.0), &decaying, &k, &k, 2, &g, 0.5, 10.0).unwrap();
    assert_eq!(r.verdict, Verdict::Recurrent);
    // Below r ≈ 6.5 the recurrence inequality fails.
    let early = elliptic_chain_classify(&constant(1.0), &decaying, &k, &k, 2, &grid(2.0, 100.0, 20), 0.5, 2.0).unwrap();
    assert_eq!(early.verdict, Verdict::Inconclusive);
}

#[test]
fn elliptic_verdicts_survive_grid_refinement() {
    let k = constant(1.0);
    let decaying = RadialProfile::power_decay(1.0, 1.0).unwrap();
    for b in [constant(1.0), decaying] {
        let coarse = elliptic_chain_classify(&constant(1.0), &b, &k, &k, 2, &grid(10.0, 1e4, 20), 0.5, 10.0).unwrap();
        let fine = elliptic_chain_classify(&constant(1.0), &b, &k, &k, 2, &grid(10.0, 1e4, 40), 0.5, 10.0).unwrap();
        assert_eq!(coarse.verdict, fine.verdict);
    }
}

#[test]
fn recurrent_example_under_growing_curvature() {
    // Curvature growing linearly with b decaying exponentially keeps the walk recurrent.
    let k = RadialProfile::affine(1.0, 1.0).unwrap();
    let b = RadialProfile::exp_decay(1.0, 2.0).unwrap();
    let law = elliptic(constant(1.0), b.clone(), 2);
    let g = grid(5.0, 200.0, 10);
    let analytic = elliptic_chain_classify(&constant(1.0), &b, &k, &k, 2, &g, 0.5, 5.0).unwrap();
    assert_eq!(analytic.verdict, Verdict::Recurrent, "{analytic}");
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let pinched = classify_pinched(&law, &k, &k, &g, 0.5, 5.0, 20_000, &mut rng).unwrap();
    assert_eq!(pinched.verdict, Verdict::Recurrent, "{pinched}");
}

#[test]
fn pinched_with_constant_curvature_agrees_with_constant_criterion() {
    let decaying = RadialProfile::power_decay(1.0, 1.0).unwrap();
    let laws = [
        elliptic(constant(1.0), constant(1.0), 2),
        elliptic(constant(1.0), decaying, 2),
        elliptic(constant(2.0), constant(1.0), 3),
        IncrementLaw::inward_biased(1.0, 2).unwrap(),
        IncrementLaw::heavy_tail(4.0, 2).unwrap(),
    ];
    let g = grid(10.0, 1000.0, 8);
    for (i, law) in laws.iter().enumerate() {
        for k in [0.5, 1.0, 2.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let m = estimate_moments(law, k, &g, 50_000, &mut rng).unwrap();
            let constant_verdict = classify_constant_curvature(&m, 0.5, 10.0).unwrap().verdict;
            let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
            let pinched = classify_pinched(law, &constant(k), &constant(k), &g, 0.5, 10.0, 50_000, &mut rng).unwrap();
            assert!(
                !pinched.verdict.contradicts(constant_verdict),
                "law {i} at k = {k}: pinched {} vs constant {constant_verdict}",
                pinched.verdict
            );
        }
    }
}

#[test]
fn more_samples_never_flip_a_verdict() {
    let decaying = RadialProfile::power_decay(1.0, 1.0).unwrap();
    let laws = [elliptic(constant(1.0), constant(1.0), 2), elliptic(constant(1.0), decaying, 2)];
    let g = grid(10.0, 1000.0, 8);
    for law in &laws {
        let mut seen = Vec::new();
        for n in [2_000, 20_000, 200_000] {
            let mut rng = ChaCha8Rng::seed_from_u64(27);
            let m = estimate_moments(law, 1.0, &g, n, &mut rng).unwrap();
            seen.push(classify_constant_curvature(&m, 0.5, 10.0).unwrap().verdict);
        }
        for w in seen.windows(2) {
            assert!(!w[0].contradicts(w[1]), "{seen:?}");
        }
        assert_ne!(seen.last(), Some(&Verdict::Inconclusive), "{seen:?}");
    }
}

#[test]
fn reference_values_of_the_bounds() {
    assert!((j_min(1.0, 2.0_f64.sqrt()).unwrap() - 0.2359416089135183).abs() < 1e-15);
    assert!((j_max(1.0, 2.0_f64.sqrt()).unwrap() - 1.6363001942264633).abs() < 1e-15);
}

#[test]
fn heavy_tail_displayed_bounds_hold() {
    let law = IncrementLaw::heavy_tail(4.0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    let b = heavytail_bounds(&law, 1.0, 100.0, 200_000, &mut rng).unwrap();
    assert!((b.lambda - 100f64.cbrt()).abs() < 1e-12);
    assert!((b.first_bound - 3.0 / (8.0 * b.lambda * b.lambda)).abs() < 1e-15);
    assert!(b.transverse_holds(3.0) && b.first_holds(3.0), "{b:?}");
    assert!(heavytail_bounds(&IncrementLaw::inward_biased(1.0, 2).unwrap(), 1.0, 5.0, 10, &mut rng).is_err());
}
