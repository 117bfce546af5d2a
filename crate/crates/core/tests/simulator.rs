use hyperwalk::geometry::CurvatureModel;
use hyperwalk::increments::{IncrementLaw, RadialProfile};
use hyperwalk::simulator::{
    neighborhood_return_probe, run_ensemble, run_walk, summary_csv, target_unreachable, trajectory_csv, Mode,
    WalkConfig,
};
use hyperwalk::stats::{ks_two_sample, ks_two_sample_critical};
use proptest::prelude::*;

fn elliptic(a: f64, b: f64, d: usize) -> IncrementLaw {
    IncrementLaw::elliptic(RadialProfile::Constant(a), RadialProfile::Constant(b), d).unwrap()
}

fn hyperbolic(k: f64, d: usize) -> CurvatureModel {
    CurvatureModel::hyperbolic(k, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn radial_steps_are_bounded_by_step_length(k in 0.1f64..3.0, a in 0.1f64..2.0, b in 0.1f64..2.0, seed in any::<u64>()) {
        let law = elliptic(a, b, 3);
        let mut cfg = WalkConfig::new(hyperbolic(k, 3), law, 300, 1, seed);
        cfg.record_stride = 1;
        let rec = run_walk(&cfg, 0).unwrap();
        // Elliptic steps have length at most √d·max(a, b).
        let dmax = 3.0_f64.sqrt() * a.max(b);
        for w in rec.radii.windows(2) {
            prop_assert!(w[1].1 >= 0.0);
            prop_assert!((w[1].1 - w[0].1).abs() <= dmax * (1.0 + 1e-12));
        }
    }

    #[test]
    fn coupled_modes_agree(k in 0.25f64..2.0, a in 0.2f64..1.5, b in 0.2f64..1.5, seed in any::<u64>()) {
        let mut cfg = WalkConfig::new(hyperbolic(k, 2), elliptic(a, b, 2), 100, 1, seed);
        cfg.record_stride = 1;
        let radial = run_walk(&cfg, 3).unwrap();
        cfg.mode = Mode::Ambient;
        let ambient = run_walk(&cfg, 3).unwrap();
        for ((_, x), (_, y)) in radial.radii.iter().zip(&ambient.radii) {
            prop_assert!((x - y).abs() <= 1e-8 * x.max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn zero_drift_radius_is_a_submartingale() {
    let mut cfg = WalkConfig::new(hyperbolic(1.0, 2), elliptic(1.0, 1.0, 2), 2000, 200, 31);
    cfg.burn_in = 1000;
    let (_, stats) = run_ensemble(&cfg, None).unwrap();
    assert!(stats.drift.value >= -stats.drift.half_width, "{:?}", stats.drift);
}

#[test]
fn modes_have_the_same_law() {
    let mut cfg = WalkConfig::new(hyperbolic(1.0, 2), elliptic(1.0, 1.0, 2), 200, 2000, 32);
    let (radial, _) = run_ensemble(&cfg, None).unwrap();
    cfg.mode = Mode::Ambient;
    cfg.seed = 33;
    let (ambient, _) = run_ensemble(&cfg, None).unwrap();
    let a: Vec<f64> = radial.iter().map(|t| t.final_r).collect();
    let b: Vec<f64> = ambient.iter().map(|t| t.final_r).collect();
    let ks = ks_two_sample(&a, &b);
    assert!(ks < ks_two_sample_critical(a.len(), b.len(), 0.01), "KS = {ks}");
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let mut cfg = WalkConfig::new(hyperbolic(0.7, 3), IncrementLaw::heavy_tail(4.5, 3).unwrap(), 500, 40, 34);
    cfg.escape_radius = Some(50.0);
    let (a, sa) = run_ensemble(&cfg, Some(1)).unwrap();
    let (b, sb) = run_ensemble(&cfg, Some(3)).unwrap();
    assert_eq!(trajectory_csv(&a), trajectory_csv(&b));
    assert_eq!(summary_csv(&sa), summary_csv(&sb));
}

#[test]
fn flat_space_returns_more_often_than_hyperbolic_space() {
    let law = elliptic(1.2, 1.0, 2);
    let mut flat = WalkConfig::new(CurvatureModel::euclidean(2).unwrap(), law.clone(), 5000, 200, 35);
    flat.burn_in = 500;
    let mut curved = WalkConfig::new(hyperbolic(1.0, 2), law, 5000, 200, 35);
    curved.burn_in = 500;
    let (_, f) = run_ensemble(&flat, None).unwrap();
    let (_, h) = run_ensemble(&curved, None).unwrap();
    let gap = f.returned.p() - h.returned.p();
    assert!(gap > f.returned.half_width() + h.returned.half_width(), "flat {:?} hyperbolic {:?}", f.returned, h.returned);
}

#[test]
fn box_walk_reaches_a_distant_neighbourhood() {
    let law = IncrementLaw::boxed(RadialProfile::Constant(1.0), RadialProfile::Constant(1.0), 2).unwrap();
    let mut cfg = WalkConfig::new(hyperbolic(1.0, 2), law, 1, 400, 36);
    cfg.mode = Mode::Ambient;
    cfg.ball_radius = 1.0;
    assert!(target_unreachable(&cfg, 20.0, 0.5, 3));
    assert_eq!(neighborhood_return_probe(&cfg, 20.0, 0.5, 3, None).unwrap().successes, 0);
    let p = neighborhood_return_probe(&cfg, 3.0, 1.0, 50, None).unwrap();
    assert!(p.wilson_lower(2.576) > 0.0, "{p:?}");
}
