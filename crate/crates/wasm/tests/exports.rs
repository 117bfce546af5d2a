use hyperwalk_wasm::{poincare_walk, radius_series, sandwich_curves};

#[test]
fn disk_walk_stays_in_the_unit_disk() {
    let pts = poincare_walk(1.0, 1.0, 1.0, 2000, 5).unwrap();
    assert_eq!(&pts[..2], &[0.0, 0.0]);
    assert!(pts.iter().all(|c| c.is_finite()));
    for p in pts.chunks(2) {
        assert!(p[0].hypot(p[1]) <= 1.0);
    }
    // The walk is transient, so it reaches the stopping distance kR = 30
    // (disk radius tanh 15) well before 2000 steps.
    assert!(pts.len() < 2 * 2001);
    let last = pts[pts.len() - 2].hypot(pts[pts.len() - 1]);
    assert!(2.0 * last.atanh() >= 29.0, "{last}");
    // Small steps at small curvature stay near the centre.
    let slow = poincare_walk(0.5, 0.1, 0.1, 200, 5).unwrap();
    assert_eq!(slow.len(), 2 * 201);
}

#[test]
fn radius_series_is_deterministic_and_flat_when_k_is_zero() {
    let a = radius_series(1.0, 1.0, 1.0, 500, 9).unwrap();
    assert_eq!(a, radius_series(1.0, 1.0, 1.0, 500, 9).unwrap());
    assert_eq!(a.len(), 501);
    let flat = radius_series(0.0, 1.0, 1.0, 500, 9).unwrap();
    assert!(flat.last().unwrap() < a.last().unwrap());
}

#[test]
fn sandwich_rows_are_ordered() {
    let rows = sandwich_curves(1.0, 2.0, 41).unwrap();
    assert_eq!(rows.len(), 4 * 41);
    for r in rows.chunks(4) {
        assert!(r[1] <= r[2] + 1e-12 && r[2] <= r[3] + 1e-12, "{r:?}");
    }
    assert_eq!(&rows[..1], &[-1.0]);
}
