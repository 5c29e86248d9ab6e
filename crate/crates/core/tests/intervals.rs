use limpet_core::intervals::*;

fn set(p: &[(f64, f64)]) -> IntervalSet {
    IntervalSet::from_intervals(p.to_vec())
}

#[test]
fn merge_and_measure() {
    let s = set(&[(2.0, 3.0), (0.0, 1.0), (1.0, 1.5)]);
    assert_eq!(s.parts(), &[(0.0, 1.5), (2.0, 3.0)]);
    assert_eq!(s.measure(), 2.5);
    assert_eq!(s.component_count(), 2);
    assert!(s.contains(1.5) && !s.contains(1.7) && s.contains(2.0));
}

#[test]
fn intersection() {
    let a = set(&[(0.0, 2.0), (3.0, 5.0)]);
    let b = set(&[(1.0, 3.5), (4.5, 6.0)]);
    assert_eq!(a.intersect(&b).parts(), &[(1.0, 2.0), (3.0, 3.5), (4.5, 5.0)]);
    assert!(a.intersect(&set(&[(2.5, 2.7)])).is_empty());
}

#[test]
fn hausdorff_cases() {
    let a = set(&[(-2.0, 2.0)]);
    assert_eq!(a.hausdorff(&a), 0.0);
    assert!((a.hausdorff(&a.translate(0.25)) - 0.25).abs() < 1e-15);
    // a gap of width 1 in the middle: the midpoint is 0.5 away
    let b = set(&[(-2.0, -0.5), (0.5, 2.0)]);
    assert_eq!(a.hausdorff(&b), 0.5);
    let c = set(&[(0.0, 0.0)]);
    assert_eq!(c.hausdorff(&set(&[(1.0, 3.0)])), 3.0);
}

#[test]
fn distance() {
    let a = set(&[(0.0, 1.0), (4.0, 5.0)]);
    assert_eq!(a.distance_to(2.0), 1.0);
    assert_eq!(a.distance_to(3.5), 0.5);
    assert_eq!(a.distance_to(0.5), 0.0);
    assert_eq!(a.distance_to(-1.0), 1.0);
    assert_eq!(a.distance_to(7.0), 2.0);
}
