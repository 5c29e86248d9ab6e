use limpet_core::construct::start::*;
use limpet_core::{Error, Potential};

#[test]
fn candidate_examples() {
    let w = Potential::zeros(1);
    let c = build_start_candidates(&w, 1, 4, 10.0).unwrap();
    assert_eq!(c.len(), 3);
    for (j, cand) in c.iter().enumerate() {
        assert_eq!(&cand.values()[..3], &[0.0; 3]);
        assert!((cand.values()[3] - (j + 1) as f64 / 10.0).abs() < 1e-15);
        assert!((cand.sup_distance(&w) - (j + 1) as f64 / 10.0).abs() < 1e-15);
    }
    let w = Potential::new(vec![0.3, -0.1]).unwrap();
    assert_eq!(build_start_candidates(&w, 2, 8, 4.0).unwrap().len(), 5);
}

#[test]
fn touching_point_splits() {
    // zero potential seen at period 2 touches at E = 0
    let c = build_start_candidates(&Potential::zeros(1), 1, 2, 4.0).unwrap();
    let sel = select_gap_opening_j(&c, &[1.0]).unwrap();
    let g = &sel.per_lambda[0];
    assert!(g.j.is_some());
    assert!(g.failures() <= 2);
    assert!(g.delta > 0.0);
}

#[test]
fn shifted_family_checks_step() {
    let w = Potential::zeros(2);
    assert!(matches!(
        build_shifted_family(&w, 1.0, 2, 0.1, 1.0),
        Err(Error::Parameter(_))
    ));
    let f = build_shifted_family(&w, 1.0, 20, 0.1, 1.0).unwrap();
    assert_eq!(f.len(), 21);
    let steps: Vec<f64> = f
        .members()
        .windows(2)
        .map(|p| p[1].values()[0] - p[0].values()[0])
        .collect();
    assert!(steps.iter().all(|s| (s - 0.05).abs() < 1e-15));
}
