use limpet_core::odometer::*;
use limpet_core::Error;

fn pot(v: &[f64]) -> Potential {
    Potential::new(v.to_vec()).unwrap()
}

#[test]
fn embed_examples() {
    assert_eq!(pot(&[1.0]).embed(3).unwrap().values(), &[1.0, 1.0, 1.0]);
    assert_eq!(pot(&[0.0, 2.0]).embed(4).unwrap().values(), &[0.0, 2.0, 0.0, 2.0]);
    let v = pot(&[0.3, -1.7, 2.25]);
    let e = v.embed(6).unwrap();
    for i in 0..6 {
        assert_eq!(e.values()[i].to_bits(), v.values()[i % 3].to_bits());
    }
    assert_eq!(v.sup_distance(&e), 0.0);
}

#[test]
fn embed_rejects_non_multiple() {
    assert_eq!(
        pot(&[1.0, 2.0]).embed(3),
        Err(Error::Divisibility { period: 2, target: 3 })
    );
}

#[test]
fn convolution_examples() {
    let s = Schedule::new(vec![1, 2, 4]).unwrap();
    assert_eq!(
        s.convolve(&pot(&[1.0, 3.0, 1.0, 3.0]), 1).unwrap().values(),
        &[1.0, 3.0]
    );
    assert_eq!(
        s.convolve(&pot(&[0.0, 0.0, 4.0, 0.0]), 1).unwrap().values(),
        &[2.0, 0.0]
    );
    assert_eq!(s.convolve(&Potential::constant(1.5, 4), 0).unwrap().values(), &[1.5]);
    assert!(matches!(s.convolve(&pot(&[0.0, 1.0]), 1), Err(Error::Schedule(_))));
    assert!(matches!(s.convolve(&pot(&[0.0, 1.0, 2.0]), 0), Err(Error::Schedule(_))));
}

#[test]
fn distance_examples() {
    assert_eq!(pot(&[0.0, 0.0]).sup_distance(&pot(&[1.0, -2.0])), 2.0);
    // period 2 against period 3 over six sites:
    // (1,0,1,0,1,0) vs (1,1,0,1,1,0) -> diffs 0,1,1,1,0,0
    assert_eq!(pot(&[1.0, 0.0]).sup_distance(&pot(&[1.0, 1.0, 0.0])), 1.0);
}

#[test]
fn diameter_examples() {
    assert_eq!(Family::singleton(pot(&[3.0])).diameter(), 0.0);
    let fam = Family::new(vec![pot(&[0.0, 0.0]), pot(&[0.0, 1.0])]).unwrap();
    assert_eq!(fam.diameter(), 1.0);
    assert_eq!(Family::new(vec![]), Err(Error::EmptyFamily));
}

#[test]
fn schedule_validation() {
    assert!(Schedule::new(vec![]).is_err());
    assert!(Schedule::new(vec![0, 2]).is_err());
    assert!(Schedule::new(vec![2, 3]).is_err());
    assert!(Schedule::new(vec![2, 2]).is_err());
    assert_eq!(Schedule::dyadic(3).periods(), &[1, 2, 4, 8]);
}

#[test]
fn text_format() {
    let v = pot(&[0.1, -2.5e-17, 3.0, 1.0 / 3.0]);
    let text = v.to_text();
    assert!(text.starts_with("4\n"));
    assert_eq!(Potential::from_text(&text).unwrap(), v);
    assert!(Potential::from_text("3\n1 2\n").is_err());
    assert!(Potential::from_text("2\n1 x\n").is_err());
}

#[test]
fn ball_containment() {
    let b = Ball::new(Potential::zeros(1), 1.0).unwrap();
    assert!(b.contains(&pot(&[0.5, -0.5])));
    assert!(!b.contains(&pot(&[1.0])));
    let inner = Ball::new(pot(&[0.2]), 0.7).unwrap();
    assert!(inner.closure_within(&b));
    let touching = Ball::new(pot(&[0.2]), 0.8).unwrap();
    assert!(!touching.closure_within(&b));
}
