use limpet_core::construct::induction::*;
use limpet_core::Potential;

#[test]
fn layout_example() {
    let p = InductionParams::new(1, 8, 2, 20.0).unwrap();
    assert_eq!(p.r, 4);
    assert_eq!(p.partition, vec![0, 4, 8]);
    let w = build_block_potential(&[Potential::constant(1.0, 1), Potential::constant(2.0, 1)], &p).unwrap();
    assert_eq!(w.values(), &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
}

#[test]
fn single_member_is_embedding() {
    let v = Potential::new(vec![0.5, -1.0]).unwrap();
    let p = InductionParams::new(2, 16, 1, 20.0).unwrap();
    assert_eq!(build_block_potential(&[v.clone()], &p).unwrap(), v.embed(16).unwrap());
}

#[test]
fn partition_slack() {
    let p = InductionParams::new(1, 11, 3, 1.0).unwrap();
    assert_eq!(p.r, 3);
    assert_eq!(p.partition, vec![0, 4, 8, 11]);
    assert!(p.clone().with_partition(vec![0, 2, 6, 11]).is_err());
    assert!(p.with_partition(vec![0, 3, 7, 11]).is_ok());
    assert!(InductionParams::new(1, 5, 3, 1.0).is_err());
}

#[test]
fn staircase_counts() {
    let p = InductionParams::new(1, 6, 2, 1.0).unwrap();
    let base = build_block_potential(&[Potential::zeros(1), Potential::zeros(1)], &p).unwrap();
    let fam = build_staircase_family(&base, &p).unwrap();
    assert_eq!(fam.len(), 9);
    assert_eq!(fam.members()[0], base);
    assert!((fam.diameter() - p.amp * 2.0).abs() < 1e-15);
    let capped = capped_indices(3, 2, 4, 7);
    assert_eq!(capped.len(), 4);
    assert_eq!(capped[0], vec![0, 0]);
    assert_eq!(capped[3], vec![2, 2]);
    assert_eq!(capped, capped_indices(3, 2, 4, 7));
}
