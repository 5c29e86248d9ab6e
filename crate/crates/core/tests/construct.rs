use limpet_core::construct::*;

#[test]
fn lambda_sampling() {
    assert_eq!(lambda_samples(1.0, 9), vec![-1.0, 1.0]);
    let l = lambda_samples(4.0, 3);
    assert_eq!(l.len(), 6);
    assert!((l[3] - 0.25).abs() < 1e-15 && (l[4] - 1.0).abs() < 1e-15 && (l[5] - 4.0).abs() < 1e-12);
    assert_eq!(l[0], -l[5]);
}

#[test]
fn grids() {
    let g = energy_grid(-1.0, 1.0, 0.5);
    assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    let g = energy_grid(0.0, 1.0, 0.3);
    assert_eq!(g.len(), 5);
    assert_eq!(*g.last().unwrap(), 1.0);
}

#[test]
fn overrides_roundtrip() {
    let o = Overrides::desk();
    let text = serde_json::to_string(&o).unwrap();
    let back: Overrides = serde_json::from_str(&text).unwrap();
    assert_eq!(o, back);
    assert_eq!(o.operational_m(200.0), 1.0);
    assert_eq!(Overrides::default().operational_m(200.0), 200.0);
}
