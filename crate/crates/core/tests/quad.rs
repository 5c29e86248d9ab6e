use limpet_core::quad::*;
use limpet_core::Error;

#[test]
fn polynomials_and_smooth() {
    let v = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-12, 100).unwrap();
    assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12, 100).unwrap();
    assert!((v - 2.0).abs() < 1e-12);
}

#[test]
fn endpoint_singularity_after_substitution() {
    // int_0^1 x^{-1/2} dx = 2, with x = s^2
    let v = integrate(|s| 2.0 * s / s, 0.0, 1.0, 1e-10, 100).unwrap();
    assert!((v - 2.0).abs() < 1e-10);
}

#[test]
fn reports_non_convergence() {
    let r = integrate(|x: f64| (1.0 / x).sin(), 1e-9, 1.0, 1e-14, 8);
    assert!(matches!(r, Err(Error::Accuracy { .. })));
}
