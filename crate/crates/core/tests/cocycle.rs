use approx::assert_abs_diff_eq;
use limpet_core::cocycle::*;
use limpet_core::{Error, Family, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

fn pot(v: &[f64]) -> Potential {
    Potential::new(v.to_vec()).unwrap()
}

/// Multiplies step matrices one at a time, straight from the definition.
fn oracle_transfer(e: f64, v: &Potential, n: usize, x: i64) -> Mat2 {
    let mut m = Mat2::IDENTITY;
    for i in 0..n as i64 {
        m = step_matrix(e, v.at(x + i)) * m;
    }
    m
}

#[test]
fn step_matrix_examples() {
    assert_eq!(step_matrix(0.0, 0.0), Mat2::new(0.0, -1.0, 1.0, 0.0));
    assert_eq!(step_matrix(3.0, 1.0), Mat2::new(2.0, -1.0, 1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let m = step_matrix(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        assert_eq!(m.det(), 1.0);
    }
}

#[test]
fn transfer_examples() {
    let z = Potential::zeros(1);
    assert_eq!(transfer(1.3, &z, 0, 5), Mat2::IDENTITY);
    assert_eq!(transfer(0.0, &z, 2, 0), Mat2::IDENTITY.scale(-1.0));
    let v = pot(&[1.0, 0.0]);
    // S_1 S_0 = [[2,-1],[1,0]] [[1,-1],[1,0]]
    let expect = Mat2::new(1.0, -2.0, 1.0, -1.0);
    assert_eq!(transfer(2.0, &v, 2, 0), expect);
    assert_eq!(oracle_transfer(2.0, &v, 2, 0), expect);
}

#[test]
fn monodromy_trace_examples() {
    let z = Potential::zeros(1);
    assert_eq!(monodromy(0.7, &z), Mat2::new(0.7, -1.0, 1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let (v0, v1, e) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-5.0..5.0),
        );
        let t = monodromy(e, &pot(&[v0, v1])).trace();
        assert_abs_diff_eq!(t, (e - v0) * (e - v1) - 2.0, epsilon = 1e-12);
    }
}

#[test]
fn trace_invariant_under_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = rng.gen_range(1..9);
        let v = Potential::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let e = rng.gen_range(-4.0..4.0);
        let s = rng.gen_range(0..n);
        let t0 = monodromy(e, &v).trace();
        let t1 = monodromy(e, &v.rotated(s)).trace();
        assert!((t0 - t1).abs() <= 1e-9 * (1.0 + t0.abs()), "{t0} vs {t1}");
    }
}

#[test]
fn free_lyapunov() {
    let z = Potential::zeros(1);
    assert_eq!(lyapunov_periodic(1.0, &z), 0.0);
    let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    assert_abs_diff_eq!(lyapunov_periodic(3.0, &z), expect, epsilon = 1e-12);
    assert_abs_diff_eq!(expect, 0.962424, epsilon = 1e-6);
}

#[test]
fn large_energy_lower_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.gen_range(1..10);
        let v = Potential::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
        let lambda: f64 = rng.gen_range(-3.0..3.0);
        let lv = v.scaled(lambda);
        let edge = lv.sup_norm() + 4.0;
        for i in 0..20 {
            let e = edge + i as f64 * 0.5;
            assert!(lyapunov_periodic(e, &lv) >= 1.0);
            assert!(lyapunov_periodic(-e, &lv) >= 1.0);
        }
    }
}

#[test]
fn family_mean() {
    let v = pot(&[0.4, -1.0, 2.0]);
    let single = Family::singleton(v.clone());
    let double = Family::new(vec![v.clone(), v.clone()]).unwrap();
    let direct = lyapunov_periodic(2.5, &v.scaled(1.5));
    assert_abs_diff_eq!(lyapunov_family(2.5, 1.5, &single).unwrap(), direct, epsilon = 1e-14);
    assert_abs_diff_eq!(lyapunov_family(2.5, 1.5, &double).unwrap(), direct, epsilon = 1e-14);
    let free = Family::new(vec![Potential::zeros(2), Potential::zeros(2).rotated(1)]).unwrap();
    assert_abs_diff_eq!(lyapunov_family(3.0, 1.0, &free).unwrap(), 0.962424, epsilon = 1e-6);
}

#[test]
fn subadditive_free_cases() {
    let z = Potential::zeros(1);
    for k in 0..8 {
        assert_abs_diff_eq!(subadditive_average(0.0, &z, k, 1), 0.0, epsilon = 1e-12);
    }
    assert!((subadditive_average(3.0, &z, 6, 1) - 0.962424).abs() < 0.05);
}

#[test]
fn argument_derivative_examples() {
    let z = Potential::zeros(1);
    assert!(argument_derivative(0.0, &z, 2, Direction::horizontal()) < 0.0);
    assert_abs_diff_eq!(
        argument_derivative(0.3, &z, 1, Direction::vertical()),
        0.0,
        epsilon = 1e-9
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let v = pot(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
        let e = rng.gen_range(-5.0..5.0);
        let dir = Direction::new(rng.gen_range(0.0..PI));
        assert!(argument_derivative(e, &v, 2, dir) < 0.0);
    }
}

#[test]
fn singular_direction_examples() {
    let id = singular_directions(&Mat2::IDENTITY).unwrap();
    assert!(id.degenerate);
    assert_eq!(id.sigma, 1.0);
    assert_eq!(id.contracted.angle(), 0.0);

    let sd = singular_directions(&Mat2::diag(2.0, 0.5)).unwrap();
    assert!(!sd.degenerate);
    assert_abs_diff_eq!(sd.sigma, 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(sd.contracted.angle(), FRAC_PI_2, epsilon = 1e-12);
    assert_abs_diff_eq!(sd.expanded_image.angle(), 0.0, epsilon = 1e-12);
}

#[test]
fn singular_directions_reject_bad_input() {
    assert!(matches!(
        singular_directions(&Mat2::new(f64::NAN, 0.0, 0.0, 1.0)),
        Err(Error::Conditioning(_))
    ));
    assert!(matches!(
        singular_directions(&Mat2::new(1e200, 0.0, 0.0, 1e-200)),
        Err(Error::Conditioning(_))
    ));
    assert!(singular_directions(&Mat2::diag(2.0, 2.0)).is_err());
}

#[test]
fn svd_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        // random SL(2,R): rotation * diag * rotation
        let s: f64 = rng.gen_range(1.01..50.0);
        let m =
            Mat2::rotation(rng.gen_range(0.0..6.3)) * Mat2::diag(s, 1.0 / s) * Mat2::rotation(rng.gen_range(0.0..6.3));
        let sd = singular_directions(&m).unwrap();
        let rebuilt = Mat2::rotation(sd.expanded_image.angle())
            * Mat2::diag(sd.sigma, 1.0 / sd.sigma)
            * Mat2::rotation(sd.expanded.angle()).transpose();
        let err = rebuilt.max_abs_diff(&m).min(rebuilt.scale(-1.0).max_abs_diff(&m));
        assert!(err < 1e-9, "reconstruction error {err}");
        let shrunk = m.apply(sd.contracted.unit());
        let len = shrunk[0].hypot(shrunk[1]);
        assert!((len * sd.sigma - 1.0).abs() < 1e-9);
    }
}

#[test]
fn tangent_product_identity() {
    // tan(angle(z, s)) * tan(angle(Bz, u)) = ||B||^-2
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let s: f64 = rng.gen_range(1.5..30.0);
        let b =
            Mat2::rotation(rng.gen_range(0.0..6.3)) * Mat2::diag(s, 1.0 / s) * Mat2::rotation(rng.gen_range(0.0..6.3));
        let sd = singular_directions(&b).unwrap();
        let z = Direction::new(rng.gen_range(0.0..PI));
        let theta = z.angle_to(&sd.contracted);
        let theta_p = Direction::of_vector(b.apply(z.unit())).angle_to(&sd.expanded_image);
        if theta < 1e-3 || theta > FRAC_PI_2 - 1e-3 {
            continue;
        }
        let lhs = theta.tan() * theta_p.tan();
        assert!(
            (lhs - 1.0 / (s * s)).abs() < 1e-7 * (1.0 + lhs),
            "{lhs} vs {}",
            1.0 / (s * s)
        );
    }
}

#[test]
fn renormalized_matches_plain() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let v = Potential::new((0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let e = rng.gen_range(-3.0..3.0);
        let n = rng.gen_range(1..200);
        let plain = transfer(e, &v, n, 3);
        let scaled = transfer_scaled(e, &v, n, 3).to_mat();
        assert!(plain.max_abs_diff(&scaled) <= 1e-9 * (1.0 + plain.norm()));
    }
}
