use std::f64::consts::PI;

use limpet_core::bands::{compute_bands, edge_count, ids_band_increments, spectrum_hausdorff_distance};
use limpet_core::cocycle::{argument_derivative, lyapunov_family, lyapunov_periodic, subadditive_average};
use limpet_core::construct::energy_grid;
use limpet_core::construct::induction::capped_indices;
use limpet_core::construct::start::{grid_uncovered, shift_count, shift_values};
use limpet_core::odometer::sup_distance;
use limpet_core::{Direction, Family, Potential};
use proptest::prelude::*;

fn potential(max_period: usize, amp: f64) -> impl Strategy<Value = Potential> {
    prop::collection::vec(-amp..amp, 1..=max_period).prop_map(|v| Potential::new(v).unwrap())
}

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..-0.1, 0.1..3.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bands_are_short_and_ordered(v in potential(24, 3.0), l in coupling()) {
        let spec = compute_bands(&v, l).unwrap();
        prop_assert_eq!(spec.bands.len(), v.period());
        let n = v.period() as f64;
        for b in &spec.bands {
            prop_assert!(b.lo <= b.hi);
            prop_assert!(b.length() <= 2.0 * PI / n + 1e-9);
        }
        for w in spec.bands.windows(2) {
            prop_assert!(w[0].hi <= w[1].lo + 1e-9);
        }
        prop_assert!(spec.component_count >= 1 && spec.component_count <= v.period());
        prop_assert!(spec.as_set().measure() <= spec.measure + 1e-12);
    }

    #[test]
    fn negating_the_potential_reflects_the_spectrum(v in potential(12, 2.0)) {
        let a = compute_bands(&v, 1.0).unwrap().edges();
        let mut b: Vec<f64> = compute_bands(&v, -1.0).unwrap().edges().iter().map(|e| -e).collect();
        b.reverse();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn constant_shift_translates_and_rotation_preserves(v in potential(12, 2.0), c in -1.5..1.5f64, s in 0usize..12) {
        let base = compute_bands(&v, 1.0).unwrap().edges();
        let shifted = compute_bands(&v.shifted(c), 1.0).unwrap().edges();
        let rotated = compute_bands(&v.rotated(s % v.period()), 1.0).unwrap().edges();
        for ((x, y), z) in base.iter().zip(&shifted).zip(&rotated) {
            prop_assert!((x + c - y).abs() < 1e-9);
            prop_assert!((x - z).abs() < 1e-9);
        }
    }

    #[test]
    fn spectrum_is_lipschitz(pair in (1usize..=10).prop_flat_map(|n| (
        prop::collection::vec(-2.0..2.0f64, n),
        prop::collection::vec(-0.5..0.5f64, n),
    ))) {
        let v = Potential::new(pair.0.clone()).unwrap();
        let w = Potential::new(pair.0.iter().zip(&pair.1).map(|(a, d)| a + d).collect()).unwrap();
        let h = spectrum_hausdorff_distance(&v, &w, 1.0).unwrap();
        prop_assert!(h <= sup_distance(&v, &w) + 1e-6);
    }

    #[test]
    fn edge_count_is_monotone(v in potential(16, 2.0), a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(edge_count(&v, lo) <= edge_count(&v, hi));
        prop_assert!(edge_count(&v, hi) <= 2 * v.period());
    }

    #[test]
    fn ids_increments_are_one_over_n(v in potential(6, 2.0)) {
        let n = v.period() as f64;
        for inc in ids_band_increments(&v).unwrap() {
            prop_assert!((inc - 1.0 / n).abs() < 1e-5);
        }
    }

    #[test]
    fn subadditive_averages_decrease(v in potential(6, 2.0), e in -4.0..4.0f64) {
        let n = v.period();
        let avgs: Vec<f64> = (0..=7).map(|k| subadditive_average(e, &v, k, n)).collect();
        for w in avgs.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        prop_assert!(avgs[7] >= lyapunov_periodic(e, &v) - 1e-9);
    }

    #[test]
    fn argument_turns_clockwise(v in potential(8, 2.0), e in -5.0..5.0f64, n in 2usize..=16, angle in 0.0..PI) {
        prop_assert!(argument_derivative(e, &v, n, Direction::new(angle)) < 0.0);
    }

    #[test]
    fn family_exponent_is_the_member_average(a in potential(4, 2.0), b in potential(4, 2.0), e in -4.0..4.0f64) {
        let n = a.period() * b.period();
        let (a, b) = (a.embed(n).unwrap(), b.embed(n).unwrap());
        let fam = Family::new(vec![a.clone(), b.clone()]).unwrap();
        let avg = (lyapunov_periodic(e, &a) + lyapunov_periodic(e, &b)) / 2.0;
        let got = lyapunov_family(e, 1.0, &fam).unwrap();
        prop_assert!(got >= 0.0);
        prop_assert!((got - avg).abs() < 1e-12);
    }

    #[test]
    fn shifted_copies_leave_every_grid_energy_uncovered(v in potential(6, 1.5), l in 0.5..2.0f64) {
        let spec = compute_bands(&v, l).unwrap();
        let Some(delta) = spec.min_gap().filter(|d| *d > 1e-3) else { return Ok(()); };
        let span = 4.0 * PI * 2.0 / v.period() as f64;
        let shifts = shift_values(span, shift_count(span, l, delta));
        let edges = spec.edges();
        let grid = energy_grid(edges[0] - 0.5, edges[edges.len() - 1] + l * span + 0.5, 1e-3);
        prop_assert!(grid_uncovered(&spec.as_set(), l, &shifts, &grid));
    }

    #[test]
    fn capped_indices_are_distinct_and_in_range(r in 2usize..10, m in 1usize..5, cap in 2usize..200, seed: u64) {
        let ts = capped_indices(r, m, cap, seed);
        let total = r.pow(m as u32);
        prop_assert_eq!(ts.len(), cap.min(total));
        let mut seen = std::collections::BTreeSet::new();
        for t in &ts {
            prop_assert_eq!(t.len(), m);
            prop_assert!(t.iter().all(|&x| x < r));
            prop_assert!(seen.insert(t.clone()));
        }
        prop_assert!(seen.contains(&vec![0; m]) && seen.contains(&vec![r - 1; m]));
    }

    #[test]
    fn text_form_round_trips(v in potential(10, 5.0)) {
        prop_assert_eq!(Potential::from_text(&v.to_text()).unwrap(), v);
    }
}
