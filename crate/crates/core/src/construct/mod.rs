//! Gap-opening and block/staircase families, and the nested-ball iteration.
//!
//! The pipeline for one stage is [`start::lemma_start`] (perturb and shift
//! so that every coupling in a window has positive Lyapunov exponent), then
//! [`induction::lemma_induction`] (concatenate long blocks so that spectra
//! become exponentially small), glued together by [`joining::lemma_joining`]
//! and repeated by [`joining::iterate_scheme`].
//!
//! The literal constants of the construction (amplitudes `r^-20`, angles
//! `r^-70`, diameters `n_K^-10`, coupling windows `[1/M, M]` with `M`
//! growing without bound) only make sense asymptotically. [`Overrides`]
//! collects every knob that replaces them by desk-scale values, and each
//! certificate records the overrides it was produced with.

pub mod induction;
pub mod joining;
pub mod niceness;
pub mod start;

use serde::{Deserialize, Serialize};

use crate::cocycle::lyapunov_family_unchecked;
use crate::odometer::Family;

pub use induction::{lemma_induction, InductionCertificate, InductionParams, InductionRequest};
pub use joining::{
    iterate_scheme, lemma_joining, IterateOutcome, JoiningCertificate, JoiningOutcome, StageCertificate,
};
pub use niceness::{classify_niceness, niceness_census, NicenessCensus, NicenessReport};
pub use start::{lemma_start, StartOutcome, StartParams};

/// How the constant shifts `w^{K,j,l}` are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShiftPolicy {
    /// Every `l = 0..=N2`; an error if that is more than `cap` shifts.
    All { cap: usize },
    /// Greedily pick shifts among at most `candidates` evenly spaced ones
    /// until the spectra of the whole family have empty intersection at
    /// every sampled coupling.
    Cover { candidates: usize },
}

/// Which perturbation indices `j` enter the family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JPolicy {
    /// All `j = 1..=2 n_k + 1`.
    All,
    /// Only the `j` selected for some sampled coupling.
    Selected,
}

/// Every knob that trades the asymptotic construction for a computable one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// Staircase amplitude is `r^-amp_exponent` (before radius caps).
    pub amp_exponent: f64,
    /// `t` is `j`-nice when the angle is at least `r^-angle_exponent`.
    pub angle_exponent: f64,
    /// Reported diameter target `n_K^-diameter_exponent`.
    pub diameter_exponent: f64,
    /// Upper limit on the coupling window bound `M` actually sampled.
    pub coupling_cap: Option<f64>,
    /// Geometric samples of `|lambda|` in `[1/M, M]` (each used with both signs).
    pub lambda_samples: usize,
    pub shift_policy: ShiftPolicy,
    pub j_policy: JPolicy,
    /// Limits the shift span and the single-site perturbation to fractions
    /// of the room left in the ball, instead of `4 pi M / n_K`.
    pub shift_span_fraction: Option<f64>,
    /// Keep at most this many staircase members (always `t = 0` and
    /// `t = (r-1, ..., r-1)`, the rest sampled with `seed`).
    pub staircase_cap: Option<usize>,
    /// Smallest repetition count `r` accepted when choosing the induction level.
    pub min_repetitions: usize,
    /// Further induction levels tried while the joined family's Lyapunov
    /// exponent does not stay above `delta`.
    pub level_advance: usize,
    /// Fail when no perturbation opens every gap at some coupling; when
    /// false, fall back to the candidate with the most components.
    pub require_gap_opening: bool,
    /// Candidates `j` tried per member when gap opening is not required
    /// and only selected `j` enter the family.
    pub gap_candidate_limit: Option<usize>,
    /// New ball radius as a multiple of the family diameter.
    pub ball_radius_factor: f64,
    /// Energy step of the grids certifying Lyapunov lower bounds.
    pub energy_step: f64,
    /// Energy step of the grids measuring Lyapunov drift.
    pub drift_energy_step: f64,
    /// `N1` is searched among `2^1 ..= 2^n1_max_log2`.
    pub n1_max_log2: u32,
    /// Levels tried above the current one when looking for a start level.
    pub max_start_levels: usize,
    /// Interior energies per band for norm-route certificates.
    pub norm_samples_per_band: usize,
    pub seed: u64,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            amp_exponent: 20.0,
            angle_exponent: 70.0,
            diameter_exponent: 10.0,
            coupling_cap: None,
            lambda_samples: 9,
            shift_policy: ShiftPolicy::All { cap: 10_000 },
            j_policy: JPolicy::All,
            shift_span_fraction: None,
            staircase_cap: None,
            min_repetitions: 2,
            level_advance: 4,
            require_gap_opening: true,
            gap_candidate_limit: None,
            ball_radius_factor: 1.25,
            energy_step: 1e-3,
            drift_energy_step: 1e-2,
            n1_max_log2: 40,
            max_start_levels: 8,
            norm_samples_per_band: 2,
            seed: 0,
        }
    }
}

impl Overrides {
    /// Settings under which a three-stage iteration from the zero potential
    /// finishes in minutes on one core.
    pub fn desk() -> Self {
        Self {
            amp_exponent: 2.0,
            angle_exponent: 3.0,
            diameter_exponent: 1.0,
            coupling_cap: Some(1.0),
            lambda_samples: 1,
            shift_policy: ShiftPolicy::Cover { candidates: 64 },
            j_policy: JPolicy::Selected,
            shift_span_fraction: Some(0.5),
            min_repetitions: 4,
            level_advance: 0,
            require_gap_opening: false,
            gap_candidate_limit: Some(8),
            staircase_cap: Some(2),
            ..Self::default()
        }
    }

    /// The coupling window bound actually sampled for a nominal `m`.
    pub fn operational_m(&self, m: f64) -> f64 {
        match self.coupling_cap {
            Some(cap) => m.min(cap).max(1.0),
            None => m.max(1.0),
        }
    }
}

/// `|lambda|` geometrically spaced in `[1/m, m]`, each with both signs,
/// negatives first.
pub fn lambda_samples(m: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    let mags: Vec<f64> = if m <= 1.0 || count == 1 {
        if m <= 1.0 {
            vec![1.0]
        } else {
            vec![1.0 / m, m]
        }
    } else {
        (0..count)
            .map(|i| m.powf(-1.0 + 2.0 * i as f64 / (count - 1) as f64))
            .collect()
    };
    let mut out: Vec<f64> = mags.iter().rev().map(|x| -x).collect();
    out.extend(mags);
    out
}

/// Inclusive grid `lo, lo + step, ..., hi`.
pub fn energy_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).floor() as usize;
    let mut out: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).collect();
    if out.last().is_some_and(|&x| x < hi) {
        out.push(hi);
    }
    out
}

/// Beyond this energy `L(E, lambda w) >= 1` for every member.
pub fn large_energy_threshold(family: &Family, lambda: f64) -> f64 {
    lambda.abs() * family.sup_norm() + 4.0
}

/// Grid minimum of `L(E, lambda W)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovMinimum {
    pub lambda: f64,
    pub min: f64,
    pub at_energy: f64,
    /// The grid covers `|E| <= window`; outside it `L >= 1`.
    pub window: f64,
    pub step: f64,
}

pub fn lyapunov_minimum(family: &Family, lambda: f64, step: f64) -> LyapunovMinimum {
    let window = large_energy_threshold(family, lambda);
    let mut best = (f64::INFINITY, 0.0);
    for e in energy_grid(-window, window, step) {
        let l = lyapunov_family_unchecked(e, lambda, family);
        if l < best.0 {
            best = (l, e);
        }
    }
    LyapunovMinimum {
        lambda,
        min: best.0.min(1.0),
        at_energy: best.1,
        window,
        step,
    }
}

/// Largest `|L(E, lambda A) - L(E, lambda B)|` over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub sup: f64,
    pub at_energy: f64,
    pub at_lambda: f64,
    pub energy_max: f64,
    pub step: f64,
    pub lambdas: Vec<f64>,
}

pub fn lyapunov_drift(a: &Family, b: &Family, lambdas: &[f64], energy_max: f64, step: f64) -> Drift {
    let mut sup = (0.0f64, 0.0, 0.0);
    for &lambda in lambdas {
        for e in energy_grid(-energy_max, energy_max, step) {
            let d = (lyapunov_family_unchecked(e, lambda, a) - lyapunov_family_unchecked(e, lambda, b)).abs();
            if d > sup.0 {
                sup = (d, e, lambda);
            }
        }
    }
    Drift {
        sup: sup.0,
        at_energy: sup.1,
        at_lambda: sup.2,
        energy_max,
        step,
        lambdas: lambdas.to_vec(),
    }
}
