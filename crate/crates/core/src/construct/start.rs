//! Gap opening by a single-site perturbation, then constant shifts so that
//! the spectra of the family have no common point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    lambda_samples, large_energy_threshold, lyapunov_drift, lyapunov_minimum, Drift, JPolicy, LyapunovMinimum,
    Overrides, ShiftPolicy,
};
use crate::bands::{compute_bands, SpectrumDescription};
use crate::cocycle::{lyapunov_family_unchecked, lyapunov_scaled};
use crate::intervals::IntervalSet;
use crate::odometer::{Ball, Family, Potential, Schedule};
use crate::{Error, Result};

/// Parameters of one start level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartParams {
    /// Coupling window bound actually sampled.
    pub m: f64,
    pub n1: f64,
    pub n2: usize,
    pub level: usize,
    /// Total constant shift `s_{N2}`; `4 pi M / n_K` unless limited by the ball.
    pub span: f64,
}

/// `w^{K,j}` for `j = 1..=2 n_k + 1`: `w` embedded to `n_big` with `j / n1`
/// added at the last site.
pub fn build_start_candidates(w: &Potential, n_k: usize, n_big: usize, n1: f64) -> Result<Vec<Potential>> {
    if n_big <= n_k {
        return Err(Error::Schedule(format!("target period {n_big} must exceed {n_k}")));
    }
    let base = w.embed(n_big)?;
    Ok((1..=2 * n_k + 1)
        .map(|j| base.with_site_added(n_big - 1, j as f64 / n1))
        .collect())
}

/// Outcome of the gap-opening search at one coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSelection {
    pub lambda: f64,
    /// Least `j` (1-based) whose spectrum has `n_K` components.
    pub j: Option<usize>,
    /// Whether the selected candidate has exactly `n_K` components. When
    /// gap opening is not required and no candidate achieves it, the
    /// candidate with the most components is selected instead.
    pub opened: bool,
    /// Smallest gap of the selected candidate.
    pub delta: f64,
    pub component_counts: Vec<usize>,
    /// For each candidate, energies where bands touch or nearly touch.
    pub touching: Vec<Vec<f64>>,
}

impl GapSelection {
    /// Candidates that did not open every gap.
    pub fn failures(&self) -> usize {
        self.touching.iter().filter(|t| !t.is_empty()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub per_lambda: Vec<GapSelection>,
    /// Least `j` that works for every sampled coupling, if any.
    pub uniform_j: Option<usize>,
    /// Smallest selected gap over all couplings.
    pub delta: f64,
}

impl SelectionReport {
    pub fn selected_js(&self) -> Vec<usize> {
        let mut js: Vec<usize> = self.per_lambda.iter().filter_map(|s| s.j).collect();
        js.sort_unstable();
        js.dedup();
        js
    }
}

fn touching_energies(spec: &SpectrumDescription) -> Vec<f64> {
    let mut out = Vec::new();
    for (k, b) in spec.bands.iter().enumerate() {
        if b.touches_next || spec.near_touches.contains(&k) {
            out.push(b.hi);
        }
    }
    out
}

/// Spectra of every candidate at every coupling, indexed `[lambda][j - 1]`.
fn candidate_spectra(candidates: &[Potential], lambdas: &[f64]) -> Result<Vec<Vec<SpectrumDescription>>> {
    lambdas
        .iter()
        .map(|&l| candidates.iter().map(|c| compute_bands(c, l)).collect())
        .collect()
}

fn select_from_spectra(
    spectra: &[Vec<SpectrumDescription>],
    lambdas: &[f64],
    require_opening: bool,
) -> Result<SelectionReport> {
    let mut per_lambda = Vec::with_capacity(lambdas.len());
    for (specs, &lambda) in spectra.iter().zip(lambdas) {
        let touching: Vec<Vec<f64>> = specs.iter().map(touching_energies).collect();
        let open = |s: &SpectrumDescription| s.component_count == s.period && s.near_touches.is_empty();
        let mut j = specs.iter().position(open);
        let opened = j.is_some();
        if !opened && !require_opening {
            // most components, least j among ties
            let best = specs.iter().map(|s| s.component_count).max().unwrap_or(0);
            j = specs.iter().position(|s| s.component_count == best);
        }
        let delta = j.map_or(0.0, |j| specs[j].min_gap().unwrap_or(f64::INFINITY));
        per_lambda.push(GapSelection {
            lambda,
            j: j.map(|j| j + 1),
            opened,
            delta,
            component_counts: specs.iter().map(|s| s.component_count).collect(),
            touching,
        });
    }
    if let Some(bad) = per_lambda.iter().find(|s| s.j.is_none()) {
        return Err(Error::Construction(format!(
            "no candidate opens every gap at lambda = {}; touching energies per candidate: {:?}",
            bad.lambda, bad.touching
        )));
    }
    let count = spectra.first().map_or(0, Vec::len);
    let uniform_j = (0..count)
        .find(|&j| per_lambda.iter().all(|s| s.touching[j].is_empty()))
        .map(|j| j + 1);
    let delta = per_lambda.iter().map(|s| s.delta).fold(f64::INFINITY, f64::min);
    Ok(SelectionReport {
        per_lambda,
        uniform_j,
        delta,
    })
}

/// For each coupling, the least `j` whose spectrum has exactly `n_K`
/// components, and the smallest gap `delta` of the selected candidates.
pub fn select_gap_opening_j(candidates: &[Potential], lambdas: &[f64]) -> Result<SelectionReport> {
    select_from_spectra(&candidate_spectra(candidates, lambdas)?, lambdas, true)
}

/// Number of shifts needed so that consecutive shifted spectra move by less
/// than `delta` at couplings up to `lambda_max`.
///
/// Saturates at `2^52` when `delta` is zero or tiny.
pub fn shift_count(span: f64, lambda_max: f64, delta: f64) -> usize {
    const MAX: f64 = (1u64 << 52) as f64;
    let ratio = span * lambda_max / delta;
    if ratio.is_finite() && ratio >= 0.0 {
        ratio.floor().min(MAX) as usize + 1
    } else {
        MAX as usize + 1
    }
}

/// `s_l` for `count` evenly spread `l` in `0..=n2`, including both ends.
pub fn shift_subsample(span: f64, n2: usize, count: usize) -> Vec<f64> {
    if n2 + 1 <= count {
        return shift_values(span, n2);
    }
    let count = count.max(2);
    (0..count)
        .map(|c| {
            let l = (c as u128 * n2 as u128 + (count as u128 - 1) / 2) / (count as u128 - 1);
            span * l as f64 / n2 as f64
        })
        .collect()
}

/// `s_l = span * l / n2` for `l = 0..=n2`.
pub fn shift_values(span: f64, n2: usize) -> Vec<f64> {
    (0..=n2).map(|l| span * l as f64 / n2 as f64).collect()
}

/// `{w_j + s_l}` for `l = 0..=n2`.
pub fn build_shifted_family(w_j: &Potential, span: f64, n2: usize, delta: f64, lambda_max: f64) -> Result<Family> {
    if n2 == 0 || !(span * lambda_max / n2 as f64).lt(&delta) {
        return Err(Error::Parameter(format!(
            "shift step {} at |lambda| {lambda_max} is not below the gap {delta}",
            span / n2.max(1) as f64
        )));
    }
    Family::new(shift_values(span, n2).into_iter().map(|s| w_j.shifted(s)).collect())
}

/// Whether the shifted copies `spec + lambda * s` have no common point.
pub fn shifted_intersection(spec: &IntervalSet, lambda: f64, shifts: &[f64]) -> IntervalSet {
    let mut acc = spec.translate(lambda * shifts[0]);
    for &s in &shifts[1..] {
        if acc.is_empty() {
            break;
        }
        acc = acc.intersect(&spec.translate(lambda * s));
    }
    acc
}

/// Pointwise form of the same statement on an energy grid: every grid
/// energy lies outside at least one shifted spectrum.
pub fn grid_uncovered(spec: &IntervalSet, lambda: f64, shifts: &[f64], grid: &[f64]) -> bool {
    grid.iter()
        .all(|&e| shifts.iter().any(|&s| !spec.contains(e - lambda * s)))
}

/// Diagnostics for one level `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartLevelReport {
    pub params: StartParams,
    pub n_k: usize,
    pub n_big: usize,
    /// Largest drift of single-site perturbations accepted for `N1`.
    pub n1_drift: f64,
    pub delta: f64,
    /// One selection report per member of the input family.
    pub selections: Vec<SelectionReport>,
    /// Per member and coupling: whether that member's own shifted spectra
    /// have empty intersection.
    pub per_member_cover: Vec<Vec<bool>>,
    /// Per coupling: whether the spectra of the whole family have empty
    /// intersection.
    pub joint_cover: Vec<bool>,
    pub family_size: usize,
    pub drift: Drift,
    pub minimum: Vec<LyapunovMinimum>,
    /// Smallest `L` sampled beyond `|E| >= ||lambda w|| + 4`.
    pub large_energy_min: f64,
}

/// A built level: the family and its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartLevel {
    pub family: Family,
    pub report: StartLevelReport,
}

/// Result of [`lemma_start`]: the built levels in increasing order and the
/// levels skipped because the family would leave the ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub levels: Vec<StartLevel>,
    pub skipped: Vec<(usize, String)>,
    pub overrides: Overrides,
}

impl StartOutcome {
    pub fn first(&self) -> &StartLevel {
        &self.levels[0]
    }

    /// Drift per level, which should decrease.
    pub fn drifts(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.report.drift.sup).collect()
    }
}

fn single_drift(a: &Potential, b: &Potential, lambdas: &[f64], energy_max: f64, step: f64) -> f64 {
    let mut sup = 0.0f64;
    for &lambda in lambdas {
        for e in super::energy_grid(-energy_max, energy_max, step) {
            sup = sup.max((lyapunov_scaled(e, lambda, a) - lyapunov_scaled(e, lambda, b)).abs());
        }
    }
    sup
}

/// Builds perturbed and shifted families `W^K` inside `ball` for successive
/// levels `K` above `level`, returning up to `wanted` of them.
///
/// `m` is the (operational) coupling window bound.
pub fn lemma_start(
    family: &Family,
    ball: &Ball,
    level: usize,
    schedule: &Schedule,
    m: f64,
    wanted: usize,
    overrides: &Overrides,
) -> Result<StartOutcome> {
    if !ball.contains_family(family) {
        return Err(Error::Parameter("family is not inside the ball".into()));
    }
    let n_k = schedule
        .period(level)
        .ok_or_else(|| Error::Schedule(format!("level {level} is not in the schedule")))?;
    if n_k % family.period() != 0 {
        return Err(Error::Divisibility {
            period: family.period(),
            target: n_k,
        });
    }
    let lambdas = lambda_samples(m, overrides.lambda_samples);
    let budget = family
        .members()
        .iter()
        .map(|w| ball.radius - ball.center.sup_distance(w))
        .fold(f64::INFINITY, f64::min);

    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    let last = (level + overrides.max_start_levels).min(schedule.len().saturating_sub(1));
    for big in level + 1..=last {
        if levels.len() >= wanted {
            break;
        }
        match build_level(family, ball, big, n_k, schedule, m, &lambdas, budget, overrides)? {
            Ok(built) => levels.push(built),
            Err(reason) => skipped.push((big, reason)),
        }
    }
    if levels.is_empty() {
        return Err(Error::Construction(format!(
            "no start level in {}..={last} keeps the family inside the ball: {skipped:?}",
            level + 1
        )));
    }
    Ok(StartOutcome {
        levels,
        skipped,
        overrides: overrides.clone(),
    })
}

/// `Ok(Err(reason))` means the level does not fit and a larger one may.
#[allow(clippy::too_many_arguments)]
fn build_level(
    family: &Family,
    ball: &Ball,
    big: usize,
    n_k: usize,
    schedule: &Schedule,
    m: f64,
    lambdas: &[f64],
    budget: f64,
    o: &Overrides,
) -> Result<std::result::Result<StartLevel, String>> {
    let n_big = schedule.period(big).expect("level checked by caller");
    let lambda_max = lambdas.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let (span, pert_budget) = match o.shift_span_fraction {
        Some(f) => ((4.0 * PI * m / n_big as f64).min(f * budget), f * budget / 2.0),
        None => (4.0 * PI * m / n_big as f64, budget),
    };

    // N1: smallest power of two whose largest perturbation barely moves L
    let drift_max = big as f64;
    let drift_lambdas: Vec<f64> = lambdas.iter().copied().filter(|l| l.abs() <= drift_max).collect();
    let extreme = (2 * n_k + 1) as f64;
    let mut chosen = None;
    for i in 1..=o.n1_max_log2 {
        let n1 = 2f64.powi(i as i32);
        if extreme / n1 >= pert_budget {
            continue;
        }
        let mut worst = 0.0f64;
        for w in family.members() {
            let base = w.embed(n_big)?;
            let moved = base.with_site_added(n_big - 1, extreme / n1);
            worst = worst.max(single_drift(
                &moved,
                &base,
                &drift_lambdas,
                drift_max,
                o.drift_energy_step.max(0.05),
            ));
        }
        if worst < 1.0 / big as f64 {
            chosen = Some((n1, worst));
            break;
        }
    }
    let Some((n1, n1_drift)) = chosen else {
        return Err(Error::Construction(format!(
            "no N1 <= 2^{} keeps the perturbation drift below 1/{big} inside the ball",
            o.n1_max_log2
        )));
    };

    // gap opening per member and coupling, candidates in order of j
    let limit = match (o.j_policy, o.require_gap_opening, o.gap_candidate_limit) {
        (JPolicy::Selected, false, Some(l)) => l.clamp(1, 2 * n_k + 1),
        _ => 2 * n_k + 1,
    };
    let mut candidates = Vec::new();
    let mut spectra = Vec::new();
    let mut selections = Vec::new();
    for w in family.members() {
        let cands = build_start_candidates(w, n_k, n_big, n1)?;
        let mut specs: Vec<Vec<SpectrumDescription>> = vec![Vec::new(); lambdas.len()];
        let mut found = vec![false; lambdas.len()];
        for cand in cands.iter().take(limit) {
            for (li, &l) in lambdas.iter().enumerate() {
                let spec = compute_bands(cand, l)?;
                found[li] |= spec.component_count == spec.period && spec.near_touches.is_empty();
                specs[li].push(spec);
            }
            if o.j_policy == JPolicy::Selected && found.iter().all(|&f| f) {
                break;
            }
        }
        selections.push(select_from_spectra(&specs, lambdas, o.require_gap_opening)?);
        candidates.push(cands);
        spectra.push(specs);
    }
    let delta = selections.iter().map(|s| s.delta).fold(f64::INFINITY, f64::min);
    let n2 = if delta.is_finite() {
        shift_count(span, lambda_max, delta)
    } else {
        1
    };

    let js: Vec<Vec<usize>> = selections
        .iter()
        .map(|s| match o.j_policy {
            JPolicy::All => (1..=limit).collect(),
            JPolicy::Selected => s.selected_js(),
        })
        .collect();

    let sets: Vec<Vec<Vec<IntervalSet>>> = spectra
        .iter()
        .map(|per_l| {
            per_l
                .iter()
                .map(|row| row.iter().map(SpectrumDescription::as_set).collect())
                .collect()
        })
        .collect();

    // (member, j, shift)
    let chosen: Vec<(usize, usize, f64)> = match &o.shift_policy {
        ShiftPolicy::All { cap } => {
            let size = (family.len() * js.iter().map(Vec::len).max().unwrap_or(0)).saturating_mul(n2.saturating_add(1));
            if size > *cap {
                return Err(Error::Parameter(format!(
                    "family would have {size} members (N2 = {n2}), above the cap {cap}; \
                     use the cover shift policy"
                )));
            }
            let shifts = shift_values(span, n2);
            let mut out = Vec::new();
            for (a, ja) in js.iter().enumerate() {
                for &j in ja {
                    for &s in &shifts {
                        out.push((a, j, s));
                    }
                }
            }
            out
        }
        ShiftPolicy::Cover { candidates: limit } => {
            let pool = shift_subsample(span, n2, *limit);
            match greedy_cover(&sets, &js, &pool, lambdas) {
                Ok(chosen) => chosen,
                Err(e) => return Ok(Err(format!("level {big}: {e}"))),
            }
        }
    };

    let per_member_cover = (0..family.len())
        .map(|a| {
            lambdas
                .iter()
                .enumerate()
                .map(|(li, _)| member_intersection(&sets, &chosen, lambdas, li, Some(a)).is_empty())
                .collect()
        })
        .collect();
    let joint_cover: Vec<bool> = (0..lambdas.len())
        .map(|li| member_intersection(&sets, &chosen, lambdas, li, None).is_empty())
        .collect();

    let members: Vec<Potential> = chosen
        .iter()
        .map(|&(a, j, s)| candidates[a][j - 1].shifted(s))
        .collect();
    let new_family = Family::new(members)?;
    if !ball.contains_family(&new_family) {
        return Ok(Err(format!(
            "level {big}: family reaches {} from the center, radius {}",
            ball.reach(&new_family),
            ball.radius
        )));
    }

    let report_energy = lambdas
        .iter()
        .map(|&l| large_energy_threshold(family, l))
        .fold(0.0, f64::max);
    let drift = lyapunov_drift(&new_family, family, lambdas, report_energy, o.drift_energy_step);
    let minimum: Vec<LyapunovMinimum> = lambdas
        .iter()
        .map(|&l| lyapunov_minimum(&new_family, l, o.energy_step))
        .collect();
    let large_energy_min = large_energy_minimum(&new_family, lambdas);

    Ok(Ok(StartLevel {
        report: StartLevelReport {
            params: StartParams {
                m,
                n1,
                n2,
                level: big,
                span,
            },
            n_k,
            n_big,
            n1_drift,
            delta,
            selections,
            per_member_cover,
            joint_cover,
            family_size: new_family.len(),
            drift,
            minimum,
            large_energy_min,
        },
        family: new_family,
    }))
}

/// Smallest `L(E, lambda W)` at a few energies past `||lambda W|| + 4`.
pub fn large_energy_minimum(family: &Family, lambdas: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    for &l in lambdas {
        let t = large_energy_threshold(family, l);
        for extra in [0.0, 0.5, 1.0, 2.0, 5.0, 20.0] {
            for e in [t + extra, -t - extra] {
                min = min.min(lyapunov_family_unchecked(e, l, family));
            }
        }
    }
    min
}

fn member_intersection(
    sets: &[Vec<Vec<IntervalSet>>],
    chosen: &[(usize, usize, f64)],
    lambdas: &[f64],
    li: usize,
    only: Option<usize>,
) -> IntervalSet {
    let lambda = lambdas[li];
    let mut acc: Option<IntervalSet> = None;
    for &(a, j, s) in chosen {
        if only.is_some_and(|o| o != a) {
            continue;
        }
        let shifted = sets[a][li][j - 1].translate(lambda * s);
        acc = Some(match acc {
            None => shifted,
            Some(x) => x.intersect(&shifted),
        });
        if acc.as_ref().is_some_and(IntervalSet::is_empty) {
            break;
        }
    }
    acc.unwrap_or_default()
}

/// Round-robin greedy choice of shifted members until the joint
/// intersection of spectra is empty at every coupling, then padding so
/// every input member contributes equally often.
fn greedy_cover(
    sets: &[Vec<Vec<IntervalSet>>],
    js: &[Vec<usize>],
    pool: &[f64],
    lambdas: &[f64],
) -> Result<Vec<(usize, usize, f64)>> {
    let members = js.len();
    let mut chosen: Vec<(usize, usize, f64)> = Vec::new();
    let mut used: Vec<Vec<(usize, usize)>> = vec![Vec::new(); members];
    let mut inter: Vec<Option<IntervalSet>> = vec![None; lambdas.len()];

    let add = |chosen: &mut Vec<(usize, usize, f64)>,
               used: &mut Vec<Vec<(usize, usize)>>,
               inter: &mut Vec<Option<IntervalSet>>,
               a: usize,
               j: usize,
               c: usize| {
        chosen.push((a, j, pool[c]));
        used[a].push((j, c));
        for (li, slot) in inter.iter_mut().enumerate() {
            let shifted = sets[a][li][j - 1].translate(lambdas[li] * pool[c]);
            *slot = Some(match slot.take() {
                None => shifted,
                Some(x) => x.intersect(&shifted),
            });
        }
    };

    // score of adding (a, j, c): (couplings still covered, remaining measure)
    let score = |inter: &[Option<IntervalSet>], a: usize, j: usize, c: usize| -> (usize, f64) {
        let mut open = 0;
        let mut measure = 0.0;
        for (li, slot) in inter.iter().enumerate() {
            let shifted = sets[a][li][j - 1].translate(lambdas[li] * pool[c]);
            let next = match slot {
                None => shifted,
                Some(x) => x.intersect(&shifted),
            };
            if !next.is_empty() {
                open += 1;
                measure += next.measure();
            }
        }
        (open, measure)
    };

    let all_empty = |inter: &[Option<IntervalSet>]| inter.iter().all(|s| s.as_ref().is_some_and(IntervalSet::is_empty));

    let pick = |inter: &[Option<IntervalSet>], used: &[Vec<(usize, usize)>], a: usize| -> Option<(usize, usize)> {
        let mut best: Option<((usize, f64), usize, usize)> = None;
        for &j in &js[a] {
            for c in 0..pool.len() {
                if used[a].contains(&(j, c)) {
                    continue;
                }
                let s = score(inter, a, j, c);
                let better = match &best {
                    None => true,
                    Some((b, _, _)) => s.0 < b.0 || (s.0 == b.0 && s.1 < b.1),
                };
                if better {
                    best = Some((s, j, c));
                }
            }
        }
        best.map(|(_, j, c)| (j, c))
    };

    // the first member enters unshifted, every other one at its best shift
    add(&mut chosen, &mut used, &mut inter, 0, js[0][0], 0);
    for a in 1..members {
        let Some((j, c)) = pick(&inter, &used, a) else {
            return Err(Error::Construction("no shift candidates".into()));
        };
        add(&mut chosen, &mut used, &mut inter, a, j, c);
    }
    let mut a = 0;
    let mut stalled = 0;
    while !all_empty(&inter) {
        match pick(&inter, &used, a) {
            Some((j, c)) => {
                add(&mut chosen, &mut used, &mut inter, a, j, c);
                stalled = 0;
            }
            None => {
                stalled += 1;
                if stalled > members {
                    return Err(Error::Construction(format!(
                        "shift candidates exhausted with spectra still overlapping (pool of {})",
                        pool.len()
                    )));
                }
            }
        }
        a = (a + 1) % members;
    }
    let target = used.iter().map(Vec::len).max().unwrap_or(1);
    for a in 0..members {
        while used[a].len() < target {
            let Some((j, c)) = pick(&inter, &used, a) else {
                return Err(Error::Construction(
                    "not enough shift candidates to balance the family".into(),
                ));
            };
            add(&mut chosen, &mut used, &mut inter, a, j, c);
        }
    }
    chosen.sort_by_key(|&(a, _, _)| a);
    Ok(chosen)
}
